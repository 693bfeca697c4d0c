"""
Centered Gaussian wavefunctions and densities.

A state psi(x) ~ exp(-1/2 x.A x) is stored by its exponent only; norms
never enter. For a Hamiltonian H = p.G p + x.V x the moments

    <p_i p_j> = A_ij / 2,        <x_i x_j> = (A^-1)_ij / 2

give the closed form  <H> = 1/2 tr(G A) + 1/2 tr(V A^-1).

The density of such a state is rho(x) ~ exp(-x.B x) with B = A. Integrating
out a block of coordinates leaves the Schur complement of the dropped block.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.linalg

from .errors import (
    FrameMismatchError,
    NotPositiveDefiniteError,
    NotSymmetricPairError,
    SingularTransformError,
    UnsupportedDegreeError,
)
from .model import ABSOLUTE, FormKind, QuadraticForm, _frozen
from .transforms import CoordinateTransform

PIVOT_TOL = 1e-12
SYMMETRIC_PAIR_TOL = 1e-10
MAX_DEGREE = 4


def check_positive_definite(a: np.ndarray, what: str = "exponent") -> None:
    """Cholesky attempt with pivot floor PIVOT_TOL * max diagonal entry."""
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefiniteError(f"{what} has non-finite entries")
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from None
    pivots = np.diag(chol) ** 2
    if np.min(pivots) <= PIVOT_TOL * np.max(np.abs(np.diag(a))):
        raise NotPositiveDefiniteError(f"{what} is numerically singular (smallest pivot {np.min(pivots):.3g})")


def _symmetric(a) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"exponent must be square, got shape {a.shape}")
    return 0.5 * (a + a.T)


@dataclass(frozen=True, eq=False)
class GaussianState:
    """psi(x) ~ exp(-1/2 x.A x) over the coordinates of ``frame``."""

    exponent: np.ndarray
    frame: str = ABSOLUTE

    def __post_init__(self):
        a = _symmetric(self.exponent)
        check_positive_definite(a)
        object.__setattr__(self, "exponent", _frozen(a))

    @property
    def dim(self) -> int:
        return self.exponent.shape[0]

    def covariance(self) -> np.ndarray:
        """<x_i x_j> = (A^-1)_ij / 2."""
        return 0.5 * np.linalg.inv(self.exponent)

    def density(self) -> GaussianDensity:
        return GaussianDensity(self.exponent, self.frame)

    def to_dict(self) -> dict:
        return {"frame": self.frame, "exponent": self.exponent.tolist()}


@dataclass(frozen=True, eq=False)
class GaussianDensity:
    """Normalized probability density rho(x) ~ exp(-x.B x)."""

    exponent: np.ndarray
    frame: str = ABSOLUTE

    def __post_init__(self):
        b = _symmetric(self.exponent)
        check_positive_definite(b)
        object.__setattr__(self, "exponent", _frozen(b))

    @property
    def dim(self) -> int:
        return self.exponent.shape[0]

    def normalization(self) -> float:
        """Prefactor making exp(-x.B x) integrate to one."""
        return float(np.sqrt(np.linalg.det(self.exponent) / np.pi**self.dim))

    def pdf(self, x) -> np.ndarray:
        """Evaluate rho at points ``x`` of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        q = np.einsum("...i,ij,...j->...", x, self.exponent, x)
        return self.normalization() * np.exp(-q)

    def covariance(self) -> np.ndarray:
        return 0.5 * np.linalg.inv(self.exponent)

    def to_dict(self) -> dict:
        return {"frame": self.frame, "exponent": self.exponent.tolist()}


@dataclass(frozen=True)
class AlphaBeta:
    """Symmetric two-coordinate density exp[-alpha (q2^2 + q3^2) + beta q2 q3]."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not 2 * self.alpha > abs(self.beta):
            raise NotPositiveDefiniteError(f"need 2*alpha > |beta|, got alpha={self.alpha}, beta={self.beta}")


def energy_expectation(state: GaussianState, kinetic: QuadraticForm, potential: QuadraticForm) -> float:
    """<p.G p + x.V x> in the Gaussian ``state``."""
    if kinetic.kind is not FormKind.KINETIC or potential.kind is not FormKind.POTENTIAL:
        raise ValueError("expected a kinetic and a potential form")
    for form in (kinetic, potential):
        if form.frame != state.frame:
            raise FrameMismatchError(f"form frame {form.frame!r} != state frame {state.frame!r}")
        if form.dim != state.dim:
            raise FrameMismatchError(f"form has dimension {form.dim}, state {state.dim}")
    a = state.exponent
    cho = scipy.linalg.cho_factor(a)
    kin = 0.5 * np.sum(kinetic.matrix * a)
    pot = 0.5 * np.trace(scipy.linalg.cho_solve(cho, potential.matrix))
    return float(kin + pot)


def kinetic_expectation(state: GaussianState, kinetic: QuadraticForm) -> float:
    if kinetic.frame != state.frame:
        raise FrameMismatchError(f"form frame {kinetic.frame!r} != state frame {state.frame!r}")
    return float(0.5 * np.sum(kinetic.matrix * state.exponent))


def _wick(indices: tuple, cov: np.ndarray) -> float:
    k = len(indices)
    if k % 2:
        return 0.0
    if k == 0:
        return 1.0
    if k == 2:
        i, j = indices
        return cov[i, j]
    i, j, m, n = indices
    return cov[i, j] * cov[m, n] + cov[i, m] * cov[j, n] + cov[i, n] * cov[j, m]


def observable_expectation(state: GaussianState, observable: Mapping[tuple, float]) -> float:
    """Expectation of a polynomial of degree <= 4 in the state's coordinates.

    ``observable`` maps coordinate-index tuples to coefficients, e.g.
    ``{(0, 0): 1.0, (0, 1): -2.0}`` is x0^2 - 2 x0 x1. Moments follow the
    Isserlis pairing rule with covariance A^-1 / 2; odd monomials give 0.
    Degrees above 4 raise UnsupportedDegreeError.
    """
    cov = state.covariance()
    total = 0.0
    for mono, coeff in observable.items():
        mono = tuple(int(i) for i in mono)
        if len(mono) > MAX_DEGREE:
            raise UnsupportedDegreeError(f"monomial {mono} has degree {len(mono)} > {MAX_DEGREE}")
        if any(not 0 <= i < state.dim for i in mono):
            raise IndexError(f"monomial {mono} refers to a coordinate outside 0..{state.dim - 1}")
        total += coeff * _wick(mono, cov)
    return float(total)


def linear_power(coeffs, power: int) -> dict:
    """Monomial expansion of (c . x)^power, usable with observable_expectation."""
    coeffs = np.asarray(coeffs, dtype=float)
    poly: dict = {}
    support = np.flatnonzero(coeffs)
    for mono in itertools.product(support, repeat=power):
        key = tuple(sorted(int(i) for i in mono))
        poly[key] = poly.get(key, 0.0) + float(np.prod(coeffs[list(mono)]))
    return poly


def _marginal_frame(frame: str, drop: tuple) -> str:
    # Dropping the leading CM / anchor coordinate leaves the internal frame.
    if drop == (0,):
        head, _, name = frame.partition(":")
        if name and (head == "cm" or head.startswith("anchored")):
            return f"internal:{name}"
    return f"{frame}|drop{','.join(map(str, drop))}"


def marginalize(density: GaussianDensity, drop) -> GaussianDensity:
    """Integrate ``density`` over the coordinates listed in ``drop``.

    The marginal exponent is B_kk - B_kd B_dd^-1 B_dk.
    """
    n = density.dim
    drop = tuple(sorted({int(i) for i in drop}))
    if not drop or len(drop) >= n:
        raise ValueError("drop must be a nonempty proper subset of the coordinates")
    if drop[0] < 0 or drop[-1] >= n:
        raise IndexError(f"drop indices {drop} outside 0..{n - 1}")
    keep = [i for i in range(n) if i not in drop]
    b = density.exponent
    b_dd = b[np.ix_(drop, drop)]
    check_positive_definite(b_dd, "dropped block")
    b_kd = b[np.ix_(keep, drop)]
    schur = b[np.ix_(keep, keep)] - b_kd @ scipy.linalg.solve(b_dd, b_kd.T, assume_a="pos")
    return GaussianDensity(schur, _marginal_frame(density.frame, drop))


def reexpress(obj, transform: CoordinateTransform, target: str):
    """Rewrite a state or density in another full frame of ``transform``.

    With x_absolute = S_src y_src = S_tgt y_tgt the exponent becomes
    S^T A S where S = S_src^-1 S_tgt maps target coordinates to source ones.
    """
    s_src = transform.frame_matrix(obj.frame)
    s_tgt = transform.frame_matrix(target)
    s = np.linalg.solve(s_src, s_tgt)
    if np.linalg.cond(s) > 1e12:
        raise SingularTransformError("frame change is numerically singular")
    return type(obj)(s.T @ obj.exponent @ s, target)


def alpha_beta(density: GaussianDensity) -> AlphaBeta:
    """alpha = B_11 and beta = -2 B_12 of a q2 <-> q3 symmetric density."""
    b = density.exponent
    if b.shape != (2, 2):
        raise ValueError(f"alpha/beta needs a 2-coordinate density, got dimension {density.dim}")
    if abs(b[0, 0] - b[1, 1]) > SYMMETRIC_PAIR_TOL * max(1.0, abs(b[0, 0])):
        raise NotSymmetricPairError(f"diagonal entries differ: {b[0, 0]} vs {b[1, 1]}")
    return AlphaBeta(float(0.5 * (b[0, 0] + b[1, 1])), float(-2.0 * b[0, 1]))


def internal_marginal(state: GaussianState, transform: CoordinateTransform) -> GaussianDensity:
    """Density of the internal coordinates of an absolute-frame state."""
    return marginalize(reexpress(state.density(), transform, transform.cm_frame), [0])
