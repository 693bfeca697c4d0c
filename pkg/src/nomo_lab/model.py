"""
N-particle one-dimensional harmonic systems and their quadratic forms.

Everything is dimensionless (hbar = M = K = 1, energies in units of
hbar*omega). A Hamiltonian is represented by two quadratic forms

    H = p.G p + x.V x

with ``G`` the kinetic form (in momenta) and ``V`` the potential form
(in coordinates). For particles of mass m_i the kinetic form is
diag(1 / (2 m_i)); pair springs contribute K_ij/2 (x_i - x_j)^2.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    DisconnectedModelError,
    FrameMismatchError,
    ModelError,
    NegativeSpringError,
    UnstableModelError,
)

ABSOLUTE = "absolute"

# Nonzero normal-mode frequencies are real on (-1/2, 0) for the lambda family.
LAMBDA_STABILITY_LIMIT = -0.5


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class FormKind(enum.Enum):
    KINETIC = "kinetic"
    POTENTIAL = "potential"


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Symmetric coefficient matrix of a kinetic or potential form.

    Only the upper triangle of ``matrix`` is read; the stored matrix is its
    exact symmetric completion.
    """

    kind: FormKind
    matrix: np.ndarray
    frame: str = ABSOLUTE

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"quadratic form must be square, got shape {m.shape}")
        upper = np.triu(m)
        object.__setattr__(self, "matrix", _frozen(upper + np.triu(m, 1).T))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.matrix @ x)

    def _check_compatible(self, other: QuadraticForm):
        if self.kind is not other.kind:
            raise ValueError(f"cannot combine {self.kind.value} and {other.kind.value} forms")
        if self.frame != other.frame:
            raise FrameMismatchError(f"frame {self.frame!r} != {other.frame!r}")

    def __add__(self, other: QuadraticForm) -> QuadraticForm:
        self._check_compatible(other)
        return QuadraticForm(self.kind, self.matrix + other.matrix, self.frame)

    def __sub__(self, other: QuadraticForm) -> QuadraticForm:
        self._check_compatible(other)
        return QuadraticForm(self.kind, self.matrix - other.matrix, self.frame)

    def scaled(self, factor: float) -> QuadraticForm:
        return QuadraticForm(self.kind, factor * self.matrix, self.frame)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "frame": self.frame, "matrix": self.matrix.tolist()}


@dataclass(frozen=True, eq=False)
class HarmonicModel:
    """Masses and pairwise spring constants of a 1-D few-body system.

    Parameters
    ----------
    masses : sequence of float
        N positive masses.
    springs : (N, N) array_like
        Symmetric force-constant matrix with zero diagonal.
    allow_negative_springs : bool
        Accept negative force constants as long as every internal normal
        mode stays bound (used for the lambda family below zero).
    """

    masses: np.ndarray
    springs: np.ndarray
    allow_negative_springs: bool = field(default=False)

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float).ravel()
        springs = np.asarray(self.springs, dtype=float)
        n = masses.size
        if n < 2:
            raise ModelError("a model needs at least two particles")
        if not np.all(np.isfinite(masses)) or np.any(masses <= 0):
            raise ModelError(f"masses must be positive, got {masses.tolist()}")
        if springs.shape != (n, n):
            raise ModelError(f"springs must be {n}x{n}, got shape {springs.shape}")
        if not np.all(np.isfinite(springs)):
            raise ModelError("springs must be finite")
        if not np.array_equal(springs, springs.T):
            raise ModelError("springs matrix must be symmetric")
        if np.any(np.diag(springs) != 0):
            raise ModelError("springs matrix must have a zero diagonal")
        if np.any(springs < 0) and not self.allow_negative_springs:
            i, j = np.argwhere(springs < 0)[0]
            raise NegativeSpringError(f"negative spring K[{i}][{j}] = {springs[i, j]}")
        ncomp, _ = connected_components(springs != 0, directed=False)
        if ncomp > 1:
            raise DisconnectedModelError(f"interaction graph has {ncomp} components")
        object.__setattr__(self, "masses", _frozen(masses))
        object.__setattr__(self, "springs", _frozen(springs))
        if self.allow_negative_springs:
            self._check_stable()

    def _check_stable(self):
        w2 = np.linalg.eigvalsh(mass_weighted_hessian(self))
        scale = np.max(np.abs(w2))
        zero = np.abs(w2) < 1e-10 * scale
        if np.any(w2[~zero] < 0) or np.count_nonzero(zero) != 1:
            raise UnstableModelError(
                f"relative Hamiltonian is not bounded below (mode curvatures {w2.tolist()})"
            )

    @property
    def n(self) -> int:
        return self.masses.size

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def to_config(self) -> dict:
        iu = np.argwhere(np.triu(self.springs, 1) != 0)
        return {
            "masses": self.masses.tolist(),
            "springs": [[int(i), int(j), float(self.springs[i, j])] for i, j in iu],
        }


def make_lambda_model(lam: float, allow_negative: bool = False) -> HarmonicModel:
    """Three unit masses with K12 = K13 = 1 and K23 = lam.

    With ``allow_negative`` the admissible range extends to -1/2 < lam < 0;
    at or below -1/2 construction fails with UnstableModelError.
    """
    lam = float(lam)
    if lam < 0 and not allow_negative:
        raise NegativeSpringError(f"lambda must be >= 0, got {lam}")
    if lam <= LAMBDA_STABILITY_LIMIT:
        raise UnstableModelError(f"lambda = {lam} <= -1/2 gives an unbounded relative Hamiltonian")
    springs = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, lam], [1.0, lam, 0.0]])
    return HarmonicModel(np.ones(3), springs, allow_negative_springs=lam < 0)


def kinetic_form(model: HarmonicModel) -> QuadraticForm:
    return QuadraticForm(FormKind.KINETIC, np.diag(0.5 / model.masses), ABSOLUTE)


def potential_form(model: HarmonicModel) -> QuadraticForm:
    """Sum of K_ij/2 (x_i - x_j)^2 over pairs, as a matrix in absolute coordinates."""
    half = 0.5 * model.springs
    v = np.diag(half.sum(axis=1)) - half
    return QuadraticForm(FormKind.POTENTIAL, v, ABSOLUTE)


def mass_weighted_hessian(model: HarmonicModel) -> np.ndarray:
    """M^-1/2 (d^2 V / dx dx) M^-1/2; its eigenvalues are squared mode frequencies."""
    hess = np.diag(model.springs.sum(axis=1)) - model.springs
    s = 1.0 / np.sqrt(model.masses)
    return s[:, None] * hess * s[None, :]


def model_from_config(config: Mapping) -> HarmonicModel:
    """Build a model from the JSON config schema.

    Either ``{"family": "lambda", "lambda": x}`` or
    ``{"masses": [...], "springs": [[i, j, k], ...]}`` with 0-based indices.
    """
    if not isinstance(config, Mapping):
        raise ModelError("model config must be a JSON object")
    if "family" in config:
        if config["family"] != "lambda":
            raise ModelError(f"unknown model family {config['family']!r}")
        if "lambda" not in config:
            raise ModelError("lambda family config needs a 'lambda' value")
        return make_lambda_model(config["lambda"], allow_negative=bool(config.get("allow_negative", False)))
    try:
        masses = [float(m) for m in config["masses"]]
        edges = config["springs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"bad model config: {exc}") from exc
    n = len(masses)
    springs = np.zeros((n, n))
    for edge in edges:
        if len(edge) != 3:
            raise ModelError(f"spring entry must be [i, j, k], got {edge!r}")
        i, j, k = int(edge[0]), int(edge[1]), float(edge[2])
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ModelError(f"bad spring indices ({i}, {j}) for {n} particles")
        springs[i, j] = springs[j, i] = k
    return HarmonicModel(masses, springs, allow_negative_springs=bool(config.get("allow_negative", False)))


def load_model_config(path) -> HarmonicModel:
    """Read a model config file. JSON syntax errors propagate as json.JSONDecodeError."""
    with Path(path).open() as fh:
        return model_from_config(json.load(fh))
