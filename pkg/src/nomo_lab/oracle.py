"""
Independent ground truth for harmonic models.

Three routes, none of which touch the variational engine:

* normal modes of the mass-weighted Hessian (energies),
* simultaneous diagonalization of the internal kinetic and potential forms
  (the exact ground-state exponent in any internal frame),
* finite-difference diagonalization of the internal Hamiltonian on a grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DimensionTooLargeError,
    DisconnectedModelError,
    NonConvergentError,
    UnstableModelError,
)
from .gaussian import GaussianState
from .model import HarmonicModel, kinetic_form, mass_weighted_hessian, potential_form
from .transforms import CoordinateTransform, heavy_center_transform, push_kinetic, push_potential

ZERO_MODE_TOL = 1e-10
DENSE_GRID_LIMIT = 2000
GRID_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class NormalModeSolution:
    frequencies: np.ndarray
    relative_ground_energy: float
    relative_exponent: np.ndarray


def _mode_curvatures(model: HarmonicModel) -> np.ndarray:
    w2 = np.linalg.eigvalsh(mass_weighted_hessian(model))
    radius = np.max(np.abs(w2))
    zero = np.abs(w2) < ZERO_MODE_TOL * radius
    nzero = int(np.count_nonzero(zero))
    if np.any(w2[~zero] < 0):
        raise UnstableModelError(f"negative mode curvature in {w2.tolist()}")
    if nzero > 1:
        raise DisconnectedModelError(f"{nzero} zero-frequency modes; expected only the translation")
    if nzero == 0:
        raise UnstableModelError("no translational zero mode; potential is not translation invariant")
    w2 = np.where(zero, 0.0, w2)
    return np.sort(w2)


def solve_normal_modes(model: HarmonicModel) -> NormalModeSolution:
    w2 = _mode_curvatures(model)
    freqs = np.sqrt(w2)
    energy = 0.5 * float(np.sum(freqs))
    omega = exact_exponent(model, heavy_center_transform(model, 0)).exponent
    return NormalModeSolution(freqs, energy, omega)


def _ground_exponent(g: np.ndarray, v: np.ndarray):
    """Exact ground state of H = p.G p + q.V q.

    Writing H = 1/2 p.(2G) p + 1/2 q.(2V) q and q = W u with W = (2G)^1/2
    gives unit kinetic form in u, so the exponent is W^-1 (W 2V W)^1/2 W^-1
    and the energy is half the trace of the middle square root.
    """
    gval, gvec = np.linalg.eigh(2.0 * g)
    if np.any(gval <= 0):
        raise UnstableModelError("internal kinetic form is not positive definite")
    w = (gvec * np.sqrt(gval)) @ gvec.T
    w_inv = (gvec / np.sqrt(gval)) @ gvec.T
    middle = w @ (2.0 * v) @ w
    evals, evecs = np.linalg.eigh(0.5 * (middle + middle.T))
    if np.any(evals <= 0):
        raise UnstableModelError(f"internal potential is not positive definite: {evals.tolist()}")
    lam = (evecs * np.sqrt(evals)) @ evecs.T
    omega = w_inv @ lam @ w_inv
    return 0.5 * (omega + omega.T), 0.5 * float(np.sum(np.sqrt(evals)))


def exact_exponent(model: HarmonicModel, transform: CoordinateTransform) -> GaussianState:
    """Exact relative ground state as a Gaussian in ``transform``'s internal frame."""
    _mode_curvatures(model)
    _, trel = push_kinetic(kinetic_form(model), transform)
    vrel = push_potential(potential_form(model), transform)
    omega, _ = _ground_exponent(trel.matrix, vrel.matrix)
    return GaussianState(omega, transform.internal_frame)


def _grid_hamiltonian(g: np.ndarray, v: np.ndarray, box: float, points: int):
    x = np.linspace(-box, box, points)
    h = x[1] - x[0]
    eye = sp.identity(points, format="csr")
    d2 = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(points, points), format="csr") / h**2
    d1 = sp.diags([-1.0, 1.0], [-1, 1], shape=(points, points), format="csr") / (2 * h)
    dim = g.shape[0]
    if dim == 1:
        kin = -g[0, 0] * d2
        pot = v[0, 0] * x**2
    else:
        # p_j p_k -> -d_j d_k; cross term uses the 4-point stencil d1 (x) d1.
        kin = -(g[0, 0] * sp.kron(d2, eye) + g[1, 1] * sp.kron(eye, d2) + 2.0 * g[0, 1] * sp.kron(d1, d1))
        xx, yy = np.meshgrid(x, x, indexing="ij")
        pot = (v[0, 0] * xx**2 + v[1, 1] * yy**2 + 2.0 * v[0, 1] * xx * yy).ravel()
    return (kin + sp.diags(pot)).tocsc(), h


def grid_ground_energy(
    model: HarmonicModel,
    transform: CoordinateTransform,
    box: float = 8.0,
    points: int = 96,
) -> float:
    """Lowest eigenvalue of the finite-difference internal Hamiltonian on [-box, box]^d.

    Second-order central differences with Dirichlet walls; d = N - 1 must be
    1 or 2.
    """
    dim = model.n - 1
    if dim > 2:
        raise DimensionTooLargeError(f"grid oracle supports at most 2 internal coordinates, got {dim}")
    if box <= 0:
        raise ValueError("box must be positive")
    if points < 32:
        raise ValueError("need at least 32 points per axis")
    _, trel = push_kinetic(kinetic_form(model), transform)
    vrel = push_potential(potential_form(model), transform)
    ham, _ = _grid_hamiltonian(trel.matrix, vrel.matrix, box, points)
    size = ham.shape[0]
    if size <= DENSE_GRID_LIMIT:
        evals, evecs = scipy.linalg.eigh(ham.toarray(), subset_by_index=[0, 0])
        energy, vec = evals[0], evecs[:, 0]
    else:
        # spectrum is positive, so the eigenvalue nearest zero is the lowest
        try:
            evals, evecs = spla.eigsh(ham, k=1, sigma=0.0, which="LM", tol=1e-13)
        except spla.ArpackNoConvergence as exc:
            raise NonConvergentError("ARPACK did not converge for the grid Hamiltonian") from exc
        energy, vec = evals[0], evecs[:, 0]
    residual = float(np.linalg.norm(ham @ vec - energy * vec) / np.linalg.norm(vec))
    if residual > GRID_RESIDUAL_TOL * max(1.0, abs(energy)):
        raise NonConvergentError(f"grid eigenpair residual {residual:.3g}", residual=residual)
    return float(energy)


def grid_spacing(box: float, points: int) -> float:
    return 2.0 * box / (points - 1)
