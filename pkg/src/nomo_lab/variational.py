"""
Variational schemes over Gaussian families.

TF   minimize <H - T_CM> over states of the absolute coordinates
TC   minimize <H> over the same states (CM kinetic energy left in)
CTC  evaluate <H - T_CM> at the TC optimum
REL  minimize <H_rel> over states of the internal coordinates

Positive parameters are optimized through their logarithms, so every
family is an unconstrained smooth problem. Gradients are analytic:
for W(A) = 1/2 tr(G A) + 1/2 tr(V A^-1),

    dW = tr(X dA),   X = 1/2 (G - A^-1 V A^-1).
"""

from __future__ import annotations

import contextlib
import enum
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from .errors import DidNotConvergeError, InfeasibleParamsError, NotPositiveDefiniteError, NotSymmetricPairError
from .gaussian import AlphaBeta, GaussianState, alpha_beta, energy_expectation, internal_marginal, kinetic_expectation
from .model import ABSOLUTE, HarmonicModel, QuadraticForm, kinetic_form, mass_weighted_hessian, potential_form
from .oracle import exact_exponent, solve_normal_modes
from .transforms import CoordinateTransform, push_kinetic, push_potential, tcm_absolute

# Warn when the softest internal mode is this soft relative to the stiffest.
SOFT_MODE_RATIO = 0.05


class Variant(enum.Enum):
    TF = "tf"
    TC = "tc"
    CTC = "ctc"
    REL_UNC = "rel-unc"
    EXACT = "exact"


class FamilyKind(enum.Enum):
    PRODUCT_ABSOLUTE = "product"
    PRODUCT_ABSOLUTE_FULL = "product-full"
    UNCORRELATED_RELATIVE = "uncorrelated-relative"
    FULL_GAUSSIAN = "full"


@dataclass(frozen=True)
class AnsatzFamily:
    """A parametrized set of Gaussian exponents.

    ``product``
        exp[-a x_anchor^2 - b sum_{i != anchor} x_i^2]; params (a, b) > 0
    ``product-full``
        exp[-sum_i a_i x_i^2]; one positive parameter per particle
    ``uncorrelated-relative``
        exp[-a sum_k q_k^2] over internal coordinates; params (a,) > 0
    ``full``
        A = L L^T with L lower triangular; params are the row-major lower
        triangle of L with its diagonal stored as logarithms
    """

    kind: FamilyKind = FamilyKind.PRODUCT_ABSOLUTE
    anchor: int = 0

    @property
    def absolute(self) -> bool:
        return self.kind in (FamilyKind.PRODUCT_ABSOLUTE, FamilyKind.PRODUCT_ABSOLUTE_FULL)

    def n_params(self, dim: int) -> int:
        if self.kind is FamilyKind.PRODUCT_ABSOLUTE:
            return 2
        if self.kind is FamilyKind.PRODUCT_ABSOLUTE_FULL:
            return dim
        if self.kind is FamilyKind.UNCORRELATED_RELATIVE:
            return 1
        return dim * (dim + 1) // 2

    def default_params(self, dim: int) -> np.ndarray:
        if self.kind is FamilyKind.FULL_GAUSSIAN:
            return np.zeros(self.n_params(dim))
        return np.ones(self.n_params(dim))

    def _check(self, params, dim: int) -> np.ndarray:
        p = np.asarray(params, dtype=float).ravel()
        if p.size != self.n_params(dim):
            raise InfeasibleParamsError(f"{self.kind.value} family needs {self.n_params(dim)} parameters, got {p.size}")
        if not np.all(np.isfinite(p)):
            raise InfeasibleParamsError(f"non-finite parameters {p.tolist()}")
        if self.kind is not FamilyKind.FULL_GAUSSIAN and np.any(p <= 0):
            raise InfeasibleParamsError(f"{self.kind.value} parameters must be positive, got {p.tolist()}")
        return p

    def exponent(self, params, dim: int) -> np.ndarray:
        p = self._check(params, dim)
        if self.kind is FamilyKind.PRODUCT_ABSOLUTE:
            d = np.full(dim, 2.0 * p[1])
            d[self.anchor] = 2.0 * p[0]
            return np.diag(d)
        if self.kind is FamilyKind.PRODUCT_ABSOLUTE_FULL:
            return np.diag(2.0 * p)
        if self.kind is FamilyKind.UNCORRELATED_RELATIVE:
            return 2.0 * p[0] * np.eye(dim)
        chol = self._factor(p, dim)
        return chol @ chol.T

    @staticmethod
    def _factor(p: np.ndarray, dim: int) -> np.ndarray:
        chol = np.zeros((dim, dim))
        chol[np.tril_indices(dim)] = p
        idx = np.arange(dim)
        chol[idx, idx] = np.exp(chol[idx, idx])
        return chol

    def pull_back(self, params, x: np.ndarray, dim: int) -> np.ndarray:
        """dW/dparams given the matrix gradient X with dW = tr(X dA)."""
        p = self._check(params, dim)
        diag = np.diag(x)
        if self.kind is FamilyKind.PRODUCT_ABSOLUTE:
            da = 2.0 * diag[self.anchor]
            return np.array([da, 2.0 * diag.sum() - da])
        if self.kind is FamilyKind.PRODUCT_ABSOLUTE_FULL:
            return 2.0 * diag
        if self.kind is FamilyKind.UNCORRELATED_RELATIVE:
            return np.array([2.0 * diag.sum()])
        chol = self._factor(p, dim)
        dl = 2.0 * x @ chol
        idx = np.arange(dim)
        dl[idx, idx] *= chol[idx, idx]
        return dl[np.tril_indices(dim)]

    def to_unconstrained(self, params) -> np.ndarray:
        p = np.asarray(params, dtype=float)
        return p.copy() if self.kind is FamilyKind.FULL_GAUSSIAN else np.log(p)

    def from_unconstrained(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return u.copy() if self.kind is FamilyKind.FULL_GAUSSIAN else np.exp(u)


DEFAULT_FAMILY = AnsatzFamily()


@dataclass(frozen=True)
class MinimizeOptions:
    tolerance: float = 1e-10
    max_iterations: int = 500
    initial: tuple | None = None
    method: str = "bfgs"
    multistart: int = 0
    seed: int | None = None
    strict: bool = False


@dataclass(frozen=True, eq=False)
class NomoResult:
    variant: Variant
    params: np.ndarray
    energy: float
    tcm_expectation: float
    marginal: AlphaBeta | None
    iterations: int
    converged: bool
    family: AnsatzFamily | None = None
    gradient_norm: float = 0.0
    state: GaussianState | None = field(default=None, repr=False)
    marginal_exponent: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "family": None if self.family is None else self.family.kind.value,
            "params": np.asarray(self.params).tolist(),
            "energy": self.energy,
            "tcm_expectation": self.tcm_expectation,
            "alpha": None if self.marginal is None else self.marginal.alpha,
            "beta": None if self.marginal is None else self.marginal.beta,
            "marginal_exponent": None if self.marginal_exponent is None else self.marginal_exponent.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
            "gradient_norm": self.gradient_norm,
        }


def _check_family(variant: Variant, family: AnsatzFamily):
    if variant in (Variant.TF, Variant.TC) and family.kind is FamilyKind.UNCORRELATED_RELATIVE:
        raise ValueError(f"{variant.value} needs a family over the absolute coordinates")
    if variant is Variant.REL_UNC and family.absolute:
        raise ValueError("rel-unc needs a family over the internal coordinates")
    if variant not in (Variant.TF, Variant.TC, Variant.REL_UNC):
        raise ValueError(f"no objective for variant {variant.value}")


def hamiltonian(variant: Variant, model: HarmonicModel, transform: CoordinateTransform) -> tuple[QuadraticForm, QuadraticForm]:
    """(kinetic, potential) forms minimized by ``variant``."""
    if variant is Variant.TF:
        return kinetic_form(model) - tcm_absolute(model), potential_form(model)
    if variant is Variant.TC:
        return kinetic_form(model), potential_form(model)
    if variant is Variant.REL_UNC:
        _, trel = push_kinetic(kinetic_form(model), transform)
        return trel, push_potential(potential_form(model), transform)
    raise ValueError(f"no Hamiltonian for variant {variant.value}")


def _frame_and_dim(variant: Variant, model: HarmonicModel, transform: CoordinateTransform):
    if variant is Variant.REL_UNC:
        return transform.internal_frame, model.n - 1
    return ABSOLUTE, model.n


def trial_state(variant, family, params, model, transform) -> GaussianState:
    frame, dim = _frame_and_dim(variant, model, transform)
    try:
        return GaussianState(family.exponent(params, dim), frame)
    except NotPositiveDefiniteError as exc:
        raise InfeasibleParamsError(str(exc)) from exc


def objective(variant: Variant, family: AnsatzFamily, params, model: HarmonicModel, transform: CoordinateTransform) -> float:
    _check_family(variant, family)
    state = trial_state(variant, family, params, model, transform)
    kin, pot = hamiltonian(variant, model, transform)
    return energy_expectation(state, kin, pot)


def objective_gradient(variant: Variant, family: AnsatzFamily, params, model: HarmonicModel, transform: CoordinateTransform) -> np.ndarray:
    _check_family(variant, family)
    state = trial_state(variant, family, params, model, transform)
    kin, pot = hamiltonian(variant, model, transform)
    a_inv = np.linalg.inv(state.exponent)
    x = 0.5 * (kin.matrix - a_inv @ pot.matrix @ a_inv)
    return family.pull_back(params, x, state.dim)


def _warn_if_soft(model: HarmonicModel):
    w2 = np.sort(np.linalg.eigvalsh(mass_weighted_hessian(model)))[1:]
    if w2[0] < SOFT_MODE_RATIO * w2[-1]:
        warnings.warn(
            f"softest internal mode curvature {w2[0]:.3g} is close to the stability boundary",
            RuntimeWarning,
            stacklevel=3,
        )


def _natural_gradient_norm(variant, family, u, model, transform) -> float:
    params = family.from_unconstrained(u)
    return float(np.linalg.norm(objective_gradient(variant, family, params, model, transform)))


def _polish(fun, u, gnorm, variant, family, model, transform):
    """Solve grad W = 0 near a BFGS endpoint.

    Close to the minimum, energy differences drop below round-off long
    before the gradient does, which stalls line searches; a root solve on
    the analytic gradient does not depend on function values.
    """
    e0 = fun(u)[0]
    sol = scipy.optimize.root(lambda v: fun(v)[1], u, method="hybr", options={"xtol": 1e-15})
    if not np.all(np.isfinite(sol.x)):
        return u, gnorm, 0
    e1, _ = fun(sol.x)
    g1 = _natural_gradient_norm(variant, family, sol.x, model, transform)
    if g1 < gnorm and e1 <= e0 + 1e-13 * max(1.0, abs(e0)):
        return sol.x, g1, int(sol.nfev)
    return u, gnorm, 0


@contextlib.contextmanager
def quiet_line_search():
    """Silence scipy line-search warnings; stalls are handled by _polish."""
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", category=RuntimeWarning, module=r"scipy\.optimize")
        yield


def _run_one(variant, family, model, transform, start, opts: MinimizeOptions):
    kin, pot = hamiltonian(variant, model, transform)
    frame, dim = _frame_and_dim(variant, model, transform)

    def fun(u):
        params = family.from_unconstrained(u)
        try:
            a = family.exponent(params, dim)
            state = GaussianState(a, frame)
        except (InfeasibleParamsError, NotPositiveDefiniteError):
            return np.inf, np.zeros_like(u)
        a_inv = np.linalg.inv(a)
        x = 0.5 * (kin.matrix - a_inv @ pot.matrix @ a_inv)
        g = family.pull_back(params, x, dim)
        if family.kind is not FamilyKind.FULL_GAUSSIAN:
            g = g * params
        return energy_expectation(state, kin, pot), g

    u = family.to_unconstrained(start)
    iterations = 0
    if opts.method == "bfgs":
        # BFGS can stop on a line-search precision limit before the natural
        # gradient reaches tolerance; a fresh Hessian estimate usually finishes.
        for _ in range(5):
            with quiet_line_search():
                res = scipy.optimize.minimize(
                    fun, u, jac=True, method="BFGS",
                    options={"gtol": 0.1 * opts.tolerance, "maxiter": max(1, opts.max_iterations - iterations)},
                )
            u = res.x
            iterations += int(res.nit)
            gnorm = _natural_gradient_norm(variant, family, u, model, transform)
            if gnorm < opts.tolerance or iterations >= opts.max_iterations:
                break
        if gnorm >= opts.tolerance:
            u, gnorm, nit = _polish(fun, u, gnorm, variant, family, model, transform)
            iterations += nit
        converged = gnorm < opts.tolerance
    elif opts.method == "simplex":
        res = scipy.optimize.minimize(
            lambda v: fun(v)[0], u, method="Nelder-Mead",
            options={"xatol": 1e-13, "fatol": 1e-16, "maxiter": 20 * opts.max_iterations,
                     "maxfev": 40 * opts.max_iterations},
        )
        u = res.x
        iterations = int(res.nit)
        gnorm = _natural_gradient_norm(variant, family, u, model, transform)
        converged = bool(res.success)
    else:
        raise ValueError(f"unknown method {opts.method!r}; use 'bfgs' or 'simplex'")
    params = family.from_unconstrained(u)
    return params, iterations, converged, gnorm


def _marginal_of(state: GaussianState, transform: CoordinateTransform):
    density = internal_marginal(state, transform) if state.frame == ABSOLUTE else state.density()
    try:
        ab = alpha_beta(density)
    except (ValueError, NotSymmetricPairError):
        ab = None
    return ab, np.array(density.exponent)


def _tcm_of(state: GaussianState, model: HarmonicModel) -> float:
    # internal-frame states carry no CM dependence, so T_CM contributes exactly 0
    if state.frame != ABSOLUTE:
        return 0.0
    return kinetic_expectation(state, tcm_absolute(model))


def minimize(
    variant: Variant,
    family: AnsatzFamily,
    model: HarmonicModel,
    transform: CoordinateTransform,
    options: MinimizeOptions | None = None,
) -> NomoResult:
    """Minimize the ``variant`` objective over ``family``.

    Non-convergence is reported through ``converged=False`` on the
    best-so-far result; with ``options.strict`` it raises
    DidNotConvergeError carrying that result instead.
    """
    opts = options or MinimizeOptions()
    if variant is Variant.CTC:
        return run_ctc(model, transform, family, opts)
    if variant is Variant.EXACT:
        return exact_result(model, transform)
    _check_family(variant, family)
    _warn_if_soft(model)
    _, dim = _frame_and_dim(variant, model, transform)
    starts = [np.asarray(opts.initial, dtype=float) if opts.initial is not None else family.default_params(dim)]
    if opts.multistart and family.kind is FamilyKind.FULL_GAUSSIAN:
        rng = np.random.default_rng(opts.seed)
        starts += [rng.normal(scale=0.5, size=family.n_params(dim)) for _ in range(opts.multistart)]
    best = None
    total_iter = 0
    for start in starts:
        family._check(start, dim)
        params, nit, converged, gnorm = _run_one(variant, family, model, transform, start, opts)
        total_iter += nit
        energy = objective(variant, family, params, model, transform)
        if best is None or energy < best[1]:
            best = (params, energy, converged, gnorm)
    params, energy, converged, gnorm = best
    state = trial_state(variant, family, params, model, transform)
    ab, bmat = _marginal_of(state, transform)
    if variant is Variant.REL_UNC:
        ab = None
    result = NomoResult(
        variant=variant,
        params=params,
        energy=energy,
        tcm_expectation=_tcm_of(state, model),
        marginal=ab,
        iterations=total_iter,
        converged=converged,
        family=family,
        gradient_norm=gnorm,
        state=state,
        marginal_exponent=bmat,
    )
    if opts.strict and not converged:
        raise DidNotConvergeError(f"{variant.value} minimization did not converge (|g| = {gnorm:.3g})", result)
    return result


def ctc_from_tc(tc: NomoResult, model: HarmonicModel, transform: CoordinateTransform) -> NomoResult:
    """Re-evaluate <H - T_CM> at a TC optimum."""
    energy = objective(Variant.TF, tc.family, tc.params, model, transform)
    return replace(tc, variant=Variant.CTC, energy=energy)


def run_ctc(model, transform, family: AnsatzFamily = DEFAULT_FAMILY, options: MinimizeOptions | None = None) -> NomoResult:
    tc = minimize(Variant.TC, family, model, transform, options)
    return ctc_from_tc(tc, model, transform)


def exact_result(model: HarmonicModel, transform: CoordinateTransform) -> NomoResult:
    modes = solve_normal_modes(model)
    state = exact_exponent(model, transform)
    ab, bmat = _marginal_of(state, transform)
    iu = np.triu_indices(state.dim)
    return NomoResult(
        variant=Variant.EXACT,
        params=state.exponent[iu].copy(),
        energy=modes.relative_ground_energy,
        tcm_expectation=0.0,
        marginal=ab,
        iterations=0,
        converged=True,
        state=state,
        marginal_exponent=bmat,
    )


def run_variants(
    model,
    transform,
    variants,
    family: AnsatzFamily = DEFAULT_FAMILY,
    relative_family: AnsatzFamily | None = None,
    options=None,
) -> dict:
    """Results for the requested variants, keyed by Variant; CTC reuses the TC run."""
    variants = [Variant(v) for v in variants]
    relative_family = relative_family or AnsatzFamily(FamilyKind.UNCORRELATED_RELATIVE)
    out = {}
    for v in variants:
        if v is Variant.EXACT:
            out[v] = exact_result(model, transform)
        elif v in (Variant.TF, Variant.TC):
            out[v] = minimize(v, family, model, transform, options)
        elif v is Variant.REL_UNC:
            out[v] = minimize(v, relative_family, model, transform, options)
    if Variant.CTC in variants:
        tc = out.get(Variant.TC) or minimize(Variant.TC, family, model, transform, options)
        out[Variant.CTC] = ctc_from_tc(tc, model, transform)
    return {v: out[v] for v in variants}


def run_all(model, transform, options=None) -> list[NomoResult]:
    """Exact, TF, TC, CTC and uncorrelated-relative results, in that order."""
    order = [Variant.EXACT, Variant.TF, Variant.TC, Variant.CTC, Variant.REL_UNC]
    return list(run_variants(model, transform, order, options=options).values())
