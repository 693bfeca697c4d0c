"""Self-checks behind ``nomo-lab verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import closed_forms as cf
from .gaussian import GaussianDensity, marginalize
from .model import make_lambda_model
from .oracle import exact_exponent, grid_ground_energy, solve_normal_modes
from .sweep import ordering_violations
from .transforms import heavy_center_transform, validate_transform
from .variational import Variant, run_all


@dataclass(frozen=True)
class Check:
    name: str
    expected: float
    got: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return math.isfinite(self.got) and abs(self.got - self.expected) <= self.tolerance


def _setup(lam):
    model = make_lambda_model(lam)
    return model, heavy_center_transform(model)


def _by_variant(results):
    return {r.variant: r for r in results}


def quick_checks() -> list[Check]:
    checks = []
    model, tr = _setup(1.0)
    res = _by_variant(run_all(model, tr))
    tf, tc = res[Variant.TF], res[Variant.TC]
    s3 = math.sqrt(3)
    checks += [
        Check("tf energy at lambda=1", s3, tf.energy, 1e-10),
        Check("tf alpha at lambda=1", 2 * s3 / 3, tf.marginal.alpha, 1e-10),
        Check("tf beta at lambda=1", 2 * s3 / 3, tf.marginal.beta, 1e-10),
        Check("tf <T_CM> at lambda=1", s3 / 4, tf.tcm_expectation, 1e-10),
        Check("tc energy at lambda=1", cf.tc_energy(1.0), tc.energy, 1e-10),
        Check("ctc energy at lambda=1", 5 * math.sqrt(2) / 4, res[Variant.CTC].energy, 1e-10),
        Check("rel-unc energy at lambda=1", 2.0, res[Variant.REL_UNC].energy, 1e-10),
    ]

    lams = [0.0, 0.5, 1.0, 2.0, 3.0, 5.0]
    e_err = p_tf = p_tc = omega_err = 0.0
    rows = []
    for lam in lams:
        m, t = _setup(lam)
        r = _by_variant(run_all(m, t))
        e_err = max(e_err, abs(solve_normal_modes(m).relative_ground_energy - cf.exact_energy(lam)))
        p_tf = max(p_tf, np.max(np.abs(r[Variant.TF].params - cf.tf_params(lam))))
        p_tc = max(p_tc, np.max(np.abs(r[Variant.TC].params - cf.tc_params(lam))))
        a, b = cf.exact_ab(lam)
        omega = exact_exponent(m, t).exponent
        omega_err = max(omega_err, np.max(np.abs(omega - [[2 * a, -b], [-b, 2 * a]])))
        rows.append({"lambda": lam, **{v.value: r[v].energy for v in (Variant.EXACT, Variant.TF, Variant.TC, Variant.CTC)}})
    checks += [
        Check("normal-mode energy vs closed form", 0.0, e_err, 1e-10),
        Check("exact exponent vs closed form", 0.0, omega_err, 1e-10),
        Check("tf parameter recovery", 0.0, p_tf, 1e-8),
        Check("tc parameter recovery", 0.0, p_tc, 1e-8),
    ]
    bad = ordering_violations(rows)
    checks.append(Check("ordering exact<=tf<=ctc<=tc", 0.0, float(len(bad)), 0.0, "; ".join(bad)))
    bound = [row["tf"] - row["exact"] for row in rows]
    checks.append(Check("variational bound tf >= exact", 0.0, float(sum(d < -1e-12 for d in bound)), 0.0))

    jac = validate_transform([[1 / 3, 1 / 3, 1 / 3], [-1, 1, 0], [-0.5, -0.5, 1]], model)
    checks += [
        Check("t t^-1 = I", 0.0, float(np.max(np.abs(jac.t @ jac.t_inv - np.eye(3)))), 1e-12),
        Check("(t^-1)_i1 = 1", 0.0, float(np.max(np.abs(jac.t_inv[:, 0] - 1))), 1e-12),
    ]

    rng = np.random.default_rng(7)
    x = rng.normal(size=(4, 4))
    dens = GaussianDensity(x @ x.T + 4 * np.eye(4))
    two = marginalize(marginalize(dens, [3]), [1])
    one = marginalize(dens, [1, 3])
    checks.append(Check("two-step marginalization", 0.0, float(np.max(np.abs(two.exponent - one.exponent))), 1e-12))
    return checks


def full_checks() -> list[Check]:
    """Grid cross-check of the analytic ground energy at five lambdas.

    The O(h^2) stencil error at 96 points is about 1e-3, so the two-level
    Richardson extrapolate (4 E_192 - E_96) / 3 is what gets compared.
    """
    checks = []
    for lam in (0.0, 0.5, 1.0, 3.0, 5.0):
        m, t = _setup(lam)
        e1 = grid_ground_energy(m, t, 8.0, 96)
        e2 = grid_ground_energy(m, t, 8.0, 192)
        checks.append(Check(f"grid oracle (extrapolated) at lambda={lam:g}", cf.exact_energy(lam), (4 * e2 - e1) / 3, 1e-4))
    return checks


def run_checks(level: str = "quick") -> list[Check]:
    if level not in ("quick", "full"):
        raise ValueError(f"unknown verify level {level!r}")
    checks = quick_checks()
    if level == "full":
        checks += full_checks()
    return checks


def format_report(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  {'expected':>17}  {'got':>17}  {'tol':>8}  result"]
    for c in checks:
        line = f"{c.name:<{width}}  {c.expected:>17.9g}  {c.got:>17.9g}  {c.tolerance:>8.1e}  {'PASS' if c.passed else 'FAIL'}"
        if c.detail and not c.passed:
            line += f"  ({c.detail})"
        lines.append(line)
    npass = sum(c.passed for c in checks)
    lines.append(f"{npass}/{len(checks)} checks passed")
    return "\n".join(lines)
