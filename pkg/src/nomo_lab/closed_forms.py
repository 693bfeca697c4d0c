"""Closed-form reference values for the three-particle lambda family.

Used as fixed targets by ``nomo-lab verify`` and the test-suite; nothing in
the computational path imports this module.
"""

from math import sqrt


def exact_energy(lam: float) -> float:
    """Relative ground-state energy."""
    root = sqrt(3 * lam + 2 - sqrt(6 * lam + 3))
    return sqrt(2) * (2 * sqrt(2 * lam + 1) + sqrt(3) * (lam + 1)) * root / (2 * (3 * lam + 1))


def exact_ab(lam: float) -> tuple[float, float]:
    """(a, b) of psi00 ~ exp[-a (q2^2 + q3^2) + b q2 q3]."""
    root = sqrt(3 * lam + 2 - sqrt(6 * lam + 3))
    a = sqrt(6) * (sqrt(6 * lam + 3) + 3 * lam + 2) * root / (12 * (3 * lam + 1))
    b = sqrt(6) * root / 6
    return a, b


def tf_params(lam: float) -> tuple[float, float]:
    return sqrt(3) / 2, sqrt(6 * (lam + 1)) / 4


def tf_energy(lam: float) -> float:
    return sqrt(6 * (lam + 1)) / 3 + sqrt(3) / 3


def tc_params(lam: float) -> tuple[float, float]:
    return sqrt(2) / 2, sqrt(lam + 1) / 2


def tc_energy(lam: float) -> float:
    return sqrt(lam + 1) + sqrt(2) / 2


def tf_objective(a: float, b: float, lam: float) -> float:
    """<H - T_CM> for exp[-a x1^2 - b (x2^2 + x3^2)], expanded by hand."""
    return (a + 2 * b) / 3 + 1 / (4 * a) + (1 + lam) / (4 * b)


def ctc_energy(lam: float) -> float:
    """tf_objective evaluated at tc_params."""
    return 5 * sqrt(2) / 12 + 5 * sqrt(1 + lam) / 6


def relunc_param(lam: float) -> float:
    return sqrt(2 * lam + 2) / 4


def relunc_energy(lam: float) -> float:
    return sqrt(2 * lam + 2)


def product_marginal(a: float, b: float) -> tuple[float, float]:
    """(alpha, beta) of the internal density of exp[-a x1^2 - b (x2^2 + x3^2)]."""
    return 2 * b * (a + b) / (a + 2 * b), 4 * b * b / (a + 2 * b)
