import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nomo_lab.closed_forms import product_marginal
from nomo_lab.errors import FrameMismatchError, NotPositiveDefiniteError, NotSymmetricPairError, UnsupportedDegreeError
from nomo_lab.gaussian import (
    AlphaBeta,
    GaussianDensity,
    GaussianState,
    alpha_beta,
    energy_expectation,
    internal_marginal,
    kinetic_expectation,
    linear_power,
    marginalize,
    observable_expectation,
    reexpress,
)
from nomo_lab.model import FormKind, QuadraticForm, kinetic_form, make_lambda_model, potential_form
from nomo_lab.oracle import exact_exponent
from nomo_lab.transforms import heavy_center_transform, push_kinetic, push_potential, tcm_absolute

S3 = math.sqrt(3)


def spd(rng, n, shift=0.5):
    x = rng.normal(size=(n, n))
    return x @ x.T + shift * np.eye(n)


def test_state_rejects_non_spd():
    with pytest.raises(NotPositiveDefiniteError):
        GaussianState(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefiniteError):
        GaussianState(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_tf_state_energy_and_tcm():
    model = make_lambda_model(1.0)
    state = GaussianState(np.diag([S3, S3, S3]))
    g, v, gcm = kinetic_form(model), potential_form(model), tcm_absolute(model)
    assert energy_expectation(state, g - gcm, v) == pytest.approx(S3, abs=1e-12)
    assert kinetic_expectation(state, gcm) == pytest.approx(S3 / 4, abs=1e-12)


def test_oscillator_ground_state():
    g = QuadraticForm(FormKind.KINETIC, [[0.5]])
    v = QuadraticForm(FormKind.POTENTIAL, [[0.5]])
    assert energy_expectation(GaussianState([[1.0]]), g, v) == pytest.approx(0.5, abs=1e-15)


def test_tc_state_full_hamiltonian():
    model = make_lambda_model(1.0)
    a, b = math.sqrt(2) / 2, math.sqrt(2) / 2
    state = GaussianState(np.diag([2 * a, 2 * b, 2 * b]))
    e = energy_expectation(state, kinetic_form(model), potential_form(model))
    assert e == pytest.approx(math.sqrt(2) + math.sqrt(2) / 2, abs=1e-12)


def test_energy_frame_mismatch():
    model, = (make_lambda_model(1.0),)
    tr = heavy_center_transform(model)
    _, trel = push_kinetic(kinetic_form(model), tr)
    with pytest.raises(FrameMismatchError):
        energy_expectation(GaussianState(np.eye(2)), trel, push_potential(potential_form(model), tr))
    with pytest.raises(FrameMismatchError):
        energy_expectation(GaussianState(np.eye(2)), kinetic_form(model), potential_form(model))


def _quadrature_energy(a, g, v):
    """<psi|p.Gp + x.Vx|psi> / <psi|psi> on a grid, using p.Gp psi = -div(G grad psi)."""
    n = a.shape[0]
    lim = 7.0 / math.sqrt(np.min(np.linalg.eigvalsh(a)))

    def psi(x):
        return math.exp(-0.5 * x @ a @ x)

    def num(*x):
        x = np.array(x)
        ax = a @ x
        # -div(G grad psi) / psi = tr(GA) - (Ax).G(Ax)
        loc = np.sum(g * a) - ax @ g @ ax + x @ v @ x
        return loc * psi(x) ** 2

    def den(*x):
        return psi(np.array(x)) ** 2

    opts = {"epsabs": 1e-12, "epsrel": 1e-11}
    ranges = [(-lim, lim)] * n
    top = integrate.nquad(num, ranges, opts=opts)[0]
    bot = integrate.nquad(den, ranges, opts=opts)[0]
    return top / bot


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("n", [1, 2])
def test_energy_against_quadrature(seed, n):
    rng = np.random.default_rng(seed)
    a, g, v = spd(rng, n), spd(rng, n), spd(rng, n)
    state = GaussianState(a)
    kin, pot = QuadraticForm(FormKind.KINETIC, g), QuadraticForm(FormKind.POTENTIAL, v)
    assert energy_expectation(state, kin, pot) == pytest.approx(_quadrature_energy(a, g, v), rel=1e-6)


def test_covariance_monte_carlo():
    rng = np.random.default_rng(11)
    a = spd(rng, 3)
    state = GaussianState(a)
    # |psi|^2 ~ exp(-x.A x) is normal with covariance (2A)^-1
    draws = rng.multivariate_normal(np.zeros(3), np.linalg.inv(2 * a), size=400_000)
    emp = draws.T @ draws / len(draws)
    np.testing.assert_allclose(state.covariance(), emp, atol=5e-3 * np.max(np.abs(emp)))


def test_observable_relative_distance_tf_is_exact():
    model = make_lambda_model(1.0)
    tr = heavy_center_transform(model)
    tf = GaussianState(np.diag([S3, S3, S3]))
    got = observable_expectation(tf, linear_power([-1, 1, 0], 2))
    exact = exact_exponent(model, tr)
    ref = observable_expectation(exact, {(0, 0): 1.0})
    assert got == pytest.approx(1 / S3, abs=1e-12)
    assert ref == pytest.approx(1 / S3, abs=1e-12)


def test_odd_moments_vanish():
    rng = np.random.default_rng(3)
    state = GaussianState(spd(rng, 3))
    assert observable_expectation(state, {(0,): 1.0}) == 0
    assert observable_expectation(state, {(0, 1, 2): 1.0}) == 0


def test_fourth_moment():
    assert observable_expectation(GaussianState([[2.0]]), {(0, 0, 0, 0): 1.0}) == pytest.approx(3 / 16)


def test_degree_limit():
    with pytest.raises(UnsupportedDegreeError):
        observable_expectation(GaussianState([[2.0]]), {(0,) * 5: 1.0})


def test_fourth_moment_monte_carlo():
    rng = np.random.default_rng(5)
    a = spd(rng, 2, 1.0)
    state = GaussianState(a)
    c = np.array([0.7, -1.3])
    draws = rng.multivariate_normal(np.zeros(2), np.linalg.inv(2 * a), size=400_000)
    emp = np.mean((draws @ c) ** 4)
    assert observable_expectation(state, linear_power(c, 4)) == pytest.approx(emp, rel=2e-2)


def anchored_setup():
    model = make_lambda_model(1.0)
    return model, heavy_center_transform(model)


def test_reexpress_product_into_anchored():
    _, tr = anchored_setup()
    a, b = 0.4, 0.9
    state = GaussianState(np.diag([2 * a, 2 * b, 2 * b]))
    got = reexpress(state, tr, tr.anchored_frame(0)).exponent
    # -a x1^2 - b (q2 + x1)^2 - b (q3 + x1)^2, so the x1 q2 coefficient is 4b total
    want = [[2 * a + 4 * b, 2 * b, 2 * b], [2 * b, 2 * b, 0], [2 * b, 0, 2 * b]]
    np.testing.assert_allclose(got, want, atol=1e-14)


def test_reexpress_identity_and_roundtrip():
    _, tr = anchored_setup()
    rng = np.random.default_rng(0)
    dens = GaussianDensity(spd(rng, 3))
    np.testing.assert_array_equal(reexpress(dens, tr, "absolute").exponent, dens.exponent)
    back = reexpress(reexpress(dens, tr, tr.cm_frame), tr, "absolute")
    np.testing.assert_allclose(back.exponent, dens.exponent, atol=1e-12)


def test_tf_marginal_matches_exact_density():
    model, tr = anchored_setup()
    state = GaussianState(np.diag([S3, S3, S3]))
    marg = internal_marginal(state, tr)
    assert marg.frame == tr.internal_frame
    ab = alpha_beta(marg)
    assert ab.alpha == pytest.approx(2 * S3 / 3, abs=1e-12)
    assert ab.beta == pytest.approx(2 * S3 / 3, abs=1e-12)
    # the exact relative density has the same exponent
    np.testing.assert_allclose(marg.exponent, exact_exponent(model, tr).exponent, atol=1e-12)


@pytest.mark.parametrize("a, b", [(0.3, 0.8), (1.0, 1.0), (2.5, 0.4)])
def test_product_marginal_closed_form(a, b):
    _, tr = anchored_setup()
    ab = alpha_beta(internal_marginal(GaussianState(np.diag([2 * a, 2 * b, 2 * b])), tr))
    alpha, beta = product_marginal(a, b)
    assert ab.alpha == pytest.approx(alpha, rel=1e-12)
    assert ab.beta == pytest.approx(beta, rel=1e-12)


def test_marginal_of_diagonal_is_kept_block():
    dens = GaussianDensity(np.diag([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(marginalize(dens, [1]).exponent, np.diag([1.0, 3.0]))


def test_marginalize_bad_drop():
    dens = GaussianDensity(np.eye(3))
    with pytest.raises(ValueError):
        marginalize(dens, [])
    with pytest.raises(ValueError):
        marginalize(dens, [0, 1, 2])
    with pytest.raises(IndexError):
        marginalize(dens, [5])


def test_marginal_normalization_quadrature():
    rng = np.random.default_rng(2)
    dens = GaussianDensity(spd(rng, 3, 1.0))
    marg = marginalize(dens, [0])
    pts = [(0.1, -0.2), (0.5, 0.3), (-0.7, 0.9)]
    for y in pts:
        direct = integrate.quad(lambda t: float(dens.pdf(np.array([t, *y]))), -np.inf, np.inf, epsabs=1e-14)[0]
        assert float(marg.pdf(np.array(y))) == pytest.approx(direct, abs=1e-8)
    total = integrate.dblquad(lambda u, v: float(marg.pdf(np.array([u, v]))), -12, 12, -12, 12, epsabs=1e-11)[0]
    assert total == pytest.approx(1.0, abs=1e-8)


def test_alpha_beta_examples():
    ab = alpha_beta(GaussianDensity(0.5 * np.eye(2)))
    assert (ab.alpha, ab.beta) == (0.5, 0.0)
    model, tr = anchored_setup()
    ab = alpha_beta(exact_exponent(model, tr).density())
    assert ab.alpha == pytest.approx(2 / S3, abs=1e-12) and ab.beta == pytest.approx(2 / S3, abs=1e-12)


def test_alpha_beta_errors():
    with pytest.raises(NotSymmetricPairError):
        alpha_beta(GaussianDensity(np.diag([1.0, 2.0])))
    with pytest.raises(ValueError):
        alpha_beta(GaussianDensity(np.eye(3)))
    with pytest.raises(NotPositiveDefiniteError):
        AlphaBeta(1.0, 2.5)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 6))
def test_two_step_marginalization(seed, n):
    rng = np.random.default_rng(seed)
    dens = GaussianDensity(spd(rng, n))
    i, j = sorted(rng.choice(n, size=2, replace=False))
    one = marginalize(dens, [i, j])
    two = marginalize(marginalize(dens, [j]), [i])
    scale = max(1.0, np.max(np.abs(one.exponent)))
    np.testing.assert_allclose(two.exponent, one.exponent, atol=1e-12 * scale)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_marginal_covariance_is_sub_block(seed):
    rng = np.random.default_rng(seed)
    dens = GaussianDensity(spd(rng, 4, 1.0))
    marg = marginalize(dens, [0, 2])
    np.testing.assert_allclose(marg.covariance(), dens.covariance()[np.ix_([1, 3], [1, 3])], rtol=1e-10, atol=1e-12)
