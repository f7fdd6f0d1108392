import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import gaussian_grid
from tiltspdc.analysis import (
    ANTICORRELATED, ASYMMETRIC, CORRELATED, UNCORRELATED, FitError, GaussianFitResult,
    GaussianJSIFit, SchmidtDecomposition, classify_regime, fit_gaussian, schmidt_decompose,
)


def analytic_schmidt(a, b, c, n=12):
    K = 1 / np.sqrt(1 - c * c / (a * b))
    z = (K - 1) / (K + 1)
    return K, (1 - z) * z ** np.arange(n)


def result(r, metric=None):
    return GaussianFitResult(1.0, 1.0, -r, r * r if metric is None else metric, 1.0, r, 1.0, 1e-3, 10)


@pytest.mark.parametrize("abc", [(1.0e4, 2.0e4, 5.0e3), (3.0e4, 1.5e4, -1.2e4), (2.0e4, 2.0e4, 0.0)])
def test_gaussian_self_fit_recovery(abc):
    g = gaussian_grid(*abc)
    f = fit_gaussian(g)
    for got, want in zip((f.a, f.b, f.c_fit), abc):
        assert got == pytest.approx(want, rel=1e-6, abs=1e-6 * abc[0])
    assert f.overlap == pytest.approx(1.0, abs=1e-9)


def test_separable_fit_has_zero_metric():
    f = fit_gaussian(gaussian_grid(1.0e4, 3.0e4, 0.0))
    assert abs(f.r) < 1e-9 and f.metric < 1e-9


@settings(max_examples=20, deadline=None)
@given(a=st.floats(5e3, 5e4), b=st.floats(5e3, 5e4), rho=st.floats(-0.95, 0.95))
def test_metric_is_r_squared(a, b, rho):
    f = fit_gaussian(gaussian_grid(a, b, -rho * np.sqrt(a * b), n=101))
    assert f.metric == pytest.approx(f.r**2, abs=1e-12)
    assert f.r == pytest.approx(rho, abs=1e-6)


def test_uncorrelated_configuration(jsa_at):
    f = fit_gaussian(jsa_at(-20.0))
    assert f.metric <= 0.05
    assert f.overlap >= 0.95
    assert classify_regime(f) == UNCORRELATED


def test_fit_rejects_degenerate_input():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(FitError, match="four"):
        GaussianJSIFit().fit(X, np.ones(3))
    g = gaussian_grid(1e4, 1e4, 0.0)
    g.intensity[:] = 0.0
    g.intensity[100, 100] = 1.0
    with pytest.raises(FitError, match="half maximum"):
        fit_gaussian(g)


def test_fit_rejects_non_normalisable_surface():
    # a saddle cannot be a normalisable Gaussian
    O = np.linspace(-1, 1, 21)
    Os, Oi = np.meshgrid(O, O, indexing="ij")
    y = np.exp(-(Os**2) + 0.5 * Oi**2)
    with pytest.raises(FitError, match="violates"):
        GaussianJSIFit(refine=False).fit(np.column_stack([Os.ravel(), Oi.ravel()]), y.ravel())


def test_product_state_schmidt():
    rng = np.random.default_rng(0)
    Phi = np.outer(rng.normal(size=80), rng.normal(size=60))
    s = SchmidtDecomposition().fit(Phi)
    assert s.entropy_ < 1e-6
    assert s.schmidt_number_ - 1 < 1e-6


@pytest.mark.parametrize("abc", [(1.0e4, 1.0e4, 6.0e3), (2.0e4, 0.8e4, -1.0e4), (1.5e4, 1.5e4, 1.2e4)])
def test_gaussian_schmidt_spectrum_matches_closed_form(abc):
    g = gaussian_grid(*abc, n=301, half=6.0, amplitude=True)
    res = schmidt_decompose(g)
    K, lam = analytic_schmidt(*abc)
    assert np.abs(res.coefficients[: lam.size] - lam).max() < 1e-4
    assert res.schmidt_number == pytest.approx(K, rel=1e-4)
    assert not res.approximate


def test_schmidt_invariant_under_transpose_and_scale(jsa_at):
    g = jsa_at(0.0)
    e = schmidt_decompose(g).entropy
    assert schmidt_decompose(g.transposed()).entropy == pytest.approx(e, abs=1e-9)
    Phi = g.amplitude * (3.0 - 2.0j)
    w = np.abs(np.gradient(g.Omega_s)), np.abs(np.gradient(g.Omega_i))
    assert SchmidtDecomposition().fit(Phi, *w).entropy_ == pytest.approx(e, abs=1e-9)


def test_entropy_increases_with_cross_term():
    cs = np.linspace(0.0, 0.9, 10) * 1e4
    ent = [schmidt_decompose(gaussian_grid(1e4, 1e4, c, n=151, half=6.0, amplitude=True)).entropy for c in cs]
    assert np.all(np.diff(ent) > 0)


def test_step_halving_barely_moves_leading_coefficient():
    a = schmidt_decompose(gaussian_grid(1e4, 2e4, 7e3, n=101, half=6.0, amplitude=True)).coefficients[0]
    b = schmidt_decompose(gaussian_grid(1e4, 2e4, 7e3, n=201, half=6.0, amplitude=True)).coefficients[0]
    assert abs(a - b) < 1e-3


def test_intensity_only_schmidt_is_flagged():
    res = schmidt_decompose(gaussian_grid(1e4, 1e4, 3e3))
    assert res.approximate
    assert res.as_dict()["approximate"] is True
    assert len(res.as_dict()["lambda_top"]) == 8


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.integers(2, 30), st.integers(0, 2**31))
def test_schmidt_result_invariants(m, n, seed):
    rng = np.random.default_rng(seed)
    s = SchmidtDecomposition().fit(rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))
    lam = s.coefficients_
    assert np.all(lam >= 0) and np.all(np.diff(lam) <= 1e-15)
    assert lam.sum() == pytest.approx(1.0, abs=1e-12)
    assert s.entropy_ >= 0 and s.schmidt_number_ >= 1 - 1e-12


def test_schmidt_rejects_bad_input():
    with pytest.raises(ValueError, match="2-d"):
        SchmidtDecomposition().fit(np.ones(5))
    with pytest.raises(ValueError, match="NaN"):
        SchmidtDecomposition().fit(np.full((3, 3), np.nan))


def test_classification_rules():
    assert classify_regime(result(-0.95)) == ANTICORRELATED
    assert classify_regime(result(-0.1, 0.01)) == UNCORRELATED
    assert classify_regime(result(0.7)) == CORRELATED
    assert classify_regime(result(0.4)) == ASYMMETRIC


def test_estimator_params_roundtrip():
    est = GaussianJSIFit(mask_threshold=1e-2)
    assert est.get_params() == {"mask_threshold": 1e-2, "refine": True}
    assert est.set_params(refine=False).refine is False
