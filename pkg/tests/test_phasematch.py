import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tiltspdc.dispersion import ORDINARY
from tiltspdc.phasematch import (
    CrystalConfig, PhaseMatchingError, TaylorCoefficients, central_dispersion, delta_k_exact,
    delta_k_taylor, solve_pm_angle, taylor_coefficients, _delta_k0,
)
from tiltspdc.tilt import TiltConfig
from tiltspdc.units import C_MM_PER_FS, wavelength_to_omega

W0 = float(wavelength_to_omega(800.0))


def test_pm_angle_against_brute_force_scan():
    th = np.arange(30.0, 60.0, 0.01)
    dk = np.array([_delta_k0(t, 400.0, "extraordinary", "bbo_kato1986")[0] for t in th])
    j = np.nonzero(np.diff(np.sign(dk)))[0]
    assert j.size == 1
    theta = solve_pm_angle(400.0)
    assert 40.0 < theta < 45.0
    assert th[j[0]] <= theta <= th[j[0] + 1]


def test_pm_residual_and_bracketing():
    theta = solve_pm_angle(400.0)
    dk, kp = _delta_k0(theta, 400.0, "extraordinary", "bbo_kato1986")
    assert abs(dk) < 1e-10 * kp
    lo = _delta_k0(theta - 0.01, 400.0, "extraordinary", "bbo_kato1986")[0]
    hi = _delta_k0(theta + 0.01, 400.0, "extraordinary", "bbo_kato1986")[0]
    assert np.sign(lo) != np.sign(hi)


def test_pm_angle_stable_under_bracket_change():
    a = solve_pm_angle(400.0, bracket=(0.01, 89.99))
    b = solve_pm_angle(400.0, bracket=(20.0, 70.0))
    assert abs(a - b) < 1e-6


def test_pm_angle_independent_of_which_photon_is_called_signal():
    assert solve_pm_angle(400.0, ORDINARY) == pytest.approx(solve_pm_angle(400.0), abs=1e-9)


def test_unreachable_phase_matching():
    with pytest.raises(PhaseMatchingError, match="no phase matching"):
        solve_pm_angle(210.0)


def test_exact_mismatch_vanishes_at_degeneracy(crystal):
    kp = central_dispersion(crystal)["pump"].k_per_mm
    assert abs(delta_k_exact(W0, W0, crystal)) < 1e-10 * kp


def test_exact_mismatch_not_symmetric(crystal):
    O = 0.01
    a = delta_k_exact(W0 + O, W0 - O, crystal)
    b = delta_k_exact(W0 - O, W0 + O, crystal)
    assert abs(a - b) > 0.1


def _box(half_nm, n=81):
    lam = 800.0 + np.linspace(-half_nm, half_nm, n)
    Ws, Wi = np.meshgrid(wavelength_to_omega(lam), wavelength_to_omega(lam), indexing="ij")
    return Ws, Wi


def test_taylor_matches_exact_in_5nm_box(crystal):
    co = taylor_coefficients(crystal)
    scale = np.pi / crystal.length_mm
    errs = []
    for half in (5.0, 2.5):
        Ws, Wi = _box(half)
        err = np.abs(delta_k_taylor(Ws - W0, Wi - W0, co) - delta_k_exact(Ws, Wi, crystal)).max()
        errs.append(err)
    assert errs[0] <= 0.01 * scale
    assert errs[0] / errs[1] >= 4.0


def test_second_order_is_slight_correction(crystal):
    co = taylor_coefficients(crystal)
    Ws, Wi = _box(5.0)
    Os, Oi = Ws - W0, Wi - W0
    first = co.nps * Os + co.npi * Oi
    second = delta_k_taylor(Os, Oi, co) - first
    away = np.abs(first) > np.pi / crystal.length_mm
    assert np.all(np.abs(second[away]) < 0.1 * np.abs(first[away]))


def test_untilted_coefficients_are_material_values(crystal):
    d = central_dispersion(crystal)
    co = taylor_coefficients(crystal, TiltConfig(0.0))
    assert co.nps == d["pump"].N - d["signal"].N
    assert co.npi == d["pump"].N - d["idler"].N
    assert co.dps == d["pump"].D - d["signal"].D
    assert co.dpi == d["pump"].D - d["idler"].D
    assert co.dpp == d["pump"].D


def test_cross_term_is_tilted_pump_gvd(crystal):
    co = taylor_coefficients(crystal, TiltConfig(38.0))
    assert co.dpp == co.effective["pump"]["D"]


def test_shift_at_38_deg(crystal):
    d = central_dispersion(crystal)
    t = np.tan(np.radians(38.0)) / C_MM_PER_FS
    tr = {w: np.tan(np.radians(d[w].rho)) for w in d}
    c0 = taylor_coefficients(crystal, TiltConfig(0.0))
    c1 = taylor_coefficients(crystal, TiltConfig(38.0))
    assert c1.nps - c0.nps == pytest.approx(t * (tr["pump"] - tr["signal"]), rel=1e-10)
    assert c1.npi - c0.npi == pytest.approx(t * tr["pump"], rel=1e-10)
    # roughly 233 tan(38) fs/mm scaled by the ratio of walk-off tangents
    assert c1.npi - c0.npi == pytest.approx(233 * np.tan(np.radians(38)) * tr["pump"] / np.tan(np.radians(4)), rel=0.02)


def test_taylor_origin_is_zero():
    co = TaylorCoefficients(1.0, 2.0, 3.0, 4.0, 5.0)
    assert delta_k_taylor(0.0, 0.0, co) == 0.0


@settings(max_examples=100, deadline=None)
@given(c=st.lists(st.floats(-1e3, 1e3), min_size=5, max_size=5),
       Os=st.floats(-0.5, 0.5), Oi=st.floats(-0.5, 0.5))
def test_taylor_polynomial_evaluation(c, Os, Oi):
    co = TaylorCoefficients(*c)
    expected = c[0] * Os + c[1] * Oi + c[2] * Os * Os / 2 + c[3] * Oi * Oi / 2 + c[4] * Os * Oi
    assert delta_k_taylor(Os, Oi, co) == pytest.approx(expected, rel=1e-12, abs=1e-10)


@given(x=st.floats(-60.0, 60.0))
def test_taylor_third_differences_vanish(x, ):
    co = taylor_coefficients(CrystalConfig().resolved(), TiltConfig(x))
    h = 0.01
    O = np.arange(4) * h
    for path in (lambda t: (t, 0.3 * t), lambda t: (-t, t), lambda t: (t, t)):
        v = np.array([delta_k_taylor(*path(o), co) for o in O])
        third = v[3] - 3 * v[2] + 3 * v[1] - v[0]
        assert abs(third) < 1e-9 * (1 + np.abs(v).max())


def test_crystal_config_validation():
    with pytest.raises(ValueError, match="length"):
        CrystalConfig(length_mm=0.0)
    with pytest.raises(ValueError, match="walkoff_sign"):
        CrystalConfig(walkoff_sign=(1, 0, 1))
    with pytest.raises(ValueError, match="signal_polarization"):
        CrystalConfig(signal_polarization="circular")
