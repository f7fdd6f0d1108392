"""Collinear degenerate type-II phase matching and the phase mismatch.

Pump extraordinary; one down-converted wave extraordinary and the other
ordinary (``CrystalConfig.signal_polarization`` picks which).
"""
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .dispersion import (
    DEFAULT_SELLMEIER,
    EXTRAORDINARY,
    ORDINARY,
    WavePolarization,
    load_sellmeier,
    wave_dispersion,
    wavevector,
)
from .tilt import TiltConfig, effective_gvd, effective_inverse_group_velocity
from .units import wavelength_to_omega


class PhaseMatchingError(ValueError):
    """No phase-matching angle exists for the requested configuration."""


@dataclass(frozen=True)
class CrystalConfig:
    length_mm: float = 3.5
    lambda_p0_nm: float = 400.0
    theta_pm_deg: float = None
    signal_polarization: str = EXTRAORDINARY
    sellmeier: str = DEFAULT_SELLMEIER
    walkoff_sign: tuple = (1, 1, 1)  # pump, signal, idler

    def __post_init__(self):
        if not self.length_mm > 0:
            raise ValueError(f"crystal length must be positive, got {self.length_mm}")
        if not self.lambda_p0_nm > 0:
            raise ValueError(f"pump wavelength must be positive, got {self.lambda_p0_nm}")
        if self.signal_polarization not in (ORDINARY, EXTRAORDINARY):
            raise ValueError(f"signal_polarization must be ordinary or extraordinary, got {self.signal_polarization!r}")
        if self.theta_pm_deg is not None and not 0.0 < self.theta_pm_deg < 90.0:
            raise ValueError(f"theta_pm_deg must lie in (0, 90), got {self.theta_pm_deg}")
        signs = tuple(int(s) for s in self.walkoff_sign)
        if len(signs) != 3 or any(s not in (-1, 1) for s in signs):
            raise ValueError(f"walkoff_sign must be three entries of +1/-1, got {self.walkoff_sign}")
        object.__setattr__(self, "walkoff_sign", signs)

    @property
    def lambda_s0_nm(self):
        return 2.0 * self.lambda_p0_nm

    @property
    def lambda_i0_nm(self):
        return 2.0 * self.lambda_p0_nm

    @property
    def idler_polarization(self):
        return ORDINARY if self.signal_polarization == EXTRAORDINARY else EXTRAORDINARY

    @property
    def sellmeier_set(self):
        return load_sellmeier(self.sellmeier)

    def polarizations(self, theta_deg=None):
        theta = self.theta_pm_deg if theta_deg is None else theta_deg
        return {
            "pump": WavePolarization(EXTRAORDINARY, theta),
            "signal": WavePolarization(self.signal_polarization, theta),
            "idler": WavePolarization(self.idler_polarization, theta),
        }

    def resolved(self):
        """Copy with ``theta_pm_deg`` filled in by the phase-matching solver."""
        if self.theta_pm_deg is not None:
            return self
        theta = solve_pm_angle(self.lambda_p0_nm, self.signal_polarization, self.sellmeier)
        return replace(self, theta_pm_deg=theta)


def _delta_k0(theta_deg, lambda_p0_nm, signal_kind, sellmeier):
    s = load_sellmeier(sellmeier)
    idler_kind = ORDINARY if signal_kind == EXTRAORDINARY else EXTRAORDINARY
    wp = wavelength_to_omega(lambda_p0_nm)
    kp = wavevector(WavePolarization(EXTRAORDINARY, theta_deg), wp, s)
    ks = wavevector(WavePolarization(signal_kind, theta_deg), wp / 2, s)
    ki = wavevector(WavePolarization(idler_kind, theta_deg), wp / 2, s)
    return float(kp - ks - ki), float(kp)


def solve_pm_angle(lambda_p0_nm, signal_polarization=EXTRAORDINARY, sellmeier=DEFAULT_SELLMEIER,
                   bracket=(0.01, 89.99)):
    """Phase-matching angle (deg) for collinear degenerate type-II down-conversion."""
    f = lambda th: _delta_k0(th, lambda_p0_nm, signal_polarization, sellmeier)[0]
    lo, hi = bracket
    f_lo, f_hi = f(lo), f(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise PhaseMatchingError(
            f"no phase matching for a {lambda_p0_nm} nm pump: delta k keeps the sign "
            f"{'+' if f_lo > 0 else '-'} over theta in [{lo}, {hi}] deg"
        )
    theta = brentq(f, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=200)
    dk, kp = _delta_k0(theta, lambda_p0_nm, signal_polarization, sellmeier)
    if abs(dk) >= 1e-10 * kp:
        raise PhaseMatchingError(f"phase-matching solver did not converge (residual {dk:.3g} rad/mm)")
    return float(theta)


def delta_k_exact(omega_s, omega_i, crystal):
    """k_p(omega_s + omega_i) - k_s(omega_s) - k_i(omega_i) in rad/mm, no tilt."""
    crystal = crystal.resolved()
    pol = crystal.polarizations()
    s = crystal.sellmeier_set
    omega_s = np.asarray(omega_s, dtype=float)
    omega_i = np.asarray(omega_i, dtype=float)
    return (
        wavevector(pol["pump"], omega_s + omega_i, s)
        - wavevector(pol["signal"], omega_s, s)
        - wavevector(pol["idler"], omega_i, s)
    )


@dataclass(frozen=True)
class TaylorCoefficients:
    """Coefficients of the second-order phase-mismatch expansion.

    nps, npi in fs/mm; dps, dpi, dpp in fs^2/mm.
    """

    nps: float
    npi: float
    dps: float
    dpi: float
    dpp: float
    effective: dict = field(default_factory=dict, compare=False, repr=False)

    def as_dict(self):
        return {"nps": self.nps, "npi": self.npi, "dps": self.dps, "dpi": self.dpi, "dpp": self.dpp}


def central_dispersion(crystal):
    """WaveDispersion of pump, signal and idler at the degenerate point."""
    crystal = crystal.resolved()
    pol = crystal.polarizations()
    s = crystal.sellmeier_set
    return {
        "pump": wave_dispersion(pol["pump"], crystal.lambda_p0_nm, s),
        "signal": wave_dispersion(pol["signal"], crystal.lambda_s0_nm, s),
        "idler": wave_dispersion(pol["idler"], crystal.lambda_i0_nm, s),
    }


def taylor_coefficients(crystal, tilt=None):
    tilt = TiltConfig() if tilt is None else tilt
    crystal = crystal.resolved()
    disp = central_dispersion(crystal)
    eff = {}
    for wave, sign in zip(("pump", "signal", "idler"), crystal.walkoff_sign):
        d = disp[wave]
        xi = tilt.xi_for(wave)
        eff[wave] = {
            "N": float(effective_inverse_group_velocity(d.N, sign * d.rho, xi)),
            "D": float(effective_gvd(d.D, d.k, xi)),
        }
    p, s_, i = eff["pump"], eff["signal"], eff["idler"]
    return TaylorCoefficients(
        nps=p["N"] - s_["N"],
        npi=p["N"] - i["N"],
        dps=p["D"] - s_["D"],
        dpi=p["D"] - i["D"],
        dpp=p["D"],
        effective=eff,
    )


def delta_k_taylor(Omega_s, Omega_i, coeffs):
    """Second-order phase mismatch (rad/mm) at detunings in rad/fs."""
    Os = np.asarray(Omega_s, dtype=float)
    Oi = np.asarray(Omega_i, dtype=float)
    c = coeffs
    return (
        c.nps * Os
        + c.npi * Oi
        + 0.5 * c.dps * Os**2
        + 0.5 * c.dpi * Oi**2
        + c.dpp * Os * Oi
    )
