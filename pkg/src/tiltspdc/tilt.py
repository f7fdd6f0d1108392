"""Pulse-front tilt and its effect on group velocity and group velocity dispersion."""
from dataclasses import dataclass

import numpy as np

from .units import C_MM_PER_FS

WAVES = ("pump", "signal", "idler")


class GratingError(ValueError):
    """Grating equation has no real diffracted order."""


def _check_xi(xi_deg):
    if not abs(xi_deg) < 90.0:
        raise ValueError(f"tilt angle must satisfy |xi| < 90 deg, got {xi_deg}")


@dataclass(frozen=True)
class TiltConfig:
    xi_deg: float = 0.0
    applied_to: frozenset = frozenset(WAVES)

    def __post_init__(self):
        _check_xi(self.xi_deg)
        object.__setattr__(self, "applied_to", frozenset(self.applied_to))
        unknown = self.applied_to - set(WAVES)
        if unknown:
            raise ValueError(f"unknown waves in applied_to: {sorted(unknown)}")

    def xi_for(self, wave):
        return self.xi_deg if wave in self.applied_to else 0.0


@dataclass(frozen=True)
class GratingSpec:
    groove_density: float  # lines/mm
    incidence_deg: float = 0.0
    order: int = 1

    def __post_init__(self):
        if not self.groove_density > 0:
            raise ValueError(f"groove_density must be positive, got {self.groove_density}")
        if not abs(self.incidence_deg) < 90.0:
            raise ValueError(f"|incidence_deg| must be < 90, got {self.incidence_deg}")
        if int(self.order) != self.order:
            raise ValueError(f"diffraction order must be an integer, got {self.order}")


def effective_inverse_group_velocity(N, rho_deg, xi_deg):
    """N' = N + tan(xi) tan(rho) / c, all in fs/mm."""
    _check_xi(xi_deg)
    return N + np.tan(np.radians(xi_deg)) * np.tan(np.radians(rho_deg)) / C_MM_PER_FS


def effective_gvd(D, k, xi_deg):
    """D' = D + (tan(xi)/c)^2 / k.

    D in fs^2/mm, k in rad/nm.
    """
    _check_xi(xi_deg)
    if not k > 0:
        raise ValueError(f"wavevector must be positive, got {k}")
    return D + (np.tan(np.radians(xi_deg)) / C_MM_PER_FS) ** 2 / (k * 1e6)


def tilt_coefficient(rho_deg):
    """Tilt contribution to N' per unit tan(xi), fs/mm."""
    return np.tan(np.radians(rho_deg)) / C_MM_PER_FS


def diffraction_angle(grating, wavelength_nm):
    """Diffracted angle (deg) from sin(theta_i) + sin(theta_d) = m lambda G."""
    s = grating.order * wavelength_nm * 1e-6 * grating.groove_density - np.sin(
        np.radians(grating.incidence_deg)
    )
    if abs(s) >= 1.0:
        raise GratingError(
            f"no propagating order {grating.order} at {wavelength_nm} nm for "
            f"{grating.groove_density} lines/mm at {grating.incidence_deg} deg incidence"
        )
    return float(np.degrees(np.arcsin(s)))


def tilt_from_grating(grating, wavelength_nm):
    """Pulse-front tilt (deg) produced by the angular dispersion of a grating.

    tan(xi) = lambda * m * G / cos(theta_d), i.e. lambda * d(theta_d)/d(lambda).
    """
    theta_d = np.radians(diffraction_angle(grating, wavelength_nm))
    tan_xi = wavelength_nm * 1e-6 * grating.order * grating.groove_density / np.cos(theta_d)
    return float(np.degrees(np.arctan(tan_xi)))
