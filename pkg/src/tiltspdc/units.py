"""Physical constants and unit conversions.

Public functions take nm, fs, mm and degrees; angular frequencies are in
rad/fs throughout.
"""
from dataclasses import dataclass

import numpy as np

C_NM_PER_FS = 299.792458
C_MM_PER_FS = C_NM_PER_FS * 1e-6


def wavelength_to_omega(wavelength_nm):
    """Vacuum wavelength in nm -> angular frequency in rad/fs."""
    return 2.0 * np.pi * C_NM_PER_FS / np.asarray(wavelength_nm, dtype=float)


def omega_to_wavelength(omega):
    """Angular frequency in rad/fs -> vacuum wavelength in nm."""
    return 2.0 * np.pi * C_NM_PER_FS / np.asarray(omega, dtype=float)


def bandwidth_nm_to_omega(fwhm_nm, center_nm):
    """Small-bandwidth conversion of a wavelength FWHM to rad/fs."""
    return 2.0 * np.pi * C_NM_PER_FS * fwhm_nm / center_nm**2


def bandwidth_omega_to_nm(fwhm_omega, center_nm):
    return fwhm_omega * center_nm**2 / (2.0 * np.pi * C_NM_PER_FS)


@dataclass(frozen=True)
class Wavelength:
    nm: float

    def __post_init__(self):
        if not self.nm > 0:
            raise ValueError(f"wavelength must be positive, got {self.nm} nm")

    def to_omega(self) -> "AngularFrequency":
        return AngularFrequency(float(wavelength_to_omega(self.nm)))


@dataclass(frozen=True)
class AngularFrequency:
    rad_per_fs: float

    def __post_init__(self):
        if not self.rad_per_fs > 0:
            raise ValueError(f"angular frequency must be positive, got {self.rad_per_fs}")

    def to_wavelength(self) -> Wavelength:
        return Wavelength(float(omega_to_wavelength(self.rad_per_fs)))
