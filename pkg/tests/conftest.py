import numpy as np
import pytest

from tiltspdc.biphoton import BiphotonSource, GridSpec, JointSpectrumGrid, PumpConfig
from tiltspdc.phasematch import CrystalConfig


@pytest.fixture(scope="session")
def crystal():
    return CrystalConfig().resolved()


@pytest.fixture(scope="session")
def jsa_at(crystal):
    """Cached joint spectra of the default source keyed by (xi, pump fwhm, n)."""
    cache = {}

    def get(xi, fwhm_nm=2.0, n=256):
        key = (float(xi), float(fwhm_nm), int(n))
        if key not in cache:
            src = BiphotonSource(crystal, PumpConfig(fwhm_nm=fwhm_nm), xi).fit()
            cache[key] = src.joint_spectrum(GridSpec(n, n))
        return cache[key]

    return get


def gaussian_grid(a, b, c, n=201, half=4.0, amplitude=False):
    """Grid whose Omega axes are exactly symmetric: S = exp(-a Os^2 - b Oi^2 - 2c Os Oi).

    Built on a wavelength axis uniform in omega so the quadratic form is exact.
    """
    from tiltspdc.units import omega_to_wavelength, wavelength_to_omega
    w0 = wavelength_to_omega(800.0)
    O = np.linspace(-half, half, n) * 1e-2
    lam = omega_to_wavelength(w0 + O)[::-1]
    Om = (wavelength_to_omega(lam) - w0)
    Os, Oi = np.meshgrid(Om, Om, indexing="ij")
    q = a * Os**2 + b * Oi**2 + 2 * c * Os * Oi
    S = np.exp(-q)
    amp = np.exp(-q / 2).astype(complex) if amplitude else None
    return JointSpectrumGrid(lam, lam, S, amp, 800.0, 800.0, {"synthetic": [a, b, c]})


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
