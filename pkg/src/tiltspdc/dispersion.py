"""Refractive index, wavevector and group-velocity data of a uniaxial crystal.

Index data come from a Sellmeier file (see ``data/``).  Every file is reduced
to one canonical dielectric function of ``x = (lambda / um)**2``::

    eps(x) = constant + sum_k B_k / (x - C_k) + sum_j P_j * x**j

so the first two frequency derivatives of ``k(omega)`` are available in
closed form.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .units import C_MM_PER_FS, C_NM_PER_FS

ORDINARY = "ordinary"
EXTRAORDINARY = "extraordinary"
DEFAULT_SELLMEIER = "bbo_kato1986"


class DispersionDomainError(ValueError):
    """Wavelength outside the validity window of a Sellmeier set."""


@dataclass(frozen=True)
class _Axis:
    constant: float
    poles: tuple = ()
    polynomial: tuple = ()

    def eps(self, x):
        """Return eps, d eps/dx and d^2 eps/dx^2."""
        x = np.asarray(x, dtype=float)
        e = np.full_like(x, self.constant)
        ex = np.zeros_like(x)
        exx = np.zeros_like(x)
        for b, c in self.poles:
            d = x - c
            e = e + b / d
            ex = ex - b / d**2
            exx = exx + 2.0 * b / d**3
        for j, p in enumerate(self.polynomial, start=1):
            e = e + p * x**j
            ex = ex + j * p * x ** (j - 1)
            if j >= 2:
                exx = exx + j * (j - 1) * p * x ** (j - 2)
        return e, ex, exx


def _parse_axis(formula, entry):
    if formula == "pole-polynomial":
        poles = tuple((float(b), float(c)) for b, c in entry.get("poles", ()))
        poly = tuple(float(p) for p in entry.get("polynomial", ()))
        return _Axis(float(entry["constant"]), poles, poly)
    if formula == "sellmeier":
        # 1 + sum B x/(x - C)  ==  1 + sum B + sum B C/(x - C)
        terms = [(float(b), float(c)) for b, c in entry["terms"]]
        constant = float(entry.get("constant", 1.0)) + sum(b for b, _ in terms)
        return _Axis(constant, tuple((b * c, c) for b, c in terms), ())
    raise ValueError(f"unknown Sellmeier formula id {formula!r}")


@dataclass(frozen=True)
class SellmeierSet:
    """Ordinary and extraordinary dispersion of one uniaxial crystal."""

    name: str
    formula: str
    window_nm: tuple
    ordinary: _Axis = field(repr=False)
    extraordinary: _Axis = field(repr=False)

    @classmethod
    def from_dict(cls, data):
        formula = data["formula"]
        lo, hi = (float(v) for v in data["window_nm"])
        if not 0 < lo < hi:
            raise ValueError(f"invalid validity window {data['window_nm']}")
        return cls(
            name=str(data["name"]),
            formula=formula,
            window_nm=(lo, hi),
            ordinary=_parse_axis(formula, data["ordinary"]),
            extraordinary=_parse_axis(formula, data["extraordinary"]),
        )

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def check_window(self, wavelength_nm):
        lam = np.asarray(wavelength_nm, dtype=float)
        lo, hi = self.window_nm
        if np.any(~np.isfinite(lam)) or np.any(lam < lo) or np.any(lam > hi):
            bad = lam[(lam < lo) | (lam > hi) | ~np.isfinite(lam)].ravel()
            raise DispersionDomainError(
                f"wavelength {bad[0]:.6g} nm outside the {self.name} validity "
                f"window [{lo:g}, {hi:g}] nm"
            )

    def principal_indices(self, wavelength_nm):
        """(n_o, n_e) at the given vacuum wavelength(s)."""
        self.check_window(wavelength_nm)
        x = (np.asarray(wavelength_nm, dtype=float) * 1e-3) ** 2
        return np.sqrt(self.ordinary.eps(x)[0]), np.sqrt(self.extraordinary.eps(x)[0])


@lru_cache(maxsize=None)
def load_sellmeier(name_or_path=DEFAULT_SELLMEIER):
    """Load a shipped Sellmeier set by name, or any file by path."""
    path = Path(str(name_or_path))
    if path.suffix in (".yaml", ".yml") and path.exists():
        return SellmeierSet.from_file(path)
    ref = resources.files("tiltspdc") / "data" / f"{name_or_path}.yaml"
    if not ref.is_file():
        raise ValueError(f"no Sellmeier set named {name_or_path!r}")
    with ref.open("r", encoding="utf-8") as fh:
        return SellmeierSet.from_dict(yaml.safe_load(fh))


def _resolve(sellmeier):
    if sellmeier is None:
        return load_sellmeier(DEFAULT_SELLMEIER)
    if isinstance(sellmeier, SellmeierSet):
        return sellmeier
    return load_sellmeier(sellmeier)


@dataclass(frozen=True)
class WavePolarization:
    kind: str
    theta_deg: float = 0.0

    def __post_init__(self):
        if self.kind not in (ORDINARY, EXTRAORDINARY):
            raise ValueError(f"polarization kind must be ordinary or extraordinary, got {self.kind!r}")
        if not 0.0 <= self.theta_deg <= 90.0:
            raise ValueError(f"propagation angle must lie in [0, 90] deg, got {self.theta_deg}")

    @property
    def is_extraordinary(self):
        return self.kind == EXTRAORDINARY

    def at(self, theta_deg):
        return WavePolarization(self.kind, theta_deg)


@dataclass(frozen=True)
class WaveDispersion:
    """Dispersion of one wave at its reference frequency.

    k in rad/nm, N (inverse group velocity) in fs/mm, D (group velocity
    dispersion) in fs^2/mm, rho (Poynting walk-off) in degrees.
    """

    k: float
    N: float
    D: float
    rho: float
    n: float
    wavelength_nm: float

    @property
    def k_per_mm(self):
        return self.k * 1e6


def _index_lambda_derivatives(pol, lam_um, s):
    """n, dn/dlambda, d^2n/dlambda^2 with lambda in um."""
    x = lam_um**2
    eo, eox, eoxx = s.ordinary.eps(x)
    # d/dlam = 2 lam d/dx
    eo_l = 2 * lam_um * eox
    eo_ll = 2 * eox + 4 * x * eoxx
    if not pol.is_extraordinary:
        n = np.sqrt(eo)
        n_l = eo_l / (2 * n)
        n_ll = eo_ll / (2 * n) - eo_l**2 / (4 * n**3)
        return n, n_l, n_ll
    ee, eex, eexx = s.extraordinary.eps(x)
    ee_l = 2 * lam_um * eex
    ee_ll = 2 * eex + 4 * x * eexx
    th = np.radians(pol.theta_deg)
    c2, s2 = np.cos(th) ** 2, np.sin(th) ** 2
    u = c2 / eo + s2 / ee
    u_l = -c2 * eo_l / eo**2 - s2 * ee_l / ee**2
    u_ll = c2 * (2 * eo_l**2 / eo**3 - eo_ll / eo**2) + s2 * (2 * ee_l**2 / ee**3 - ee_ll / ee**2)
    n = u**-0.5
    n_l = -0.5 * u**-1.5 * u_l
    n_ll = 0.75 * u**-2.5 * u_l**2 - 0.5 * u**-1.5 * u_ll
    return n, n_l, n_ll


def refractive_index(pol, wavelength_nm, sellmeier=None):
    """Index seen by a wave of polarization ``pol`` (vectorised over wavelength)."""
    s = _resolve(sellmeier)
    s.check_window(wavelength_nm)
    lam_um = np.asarray(wavelength_nm, dtype=float) * 1e-3
    n = _index_lambda_derivatives(pol, lam_um, s)[0]
    return float(n) if np.ndim(n) == 0 else n


def index_omega_derivatives(pol, omega, sellmeier=None):
    """n, dn/domega, d^2n/domega^2 at angular frequency ``omega`` (rad/fs)."""
    s = _resolve(sellmeier)
    omega = np.asarray(omega, dtype=float)
    lam_nm = 2 * np.pi * C_NM_PER_FS / omega
    s.check_window(lam_nm)
    lam_um = lam_nm * 1e-3
    n, n_l, n_ll = _index_lambda_derivatives(pol, lam_um, s)
    # lambda = K/omega: dlam/domega = -lam/omega, d2lam/domega2 = 2 lam/omega^2
    n_w = -n_l * lam_um / omega
    n_ww = n_ll * (lam_um / omega) ** 2 + n_l * 2 * lam_um / omega**2
    return n, n_w, n_ww


def wavevector(pol, omega, sellmeier=None):
    """Longitudinal wavevector in rad/mm (vectorised over omega)."""
    s = _resolve(sellmeier)
    omega = np.asarray(omega, dtype=float)
    lam_nm = 2 * np.pi * C_NM_PER_FS / omega
    s.check_window(lam_nm)
    n = _index_lambda_derivatives(pol, lam_nm * 1e-3, s)[0]
    return n * omega / C_MM_PER_FS


def walkoff_angle(pol, wavelength_nm, sellmeier=None):
    """Poynting walk-off in degrees; exactly 0 for ordinary waves and on the axes."""
    if not pol.is_extraordinary or pol.theta_deg in (0.0, 90.0):
        return 0.0
    s = _resolve(sellmeier)
    no, ne = s.principal_indices(wavelength_nm)
    n = refractive_index(pol, wavelength_nm, s)
    th = np.radians(pol.theta_deg)
    tan_rho = 0.5 * n**2 * (1 / ne**2 - 1 / no**2) * np.sin(2 * th)
    return float(np.degrees(np.arctan(tan_rho)))


def wave_dispersion(pol, wavelength_nm, sellmeier=None):
    """k, N = dk/domega and D = d^2k/domega^2 at ``wavelength_nm``, plus walk-off."""
    s = _resolve(sellmeier)
    omega = 2 * np.pi * C_NM_PER_FS / float(wavelength_nm)
    n, n_w, n_ww = index_omega_derivatives(pol, omega, s)
    k_mm = n * omega / C_MM_PER_FS
    N = (n + omega * n_w) / C_MM_PER_FS
    D = (2 * n_w + omega * n_ww) / C_MM_PER_FS
    return WaveDispersion(
        k=float(k_mm) * 1e-6,
        N=float(N),
        D=float(D),
        rho=walkoff_angle(pol, wavelength_nm, s),
        n=float(n),
        wavelength_nm=float(wavelength_nm),
    )
