"""Joint spectral amplitude of the photon pair and quantities derived from it."""
import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .phasematch import CrystalConfig, delta_k_taylor, taylor_coefficients
from .tilt import WAVES, TiltConfig
from .units import bandwidth_nm_to_omega, bandwidth_omega_to_nm, wavelength_to_omega

_LN2 = np.log(2.0)
# sinc(x)**2 < 1e-2 for |x| > 10
_BRANCH_SEPARATION_ARG = 10.0


class SupportError(ValueError):
    """The spectrum is not contained in the grid."""


@dataclass(frozen=True)
class PumpConfig:
    lambda0_nm: float = 400.0
    fwhm_nm: float = 2.0
    envelope: str = "gaussian"

    def __post_init__(self):
        if not self.fwhm_nm > 0:
            raise ValueError(f"pump fwhm_nm must be positive, got {self.fwhm_nm}")
        if not self.lambda0_nm > 0:
            raise ValueError(f"pump lambda0_nm must be positive, got {self.lambda0_nm}")
        if self.envelope != "gaussian":
            raise ValueError(f"only a gaussian pump envelope is supported, got {self.envelope!r}")

    @property
    def fwhm_omega(self):
        """Intensity FWHM in rad/fs."""
        return bandwidth_nm_to_omega(self.fwhm_nm, self.lambda0_nm)


@dataclass(frozen=True)
class GridSpec:
    n_s: int = 256
    n_i: int = 256
    span_s_nm: float = None  # half-width; None -> auto
    span_i_nm: float = None

    def __post_init__(self):
        for name in ("n_s", "n_i"):
            v = getattr(self, name)
            if int(v) != v or v < 16:
                raise ValueError(f"grid.{name} must be an integer >= 16, got {v}")
        for name in ("span_s_nm", "span_i_nm"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"grid.{name} must be positive, got {v}")

    @property
    def is_auto(self):
        return self.span_s_nm is None or self.span_i_nm is None


def pump_envelope(Omega_sum, pump):
    """Gaussian pump amplitude at total detuning ``Omega_sum`` (rad/fs), peak 1."""
    W = pump.fwhm_omega
    return np.exp(-2.0 * _LN2 * np.asarray(Omega_sum, dtype=float) ** 2 / W**2)


def _hash(*parts):
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, np.ndarray):
            h.update(np.ascontiguousarray(p, dtype=float).tobytes())
        else:
            h.update(json.dumps(p, sort_keys=True, default=str).encode())
    return h.hexdigest()[:12]


@dataclass
class JointSpectrumGrid:
    """Joint spectrum sampled on a rectangular wavelength grid.

    ``intensity[j, k]`` belongs to ``lambda_s[j]`` and ``lambda_i[k]``.
    ``amplitude`` is None for measured (intensity-only) data.
    """

    lambda_s: np.ndarray
    lambda_i: np.ndarray
    intensity: np.ndarray
    amplitude: np.ndarray = None
    lambda_s0: float = None
    lambda_i0: float = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lambda_s = np.asarray(self.lambda_s, dtype=float)
        self.lambda_i = np.asarray(self.lambda_i, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.intensity.shape != (self.lambda_s.size, self.lambda_i.size):
            raise ValueError(
                f"intensity shape {self.intensity.shape} does not match axes "
                f"({self.lambda_s.size}, {self.lambda_i.size})"
            )
        for name in ("lambda_s", "lambda_i"):
            if np.any(np.diff(getattr(self, name)) <= 0):
                raise ValueError(f"{name} axis must be strictly increasing")
        if self.lambda_s0 is None:
            self.lambda_s0 = float(np.median(self.lambda_s))
        if self.lambda_i0 is None:
            self.lambda_i0 = float(np.median(self.lambda_i))
        self.metadata.setdefault("grid_hash", _hash(self.lambda_s, self.lambda_i, self.metadata))

    @property
    def intensity_only(self):
        return self.amplitude is None

    @property
    def grid_hash(self):
        return self.metadata["grid_hash"]

    @property
    def Omega_s(self):
        return wavelength_to_omega(self.lambda_s) - wavelength_to_omega(self.lambda_s0)

    @property
    def Omega_i(self):
        return wavelength_to_omega(self.lambda_i) - wavelength_to_omega(self.lambda_i0)

    def amplitude_or_sqrt(self):
        """Model amplitude, or sqrt(S) under a zero-phase assumption."""
        if self.amplitude is not None:
            return self.amplitude
        return np.sqrt(np.clip(self.intensity, 0.0, None)).astype(complex)

    def transposed(self):
        amp = None if self.amplitude is None else self.amplitude.T.copy()
        return JointSpectrumGrid(
            self.lambda_i, self.lambda_s, self.intensity.T.copy(), amp,
            self.lambda_i0, self.lambda_s0,
            {k: v for k, v in self.metadata.items() if k != "grid_hash"} | {"transposed": True},
        )


def _taylor_branch_cap(coeffs, length_mm):
    """Largest safe detuning before the truncated expansion phase-matches again.

    On the line Omega_s = -Omega_i the quadratic mismatch has a second zero at
    Omega* = -(nps - npi)/q.  When the sinc squared between the two zeros drops
    below 1e-2, that second branch is an artefact of the expansion and is kept
    off the grid.  Returns None when no cap is needed.
    """
    q = 0.5 * (coeffs.dps + coeffs.dpi - 2.0 * coeffs.dpp)
    lin = coeffs.nps - coeffs.npi
    if q == 0.0:
        return None
    omega_star = abs(lin / q)
    vertex = lin**2 / (4.0 * abs(q))
    if vertex * length_mm / 2.0 > _BRANCH_SEPARATION_ARG:
        return 0.5 * omega_star
    return None


def _gaussian_seed(coeffs, pump, length_mm):
    """Marginal std-devs (rad/fs) of a Gaussian surrogate of the joint intensity."""
    alpha = 2.0 * _LN2 / pump.fwhm_omega**2
    beta = 0.193 * (length_mm / 2.0) ** 2
    A, B = coeffs.nps, coeffs.npi
    M = np.array([[alpha + beta * A * A, alpha + beta * A * B],
                  [alpha + beta * A * B, alpha + beta * B * B]])
    cov = np.linalg.pinv(4.0 * M)
    return np.sqrt(np.abs(np.diag(cov)))


class BiphotonSource(BaseEstimator):
    """Down-conversion source with tilt-engineered phase matching.

    ``fit`` resolves the phase-matching angle and the expansion coefficients;
    ``predict`` evaluates the joint amplitude at detunings ``X[:, 0]`` (signal)
    and ``X[:, 1]`` (idler), in rad/fs.
    """

    def __init__(self, crystal=None, pump=None, xi_deg=0.0, applied_to=WAVES):
        self.crystal = crystal
        self.pump = pump
        self.xi_deg = xi_deg
        self.applied_to = applied_to

    def fit(self, X=None, y=None):
        self.crystal_ = (self.crystal or CrystalConfig()).resolved()
        self.pump_ = self.pump or PumpConfig(lambda0_nm=self.crystal_.lambda_p0_nm)
        if not np.isclose(self.pump_.lambda0_nm, self.crystal_.lambda_p0_nm):
            raise ValueError(
                f"pump.lambda0_nm ({self.pump_.lambda0_nm}) differs from crystal.lambda_p0_nm "
                f"({self.crystal_.lambda_p0_nm})"
            )
        self.tilt_ = TiltConfig(self.xi_deg, frozenset(self.applied_to))
        self.coeffs_ = taylor_coefficients(self.crystal_, self.tilt_)
        return self

    def delta_k(self, X):
        check_is_fitted(self, "coeffs_")
        X = check_array(X, ensure_min_features=2)
        return delta_k_taylor(X[:, 0], X[:, 1], self.coeffs_)

    def _phi(self, Os, Oi):
        dk = delta_k_taylor(Os, Oi, self.coeffs_)
        x = dk * self.crystal_.length_mm / 2.0
        return pump_envelope(Os + Oi, self.pump_) * np.sinc(x / np.pi)

    def predict(self, X):
        check_is_fitted(self, "coeffs_")
        X = check_array(X, ensure_min_features=2)
        return self._phi(X[:, 0], X[:, 1]).astype(complex)

    def _grid_values(self, span_s_nm, span_i_nm, n_s, n_i):
        lam_s0 = self.crystal_.lambda_s0_nm
        lam_i0 = self.crystal_.lambda_i0_nm
        lam_s = lam_s0 + np.linspace(-span_s_nm, span_s_nm, n_s)
        lam_i = lam_i0 + np.linspace(-span_i_nm, span_i_nm, n_i)
        Os = wavelength_to_omega(lam_s) - wavelength_to_omega(lam_s0)
        Oi = wavelength_to_omega(lam_i) - wavelength_to_omega(lam_i0)
        return lam_s, lam_i, self._phi(Os[:, None], Oi[None, :])

    def auto_span(self, n_probe=64, max_iter=12):
        """Half-widths (nm) so both marginals fall below 1e-3 of their peak with margin."""
        check_is_fitted(self, "coeffs_")
        lam0 = self.crystal_.lambda_s0_nm
        # keep wavelengths physical (and inside any sensible Sellmeier window)
        hard_cap = bandwidth_nm_to_omega(0.4 * lam0, lam0)
        cap = _taylor_branch_cap(self.coeffs_, self.crystal_.length_mm)
        cap = hard_cap if cap is None else min(cap, hard_cap)
        seed = 6.0 * _gaussian_seed(self.coeffs_, self.pump_, self.crystal_.length_mm)
        h = np.minimum(seed, cap)
        h = np.maximum(h, 1e-6)
        spans = [bandwidth_omega_to_nm(v, lam0) for v in h]
        cap_nm = bandwidth_omega_to_nm(cap, lam0)
        for _ in range(max_iter):
            lam_s, lam_i, phi = self._grid_values(spans[0], spans[1], n_probe, n_probe)
            S = np.abs(phi) ** 2
            new = []
            for axis, lam, lam_c, span in ((1, lam_s, lam0, spans[0]), (0, lam_i, lam0, spans[1])):
                m = S.sum(axis=axis)
                if m.max() <= 0:
                    new.append(min(span * 0.5, cap_nm))
                    continue
                above = np.nonzero(m >= 1e-3 * m.max())[0]
                if above[0] == 0 or above[-1] == m.size - 1:
                    new.append(min(span * 2.0, cap_nm))
                    continue
                extent = np.max(np.abs(lam[above] - lam_c))
                # at least a few probe cells across, never beyond the cap
                new.append(min(max(1.3 * extent, 4.0 * 2 * span / (n_probe - 1)), cap_nm))
            converged = all(abs(a - b) <= 0.05 * b for a, b in zip(new, spans))
            spans = new
            if converged:
                break
        return float(spans[0]), float(spans[1])

    def joint_spectrum(self, grid=None):
        """Peak-normalised joint spectrum on ``grid`` (spans auto-sized when unset)."""
        check_is_fitted(self, "coeffs_")
        grid = grid or GridSpec()
        if grid.is_auto:
            auto_s, auto_i = self.auto_span()
            span_s = grid.span_s_nm if grid.span_s_nm is not None else auto_s
            span_i = grid.span_i_nm if grid.span_i_nm is not None else auto_i
        else:
            span_s, span_i = grid.span_s_nm, grid.span_i_nm
        lam_s, lam_i, phi = self._grid_values(span_s, span_i, int(grid.n_s), int(grid.n_i))
        peak = np.max(np.abs(phi))
        if not peak > 0:
            raise SupportError("joint amplitude vanishes on the whole grid")
        phi = (phi / peak).astype(complex)
        meta = {
            "xi_deg": float(self.xi_deg),
            "tilt_applied_to": sorted(self.tilt_.applied_to),
            "crystal": asdict(self.crystal_),
            "pump": asdict(self.pump_),
            "grid": {"n_s": int(grid.n_s), "n_i": int(grid.n_i),
                     "span_s_nm": float(span_s), "span_i_nm": float(span_i),
                     "auto_span": grid.is_auto},
            "sellmeier": self.crystal_.sellmeier_set.name,
            "theta_pm_deg": self.crystal_.theta_pm_deg,
            "taylor": self.coeffs_.as_dict(),
        }
        meta["grid_hash"] = _hash(lam_s, lam_i, meta)
        return JointSpectrumGrid(
            lambda_s=lam_s, lambda_i=lam_i, intensity=np.abs(phi) ** 2, amplitude=phi,
            lambda_s0=self.crystal_.lambda_s0_nm, lambda_i0=self.crystal_.lambda_i0_nm,
            metadata=meta,
        )


def compute_jsa(crystal=None, pump=None, tilt=None, grid=None):
    tilt = tilt or TiltConfig()
    src = BiphotonSource(crystal, pump, tilt.xi_deg, tuple(sorted(tilt.applied_to))).fit()
    return src.joint_spectrum(grid)


@dataclass
class Marginals:
    lambda_s: np.ndarray
    signal: np.ndarray
    lambda_i: np.ndarray
    idler: np.ndarray
    fwhm_s_nm: float
    fwhm_i_nm: float


def fwhm(x, y):
    """Full width at half maximum by linear interpolation of the outermost crossings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    half = 0.5 * np.max(y)
    above = np.nonzero(y >= half)[0]
    lo, hi = above[0], above[-1]
    if lo == 0 or hi == y.size - 1:
        raise SupportError("half-maximum crossing lies outside the sampled range")
    x_lo = np.interp(half, [y[lo - 1], y[lo]], [x[lo - 1], x[lo]])
    x_hi = np.interp(half, [y[hi + 1], y[hi]], [x[hi + 1], x[hi]])
    return float(abs(x_hi - x_lo))


def marginals(grid, edge_tol=1e-3):
    """Single-photon spectra (peak-normalised) and their FWHM in nm."""
    ms = grid.intensity.sum(axis=1)
    mi = grid.intensity.sum(axis=0)
    out = []
    for name, m in (("signal", ms), ("idler", mi)):
        if not m.max() > 0:
            raise SupportError(f"{name} marginal is identically zero")
        m = m / m.max()
        if max(m[0], m[-1]) >= edge_tol:
            raise SupportError(
                f"{name} spectrum is clipped at the grid edge (edge level {max(m[0], m[-1]):.2g} "
                f">= {edge_tol:g}); increase the {name} span"
            )
        out.append(m)
    return Marginals(
        grid.lambda_s, out[0], grid.lambda_i, out[1],
        fwhm(grid.lambda_s, out[0]), fwhm(grid.lambda_i, out[1]),
    )


def spectral_slice_to_time(values, d_omega, n_fft=None):
    """Fourier transform of a uniformly sampled spectral slice.

    Returns delays (fs, centred) and F(tau) = sum_k f_k exp(-i Omega_k tau) dOmega
    with Omega_k = (k - M//2) d_omega.
    """
    values = np.asarray(values, dtype=complex)
    m = values.size
    n_fft = m if n_fft is None else int(n_fft)
    if n_fft < m:
        raise ValueError("n_fft must not be shorter than the slice")
    padded = np.zeros(n_fft, dtype=complex)
    padded[:m] = values
    # shift so that index m//2 sits at Omega = 0
    padded = np.roll(padded, -(m // 2))
    F = np.fft.fftshift(np.fft.fft(padded)) * d_omega
    tau = np.fft.fftshift(np.fft.fftfreq(n_fft, d_omega)) * 2.0 * np.pi
    return tau, F


def temporal_correlation_width(grid, n_slice=1024, n_fft=1 << 16, edge_tol=0.1):
    """Intensity FWHM (fs) of the transform of the amplitude along Omega_s = -Omega_i."""
    Os = grid.Omega_s[::-1]
    Oi = grid.Omega_i[::-1]
    amp = grid.amplitude_or_sqrt()[::-1, ::-1]
    reach = min(-Os[0], Os[-1], -Oi[0], Oi[-1])
    if not reach > 0:
        raise SupportError("grid does not straddle the degenerate point")
    line = np.linspace(-reach, reach, n_slice)
    pts = np.column_stack([line, -line])
    interp_re = RegularGridInterpolator((Os, Oi), amp.real)
    interp_im = RegularGridInterpolator((Os, Oi), amp.imag)
    f = interp_re(pts) + 1j * interp_im(pts)
    peak = np.max(np.abs(f))
    if not peak > 0 or max(abs(f[0]), abs(f[-1])) > edge_tol * peak:
        raise SupportError(
            "antidiagonal slice does not decay inside the grid; the state is not "
            "anticorrelated or the span is too small"
        )
    tau, F = spectral_slice_to_time(f, line[1] - line[0], max(n_fft, n_slice))
    return fwhm(tau, np.abs(F) ** 2)


__all__ = [
    "BiphotonSource", "GridSpec", "JointSpectrumGrid", "Marginals", "PumpConfig",
    "SupportError", "compute_jsa", "fwhm", "marginals", "pump_envelope",
    "spectral_slice_to_time", "temporal_correlation_width",
]
