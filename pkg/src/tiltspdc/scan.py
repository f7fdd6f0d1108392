"""Simulated two-monochromator coincidence scans and ingestion of scan files."""
import csv
import hashlib
import io
import logging
import math
import os
from dataclasses import asdict, dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .biphoton import JointSpectrumGrid

log = logging.getLogger(__name__)

SCAN_HEADER = ("lambda_s_nm", "lambda_i_nm", "coincidences", "singles_s", "singles_i", "t_s")
_FWHM_TO_SIGMA = 1.0 / math.sqrt(8.0 * math.log(2.0))


class ScanFormatError(ValueError):
    """A scan file that cannot be turned into a rectangular joint spectrum."""


@dataclass(frozen=True)
class ScanConfig:
    """Monochromator scan settings.

    ``bandpass_fwhm_nm = 0`` selects an ideal (delta) bandpass.  Ranges of None
    cover the full model grid.  Defaults for bandpass and integration time are
    assumptions, not measured values.
    """

    bandpass_fwhm_nm: float = 0.2
    step_nm: float = 0.2
    lambda_s_range: tuple = None
    lambda_i_range: tuple = None
    pair_rate_peak: float = 1.0e4  # counts/s at the joint-spectrum peak
    integration_time_s: float = 1.0
    dark_coincidence_rate: float = 0.5
    detection_efficiency: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        positive = ("step_nm", "pair_rate_peak", "integration_time_s")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"scan.{name} must be positive, got {getattr(self, name)}")
        if not self.bandpass_fwhm_nm >= 0:
            raise ValueError(f"scan.bandpass_fwhm_nm must be >= 0, got {self.bandpass_fwhm_nm}")
        if not self.dark_coincidence_rate >= 0:
            raise ValueError(f"scan.dark_coincidence_rate must be >= 0, got {self.dark_coincidence_rate}")
        if not 0 < self.detection_efficiency <= 1:
            raise ValueError(f"scan.detection_efficiency must lie in (0, 1], got {self.detection_efficiency}")
        if self.bandpass_fwhm_nm > 0 and self.step_nm > self.bandpass_fwhm_nm:
            raise ValueError(
                f"scan.step_nm ({self.step_nm}) must not exceed scan.bandpass_fwhm_nm "
                f"({self.bandpass_fwhm_nm})"
            )
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0:
            raise ValueError(f"scan.rng_seed must be a non-negative integer, got {self.rng_seed}")
        for name in ("lambda_s_range", "lambda_i_range"):
            r = getattr(self, name)
            if r is not None:
                lo, hi = (float(v) for v in r)
                if not 0 < lo < hi:
                    raise ValueError(f"scan.{name} must satisfy 0 < min < max, got {r}")
                object.__setattr__(self, name, (lo, hi))


@dataclass(frozen=True)
class CoincidenceRecord:
    lambda_s_nm: float
    lambda_i_nm: float
    coincidences: int
    singles_s: int
    singles_i: int
    t_s: float

    def __post_init__(self):
        for name in ("coincidences", "singles_s", "singles_i"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def _bandpass_matrix(lam, fwhm_nm):
    if fwhm_nm == 0:
        return np.eye(lam.size)
    sigma = fwhm_nm * _FWHM_TO_SIGMA
    K = np.exp(-0.5 * ((lam[:, None] - lam[None, :]) / sigma) ** 2)
    return K * np.abs(np.gradient(lam))[None, :]


def filtered_intensity(grid, bandpass_fwhm_nm):
    """Joint spectrum seen through two Gaussian bandpasses, peak-renormalised."""
    Ks = _bandpass_matrix(grid.lambda_s, bandpass_fwhm_nm)
    Ki = _bandpass_matrix(grid.lambda_i, bandpass_fwhm_nm)
    S = Ks @ grid.intensity @ Ki.T
    peak = S.max()
    if not peak > 0:
        raise ValueError("filtered joint spectrum vanishes")
    return S / peak


def _axis(rng, lam, step):
    lo, hi = (lam[0], lam[-1]) if rng is None else rng
    if lo < lam[0] - 1e-9 or hi > lam[-1] + 1e-9:
        raise ValueError(
            f"scan range [{lo}, {hi}] nm lies outside the grid axis [{lam[0]:.4f}, {lam[-1]:.4f}] nm"
        )
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    centre = 0.5 * (lo + hi)
    pts = centre + (np.arange(n) - 0.5 * (n - 1)) * step
    return np.clip(pts, lam[0], lam[-1])


def scan_axes(grid, cfg):
    return _axis(cfg.lambda_s_range, grid.lambda_s, cfg.step_nm), _axis(cfg.lambda_i_range, grid.lambda_i, cfg.step_nm)


def expected_rates(grid, cfg):
    """Scan axes and the expected coincidence and singles rates (counts/s)."""
    ls, li = scan_axes(grid, cfg)
    S = filtered_intensity(grid, cfg.bandpass_fwhm_nm)
    interp = RegularGridInterpolator((grid.lambda_s, grid.lambda_i), S)
    P, Q = np.meshgrid(ls, li, indexing="ij")
    S_scan = np.clip(interp(np.column_stack([P.ravel(), Q.ravel()])).reshape(P.shape), 0.0, None)
    coinc = cfg.pair_rate_peak * S_scan + cfg.dark_coincidence_rate
    # singles carry the marginal of the partner-integrated spectrum; coincidences
    # cost one extra detection efficiency relative to singles
    ms = S.sum(axis=1) / S.sum(axis=1).max()
    mi = S.sum(axis=0) / S.sum(axis=0).max()
    rs = cfg.pair_rate_peak / cfg.detection_efficiency * np.interp(ls, grid.lambda_s, ms)
    ri = cfg.pair_rate_peak / cfg.detection_efficiency * np.interp(li, grid.lambda_i, mi)
    return ls, li, coinc, rs, ri


def simulate_scan(grid, cfg, n_jobs=1):
    """Poisson-sampled coincidence scan, ordered signal-major.

    Each scan point draws from its own stream seeded with (rng_seed, index), so
    the result does not depend on evaluation order or parallelism.
    """
    ls, li, coinc, rs, ri = expected_rates(grid, cfg)
    t = cfg.integration_time_s
    ni = li.size

    def point(idx):
        j, k = divmod(idx, ni)
        g = np.random.default_rng([cfg.rng_seed, idx])
        c, s1, s2 = g.poisson([coinc[j, k] * t, rs[j] * t, ri[k] * t])
        return CoincidenceRecord(float(ls[j]), float(li[k]), int(c), int(s1), int(s2), t)

    idx = range(ls.size * ni)
    if n_jobs == 1:
        return [point(i) for i in idx]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=n_jobs)(delayed(point)(i) for i in idx)


def config_hash(obj):
    data = asdict(obj) if hasattr(obj, "__dataclass_fields__") else obj
    import json
    return hashlib.sha256(json.dumps(data, sort_keys=True, default=str).encode()).hexdigest()[:12]


def format_scan(records, header_comment=None):
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    buf.write(",".join(SCAN_HEADER) + "\n")
    for r in records:
        buf.write(
            f"{r.lambda_s_nm:.6f},{r.lambda_i_nm:.6f},{r.coincidences:d},"
            f"{r.singles_s:d},{r.singles_i:d},{r.t_s:.6g}\n"
        )
    return buf.getvalue()


def write_scan(path, records, header_comment=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_scan(records, header_comment))


def read_scan(file):
    """Parse a scan CSV into records.  ``file`` is a path or text stream."""
    if isinstance(file, (str, os.PathLike)):
        with open(file, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = file.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ScanFormatError("scan file is empty")
    reader = csv.reader(lines)
    header = tuple(h.strip() for h in next(reader))
    if header != SCAN_HEADER:
        raise ScanFormatError(f"unexpected scan header {','.join(header)!r}; expected {','.join(SCAN_HEADER)!r}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(SCAN_HEADER):
            raise ScanFormatError(f"row {lineno}: expected {len(SCAN_HEADER)} fields, got {len(row)}")
        try:
            ls, li, t = float(row[0]), float(row[1]), float(row[5])
            c, s1, s2 = (int(v) for v in row[2:5])
        except ValueError as exc:
            raise ScanFormatError(f"row {lineno}: {exc}") from None
        if not t > 0:
            raise ScanFormatError(f"row {lineno}: integration time must be positive")
        try:
            records.append(CoincidenceRecord(ls, li, c, s1, s2, t))
        except ValueError as exc:
            raise ScanFormatError(f"row {lineno}: {exc}") from None
    if not records:
        raise ScanFormatError("scan file has a header but no data rows")
    return records


def _centroid(lam, m):
    w = m.sum()
    return float(np.sum(lam * m) / w) if w > 0 else float(np.median(lam))


def ingest_scan(file, dark_quantile=0.05, lambda_s0=None, lambda_i0=None):
    """Background-subtracted, peak-normalised joint intensity from a scan file.

    The dark level is the ``dark_quantile`` quantile of the coincidence rates.
    Points that go negative after subtraction are set to zero and counted in
    ``metadata["n_clipped"]``.  Centre wavelengths default to the centroids of
    the marginals.
    """
    records = file if isinstance(file, list) else read_scan(file)
    ls_axis = np.unique([r.lambda_s_nm for r in records])
    li_axis = np.unique([r.lambda_i_nm for r in records])
    if ls_axis.size < 2 or li_axis.size < 2:
        raise ScanFormatError("scan needs at least two positions along each axis")
    if len(records) != ls_axis.size * li_axis.size:
        raise ScanFormatError(
            f"ragged scan: {len(records)} rows for a {ls_axis.size} x {li_axis.size} grid"
        )
    rate = np.full((ls_axis.size, li_axis.size), np.nan)
    js = np.searchsorted(ls_axis, [r.lambda_s_nm for r in records])
    ks = np.searchsorted(li_axis, [r.lambda_i_nm for r in records])
    for j, k, r in zip(js, ks, records):
        if not np.isnan(rate[j, k]):
            raise ScanFormatError(f"duplicate scan point ({r.lambda_s_nm}, {r.lambda_i_nm})")
        rate[j, k] = r.coincidences / r.t_s
    dark = float(np.quantile(rate, dark_quantile))
    S = rate - dark
    n_clipped = int(np.count_nonzero(S < 0))
    if n_clipped:
        log.warning("%d scan points negative after dark subtraction; set to 0", n_clipped)
    S = np.clip(S, 0.0, None)
    peak = S.max()
    if not peak > 0:
        raise ScanFormatError("no coincidences above the dark level")
    S = S / peak
    lam_s0 = _centroid(ls_axis, S.sum(axis=1)) if lambda_s0 is None else lambda_s0
    lam_i0 = _centroid(li_axis, S.sum(axis=0)) if lambda_i0 is None else lambda_i0
    meta = {
        "source": "scan",
        "intensity_only": True,
        "dark_rate": dark,
        "dark_quantile": dark_quantile,
        "n_clipped": n_clipped,
        "n_points": len(records),
    }
    return JointSpectrumGrid(ls_axis, li_axis, S, None, lam_s0, lam_i0, meta)


__all__ = [
    "CoincidenceRecord", "SCAN_HEADER", "ScanConfig", "ScanFormatError", "expected_rates",
    "filtered_intensity", "format_scan", "ingest_scan", "read_scan", "simulate_scan", "write_scan",
]
