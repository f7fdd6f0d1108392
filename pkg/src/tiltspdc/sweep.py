"""Sweeps over the pulse-front tilt and solvers for a target correlation regime."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .analysis import classify_regime, fit_gaussian, schmidt_decompose
from .biphoton import BiphotonSource, GridSpec, SupportError, marginals
from .phasematch import CrystalConfig
from .tilt import WAVES

log = logging.getLogger(__name__)

XI_LIMIT_DEG = 75.0
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class SolveError(ValueError):
    """Requested regime is not reachable inside the allowed tilt range."""


@dataclass
class SweepPoint:
    xi_deg: float
    r: float = math.nan
    metric: float = math.nan
    entropy_bits: float = math.nan
    K: float = math.nan
    fwhm_s_nm: float = math.nan
    fwhm_i_nm: float = math.nan
    regime: str = None
    error: str = None


@dataclass
class SweepResult:
    points: list
    xi_uncorr: float = None
    metadata: dict = field(default_factory=dict)

    @property
    def xi(self):
        return np.array([p.xi_deg for p in self.points])

    def column(self, name):
        return np.array([getattr(p, name) for p in self.points], dtype=float)

    @property
    def regimes(self):
        return [p.regime for p in self.points]


def evaluate_xi(xi_deg, crystal=None, pump=None, grid=None, applied_to=WAVES, with_schmidt=True):
    """Fit, Schmidt and marginal metrics of the joint spectrum at one tilt."""
    pt = SweepPoint(float(xi_deg))
    try:
        src = BiphotonSource(crystal, pump, xi_deg, applied_to).fit()
        g = src.joint_spectrum(grid)
        fit = fit_gaussian(g)
        pt.r, pt.metric, pt.regime = fit.r, fit.metric, classify_regime(fit)
        if with_schmidt:
            sch = schmidt_decompose(g)
            pt.entropy_bits, pt.K = sch.entropy, sch.schmidt_number
        try:
            m = marginals(g)
            pt.fwhm_s_nm, pt.fwhm_i_nm = m.fwhm_s_nm, m.fwhm_i_nm
        except SupportError as exc:
            log.debug("xi=%s: no marginal widths (%s)", xi_deg, exc)
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        pt.error = f"{type(exc).__name__}: {exc}"
        log.warning("sweep point xi=%s failed: %s", xi_deg, pt.error)
    return pt


def _locate_minimum(xi, metric):
    ok = np.isfinite(metric)
    if not ok.any():
        return None
    k = int(np.nanargmin(np.where(ok, metric, np.inf)))
    if k == 0 or k == len(xi) - 1:
        log.warning("metric minimum at the sweep boundary (xi=%s); widen the range", xi[k])
        return None
    return float(xi[k])


def sweep_xi(xi_range=(-60.0, 45.0), steps=22, crystal=None, pump=None, grid=None,
             applied_to=WAVES, n_jobs=1):
    lo, hi = (float(v) for v in xi_range)
    if not lo < hi:
        raise ValueError(f"sweep range must satisfy min < max, got [{lo}, {hi}]")
    if int(steps) != steps or steps < 2:
        raise ValueError(f"sweep steps must be an integer >= 2, got {steps}")
    if max(abs(lo), abs(hi)) >= 90.0:
        raise ValueError("sweep range must stay inside |xi| < 90 deg")
    crystal = (crystal or CrystalConfig()).resolved()
    xs = np.linspace(lo, hi, int(steps))
    if n_jobs == 1:
        pts = [evaluate_xi(x, crystal, pump, grid, applied_to) for x in xs]
    else:
        pts = Parallel(n_jobs=n_jobs)(
            delayed(evaluate_xi)(x, crystal, pump, grid, applied_to) for x in xs
        )
    pts.sort(key=lambda p: p.xi_deg)
    res = SweepResult(pts)
    res.xi_uncorr = _locate_minimum(res.xi, res.column("metric"))
    return res


def golden_section_minimize(f, a, b, tol=0.1, max_iter=200):
    """Minimise a unimodal ``f`` on [a, b] to an interval shorter than ``tol``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def bisect(f, a, b, tol=0.1, max_iter=200):
    fa = f(a)
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        if b - a < tol:
            return m
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _coefficient_root(crystal, g, bounds):
    """Root in xi of an expansion-coefficient combination linear in tan(xi)."""
    from .phasematch import taylor_coefficients
    from .tilt import TiltConfig

    def h(xi):
        return g(taylor_coefficients(crystal, TiltConfig(xi)))

    lo, hi = bounds
    if (h(lo) > 0) == (h(hi) > 0):
        raise SolveError(f"coefficient condition has no root for xi in [{lo}, {hi}] deg")
    from scipy.optimize import brentq
    return float(brentq(h, lo, hi, xtol=1e-6))


def solve_xi_for_regime(target, crystal=None, pump=None, grid=None, bounds=(-XI_LIMIT_DEG, XI_LIMIT_DEG),
                        tol=0.1, scan_step=5.0, applied_to=WAVES):
    """Tilt angle (deg) that realises ``target``.

    ``target`` is ``"uncorrelated"`` (minimum of the fit metric), a float
    (frequency-correlation coefficient r), ``"anticorrelated"`` (signal and
    idler group velocities matched, N_s' = N_i') or ``"symmetric"`` (pump group
    velocity midway between them, N_p' - N_s' = -(N_p' - N_i')).
    """
    crystal = (crystal or CrystalConfig()).resolved()
    lo, hi = bounds
    if target == "anticorrelated":
        return _coefficient_root(crystal, lambda c: c.nps - c.npi, bounds)
    if target == "symmetric":
        return _coefficient_root(crystal, lambda c: c.nps + c.npi, bounds)

    xs = np.arange(lo, hi + 1e-9, scan_step)
    pts = [evaluate_xi(x, crystal, pump, grid, applied_to, with_schmidt=False) for x in xs]
    diag = "; ".join(f"xi={p.xi_deg:+.0f}: r={p.r:+.3f}" for p in pts)

    if target == "uncorrelated":
        metric = np.array([p.metric for p in pts])
        if not np.isfinite(metric).any():
            raise SolveError(f"no valid sweep points ({diag})")
        k = int(np.nanargmin(np.where(np.isfinite(metric), metric, np.inf)))
        a, b = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]

        def f(x):
            m = evaluate_xi(x, crystal, pump, grid, applied_to, with_schmidt=False).metric
            return m if np.isfinite(m) else np.inf

        return float(golden_section_minimize(f, a, b, tol=tol))

    try:
        r_target = float(target)
    except (TypeError, ValueError):
        raise SolveError(f"unknown regime target {target!r}") from None
    if not -1.0 < r_target < 1.0:
        raise SolveError(f"target r must lie in (-1, 1), got {r_target}")
    resid = np.array([p.r - r_target for p in pts])
    brackets = [
        (xs[j], xs[j + 1]) for j in range(len(xs) - 1)
        if np.isfinite(resid[j]) and np.isfinite(resid[j + 1]) and (resid[j] > 0) != (resid[j + 1] > 0)
    ]
    if not brackets:
        raise SolveError(f"r = {r_target} is not reached for xi in [{lo}, {hi}] deg ({diag})")
    if len(brackets) > 1:
        log.warning("r = %s crossed %d times; using the first bracket %s", r_target, len(brackets), brackets[0])

    def g(x):
        r = evaluate_xi(x, crystal, pump, grid, applied_to, with_schmidt=False).r
        return r - r_target

    return float(bisect(g, *brackets[0], tol=tol))
