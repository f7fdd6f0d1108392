"""Quantifying a joint spectrum: Gaussian correlation fit and Schmidt decomposition."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

ANTICORRELATED = "anticorrelated"
UNCORRELATED = "uncorrelated"
CORRELATED = "correlated"
ASYMMETRIC = "asymmetric"

DEFAULT_MASK = 1e-3


class FitError(RuntimeError):
    """The Gaussian fit is not a normalisable two-dimensional Gaussian."""


class SchmidtError(RuntimeError):
    pass


def _gauss(p, Os, Oi):
    log_amp, a, b, c = p
    return np.exp(log_amp - a * Os**2 - b * Oi**2 - 2.0 * c * Os * Oi)


class GaussianJSIFit(BaseEstimator):
    """Least-squares fit of A exp(-a Os^2 - b Oi^2 - 2 c Os Oi) to a joint intensity.

    ``X`` holds (Omega_s, Omega_i) in rad/fs, ``y`` the intensity.  Nodes below
    ``mask_threshold`` times the peak are excluded.  The log of the data is
    fitted first (weights y^2), then refined on the intensity itself.
    """

    def __init__(self, mask_threshold=DEFAULT_MASK, refine=True):
        self.mask_threshold = mask_threshold
        self.refine = refine

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_features=2, y_numeric=True)
        Os, Oi = X[:, 0], X[:, 1]
        keep = y >= self.mask_threshold * y.max()
        if keep.sum() < 4:
            raise FitError("fewer than four nodes above the fit mask")
        Os, Oi, yk = Os[keep], Oi[keep], y[keep]

        design = np.column_stack([np.ones_like(Os), -Os**2, -Oi**2, -2.0 * Os * Oi])
        w = yk
        p0, *_ = np.linalg.lstsq(design * w[:, None], np.log(yk) * w, rcond=None)
        p = p0
        if self.refine:
            p = self._refine(p0, Os, Oi, yk)
        log_amp, a, b, c = (float(v) for v in p)
        if not a > 0:
            raise FitError(f"fitted a = {a:.4g} violates a > 0")
        if not b > 0:
            raise FitError(f"fitted b = {b:.4g} violates b > 0")
        if not a * b - c * c > 0:
            raise FitError(f"fitted a*b - c^2 = {a * b - c * c:.4g} violates a*b - c^2 > 0")
        self.amplitude_ = float(np.exp(log_amp))
        self.a_, self.b_, self.c_ = a, b, c
        self.r_ = -c / np.sqrt(a * b)
        self.metric_ = self.r_**2
        self.n_points_ = int(keep.sum())
        return self

    @staticmethod
    def _refine(p0, Os, Oi, yk):
        # Cholesky parametrisation keeps the quadratic form positive definite
        Q = np.array([[p0[1], p0[3]], [p0[3], p0[2]]])
        evals, evecs = np.linalg.eigh(Q)
        evals = np.maximum(evals, 1e-6 * max(evals.max(), 1e-300))
        L = np.linalg.cholesky(evecs @ np.diag(evals) @ evecs.T)
        scale = np.array([1.0, L[0, 0], L[1, 1] + abs(L[1, 0]), L[1, 1] + abs(L[1, 0])])

        def unpack(q):
            log_amp, l11, l21, l22 = q * scale
            return np.array([log_amp, l11 * l11, l21 * l21 + l22 * l22, l11 * l21])

        q0 = np.array([p0[0], L[0, 0], L[1, 0], L[1, 1]]) / scale
        res = least_squares(
            lambda q: _gauss(unpack(q), Os, Oi) - yk,
            q0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000,
        )
        return unpack(res.x)

    def predict(self, X):
        check_is_fitted(self, "a_")
        X = check_array(X, ensure_min_features=2)
        return _gauss((np.log(self.amplitude_), self.a_, self.b_, self.c_), X[:, 0], X[:, 1])

    def score(self, X, y):
        """Overlap (cosine similarity) of the data and the fitted surface."""
        F = self.predict(X)
        y = np.asarray(y, dtype=float)
        return float(np.sum(y * F) / np.sqrt(np.sum(y * y) * np.sum(F * F)))


@dataclass
class GaussianFitResult:
    a: float
    b: float
    c_fit: float
    metric: float
    overlap: float
    r: float
    amplitude: float
    mask_threshold: float
    n_points: int

    def as_dict(self):
        return {
            "a": self.a, "b": self.b, "c": self.c_fit, "metric": self.metric,
            "overlap": self.overlap, "r": self.r, "mask_threshold": self.mask_threshold,
        }


def _coords(grid):
    Os, Oi = np.meshgrid(grid.Omega_s, grid.Omega_i, indexing="ij")
    return np.column_stack([Os.ravel(), Oi.ravel()])


def fit_gaussian(grid, mask_threshold=DEFAULT_MASK):
    S = grid.intensity
    half = S >= 0.5 * S.max()
    if half.any(axis=1).sum() < 3 or half.any(axis=0).sum() < 3:
        raise FitError("need at least 3 points above half maximum along each axis; refine the grid")
    X, y = _coords(grid), S.ravel()
    est = GaussianJSIFit(mask_threshold=mask_threshold).fit(X, y)
    return GaussianFitResult(
        a=est.a_, b=est.b_, c_fit=est.c_, metric=est.metric_, overlap=est.score(X, y),
        r=est.r_, amplitude=est.amplitude_, mask_threshold=mask_threshold, n_points=est.n_points_,
    )


class SchmidtDecomposition(BaseEstimator):
    """Schmidt decomposition of a discretised two-photon amplitude.

    ``fit(Phi, weights_s, weights_i)``: the quadrature weights turn the matrix
    into a discretisation of the continuous kernel before the SVD.
    """

    def __init__(self, n_modes=None):
        self.n_modes = n_modes

    def fit(self, Phi, weights_s=None, weights_i=None):
        Phi = np.asarray(Phi)
        if Phi.ndim != 2 or min(Phi.shape) < 1:
            raise ValueError(f"expected a 2-d amplitude matrix, got shape {Phi.shape}")
        if not np.all(np.isfinite(Phi)):
            raise ValueError("amplitude contains NaN or inf")
        ws = np.ones(Phi.shape[0]) if weights_s is None else np.asarray(weights_s, dtype=float)
        wi = np.ones(Phi.shape[1]) if weights_i is None else np.asarray(weights_i, dtype=float)
        M = Phi * np.sqrt(ws)[:, None] * np.sqrt(wi)[None, :]
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
        total = np.sum(s**2)
        if not total > 0:
            raise SchmidtError("amplitude is identically zero")
        lam = s**2 / total
        nz = lam[lam > 0]
        self.coefficients_ = lam
        self.entropy_ = float(max(-np.sum(nz * np.log2(nz)), 0.0))
        self.schmidt_number_ = float(1.0 / np.sum(lam**2))
        k = len(lam) if self.n_modes is None else int(self.n_modes)
        self.signal_modes_ = U[:, :k] / np.sqrt(ws)[:, None]
        self.idler_modes_ = Vh[:k].T / np.sqrt(wi)[:, None]
        return self


@dataclass
class SchmidtResult:
    coefficients: np.ndarray
    entropy: float
    schmidt_number: float
    approximate: bool = False
    grid_hash: str = None

    def as_dict(self, top=8):
        return {
            "entropy_bits": self.entropy,
            "K": self.schmidt_number,
            "lambda_top": [float(v) for v in self.coefficients[:top]],
            "approximate": self.approximate,
        }


def _axis_weights(omega):
    return np.abs(np.gradient(omega))


def schmidt_decompose(grid):
    """Schmidt coefficients, entropy (bits) and Schmidt number of a grid.

    Intensity-only grids are decomposed as sqrt(S) with zero phase and the
    result is flagged approximate.
    """
    try:
        est = SchmidtDecomposition().fit(
            grid.amplitude_or_sqrt(), _axis_weights(grid.Omega_s), _axis_weights(grid.Omega_i)
        )
    except np.linalg.LinAlgError as exc:
        raise SchmidtError(f"SVD failed for grid {grid.grid_hash}: {exc}") from exc
    return SchmidtResult(
        coefficients=est.coefficients_,
        entropy=est.entropy_,
        schmidt_number=est.schmidt_number_,
        approximate=grid.intensity_only,
        grid_hash=grid.grid_hash,
    )


def classify_regime(fit, r_min=0.5, m_max=0.05):
    if fit.r <= -r_min:
        return ANTICORRELATED
    if fit.r >= r_min:
        return CORRELATED
    if fit.metric <= m_max:
        return UNCORRELATED
    return ASYMMETRIC
