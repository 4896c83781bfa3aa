"""Gaussian-process regression with a Matern 5/2 kernel and constant mean.

Hyperparameters live in log space during optimisation:
``[log sf2, log l_1..l_m, log sn2, mean]`` where ``m`` is the number of
input dimensions (ARD) or 1 (a single shared lengthscale).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import cdist

from .circular import circular_rms, wrap_deg
from .errors import DimensionError, FitError, InputError, UndefinedAngleError

SQRT5 = math.sqrt(5.0)
HYPER_BOUNDS = (1e-3, 1e3)
NOISE_FLOOR = 1e-8
MAX_JITTER = 1e-4


def matern52(r, signal_variance: float = 1.0, lengthscale: float = 1.0):
    """k(r) = sf2 (1 + sqrt5 r/l + 5 r^2 / (3 l^2)) exp(-sqrt5 r/l)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InputError("distance must be non-negative")
    s = SQRT5 * r / lengthscale
    out = signal_variance * (1.0 + s + s * s / 3.0) * np.exp(-s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KernelParams:
    signal_variance: float
    lengthscales: np.ndarray
    noise_variance: float

    def __post_init__(self):
        object.__setattr__(self, "lengthscales", np.atleast_1d(np.asarray(self.lengthscales, dtype=float)))
        if self.signal_variance <= 0 or np.any(self.lengthscales <= 0):
            raise InputError("signal variance and lengthscales must be positive")
        if self.noise_variance < NOISE_FLOOR:
            object.__setattr__(self, "noise_variance", NOISE_FLOOR)

    @property
    def shared(self) -> bool:
        return len(self.lengthscales) == 1


def _scaled_sqdist(X1, X2, lengthscales):
    ls = np.asarray(lengthscales)
    if len(ls) == 1:
        return cdist(X1, X2, "sqeuclidean") / ls[0] ** 2
    return cdist(X1 / ls, X2 / ls, "sqeuclidean")


def kernel_matrix(X1, X2, params: KernelParams) -> np.ndarray:
    r = np.sqrt(np.maximum(_scaled_sqdist(X1, X2, params.lengthscales), 0.0))
    return matern52(r, params.signal_variance, 1.0)


@dataclass(frozen=True)
class GPModel:
    params: KernelParams
    mean_constant: float
    train_inputs: np.ndarray
    train_targets: np.ndarray
    solved_alpha: np.ndarray
    factor: np.ndarray          # lower Cholesky factor of K + (sn2 + jitter) I
    jitter: float = 0.0

    @property
    def n_dims(self) -> int:
        return self.train_inputs.shape[1]


def _cholesky_with_jitter(K):
    """Lower factor of K, adding diagonal jitter up to ``MAX_JITTER`` if needed."""
    try:
        return linalg.cholesky(K, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    jitter = 1e-10
    while jitter <= MAX_JITTER * (1 + 1e-9):
        try:
            return linalg.cholesky(K + jitter * np.eye(len(K)), lower=True, check_finite=False), jitter
        except linalg.LinAlgError:
            jitter *= 10
    raise FitError("covariance matrix not positive definite after jitter escalation")


def condition(X, y, params: KernelParams, mean_constant: float) -> GPModel:
    """Factorise the training covariance and solve for the weights."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    K = kernel_matrix(X, X, params)
    K[np.diag_indices_from(K)] += params.noise_variance
    L, jitter = _cholesky_with_jitter(K)
    alpha = linalg.cho_solve((L, True), y - mean_constant, check_finite=False)
    return GPModel(params, float(mean_constant), X, y, alpha, L, jitter)


# -- likelihood ---------------------------------------------------------------

def _unpack(theta, n_ls):
    sf2 = math.exp(theta[0])
    ls = np.exp(theta[1:1 + n_ls])
    sn2 = math.exp(theta[1 + n_ls])
    return sf2, ls, sn2, theta[2 + n_ls]


def _pack(params: KernelParams, mean: float) -> np.ndarray:
    return np.r_[math.log(params.signal_variance), np.log(params.lengthscales),
                 math.log(params.noise_variance), mean]


class _Objective:
    """Negative log marginal likelihood and gradient for fixed training data."""

    def __init__(self, X, y, shared: bool):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.shared = shared
        self.n_ls = 1 if shared else self.X.shape[1]
        if shared:
            self.sq = [cdist(self.X, self.X, "sqeuclidean")]
        else:
            self.sq = [np.subtract.outer(self.X[:, i], self.X[:, i]) ** 2 for i in range(self.X.shape[1])]

    def lml_and_grad(self, theta):
        sf2, ls, sn2, mean = _unpack(theta, self.n_ls)
        n = len(self.y)
        r2 = sum(s / l ** 2 for s, l in zip(self.sq, ls))
        r = np.sqrt(np.maximum(r2, 0.0))
        e = np.exp(-SQRT5 * r)
        Kf = sf2 * (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * e
        K = Kf.copy()
        K[np.diag_indices(n)] += sn2
        L, _ = _cholesky_with_jitter(K)
        resid = self.y - mean
        alpha = linalg.cho_solve((L, True), resid, check_finite=False)
        lml = -0.5 * resid @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * math.log(2 * math.pi)

        Kinv = linalg.cho_solve((L, True), np.eye(n), check_finite=False)
        W = np.outer(alpha, alpha) - Kinv
        grad = np.empty(len(theta))
        grad[0] = 0.5 * np.sum(W * Kf)
        common = sf2 * (5.0 / 3.0) * (1.0 + SQRT5 * r) * e
        for i, (s, l) in enumerate(zip(self.sq, ls)):
            grad[1 + i] = 0.5 * np.sum(W * common * (s / l ** 2))
        grad[1 + self.n_ls] = 0.5 * sn2 * np.trace(W)
        grad[2 + self.n_ls] = alpha.sum()
        return lml, grad

    def lml(self, theta):
        return self.lml_and_grad(theta)[0]

    def __call__(self, theta):
        try:
            lml, grad = self.lml_and_grad(theta)
        except FitError:
            return 1e25, np.zeros(len(theta))
        return -lml, -grad


def log_marginal_likelihood(X, y, params: KernelParams, mean: float) -> float:
    return _Objective(X, y, params.shared).lml(_pack(params, mean))


def lml_gradient(X, y, params: KernelParams, mean: float) -> np.ndarray:
    """Analytic gradient w.r.t. [log sf2, log l..., log sn2, mean]."""
    return _Objective(X, y, params.shared).lml_and_grad(_pack(params, mean))[1]


def default_init(X, y, shared: bool = False) -> KernelParams:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    var = float(np.var(y)) or 1.0
    if shared:
        d = cdist(X, X)
        pos = d[d > 0]
        ls = [float(np.median(pos)) if len(pos) else 1.0]
    else:
        ls = np.std(X, axis=0)
        ls = np.where(ls > 0, ls, 1.0)
    lo, hi = HYPER_BOUNDS
    return KernelParams(float(np.clip(var, lo, hi)), np.clip(ls, lo, hi), max(1e-2 * var, NOISE_FLOOR))


def fit_gp(X, y, init: KernelParams | None = None, shared_lengthscale: bool = False,
           restarts: int = 5, seed: int = 0) -> GPModel:
    """Maximise the log marginal likelihood over kernel and mean hyperparameters.

    Runs L-BFGS-B from ``init`` and from ``restarts`` perturbed copies of it;
    the best optimum is kept, and never one worse than ``init`` itself.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] != len(y):
        raise InputError(f"{X.shape[0]} inputs but {len(y)} targets")
    if len(y) < 2:
        raise InputError("GP fit needs at least 2 training points")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("training data contains non-finite values")
    if init is None:
        init = default_init(X, y, shared_lengthscale)
    if init.shared != shared_lengthscale and not (X.shape[1] == 1):
        raise InputError("init lengthscales do not match the requested kernel structure")

    obj = _Objective(X, y, init.shared)
    lo, hi = math.log(HYPER_BOUNDS[0]), math.log(HYPER_BOUNDS[1])
    bounds = [(lo, hi)] * (1 + obj.n_ls) + [(math.log(NOISE_FLOOR), hi), (None, None)]
    theta0 = _pack(init, float(np.mean(y)))
    theta0 = np.array([np.clip(t, b[0] if b[0] is not None else -np.inf,
                               b[1] if b[1] is not None else np.inf) for t, b in zip(theta0, bounds)])

    rng = np.random.default_rng(seed)
    starts = [theta0]
    for _ in range(restarts):
        t = theta0.copy()
        t[:-1] += rng.normal(0.0, 1.0, size=len(t) - 1)
        t[:-1] = np.clip(t[:-1], [b[0] for b in bounds[:-1]], [b[1] for b in bounds[:-1]])
        starts.append(t)

    best_theta, best_val = theta0, obj(theta0)[0]
    for t in starts:
        res = optimize.minimize(obj, t, jac=True, method="L-BFGS-B", bounds=bounds)
        if np.isfinite(res.fun) and res.fun < best_val:
            best_theta, best_val = res.x, res.fun
    if best_val >= 1e25:
        raise FitError("no hyperparameter setting gave a positive-definite covariance")
    sf2, ls, sn2, mean = _unpack(best_theta, obj.n_ls)
    return condition(X, y, KernelParams(sf2, ls, sn2), mean)


def predict_gp(model: GPModel, x):
    """Posterior mean and latent variance at one point (d-vector) or many (rows)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Xs = np.atleast_2d(x)
    if Xs.shape[1] != model.n_dims:
        raise DimensionError(f"input has {Xs.shape[1]} dims, model expects {model.n_dims}")
    Ks = kernel_matrix(Xs, model.train_inputs, model.params)
    mean = model.mean_constant + Ks @ model.solved_alpha
    v = linalg.solve_triangular(model.factor, Ks.T, lower=True, check_finite=False)
    var = np.maximum(model.params.signal_variance - np.sum(v * v, axis=0), 0.0)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


def loo_predictions(model: GPModel):
    """Closed-form leave-one-out posterior means and variances."""
    L = model.factor
    Kinv = linalg.cho_solve((L, True), np.eye(len(L)), check_finite=False)
    d = np.diag(Kinv)
    mean = model.train_targets - model.solved_alpha / d
    return mean, 1.0 / d


# -- angles ---------------------------------------------------------------------

def encode_angle(theta_deg):
    th = np.radians(theta_deg)
    return np.sin(th), np.cos(th)


def decode_angle(f_sin, f_cos):
    """atan2 of the component means, in degrees within (-180, 180]."""
    f_sin = np.asarray(f_sin, dtype=float)
    f_cos = np.asarray(f_cos, dtype=float)
    if np.any((f_sin == 0) & (f_cos == 0)):
        raise UndefinedAngleError("both angle components are zero")
    return wrap_deg(np.degrees(np.arctan2(f_sin, f_cos)))


# -- pose regressors ------------------------------------------------------------

@dataclass(frozen=True)
class Standardizer:
    """Zero-mean, unit-variance scaling of rho and phi."""

    rho_mean: float
    rho_std: float
    phi_mean: float
    phi_std: float

    @classmethod
    def fit(cls, spherical):
        s = np.asarray(spherical, dtype=float)
        rs, ps = float(np.std(s[:, 0])), float(np.std(s[:, 2]))
        return cls(float(np.mean(s[:, 0])), rs if rs > 0 else 1.0,
                   float(np.mean(s[:, 2])), ps if ps > 0 else 1.0)

    @classmethod
    def identity(cls):
        return cls(0.0, 1.0, 0.0, 1.0)


def spherical_inputs(spherical, scaler: Standardizer) -> np.ndarray:
    """GP inputs (rho, sin theta_PC23, cos theta_PC23, phi) with scaled rho/phi."""
    s = np.atleast_2d(np.asarray(spherical, dtype=float))
    th = np.radians(s[:, 1])
    return np.c_[(s[:, 0] - scaler.rho_mean) / scaler.rho_std, np.sin(th), np.cos(th),
                 (s[:, 2] - scaler.phi_mean) / scaler.phi_std]


@dataclass(frozen=True)
class PoseGPs:
    gp_sin: GPModel
    gp_cos: GPModel
    gp_lat: GPModel

    def predict(self, X_orient, X_lat=None):
        """(theta_hat, lateral_hat, (f_sin, f_cos), variances) for rows of inputs."""
        X_lat = X_orient if X_lat is None else X_lat
        f_sin, v_sin = predict_gp(self.gp_sin, X_orient)
        f_cos, v_cos = predict_gp(self.gp_cos, X_orient)
        lat, v_lat = predict_gp(self.gp_lat, X_lat)
        return decode_angle(f_sin, f_cos), lat, (f_sin, f_cos), (v_sin, v_cos, v_lat)

    def loo_orientation_rms(self, true_deg) -> float:
        s, _ = loo_predictions(self.gp_sin)
        c, _ = loo_predictions(self.gp_cos)
        return circular_rms(decode_angle(s, c), true_deg)


def fit_pose_gps(X_orient, theta_deg, X_lat, lateral_mm, restarts: int = 5,
                 seed: int = 0, shared_lengthscale: bool = False) -> PoseGPs:
    """GP_sin and GP_cos on the orientation set, GP_lat on the lateral set."""
    s, c = encode_angle(theta_deg)
    kw = dict(shared_lengthscale=shared_lengthscale, restarts=restarts)
    return PoseGPs(
        fit_gp(X_orient, s, seed=seed, **kw),
        fit_gp(X_orient, c, seed=seed + 1, **kw),
        fit_gp(X_lat, lateral_mm, seed=seed + 2, **kw),
    )


def fit_baseline(frames, theta_deg, lateral_mm, restarts: int = 5, seed: int = 0) -> PoseGPs:
    """Raw-pin regressors with one lengthscale shared by every pin coordinate."""
    X = np.asarray(frames, dtype=float)
    return fit_pose_gps(X, theta_deg, X, lateral_mm, restarts=restarts, seed=seed,
                        shared_lengthscale=True)
