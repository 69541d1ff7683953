"""Gaussian-process regression: kernel models, hyper-priors, fitting, prediction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .kernels import (
    env_kernel_gram,
    matern52_gram,
    task_kernel_gram,
)

LOG_LAMBDA_LOW = -10.0
LOG_LAMBDA_HIGH = 2.0
NOISE_HORSESHOE_SCALE = 0.1


class ModelFitError(RuntimeError):
    """Raised when the Gram matrix cannot be factorized even with max jitter."""


@dataclass(frozen=True)
class GpHyperparams:
    """Kernel hyperparameters; positive quantities are stored as plain values
    but sampled in log space."""

    theta: float
    lambdas: np.ndarray
    sigma2: float
    basis_weight_chol: np.ndarray | None = None  # 2x2 lower triangular
    task_chol: np.ndarray | None = None  # TxT lower triangular

    def __post_init__(self):
        if self.theta <= 0 or self.sigma2 <= 0 or np.any(np.asarray(self.lambdas) <= 0):
            raise ValueError("theta, lambdas and sigma2 must be strictly positive")
        object.__setattr__(self, "lambdas", np.asarray(self.lambdas, dtype=float))

    @property
    def basis_weight_cov(self) -> np.ndarray:
        L = self.basis_weight_chol
        return L @ L.T


@dataclass
class ObservationSet:
    """Evaluation history. `env` holds the transformed subset size (or the task
    index for discrete-task models); for plain models it is ignored."""

    X: np.ndarray
    env: np.ndarray
    y: np.ndarray
    z: np.ndarray
    overhead: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.env = np.asarray(self.env, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        self.overhead = np.asarray(self.overhead, dtype=float)
        if len(self) and (np.any(self.z <= 0) or not np.all(np.isfinite(self.y))):
            raise ValueError("costs must be positive and losses finite")

    def __len__(self) -> int:
        return 0 if self.X.size == 0 else self.X.shape[0]

    @classmethod
    def empty(cls, n_dims: int) -> "ObservationSet":
        return cls(
            X=np.empty((0, n_dims)),
            env=np.empty(0),
            y=np.empty(0),
            z=np.empty(0),
            overhead=np.empty(0),
        )

    def appended(self, x, env, y, z, overhead=0.0) -> "ObservationSet":
        return ObservationSet(
            X=np.vstack([self.X, np.atleast_2d(x)]),
            env=np.append(self.env, env),
            y=np.append(self.y, y),
            z=np.append(self.z, z),
            overhead=np.append(self.overhead, overhead),
        )


def _tril_indices(t: int):
    return [(i, j) for i in range(t) for j in range(i + 1)]


def _normal_logpdf(v: float, mu: float = 0.0, sd: float = 1.0) -> float:
    return -0.5 * np.log(2.0 * np.pi * sd * sd) - 0.5 * ((v - mu) / sd) ** 2


class KernelModel:
    """Hyperparameter packing, priors, and Gram construction for one GP family.

    The packed vector lives in unconstrained space: log theta, per-dimension
    log lambdas, log sigma2, then family-specific extras.
    """

    def __init__(self, n_x: int):
        self.n_x = n_x

    @property
    def n_extras(self) -> int:
        return 0

    @property
    def n_params(self) -> int:
        return 2 + self.n_x + self.n_extras

    def pack(self, h: GpHyperparams) -> np.ndarray:
        head = np.concatenate(
            [[np.log(h.theta)], np.log(h.lambdas), [np.log(h.sigma2)]]
        )
        return np.concatenate([head, self._pack_extras(h)])

    def unpack(self, v: np.ndarray) -> GpHyperparams:
        d = self.n_x
        return self._with_extras(
            theta=float(np.exp(v[0])),
            lambdas=np.exp(v[1 : 1 + d]),
            sigma2=float(np.exp(v[1 + d])),
            extras=v[2 + d :],
        )

    def log_prior(self, h: GpHyperparams) -> float:
        log_lam = np.log(h.lambdas)
        if np.any(log_lam < LOG_LAMBDA_LOW) or np.any(log_lam > LOG_LAMBDA_HIGH):
            return -np.inf
        lp = _normal_logpdf(np.log(h.theta))
        # Horseshoe-shaped density on the noise variance, expressed directly in
        # log space: heavy mass near zero, quartic decay for large noise. The
        # inner term is evaluated via its logarithm so tiny variances do not
        # overflow.
        t = np.log(3.0) + 2.0 * (np.log(NOISE_HORSESHOE_SCALE) - np.log(h.sigma2))
        inner = t if t > 30.0 else np.log1p(np.exp(t))
        lp += float(np.log(inner))
        return lp + self._extras_log_prior(h)

    def sample_start(self, rng: np.random.Generator) -> np.ndarray:
        d = self.n_x
        v = np.empty(self.n_params)
        v[0] = rng.normal(0.0, 1.0)
        v[1 : 1 + d] = rng.uniform(LOG_LAMBDA_LOW, LOG_LAMBDA_HIGH, size=d)
        v[1 + d] = rng.normal(np.log(1e-3), 1.0)
        v[2 + d :] = self._sample_extras(rng)
        return v

    # family-specific hooks -------------------------------------------------
    def _pack_extras(self, h: GpHyperparams) -> np.ndarray:
        return np.empty(0)

    def _with_extras(self, theta, lambdas, sigma2, extras) -> GpHyperparams:
        return GpHyperparams(theta=theta, lambdas=lambdas, sigma2=sigma2)

    def _extras_log_prior(self, h: GpHyperparams) -> float:
        return 0.0

    def _sample_extras(self, rng: np.random.Generator) -> np.ndarray:
        return np.empty(0)

    # data plumbing ---------------------------------------------------------
    def inputs(self, obs: ObservationSet) -> np.ndarray:
        """Model-input rows for an observation set."""
        raise NotImplementedError

    def augment_full(self, X: np.ndarray) -> np.ndarray:
        """Model-input rows for configurations at deployment conditions."""
        raise NotImplementedError

    def gram(self, A: np.ndarray, B: np.ndarray, h: GpHyperparams) -> np.ndarray:
        raise NotImplementedError


class MaternModel(KernelModel):
    """Plain Matern-5/2 ARD GP over configurations only."""

    def inputs(self, obs: ObservationSet) -> np.ndarray:
        return obs.X

    def augment_full(self, X: np.ndarray) -> np.ndarray:
        return np.atleast_2d(X)

    def gram(self, A, B, h):
        return matern52_gram(A, B, h.theta, h.lambdas)


def _chol_from_triplet(extras: np.ndarray) -> np.ndarray:
    L = np.zeros((2, 2))
    L[0, 0] = np.exp(extras[0])
    L[1, 1] = np.exp(extras[1])
    L[1, 0] = extras[2]
    return L


class EnvModel(KernelModel):
    """Factorized kernel over (configuration, subset-size coordinate).

    Extras parameterize the Cholesky factor of the 2x2 basis-weight covariance:
    log diagonal entries plus the free off-diagonal entry.
    """

    def __init__(self, n_x: int, basis: str):
        super().__init__(n_x)
        if basis not in ("loss", "cost"):
            raise ValueError("basis must be 'loss' or 'cost'")
        self.basis = basis

    @property
    def n_extras(self) -> int:
        return 3

    def _pack_extras(self, h):
        L = h.basis_weight_chol
        return np.array([np.log(L[0, 0]), np.log(L[1, 1]), L[1, 0]])

    def _with_extras(self, theta, lambdas, sigma2, extras):
        return GpHyperparams(
            theta=theta,
            lambdas=lambdas,
            sigma2=sigma2,
            basis_weight_chol=_chol_from_triplet(extras),
        )

    def _extras_log_prior(self, h):
        L = h.basis_weight_chol
        return (
            _normal_logpdf(np.log(L[0, 0]))
            + _normal_logpdf(np.log(L[1, 1]))
            + _normal_logpdf(L[1, 0])
        )

    def _sample_extras(self, rng):
        return np.array([rng.normal(0, 0.5), rng.normal(0, 0.5), rng.normal(0, 0.5)])

    def inputs(self, obs):
        return np.column_stack([obs.X, obs.env])

    def augment_full(self, X):
        X = np.atleast_2d(X)
        return np.column_stack([X, np.ones(X.shape[0])])

    def gram(self, A, B, h):
        return env_kernel_gram(
            A, B, h.theta, h.lambdas, h.basis_weight_cov, self.basis
        )


class TaskModel(KernelModel):
    """Product kernel over (configuration, discrete task index).

    Extras are the lower-triangular entries of the task covariance Cholesky
    factor, row by row, diagonal entries in log space.
    """

    def __init__(self, n_x: int, n_tasks: int, target_task: int):
        super().__init__(n_x)
        self.n_tasks = n_tasks
        self.target_task = target_task

    @property
    def n_extras(self) -> int:
        return self.n_tasks * (self.n_tasks + 1) // 2

    def _pack_extras(self, h):
        L = h.task_chol
        out = []
        for i, j in _tril_indices(self.n_tasks):
            out.append(np.log(L[i, i]) if i == j else L[i, j])
        return np.array(out)

    def _with_extras(self, theta, lambdas, sigma2, extras):
        L = np.zeros((self.n_tasks, self.n_tasks))
        for (i, j), v in zip(_tril_indices(self.n_tasks), extras):
            L[i, j] = np.exp(v) if i == j else v
        return GpHyperparams(
            theta=theta, lambdas=lambdas, sigma2=sigma2, task_chol=L
        )

    def _extras_log_prior(self, h):
        L = h.task_chol
        lp = 0.0
        for i, j in _tril_indices(self.n_tasks):
            lp += _normal_logpdf(np.log(L[i, i]) if i == j else L[i, j])
        return lp

    def _sample_extras(self, rng):
        return rng.normal(0, 0.5, size=self.n_extras)

    def inputs(self, obs):
        return np.column_stack([obs.X, obs.env])

    def augment_full(self, X):
        X = np.atleast_2d(X)
        return np.column_stack([X, np.full(X.shape[0], float(self.target_task))])

    def gram(self, A, B, h):
        return task_kernel_gram(A, B, h.theta, h.lambdas, h.task_chol)


def log_hyper_prior(model: KernelModel, h: GpHyperparams) -> float:
    """Log hyper-prior density (unconstrained parameterization)."""
    return model.log_prior(h)


def chol_with_jitter(K: np.ndarray, max_retries: int = 5) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor with an escalating diagonal jitter ladder."""
    base = 1e-10 * float(np.mean(np.diag(K))) if K.size else 0.0
    jitter = 0.0
    for attempt in range(max_retries + 2):
        try:
            L = cholesky(K + jitter * np.eye(K.shape[0]), lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            pass
        except ValueError:
            pass
        jitter = base * (10.0**attempt) if base > 0 else 10.0 ** (attempt - 10)
    raise ModelFitError(f"Cholesky failed after max jitter {jitter:g}")


@dataclass
class GpPosterior:
    """Fitted GP posterior for one hyperparameter sample.

    The GP operates on the (optionally) standardized target; predictions are
    mapped back through y_shift/y_scale.
    """

    model: KernelModel
    hyperparams: GpHyperparams
    X: np.ndarray
    y: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    log_evidence: float
    y_shift: float = 0.0
    y_scale: float = 1.0

    @property
    def noise_variance(self) -> float:
        """Observation-noise variance on the original target scale."""
        return self.hyperparams.sigma2 * self.y_scale**2

    def predict(self, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at query rows Q (model-input space)."""
        Q = np.atleast_2d(Q)
        h = self.hyperparams
        Kxq = self.model.gram(self.X, Q, h)
        mean = Kxq.T @ self.alpha
        V = solve_triangular(self.chol, Kxq, lower=True)
        prior_var = np.diag(self.model.gram(Q, Q, h)).copy()
        var = np.maximum(prior_var - np.sum(V * V, axis=0), 0.0)
        return mean * self.y_scale + self.y_shift, var * self.y_scale**2

    def joint(self, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Joint posterior mean vector and covariance matrix at query rows Q."""
        Q = np.atleast_2d(Q)
        h = self.hyperparams
        Kxq = self.model.gram(self.X, Q, h)
        mean = Kxq.T @ self.alpha
        V = solve_triangular(self.chol, Kxq, lower=True)
        cov = self.model.gram(Q, Q, h) - V.T @ V
        return mean * self.y_scale + self.y_shift, cov * self.y_scale**2

    def cross_solve(self, Q: np.ndarray) -> np.ndarray:
        """solve(L, K(X, Q)); building block for posterior cross-covariances."""
        Kxq = self.model.gram(self.X, np.atleast_2d(Q), self.hyperparams)
        return solve_triangular(self.chol, Kxq, lower=True)

    def conditional_pieces(
        self, Q: np.ndarray, V_q: np.ndarray, c: np.ndarray
    ) -> tuple[float, float, np.ndarray]:
        """Predictive mean/variance at candidate c and the posterior
        cross-covariance Cov(f_Q, f_c), all on the original target scale.

        V_q must be cross_solve(Q) for the same Q.
        """
        c = np.atleast_2d(c)
        h = self.hyperparams
        Kxc = self.model.gram(self.X, c, h)
        v_c = solve_triangular(self.chol, Kxc, lower=True)
        mu_c = float(Kxc[:, 0] @ self.alpha) * self.y_scale + self.y_shift
        var_c = max(
            float(self.model.gram(c, c, h)[0, 0]) - float(v_c[:, 0] @ v_c[:, 0]), 0.0
        ) * self.y_scale**2
        cross = (
            self.model.gram(np.atleast_2d(Q), c, h)[:, 0] - V_q.T @ v_c[:, 0]
        ) * self.y_scale**2
        return mu_c, var_c, cross


def target_values(obs: ObservationSet, target: str) -> np.ndarray:
    """Raw regression target: the loss itself or the log of the cost."""
    if target == "loss":
        return obs.y
    if target == "log-cost":
        return np.log(obs.z)
    raise ValueError("target must be 'loss' or 'log-cost'")


def target_standardization(obs: ObservationSet, target: str) -> tuple[float, float]:
    """Shift/scale that map the target to zero mean, unit variance."""
    vals = target_values(obs, target)
    return float(np.mean(vals)), max(float(np.std(vals)), 1e-8)


def fit_gp(
    obs: ObservationSet,
    h: GpHyperparams,
    model: KernelModel,
    target: str = "loss",
    y_shift: float = 0.0,
    y_scale: float = 1.0,
) -> GpPosterior:
    """Fit the GP posterior for the loss or the log-cost target."""
    if len(obs) == 0:
        raise ValueError("cannot fit a GP on an empty observation set")
    y = (target_values(obs, target) - y_shift) / y_scale
    X = model.inputs(obs)
    K = model.gram(X, X, h) + h.sigma2 * np.eye(len(obs))
    try:
        L, _ = chol_with_jitter(K)
    except ModelFitError as err:
        raise ModelFitError(f"{err} (hyperparameters: {h})") from err
    alpha = cho_solve((L, True), y)
    n = len(obs)
    log_ev = float(
        -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi)
    )
    return GpPosterior(
        model=model,
        hyperparams=h,
        X=X,
        y=y,
        chol=L,
        alpha=alpha,
        log_evidence=log_ev,
        y_shift=y_shift,
        y_scale=y_scale,
    )


def log_marginal_likelihood(
    obs: ObservationSet,
    h: GpHyperparams,
    model: KernelModel,
    target: str = "loss",
    y_shift: float = 0.0,
    y_scale: float = 1.0,
) -> float:
    """GP evidence; -inf when the factorization fails (rejected MCMC proposal)."""
    try:
        return fit_gp(obs, h, model, target, y_shift, y_scale).log_evidence
    except ModelFitError:
        return -np.inf


@dataclass
class GpEnsemble:
    """GP posteriors, one per MCMC hyperparameter sample, sharing one dataset."""

    members: list[GpPosterior]

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble must be non-empty")

    def __len__(self) -> int:
        return len(self.members)

    @property
    def model(self) -> KernelModel:
        return self.members[0].model

    def mean_prediction(self, Q: np.ndarray) -> np.ndarray:
        """Ensemble-averaged posterior mean at query rows Q."""
        return np.mean([m.predict(Q)[0] for m in self.members], axis=0)
