"""Acquisition functions: EI, the minimizer-belief machinery, information gain
per cost for continuous subset sizes, and the discrete-task variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .gp import GpEnsemble, chol_with_jitter
from .space import AugmentedInput, SearchSpace


def expected_improvement(mean: float, variance: float, f_min: float) -> float:
    """Closed-form expected improvement over the incumbent value."""
    if variance < 0:
        raise ValueError("variance must be non-negative")
    sigma = np.sqrt(variance)
    if sigma == 0.0:
        return float(max(f_min - mean, 0.0))
    zscore = (f_min - mean) / sigma
    return float(max((f_min - mean) * norm.cdf(zscore) + sigma * norm.pdf(zscore), 0.0))


@dataclass(frozen=True)
class RepresenterSet:
    """Discrete support on which the minimizer belief is estimated."""

    points: np.ndarray  # (n_rep, d) unit-cube configurations
    log_weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] == 0:
            raise ValueError("representer set must be non-empty")
        lw = np.asarray(self.log_weights, dtype=float)
        if not np.all(np.isfinite(lw)):
            raise ValueError("log weights must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "log_weights", lw)

    def __len__(self) -> int:
        return self.points.shape[0]


def _ensemble_mean_at(ensemble: GpEnsemble, Q_full: np.ndarray) -> np.ndarray:
    return np.mean([m.predict(Q_full)[0] for m in ensemble.members], axis=0)


def incumbent_value(ensemble: GpEnsemble) -> float:
    """Smallest ensemble-averaged predicted loss (at deployment conditions)
    among the observed configurations."""
    model = ensemble.model
    configs = ensemble.members[0].X[:, : model.n_x]
    return float(np.min(_ensemble_mean_at(ensemble, model.augment_full(configs))))


def ei_at(ensemble: GpEnsemble, Q_full: np.ndarray, f_min: float) -> np.ndarray:
    """Ensemble-averaged EI at query rows (model-input space)."""
    Q_full = np.atleast_2d(Q_full)
    total = np.zeros(Q_full.shape[0])
    for member in ensemble.members:
        mean, var = member.predict(Q_full)
        sigma = np.sqrt(var)
        imp = f_min - mean
        vals = np.maximum(imp, 0.0)  # deterministic case, sigma == 0
        pos = sigma > 0
        zscore = imp[pos] / sigma[pos]
        vals[pos] = imp[pos] * norm.cdf(zscore) + sigma[pos] * norm.pdf(zscore)
        total += np.maximum(vals, 0.0)
    return total / len(ensemble)


def sample_representers(
    ensemble: GpEnsemble,
    space: SearchSpace,
    n_rep: int,
    seed: int,
    n_proposals: int | None = None,
) -> RepresenterSet:
    """Importance-resample representer points with probability proportional to
    EI at full dataset size, from a uniform proposal over the unit cube."""
    if n_rep < 1:
        raise ValueError("n_rep must be positive")
    rng = np.random.default_rng(seed)
    m = n_proposals or max(500, 10 * n_rep)
    proposals = rng.uniform(size=(m, space.n_dims))
    Q_full = ensemble.model.augment_full(proposals)
    f_min = incumbent_value(ensemble)
    weights = ei_at(ensemble, Q_full, f_min)
    total = float(np.sum(weights))
    if not np.isfinite(total) or total <= 0.0:
        probs = np.full(m, 1.0 / m)
    else:
        probs = weights / total
    idx = rng.choice(m, size=n_rep, replace=True, p=probs)
    return RepresenterSet(
        points=proposals[idx], log_weights=np.full(n_rep, -np.log(n_rep))
    )


@dataclass(frozen=True)
class PminEstimate:
    """Belief over representer points that each is the full-size minimizer."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
            raise ValueError("probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "probabilities", p)


def _argmin_counts(vals: np.ndarray) -> np.ndarray:
    """Fraction of sample columns in which each row attains the minimum,
    with exact ties splitting the mass evenly."""
    mins = vals.min(axis=0)
    mask = vals == mins[None, :]
    return (mask / mask.sum(axis=0)[None, :]).sum(axis=1) / vals.shape[1]


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def estimate_pmin(
    ensemble: GpEnsemble, reps: RepresenterSet, n_draws: int, seed: int
) -> PminEstimate:
    """Monte-Carlo minimizer belief: joint posterior draws at the representers
    (projected to full dataset size), argmin counting, ensemble averaging."""
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    rng = np.random.default_rng(seed)
    n_rep = len(reps)
    Z = rng.standard_normal((n_rep, n_draws))
    Q_full = ensemble.model.augment_full(reps.points)
    probs = np.zeros(n_rep)
    for member in ensemble.members:
        mean, cov = member.joint(Q_full)
        L, _ = chol_with_jitter(cov)
        vals = mean[:, None] + L @ Z
        probs += _argmin_counts(vals)
    probs /= len(ensemble)
    return PminEstimate(probabilities=probs / probs.sum())


class InformationGainCalculator:
    """Expected reduction of minimizer-belief entropy from one fantasized
    evaluation, marginalized over the hyperparameter ensemble.

    All representer-side quantities are precomputed once so that candidate
    evaluations reduce to a rank-one covariance update plus argmin counting
    over shared standard-normal draws.
    """

    def __init__(
        self,
        ensemble: GpEnsemble,
        reps: RepresenterSet,
        n_draws: int = 500,
        n_fantasies: int = 10,
        seed: int = 0,
    ):
        self.ensemble = ensemble
        self.reps = reps
        rng = np.random.default_rng(seed)
        n_rep = len(reps)
        self.Z = rng.standard_normal((n_rep, n_draws))
        nodes, weights = np.polynomial.hermite.hermgauss(n_fantasies)
        self.nodes = nodes
        self.weights = weights / np.sqrt(np.pi)
        self.Q_full = ensemble.model.augment_full(reps.points)
        self._pre = []
        for member in ensemble.members:
            mean, cov = member.joint(self.Q_full)
            L, _ = chol_with_jitter(cov)
            base_entropy = _entropy(_argmin_counts(mean[:, None] + L @ self.Z))
            V_r = member.cross_solve(self.Q_full)
            self._pre.append((mean, cov, base_entropy, V_r))

    def __call__(self, candidate: np.ndarray) -> float:
        c = np.atleast_2d(np.asarray(candidate, dtype=float))
        gains = []
        for member, (mean, cov, base_entropy, V_r) in zip(
            self.ensemble.members, self._pre
        ):
            mu_c, var_c, cross = member.conditional_pieces(self.Q_full, V_r, c)
            denom = var_c + member.noise_variance
            cov_new = cov - np.outer(cross, cross) / denom
            L_new, _ = chol_with_jitter(cov_new)
            base_draws = L_new @ self.Z
            fantasies = mu_c + np.sqrt(2.0 * denom) * self.nodes
            expected_entropy = 0.0
            for w, y in zip(self.weights, fantasies):
                mean_new = mean + cross * ((y - mu_c) / denom)
                expected_entropy += w * _entropy(
                    _argmin_counts(mean_new[:, None] + base_draws)
                )
            gains.append(base_entropy - expected_entropy)
        return max(0.0, float(np.mean(gains)))


def information_gain(
    ensemble: GpEnsemble,
    candidate,
    reps: RepresenterSet,
    n_fantasies: int = 10,
    seed: int = 0,
    n_draws: int = 500,
) -> float:
    """One-off information gain of a candidate (model-input row)."""
    if isinstance(candidate, AugmentedInput):
        candidate = candidate.as_vector()
    calc = InformationGainCalculator(
        ensemble, reps, n_draws=n_draws, n_fantasies=n_fantasies, seed=seed
    )
    return calc(candidate)


def predict_cost(cost_ensemble: GpEnsemble, Q_full: np.ndarray) -> np.ndarray:
    """Point cost prediction: ensemble mean of exp(posterior mean log-cost)."""
    Q_full = np.atleast_2d(Q_full)
    return np.mean(
        [np.exp(m.predict(Q_full)[0]) for m in cost_ensemble.members], axis=0
    )


def fabolas_acquisition(
    x: np.ndarray,
    s_t: float,
    loss_ensemble: GpEnsemble,
    cost_ensemble: GpEnsemble,
    c_overhead: float,
    reps: RepresenterSet,
    seed: int = 0,
    n_fantasies: int = 10,
    n_draws: int = 500,
    gain_calc: InformationGainCalculator | None = None,
) -> float:
    """Information gain about the full-size minimizer per predicted second."""
    candidate = np.append(np.asarray(x, dtype=float), s_t)
    if gain_calc is None:
        gain_calc = InformationGainCalculator(
            loss_ensemble, reps, n_draws=n_draws, n_fantasies=n_fantasies, seed=seed
        )
    gain = gain_calc(candidate)
    if gain == 0.0:
        return 0.0
    cost = float(predict_cost(cost_ensemble, candidate[None, :])[0])
    return gain / (cost + c_overhead)


def mtbo_task_kernel(t: int, t2: int, task_chol: np.ndarray) -> float:
    """Task covariance entry (L L^T)[t, t2]."""
    L = np.atleast_2d(np.asarray(task_chol, dtype=float))
    T = L.shape[0]
    if not (0 <= t < T and 0 <= t2 < T):
        raise IndexError("task index out of range")
    return float((L @ L.T)[t, t2])


def mtbo_acquisition(
    x: np.ndarray,
    t: int,
    loss_ensemble: GpEnsemble,
    cost_ensemble: GpEnsemble,
    reps: RepresenterSet,
    seed: int = 0,
    n_fantasies: int = 10,
    n_draws: int = 500,
    gain_calc: InformationGainCalculator | None = None,
) -> float:
    """Information gain about the target-task minimizer per predicted second."""
    candidate = np.append(np.asarray(x, dtype=float), float(t))
    if gain_calc is None:
        gain_calc = InformationGainCalculator(
            loss_ensemble, reps, n_draws=n_draws, n_fantasies=n_fantasies, seed=seed
        )
    gain = gain_calc(candidate)
    if gain == 0.0:
        return 0.0
    cost = float(predict_cost(cost_ensemble, candidate[None, :])[0])
    return gain / cost
