"""Affine-invariant ensemble sampling of GP hyperparameters (stretch moves)."""

from __future__ import annotations

import numpy as np

from .gp import (
    GpEnsemble,
    KernelModel,
    ModelFitError,
    ObservationSet,
    fit_gp,
    log_marginal_likelihood,
    target_standardization,
)


def stretch_move_sample(
    log_prob,
    x0: np.ndarray,
    n_steps: int,
    rng: np.random.Generator,
    a: float = 2.0,
) -> np.ndarray:
    """Advance a walker ensemble by `n_steps` stretch moves.

    Walkers are updated serially in fixed order so results are reproducible
    for a given generator state. Returns the final walker positions.
    """
    x = np.array(x0, dtype=float, copy=True)
    n_walkers, n_dim = x.shape
    if n_walkers < 2:
        raise ValueError("need at least two walkers")
    lp = np.array([log_prob(w) for w in x])
    if not np.any(np.isfinite(lp)):
        raise RuntimeError("all walkers start at zero posterior probability")
    for _ in range(n_steps):
        for k in range(n_walkers):
            j = int(rng.integers(n_walkers - 1))
            if j >= k:
                j += 1
            z = (rng.uniform(0.0, 1.0) * (np.sqrt(a) - np.sqrt(1.0 / a)) + np.sqrt(1.0 / a)) ** 2
            proposal = x[j] + z * (x[k] - x[j])
            lp_new = log_prob(proposal)
            log_accept = (n_dim - 1) * np.log(z) + lp_new - lp[k]
            if np.log(rng.uniform(0.0, 1.0)) < log_accept:
                x[k] = proposal
                lp[k] = lp_new
    return x


def sample_hyperposterior(
    obs: ObservationSet,
    model: KernelModel,
    target: str = "loss",
    n_walkers: int = 20,
    n_samples: int = 20,
    burn_in: int = 100,
    seed: int = 0,
    normalize: bool = False,
) -> GpEnsemble:
    """Draw GP hyperparameter samples from their posterior and fit one GP each.

    With normalize=True the target is standardized before fitting; predictions
    from the resulting posteriors are mapped back to the original scale.
    """
    if n_walkers < 2 * model.n_params:
        raise ValueError("n_walkers must be at least twice the parameter count")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    shift, scale = target_standardization(obs, target) if normalize else (0.0, 1.0)

    def log_post(v: np.ndarray) -> float:
        h = model.unpack(v)
        lp = model.log_prior(h)
        if not np.isfinite(lp):
            return -np.inf
        return lp + log_marginal_likelihood(obs, h, model, target, shift, scale)

    # Initialize from the prior, oversampling and keeping the best walkers by
    # posterior value so that short burn-ins start near the posterior mass.
    starts, values = [], []
    for _ in range(4 * n_walkers):
        for _attempt in range(100):
            v = model.sample_start(rng)
            lp = log_post(v)
            if np.isfinite(lp):
                starts.append(v)
                values.append(lp)
                break
        else:
            raise RuntimeError("could not initialize walkers at finite posterior")
    top = np.argsort(values)[::-1][:n_walkers]
    x = stretch_move_sample(log_post, np.array(starts)[top], burn_in, rng)

    samples: list[np.ndarray] = []
    while len(samples) < n_samples:
        samples.extend(x)
        if len(samples) < n_samples:
            x = stretch_move_sample(log_post, x, 1, rng)
    samples = samples[:n_samples]

    members = []
    for v in samples:
        try:
            members.append(fit_gp(obs, model.unpack(v), model, target, shift, scale))
        except ModelFitError:
            continue
    if not members:
        raise RuntimeError("no hyperparameter sample produced a valid GP fit")
    return GpEnsemble(members=members)
