"""Global maximization of acquisition functions over the unit box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIRECT_EPS = 1e-4


@dataclass(frozen=True)
class MaximizerBudget:
    max_evaluations: int = 200
    restarts: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be at least 1")


class _Rect:
    __slots__ = ("center", "levels", "g")

    def __init__(self, center, levels, g):
        self.center = center
        self.levels = levels
        self.g = g

    def sides(self) -> np.ndarray:
        return 3.0 ** (-self.levels)

    def measure(self) -> float:
        return 0.5 * float(np.linalg.norm(self.sides()))


def _potentially_optimal(rects: list[_Rect], g_min: float) -> list[int]:
    d = np.array([r.measure() for r in rects])
    g = np.array([r.g for r in rects])
    chosen = []
    for j in range(len(rects)):
        same = np.abs(d - d[j]) < 1e-15
        if g[j] > g[same].min() + 1e-15:
            continue
        smaller = d < d[j] - 1e-15
        larger = d > d[j] + 1e-15
        left = (
            np.max((g[j] - g[smaller]) / (d[j] - d[smaller])) if smaller.any() else -np.inf
        )
        right = (
            np.min((g[larger] - g[j]) / (d[larger] - d[j])) if larger.any() else np.inf
        )
        if left > right:
            continue
        if larger.any():
            bound = g[j] - right * d[j]
            if g_min != 0:
                if bound > g_min - DIRECT_EPS * abs(g_min):
                    continue
            elif bound > 0:
                continue
        chosen.append(j)
    if not chosen:
        # keep dividing the largest cell so the search cannot stall
        big = np.argwhere(d == d.max()).ravel()
        chosen = [int(big[np.argmin(g[big])])]
    return chosen


def direct_maximize(objective, dim: int, budget: MaximizerBudget):
    """DIviding RECTangles over [0,1]^dim; deterministic, derivative-free.

    Returns the best point found and its objective value once the evaluation
    budget is exhausted.
    """

    evals = 0

    def g(x: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        return -float(objective(np.asarray(x, dtype=float)))

    center = np.full(dim, 0.5)
    rects = [_Rect(center, np.zeros(dim, dtype=int), g(center))]
    best_x, best_g = center, rects[0].g

    while evals < budget.max_evaluations:
        evals_at_start = evals
        for j in _potentially_optimal(rects, best_g):
            rect = rects[j]
            sides = rect.sides()
            long_dims = np.argwhere(sides >= sides.max() - 1e-15).ravel()
            delta = sides.max() / 3.0
            trials = []
            for i in long_dims:
                if evals + 2 > budget.max_evaluations:
                    break
                lo = rect.center.copy()
                lo[i] -= delta
                hi = rect.center.copy()
                hi[i] += delta
                g_lo, g_hi = g(lo), g(hi)
                trials.append((min(g_lo, g_hi), int(i), lo, g_lo, hi, g_hi))
                for gx, x in ((g_lo, lo), (g_hi, hi)):
                    if gx < best_g:
                        best_g, best_x = gx, x
            # trisect along sampled dimensions, best axis first
            for _, i, lo, g_lo, hi, g_hi in sorted(trials, key=lambda t: t[0]):
                rect.levels = rect.levels.copy()
                rect.levels[i] += 1
                rects.append(_Rect(lo, rect.levels.copy(), g_lo))
                rects.append(_Rect(hi, rect.levels.copy(), g_hi))
            if evals >= budget.max_evaluations:
                break
        if evals == evals_at_start:
            break  # not enough budget left for another pair of evaluations

    return np.clip(best_x, 0.0, 1.0), -best_g


def cmaes_maximize(
    objective,
    dim: int,
    popsize: int = 10,
    generations: int = 20,
    seed: int = 0,
    x0: np.ndarray | None = None,
    sigma0: float = 0.25,
    restarts: int = 2,
):
    """(mu/mu_w, lambda)-CMA-ES on [0,1]^dim with box clipping.

    Deterministic per seed; a degenerate covariance triggers a restart with a
    derived seed, up to `restarts` times.
    """
    if popsize < 4:
        raise ValueError("popsize must be at least 4")
    best_x, best_val = None, -np.inf
    for attempt in range(restarts + 1):
        rng = np.random.default_rng(seed + 7919 * attempt)
        mean = (
            np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
            if (x0 is not None and attempt == 0)
            else rng.uniform(size=dim)
        )
        sigma = sigma0
        mu = popsize // 2
        weights = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        weights /= weights.sum()
        mueff = 1.0 / np.sum(weights**2)
        cc = (4 + mueff / dim) / (dim + 4 + 2 * mueff / dim)
        cs = (mueff + 2) / (dim + mueff + 5)
        c1 = 2 / ((dim + 1.3) ** 2 + mueff)
        cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((dim + 2) ** 2 + mueff))
        damps = 1 + 2 * max(0.0, np.sqrt((mueff - 1) / (dim + 1)) - 1) + cs
        chi_n = np.sqrt(dim) * (1 - 1 / (4 * dim) + 1 / (21 * dim**2))
        pc = np.zeros(dim)
        ps = np.zeros(dim)
        C = np.eye(dim)
        degenerate = False
        for gen in range(generations):
            try:
                eigvals, B = np.linalg.eigh(C)
            except np.linalg.LinAlgError:
                degenerate = True
                break
            if not np.all(np.isfinite(eigvals)) or eigvals.max() <= 0:
                degenerate = True
                break
            eigvals = np.maximum(eigvals, 1e-20)
            D = np.sqrt(eigvals)
            arz = rng.standard_normal((popsize, dim))
            ary = arz @ (B * D).T
            arx = np.clip(mean + sigma * ary, 0.0, 1.0)
            fvals = np.array([float(objective(x)) for x in arx])
            order = np.argsort(-fvals)
            if fvals[order[0]] > best_val:
                best_val = float(fvals[order[0]])
                best_x = arx[order[0]].copy()
            sel = order[:mu]
            y_w = weights @ ((arx[sel] - mean) / sigma)
            mean = mean + sigma * y_w
            inv_sqrt = B @ np.diag(1.0 / D) @ B.T
            ps = (1 - cs) * ps + np.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt @ y_w)
            hsig = float(
                np.linalg.norm(ps) / np.sqrt(1 - (1 - cs) ** (2 * (gen + 1)))
                < (1.4 + 2 / (dim + 1)) * chi_n
            )
            pc = (1 - cc) * pc + hsig * np.sqrt(cc * (2 - cc) * mueff) * y_w
            artmp = (arx[sel] - (mean - sigma * y_w)) / sigma
            C = (
                (1 - c1 - cmu) * C
                + c1 * (np.outer(pc, pc) + (1 - hsig) * cc * (2 - cc) * C)
                + cmu * artmp.T @ (weights[:, None] * artmp)
            )
            sigma = sigma * np.exp((cs / damps) * (np.linalg.norm(ps) / chi_n - 1))
            if not (np.all(np.isfinite(C)) and np.isfinite(sigma) and sigma < 1e6):
                degenerate = True
                break
        if not degenerate:
            break
    return best_x, best_val


def combined_maximize(
    objective,
    dim: int,
    budget: MaximizerBudget,
    popsize: int = 10,
    generations: int = 20,
):
    """DIRECT pass followed by CMA-ES refinement seeded at DIRECT's best."""
    x_d, v_d = direct_maximize(objective, dim, budget)
    x_c, v_c = cmaes_maximize(
        objective,
        dim,
        popsize=popsize,
        generations=generations,
        seed=budget.seed,
        x0=x_d,
        restarts=budget.restarts,
    )
    if v_c > v_d and x_c is not None:
        return x_c, v_c
    return x_d, v_d
