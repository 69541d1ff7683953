"""Optimization loops: subset-size-aware BO, vanilla BO (EI/ES), discrete-task
BO, Hyperband, and random search, with shared budget accounting."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .acquisition import (
    InformationGainCalculator,
    ei_at,
    fabolas_acquisition,
    mtbo_acquisition,
    sample_representers,
)
from .benchmarks import EvaluationError, ObjectiveResult
from .gp import EnvModel, GpEnsemble, MaternModel, ObservationSet, TaskModel
from .maximizer import MaximizerBudget, combined_maximize
from .mcmc import sample_hyperposterior
from .space import SearchSpace


@dataclass(frozen=True)
class Budget:
    """Stopping rule: total (simulated or wall-clock) seconds."""

    total_seconds: float
    mode: str = "simulated"

    def __post_init__(self):
        if self.total_seconds <= 0:
            raise ValueError("budget must be positive")
        if self.mode not in ("simulated", "wall"):
            raise ValueError("mode must be 'simulated' or 'wall'")


@dataclass(frozen=True)
class StrategyParams:
    """Shared knobs for the model-based strategies."""

    n_init: int = 10
    init_subset_sizes: tuple = (1 / 64, 1 / 32, 1 / 16, 1 / 8)
    n_init_vanilla: int = 5
    n_init_mtbo: int = 6
    n_walkers: int = 20
    n_mcmc_samples: int = 20
    burn_in: int = 100
    n_rep: int = 50
    n_draws: int = 500
    n_fantasies: int = 10
    direct_evals: int = 200
    cma_popsize: int = 10
    cma_generations: int = 20
    max_evaluations: int | None = None
    # Overhead per iteration charged against the budget. None measures real
    # wall time (wall-clock runs); a fixed value keeps simulated runs
    # bit-reproducible.
    overhead_charge: float | None = 0.0


@dataclass
class ExperimentRecord:
    """Per-run log: one row per objective evaluation plus the incumbent trace."""

    strategy: str
    seed: int
    rows: list[dict] = field(default_factory=list)

    @property
    def elapsed(self) -> float:
        return self.rows[-1]["elapsed_seconds"] if self.rows else 0.0

    def incumbent_trace(self) -> list[tuple[float, list, float]]:
        return [
            (r["elapsed_seconds"], r["incumbent"], r["predicted_incumbent_loss"])
            for r in self.rows
            if r["incumbent"] is not None
        ]


def _derived_seed(seed: int, iteration: int, salt: int) -> int:
    return (seed * 1_000_003 + iteration * 9_176 + salt * 101) % (2**31 - 1)


class _Run:
    """Mutable run state: history, clock, and row emission."""

    def __init__(self, strategy, space, budget, objective, seed, params, on_row=None):
        self.space = space
        self.budget = budget
        self.objective = objective
        self.seed = seed
        self.params = params
        self.on_row = on_row
        self.record = ExperimentRecord(strategy=strategy, seed=seed)
        self.obs = ObservationSet.empty(space.n_dims)
        self.elapsed = 0.0
        self.iteration = 0

    def within_budget(self) -> bool:
        cap = self.params.max_evaluations
        if cap is not None and self.iteration >= cap:
            return False
        return self.elapsed < self.budget.total_seconds

    def evaluate(self, x_raw: np.ndarray, s: float) -> tuple[float, float]:
        """Run the objective, mapping failures to a penalized loss."""
        eval_seed = _derived_seed(self.seed, self.iteration, 7)
        t0 = time.perf_counter()
        try:
            res: ObjectiveResult = self.objective(x_raw, s, eval_seed)
            return res.loss, res.cost
        except EvaluationError:
            wall = time.perf_counter() - t0
            if len(self.obs):
                spread = float(np.std(self.obs.y))
                y = float(np.max(self.obs.y)) + (spread if spread > 0 else 1.0)
            else:
                y = 1.0
            cost = max(wall, 1e-3) if self.budget.mode == "wall" else 1e-3
            return y, cost

    def commit(self, x_unit, env, s, y, z, overhead, incumbent_unit, pred_loss):
        self.obs = self.obs.appended(x_unit, env, y, z, overhead)
        self.elapsed += z + overhead
        self.iteration += 1
        row = {
            "iteration": self.iteration,
            "x": [float(v) for v in self.space.from_unit(x_unit)],
            "s": float(s),
            "y": float(y),
            "z": float(z),
            "overhead_seconds": float(overhead),
            "elapsed_seconds": float(self.elapsed),
            "incumbent": (
                [float(v) for v in self.space.from_unit(incumbent_unit)]
                if incumbent_unit is not None
                else None
            ),
            "predicted_incumbent_loss": (
                float(pred_loss) if pred_loss is not None else None
            ),
        }
        self.record.rows.append(row)
        if self.on_row:
            self.on_row(row)


class _Overhead:
    """Measures wall overhead or charges a fixed deterministic amount."""

    def __init__(self, charge: float | None):
        self.charge = charge
        self._t0 = time.perf_counter()

    def take(self) -> float:
        if self.charge is not None:
            return self.charge
        now = time.perf_counter()
        dt = now - self._t0
        self._t0 = now
        return dt


def initial_design(
    space: SearchSpace, k: int, subset_sizes, seed: int
) -> list[tuple[np.ndarray, float]]:
    """k uniform configurations, cycling through the given subset sizes."""
    sizes = list(subset_sizes)
    if not sizes:
        raise ValueError("subset_sizes must be non-empty")
    if any(s < space.s_min - 1e-12 or s > 1.0 for s in sizes):
        raise ValueError("subset sizes must lie in [s_min, 1]")
    rng = np.random.default_rng(seed)
    return [(rng.uniform(size=space.n_dims), sizes[i % len(sizes)]) for i in range(k)]


def select_incumbent(loss_ensemble: GpEnsemble, observed_xs: np.ndarray) -> np.ndarray:
    """Observed configuration minimizing the ensemble-averaged predicted loss
    at deployment conditions; ties break to the lexicographically smallest."""
    observed_xs = np.atleast_2d(observed_xs)
    if observed_xs.shape[0] == 0:
        raise ValueError("need at least one observed configuration")
    Q = loss_ensemble.model.augment_full(observed_xs)
    means = loss_ensemble.mean_prediction(Q)
    best = means.min()
    candidates = observed_xs[means <= best + 1e-15]
    order = np.lexsort(candidates.T[::-1])
    return candidates[order[0]]


def _best_observed_incumbent(run: _Run):
    if len(run.obs) == 0:
        return None, None
    i = int(np.argmin(run.obs.y))
    return run.obs.X[i], float(run.obs.y[i])


def run_fabolas(
    objective,
    space: SearchSpace,
    budget: Budget,
    params: StrategyParams = StrategyParams(),
    seed: int = 0,
    on_row=None,
) -> ExperimentRecord:
    """Subset-size-aware BO: loss and log-cost GPs over (x, s), candidates
    chosen by information gain about the full-size minimizer per second."""
    d = space.n_dims
    run = _Run("fabolas", space, budget, objective, seed, params, on_row)

    for x_unit, s in initial_design(space, params.n_init, params.init_subset_sizes, seed):
        if not run.within_budget():
            break
        y, z = run.evaluate(space.from_unit(x_unit), s)
        inc, inc_y = _best_observed_incumbent(run)
        if inc is None or y < inc_y:
            inc, inc_y = x_unit, y
        run.commit(x_unit, space.s_to_unit(s), s, y, z, 0.0, inc, inc_y)

    loss_model = EnvModel(d, "loss")
    cost_model = EnvModel(d, "cost")
    prev_overhead = 0.0
    while run.within_budget() and len(run.obs) >= 2:
        it = run.iteration
        clock = _Overhead(params.overhead_charge)
        loss_ens = sample_hyperposterior(
            run.obs, loss_model, "loss",
            n_walkers=params.n_walkers, n_samples=params.n_mcmc_samples,
            burn_in=params.burn_in, seed=_derived_seed(seed, it, 1),
            normalize=True,
        )
        cost_ens = sample_hyperposterior(
            run.obs, cost_model, "log-cost",
            n_walkers=params.n_walkers, n_samples=params.n_mcmc_samples,
            burn_in=params.burn_in, seed=_derived_seed(seed, it, 2),
            normalize=True,
        )
        reps = sample_representers(
            loss_ens, space, params.n_rep, _derived_seed(seed, it, 3)
        )
        calc = InformationGainCalculator(
            loss_ens, reps, n_draws=params.n_draws,
            n_fantasies=params.n_fantasies, seed=_derived_seed(seed, it, 4),
        )

        def acq(u):
            return fabolas_acquisition(
                u[:d], float(u[d]), loss_ens, cost_ens, prev_overhead, reps,
                gain_calc=calc,
            )

        u_best, _ = combined_maximize(
            acq, d + 1,
            MaximizerBudget(params.direct_evals, seed=_derived_seed(seed, it, 5)),
            popsize=params.cma_popsize, generations=params.cma_generations,
        )
        overhead = clock.take()
        s = space.s_from_unit(float(u_best[d]))
        x_unit = u_best[:d]
        y, z = run.evaluate(space.from_unit(x_unit), s)
        all_xs = np.vstack([run.obs.X, x_unit[None, :]])
        incumbent = select_incumbent(loss_ens, all_xs)
        pred = float(
            loss_ens.mean_prediction(loss_model.augment_full(incumbent[None, :]))[0]
        )
        run.commit(x_unit, space.s_to_unit(s), s, y, z, overhead, incumbent, pred)
        prev_overhead = overhead
    return run.record


def run_vanilla_bo(
    acq: str,
    objective,
    space: SearchSpace,
    budget: Budget,
    params: StrategyParams = StrategyParams(),
    seed: int = 0,
    on_row=None,
) -> ExperimentRecord:
    """Standard BO on the full dataset only, with EI or information gain."""
    if acq not in ("ei", "es"):
        raise ValueError("acq must be 'ei' or 'es'")
    d = space.n_dims
    run = _Run(acq, space, budget, objective, seed, params, on_row)
    model = MaternModel(d)

    for x_unit, _ in initial_design(space, params.n_init_vanilla, (1.0,), seed):
        if not run.within_budget():
            break
        y, z = run.evaluate(space.from_unit(x_unit), 1.0)
        inc, inc_y = _best_observed_incumbent(run)
        if inc is None or y < inc_y:
            inc, inc_y = x_unit, y
        run.commit(x_unit, 1.0, 1.0, y, z, 0.0, inc, inc_y)

    while run.within_budget() and len(run.obs) >= 2:
        it = run.iteration
        clock = _Overhead(params.overhead_charge)
        ens = sample_hyperposterior(
            run.obs, model, "loss",
            n_walkers=params.n_walkers, n_samples=params.n_mcmc_samples,
            burn_in=params.burn_in, seed=_derived_seed(seed, it, 1),
            normalize=True,
        )
        if acq == "ei":
            f_min = float(np.min(run.obs.y))

            def acq_fn(u):
                return float(ei_at(ens, u[None, :], f_min)[0])

        else:
            reps = sample_representers(
                ens, space, params.n_rep, _derived_seed(seed, it, 3)
            )
            calc = InformationGainCalculator(
                ens, reps, n_draws=params.n_draws,
                n_fantasies=params.n_fantasies, seed=_derived_seed(seed, it, 4),
            )

            def acq_fn(u):
                return calc(u)

        u_best, _ = combined_maximize(
            acq_fn, d,
            MaximizerBudget(params.direct_evals, seed=_derived_seed(seed, it, 5)),
            popsize=params.cma_popsize, generations=params.cma_generations,
        )
        overhead = clock.take()
        y, z = run.evaluate(space.from_unit(u_best), 1.0)
        all_xs = np.vstack([run.obs.X, u_best[None, :]])
        incumbent = select_incumbent(ens, all_xs)
        pred = float(ens.mean_prediction(model.augment_full(incumbent[None, :]))[0])
        run.commit(u_best, 1.0, 1.0, y, z, overhead, incumbent, pred)
    return run.record


def run_mtbo(
    objective,
    space: SearchSpace,
    budget: Budget,
    aux_sizes=(0.25,),
    params: StrategyParams = StrategyParams(),
    seed: int = 0,
    on_row=None,
) -> ExperimentRecord:
    """Discrete-task BO: auxiliary subset sizes plus the full dataset as the
    target task, related through a sampled task covariance."""
    aux = sorted(aux_sizes)
    if not aux:
        raise ValueError("aux_sizes must be non-empty")
    tasks = aux + [1.0]
    n_tasks = len(tasks)
    target = n_tasks - 1
    d = space.n_dims
    run = _Run("mtbo", space, budget, objective, seed, params, on_row)
    loss_model = TaskModel(d, n_tasks, target)
    cost_model = TaskModel(d, n_tasks, target)

    # Paired design: each initial configuration is run on every task, which
    # makes the inter-task correlation identifiable from the start.
    rng = np.random.default_rng(seed)
    init_configs = rng.uniform(size=(max(params.n_init_mtbo // n_tasks, 1), d))
    for i in range(params.n_init_mtbo):
        if not run.within_budget():
            break
        t = i % n_tasks
        x_unit = init_configs[(i // n_tasks) % len(init_configs)]
        y, z = run.evaluate(space.from_unit(x_unit), tasks[t])
        inc, inc_y = _best_observed_incumbent(run)
        if inc is None or y < inc_y:
            inc, inc_y = x_unit, y
        run.commit(x_unit, float(t), tasks[t], y, z, 0.0, inc, inc_y)

    while run.within_budget() and len(run.obs) >= 2:
        it = run.iteration
        clock = _Overhead(params.overhead_charge)
        loss_ens = sample_hyperposterior(
            run.obs, loss_model, "loss",
            n_walkers=params.n_walkers, n_samples=params.n_mcmc_samples,
            burn_in=params.burn_in, seed=_derived_seed(seed, it, 1),
            normalize=True,
        )
        cost_ens = sample_hyperposterior(
            run.obs, cost_model, "log-cost",
            n_walkers=params.n_walkers, n_samples=params.n_mcmc_samples,
            burn_in=params.burn_in, seed=_derived_seed(seed, it, 2),
            normalize=True,
        )
        reps = sample_representers(
            loss_ens, space, params.n_rep, _derived_seed(seed, it, 3)
        )
        calc = InformationGainCalculator(
            loss_ens, reps, n_draws=params.n_draws,
            n_fantasies=params.n_fantasies, seed=_derived_seed(seed, it, 4),
        )
        best_u, best_t, best_val = None, target, -np.inf
        per_task_evals = max(params.direct_evals // n_tasks, 20)
        for t in range(n_tasks):
            def acq_fn(u, _t=t):
                return mtbo_acquisition(
                    u, _t, loss_ens, cost_ens, reps, gain_calc=calc
                )

            u_t, v_t = combined_maximize(
                acq_fn, d,
                MaximizerBudget(per_task_evals, seed=_derived_seed(seed, it, 5 + t)),
                popsize=params.cma_popsize, generations=params.cma_generations,
            )
            if v_t > best_val:
                best_u, best_t, best_val = u_t, t, v_t
        overhead = clock.take()
        y, z = run.evaluate(space.from_unit(best_u), tasks[best_t])
        all_xs = np.vstack([run.obs.X, best_u[None, :]])
        incumbent = select_incumbent(loss_ens, all_xs)
        pred = float(
            loss_ens.mean_prediction(loss_model.augment_full(incumbent[None, :]))[0]
        )
        run.commit(best_u, float(best_t), tasks[best_t], y, z, overhead, incumbent, pred)
    return run.record


def hyperband_brackets(R: float, eta: float) -> list[tuple[int, float]]:
    """(configuration count, initial resource) per bracket, most aggressive first."""
    if R < eta:
        raise ValueError("R must be at least eta")
    s_max = int(np.floor(np.log(R) / np.log(eta)))
    out = []
    for b in range(s_max, -1, -1):
        n = int(np.ceil((s_max + 1) / (b + 1) * eta**b))
        r = R * eta ** (-b)
        out.append((n, r))
    return out


def successive_halving_rounds(n: int, r: float, R: float, eta: float) -> list[tuple[int, float]]:
    """(survivor count, resource) per round of one bracket."""
    rounds = []
    while r <= R * (1 + 1e-9):
        rounds.append((n, min(r, R)))
        if n < eta and r >= R * (1 - 1e-9):
            break
        n = max(int(np.floor(n / eta)), 1)
        r = r * eta
    return rounds


def run_hyperband(
    objective,
    space: SearchSpace,
    R: float,
    eta: float,
    budget: Budget,
    seed: int = 0,
    params: StrategyParams = StrategyParams(),
    on_row=None,
) -> ExperimentRecord:
    """Bandit baseline: successive halving over random configurations with
    resources mapped to subset fractions r/R."""
    run = _Run("hyperband", space, budget, objective, seed, params, on_row)
    rng = np.random.default_rng(seed)
    best_full, best_full_y = None, np.inf
    while run.within_budget():
        progressed = False
        for n0, r0 in hyperband_brackets(R, eta):
            configs = rng.uniform(size=(n0, space.n_dims))
            losses = np.full(n0, np.inf)
            for n_i, r_i in successive_halving_rounds(n0, r0, R, eta):
                order = np.argsort(losses, kind="stable")[:n_i]
                configs = configs[order]
                losses = np.empty(len(configs))
                s_frac = max(min(r_i / R, 1.0), space.s_min)
                full = r_i >= R * (1 - 1e-9)
                for idx, x_unit in enumerate(configs):
                    if not run.within_budget():
                        return run.record
                    y, z = run.evaluate(space.from_unit(x_unit), s_frac)
                    losses[idx] = y
                    progressed = True
                    if full and y < best_full_y:
                        best_full, best_full_y = x_unit.copy(), y
                    run.commit(
                        x_unit, s_frac, s_frac, y, z, 0.0, best_full,
                        best_full_y if best_full is not None else None,
                    )
        if not progressed:
            break
    return run.record


def run_random_search(
    objective,
    space: SearchSpace,
    budget: Budget,
    seed: int = 0,
    params: StrategyParams = StrategyParams(),
    on_row=None,
) -> ExperimentRecord:
    """Uniform random configurations evaluated on the full dataset."""
    run = _Run("random", space, budget, objective, seed, params, on_row)
    rng = np.random.default_rng(seed)
    best, best_y = None, np.inf
    while run.within_budget():
        x_unit = rng.uniform(size=space.n_dims)
        y, z = run.evaluate(space.from_unit(x_unit), 1.0)
        if y < best_y:
            best, best_y = x_unit, y
        run.commit(x_unit, 1.0, 1.0, y, z, 0.0, best, best_y)
    return run.record
