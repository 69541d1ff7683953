"""Objective providers: synthetic multi-fidelity functions, tabular surrogates,
and a line-protocol subprocess bridge for real training jobs."""

from __future__ import annotations

import json
import shlex
import subprocess
import time
from dataclasses import dataclass

import numpy as np

from .space import Dimension, SearchSpace


class EvaluationError(RuntimeError):
    """Signals a failed objective evaluation; strategies penalize and continue."""


@dataclass(frozen=True)
class ObjectiveResult:
    loss: float
    cost: float  # seconds, simulated or measured

    def __post_init__(self):
        if not np.isfinite(self.loss):
            raise ValueError("loss must be finite")
        if self.cost <= 0:
            raise ValueError("cost must be positive")


def branin(x: np.ndarray) -> float:
    """Branin function; global minimum 0.397887 at three known minimizers."""
    x1, x2 = float(x[0]), float(x[1])
    a = 1.0
    b = 5.1 / (4.0 * np.pi**2)
    c = 5.0 / np.pi
    r = 6.0
    s = 10.0
    t = 1.0 / (8.0 * np.pi)
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1 - t) * np.cos(x1) + s


BRANIN_MIN = 0.397887

SYNTHETIC_SPACE = SearchSpace(
    dims=(
        Dimension("x1", -5.0, 10.0),
        Dimension("x2", 0.0, 15.0),
    ),
    s_min=1.0 / 64.0,
)

SYNTHETIC_OPTIMUM = BRANIN_MIN / 300.0


def synthetic_mf_eval(x: np.ndarray, s: float, noise_seed: int = 0) -> ObjectiveResult:
    """Scaled Branin plus a small-subset penalty that vanishes at full size.

    Cost grows linearly in the subset fraction and depends on the first
    coordinate, emulating a configuration-dependent training time.
    """
    x = np.asarray(x, dtype=float)
    if not (-5.0 <= x[0] <= 10.0 and 0.0 <= x[1] <= 15.0):
        raise ValueError("configuration outside the Branin domain")
    if not 0.0 < s <= 1.0:
        raise ValueError("subset fraction must lie in (0, 1]")
    rng = np.random.default_rng(noise_seed)
    # The excess over the global minimum is amplified so that the
    # 0.05-sublevel set at full size covers ~3.5% of the domain; the optimum
    # value itself stays at 0.397887/300.
    f = branin(x)
    loss = (
        (BRANIN_MIN + 8.0 * (f - BRANIN_MIN)) / 300.0
        + 0.3 * (1.0 - s) ** 2 * (1.0 + x[1] / 15.0)
        + rng.normal(0.0, 0.01)
    )
    cost = 0.01 + s * (1.0 + 4.0 * (x[0] + 5.0) / 15.0)
    return ObjectiveResult(loss=float(loss), cost=float(cost))


@dataclass
class TabularSurrogate:
    """Pre-computed (loss, cost) measurements on a parameter grid and a ladder
    of subset sizes, with repeated measurements per cell."""

    axes: list[np.ndarray]  # per-dimension grid values
    sizes: np.ndarray  # ascending, last entry 1.0
    loss: np.ndarray  # (n1, n2, n_sizes, n_repeats)
    cost: np.ndarray  # same shape

    def __post_init__(self):
        self.sizes = np.asarray(self.sizes, dtype=float)
        if self.loss.size == 0:
            raise ValueError("surrogate table must not be empty")
        if not np.all(np.diff(self.sizes) > 0) or self.sizes[-1] != 1.0:
            raise ValueError("sizes must be sorted ascending with last entry 1")

    @property
    def n_repeats(self) -> int:
        return self.loss.shape[-1]

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x1,x2,s,repeat,loss,cost\n")
            for i, a in enumerate(self.axes[0]):
                for j, b in enumerate(self.axes[1]):
                    for k, s in enumerate(self.sizes):
                        for r in range(self.n_repeats):
                            fh.write(
                                f"{a:.10g},{b:.10g},{s:.10g},{r},"
                                f"{self.loss[i, j, k, r]:.10g},"
                                f"{self.cost[i, j, k, r]:.10g}\n"
                            )

    @classmethod
    def load(cls, path) -> "TabularSurrogate":
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            data = np.genfromtxt(path, delimiter=",", skip_header=1)
        if data.size == 0:
            raise ValueError(f"empty surrogate table: {path}")
        a1 = np.unique(data[:, 0])
        a2 = np.unique(data[:, 1])
        sizes = np.unique(data[:, 2])
        n_rep = int(data[:, 3].max()) + 1
        shape = (len(a1), len(a2), len(sizes), n_rep)
        loss = np.full(shape, np.nan)
        cost = np.full(shape, np.nan)
        i = np.searchsorted(a1, data[:, 0])
        j = np.searchsorted(a2, data[:, 1])
        k = np.searchsorted(sizes, data[:, 2])
        r = data[:, 3].astype(int)
        loss[i, j, k, r] = data[:, 4]
        cost[i, j, k, r] = data[:, 5]
        if np.any(np.isnan(loss)):
            raise ValueError("surrogate table has missing cells")
        return cls(axes=[a1, a2], sizes=sizes, loss=loss, cost=cost)


SURROGATE_SPACE = SearchSpace(
    dims=(
        Dimension("x1", -10.0, 10.0),
        Dimension("x2", -10.0, 10.0),
    ),
    s_min=1.0 / 512.0,
)


def make_svm_like_surrogate(seed: int = 0) -> TabularSurrogate:
    """Calibrated synthetic stand-in for a pre-measured 20x20 classifier grid.

    Bad regions plateau near loss 0.9 at every subset size; the best cell
    reaches 0.014 on the full data; ranks are strongly preserved across sizes.
    """
    rng = np.random.default_rng(seed)
    n_grid = 20
    axes = [np.linspace(-10.0, 10.0, n_grid), np.linspace(-10.0, 10.0, n_grid)]
    sizes = np.array([1 / 512, 1 / 256, 1 / 128, 1 / 64, 1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0])
    n_rep = 10
    c_star, g_star = axes[0][7], axes[1][12]
    A, B = np.meshgrid(axes[0], axes[1], indexing="ij")
    depth = 0.9 - 0.014
    base = 0.9 - depth * np.exp(
        -(((A - c_star) ** 2) / (2 * 3.0**2) + ((B - g_star) ** 2) / (2 * 3.0**2))
    )
    loss = np.empty((n_grid, n_grid, len(sizes), n_rep))
    cost = np.empty_like(loss)
    for k, s in enumerate(sizes):
        # good configurations degrade on small subsets, bad ones stay at 0.9
        mean_loss = base + 0.25 * (0.9 - base) * (1.0 - s) ** 2
        mean_cost = 0.05 + s * (2.0 + 0.5 * ((A + 10.0) / 4.0) ** 2)
        for r in range(n_rep):
            noisy = mean_loss + rng.normal(0.0, 0.003, size=base.shape)
            loss[:, :, k, r] = np.clip(noisy, 0.0, 1.0)
            cost[:, :, k, r] = mean_cost * np.exp(rng.normal(0.0, 0.05, size=base.shape))
    return TabularSurrogate(axes=axes, sizes=sizes, loss=loss, cost=cost)


def surrogate_eval(
    table: TabularSurrogate, x: np.ndarray, s: float, seed: int = 0
) -> ObjectiveResult:
    """Snap to the nearest grid cell (log-space distance for the size axis,
    ties to the smaller size) and return one stored repeat, chosen uniformly."""
    x = np.asarray(x, dtype=float)
    i = int(np.argmin(np.abs(table.axes[0] - x[0])))
    j = int(np.argmin(np.abs(table.axes[1] - x[1])))
    dist = np.abs(np.log(table.sizes) - np.log(s))
    k = int(np.flatnonzero(dist <= dist.min() + 1e-12)[0])
    rng = np.random.default_rng(seed)
    r = int(rng.integers(table.n_repeats))
    return ObjectiveResult(
        loss=float(table.loss[i, j, k, r]), cost=float(table.cost[i, j, k, r])
    )


def subprocess_eval(
    command: str,
    x: np.ndarray,
    s: float,
    timeout: float,
    names: list[str] | None = None,
    seed: int = 0,
) -> ObjectiveResult:
    """Evaluate via a child process speaking one JSON line per direction.

    stdin:  {"configuration": {...}, "subset_fraction": s, "seed": n}
    stdout: {"loss": y, "cost_seconds": z}   (cost optional; wall time is used
    when absent). Nonzero exit, malformed reply, or timeout raise
    EvaluationError.
    """
    x = np.asarray(x, dtype=float)
    names = names or [f"x{i + 1}" for i in range(len(x))]
    payload = {
        "configuration": {n: float(v) for n, v in zip(names, x)},
        "subset_fraction": float(s),
        "seed": int(seed),
    }
    start = time.monotonic()
    try:
        proc = subprocess.run(
            shlex.split(command),
            input=json.dumps(payload) + "\n",
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as err:
        raise EvaluationError(f"evaluation timed out after {timeout}s") from err
    wall = time.monotonic() - start
    if proc.returncode != 0:
        raise EvaluationError(f"child exited with status {proc.returncode}")
    try:
        reply = json.loads(proc.stdout.strip().splitlines()[0])
        loss = float(reply["loss"])
    except (IndexError, KeyError, ValueError, json.JSONDecodeError) as err:
        raise EvaluationError(f"malformed reply: {proc.stdout!r}") from err
    cost = float(reply.get("cost_seconds", wall))
    return ObjectiveResult(loss=loss, cost=max(cost, 1e-9))
