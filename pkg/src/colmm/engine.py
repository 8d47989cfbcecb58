"""Monte Carlo driver: keyed normal increments, scheduling, estimators.

Reproducibility contract
------------------------
The Brownian increment of factor f at global step s on path p is a pure
function of (seed, p, s, f): path p owns the counter-based stream keyed by
(seed, p) and step s consumes words [s*d, (s+1)*d) of it.  Workers never
share generator state, and paths are partitioned in contiguous blocks whose
results are merged in block order, so the estimate is bit-identical for any
worker count.

Antithetic sampling pairs path p with a mirror path driven by the negated
increments of the same stream.  The estimator then averages pair means and
its standard error is the sample stdev of the pair means over sqrt(pairs);
the reported path count stays at the physical 2 * pairs.

With every volatility at zero all paths coincide; the estimator returns the
common value with a standard error of exactly 0.0 rather than trusting
floating-point averaging of identical numbers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .curves import CurveSet
from .dynamics import PathState, VolatilitySpec, evolve_step
from .errors import ConfigurationError
from .tenor import TenorStructure

WORKERS_ENV_VAR = "COLMM_WORKERS"

# Residuals below this relative size count as roundoff when a deterministic
# estimate (SE exactly zero) is scored against its target.
_EXACT_RTOL = 1e-12

_MAX_SEED = 2 ** 64


@dataclass
class Model:
    """Immutable simulation inputs: grid, initial curves, vols, base currency.

    The base currency fixes the measure: deflated prices are computed with
    the base currency's (pair) collateral accounts as numeraires.
    """

    ts: TenorStructure
    curves: CurveSet
    vols: VolatilitySpec
    base: str

    def __post_init__(self):
        if self.base not in self.curves.discounts:
            raise ConfigurationError(
                f"base currency {self.base!r} has no discount curve"
            )
        if self.vols.n_buckets != self.ts.n_buckets:
            raise ConfigurationError(
                f"volatility spec has {self.vols.n_buckets} buckets, "
                f"grid has {self.ts.n_buckets}"
            )


@dataclass
class SimulationConfig:
    n_paths: int = 100_000
    substeps: int = 1
    seed: int = 42
    antithetic: bool = True
    workers: int | None = None

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError(f"need at least 2 paths, got {self.n_paths}")
        if self.antithetic and self.n_paths % 2:
            raise ValueError(
                f"antithetic sampling needs an even path count, got {self.n_paths}"
            )
        if self.substeps < 1:
            raise ValueError(f"substeps must be >= 1, got {self.substeps}")
        if not 0 <= self.seed < _MAX_SEED:
            raise ValueError(f"seed must fit in a uint64, got {self.seed}")
        if self.workers is not None and self.workers < 1:
            raise ValueError(f"worker count must be >= 1, got {self.workers}")

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        raw = os.environ.get(WORKERS_ENV_VAR)
        if raw is None:
            return 1
        try:
            n = int(raw)
        except ValueError:
            raise ConfigurationError(f"{WORKERS_ENV_VAR}={raw!r} is not an integer")
        if n < 1:
            raise ConfigurationError(f"{WORKERS_ENV_VAR} must be >= 1, got {n}")
        return n


@dataclass(frozen=True)
class PriceEstimate:
    """MC estimate with its sampling error; SE == 0 marks a deterministic run."""

    mean: float
    std_error: float
    n_paths: int
    currency: str

    def __post_init__(self):
        if self.std_error < 0.0:
            raise ValueError("standard error cannot be negative")

    def z_score(self, target: float) -> float:
        """Studentized residual against a known target value.

        For a deterministic estimate (SE exactly zero) the score is 0 when
        the residual is pure roundoff relative to the target, else signed
        infinity.
        """
        resid = self.mean - target
        if self.std_error > 0.0:
            return resid / self.std_error
        if abs(resid) <= _EXACT_RTOL * max(1.0, abs(target)):
            return 0.0
        return float(np.copysign(np.inf, resid))


@dataclass(frozen=True)
class GridPayoff:
    """Payoff amount fixed at a grid node, in `currency`, margined in `collateral`.

    fn maps the PathState at the maturity node to per-path amounts.  The
    engine converts through spot FX when the payment currency is not the
    model's base, deflates by the base pair account accruing c + y of
    (base, collateral), and reports the estimate in `currency`.
    """

    fn: Callable[[PathState], np.ndarray]
    maturity: float
    currency: str
    collateral: str


def _uniforms(raw: np.ndarray) -> np.ndarray:
    # Top 53 bits, centered in the bin: strictly inside (0, 1).
    return ((raw >> np.uint64(11)) + 0.5) * 2.0 ** -53


def gaussian_increments(seed: int, path: int, step: int, n_factors: int) -> np.ndarray:
    """Standard normal increments of one (path, step), as the engine draws them.

    Pure function of its arguments; workers calling it in any order or
    partition reproduce the same numbers.
    """
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must fit in a uint64, got {seed}")
    if path < 0 or step < 0:
        raise ValueError(f"path and step indices must be >= 0, got ({path},{step})")
    if n_factors < 1:
        raise ValueError(f"need at least one factor, got {n_factors}")
    bg = Philox(key=np.array([seed, path], dtype=np.uint64))
    raw = bg.random_raw((step + 1) * n_factors)[step * n_factors:]
    return ndtri(_uniforms(raw))


def _block_normals(seed: int, path_lo: int, path_hi: int,
                   n_steps: int, n_factors: int) -> np.ndarray:
    """Normals for a contiguous path block, shape (paths, steps, factors).

    Rebuilding a Philox per path dominates runtime at large path counts, so
    one generator is re-keyed in place; output is bit-identical to fresh
    construction per path.
    """
    n_paths = path_hi - path_lo
    words = n_steps * n_factors
    out = np.empty((n_paths, words))
    if words == 0:
        return out.reshape(n_paths, n_steps, n_factors)
    bg = Philox(key=np.array([seed, 0], dtype=np.uint64))
    for row, path in enumerate(range(path_lo, path_hi)):
        state = bg.state
        state["state"]["key"][:] = (seed, path)
        state["state"]["counter"][:] = 0
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        bg.state = state
        out[row] = ndtri(_uniforms(bg.random_raw(words)))
    return out.reshape(n_paths, n_steps, n_factors)


def _partition(n_units: int, n_workers: int) -> list[tuple[int, int]]:
    """Contiguous near-equal blocks [lo, hi); drops empty trailing blocks."""
    n_workers = min(n_workers, n_units)
    bounds = np.linspace(0, n_units, n_workers + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _simulate_block(model: Model, cfg: SimulationConfig,
                    payoffs: dict[str, GridPayoff], by_node: dict[int, list[str]],
                    n_last: int, unit_lo: int, unit_hi: int,
                    half_variance_sign: float) -> dict[str, np.ndarray]:
    """Evolve one block of paths; return per-unit estimator values by payoff.

    Under antithetic sampling a unit is a (path, mirror) pair and the
    returned values are pair means, so concatenating block results in unit
    order is independent of the partition.
    """
    ts, vols, base = model.ts, model.vols, model.base
    n_units = unit_hi - unit_lo
    n_phys = 2 * n_units if cfg.antithetic else n_units
    n_steps = n_last * cfg.substeps
    normals = _block_normals(cfg.seed, unit_lo, unit_hi, n_steps, vols.n_factors)
    state = PathState.initial(ts, model.curves, vols, base, n_phys)

    out: dict[str, np.ndarray] = {}

    def settle(name: str) -> None:
        p = payoffs[name]
        amounts = np.asarray(p.fn(state), dtype=float)
        if amounts.shape != (n_phys,):
            raise ConfigurationError(
                f"payoff {name!r} returned shape {amounts.shape}, "
                f"expected ({n_phys},)"
            )
        numeraire = state.pair_account(base, p.collateral)
        deflated = amounts * state.fx_rate(base, p.currency) / numeraire
        if p.currency != base:
            deflated /= model.curves.fx_rate(base, p.currency)
        if cfg.antithetic:
            deflated = 0.5 * (deflated[:n_units] + deflated[n_units:])
        out[name] = deflated

    for name in by_node.get(0, []):
        settle(name)
    for node in range(1, n_last + 1):
        dt = ts.deltas[node - 1] / cfg.substeps
        root_dt = np.sqrt(dt)
        for sub in range(cfg.substeps):
            step = (node - 1) * cfg.substeps + sub
            dw = root_dt * normals[:, step, :]
            if cfg.antithetic:
                dw = np.concatenate([dw, -dw], axis=0)
            evolve_step(state, dt, dw, vols, ts, half_variance_sign)
        for name in by_node.get(node, []):
            settle(name)
    return out


def _estimate(values: np.ndarray, n_paths: int, currency: str) -> PriceEstimate:
    if np.all(values == values[0]):
        return PriceEstimate(float(values[0]), 0.0, n_paths, currency)
    se = float(np.std(values, ddof=1) / np.sqrt(values.size))
    return PriceEstimate(float(np.mean(values)), se, n_paths, currency)


def simulate_many(model: Model, cfg: SimulationConfig,
                  payoffs: dict[str, GridPayoff],
                  half_variance_sign: float = 1.0) -> dict[str, PriceEstimate]:
    """Estimate several payoffs from one shared set of paths.

    All payoffs ride the same scenarios, settling at their own maturity
    nodes while the block evolves to the farthest one.
    """
    if not payoffs:
        raise ValueError("no payoffs given")
    by_node: dict[int, list[str]] = {}
    for name, p in payoffs.items():
        node = model.ts.node_index(p.maturity)
        by_node.setdefault(node, []).append(name)
    n_last = max(by_node)
    n_units = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths
    blocks = _partition(n_units, cfg.resolved_workers())

    def run(block):
        lo, hi = block
        return _simulate_block(model, cfg, payoffs, by_node, n_last, lo, hi,
                               half_variance_sign)

    if len(blocks) == 1:
        results = [run(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            results = list(pool.map(run, blocks))

    merged = {}
    for name, p in payoffs.items():
        values = np.concatenate([r[name] for r in results])
        merged[name] = _estimate(values, cfg.n_paths, p.currency)
    return merged


def simulate(model: Model, cfg: SimulationConfig, payoff: GridPayoff,
             half_variance_sign: float = 1.0) -> PriceEstimate:
    """Estimate E[payoff / numeraire], reported in the payoff's currency."""
    return simulate_many(model, cfg, {"payoff": payoff},
                         half_variance_sign)["payoff"]
