"""Monte Carlo model of a full node's synchronization request queue.

Arrivals and responses are independent Poisson counts per unit time slot.
The module tracks both the reflected backlog (Lindley recursion) and the
unreflected cumulative arrivals-minus-responses walk, and estimates the
probability that the running supremum of the walk exceeds a capacity
threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .seeding import derive_seed, make_rng

# The plain sequential-search inversion is exact and fast for small rates;
# beyond this the CDF start point underflows and the windowed table is used.
MAX_SCALAR_RATE = 30.0
# Table-size guard for the windowed CDF (table length grows linearly in rate).
MAX_VECTOR_RATE = 50_000.0

# Number of walks vectorized together inside estimate_tail.  Results are
# independent of this value because every run has its own seeded stream.
_WALK_BATCH = 256
# Cap on uniforms held per batch (doubles); long horizons shrink the batch.
_BATCH_BUDGET = 8_000_000


@dataclass(frozen=True)
class RateParams:
    """Mean request arrivals (lam) and responses (mu) per slot; mu > lam."""

    lam: float
    mu: float

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"arrival rate must be positive, got {self.lam}")
        if not self.mu > self.lam:
            raise ValueError(
                f"response rate must exceed arrival rate, got mu={self.mu} lam={self.lam}"
            )


@dataclass(frozen=True)
class WalkResult:
    """Supremum of the cumulative backlog walk over a finite horizon."""

    sup_backlog: int
    horizon: int


@dataclass(frozen=True)
class TailEstimate:
    """Binomial estimate of P(sup backlog > gamma) on a shared run set."""

    gamma: float
    runs: int
    hits: int
    p_hat: float
    std_err: float


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares fit of -ln(p_hat) against gamma."""

    slope: float
    intercept: float
    n_used: int
    n_excluded: int


@lru_cache(maxsize=None)
def _poisson_cdf(rate: float) -> np.ndarray:
    """Partial sums F_k = P(X <= k) for X ~ Poisson(rate).

    For small rates the sums are accumulated with the classic recurrence
    p_{k+1} = p_k * rate/(k+1) starting from exp(-rate); for large rates
    exp(-rate) underflows, so each term is computed in log space instead.
    Accumulation stops once the partial sum is a floating-point fixed point,
    which for the supported rates happens at or next to 1.0.
    """
    if rate <= MAX_SCALAR_RATE:
        p = math.exp(-rate)
        total = p
        sums = [total]
        k = 0
        while True:
            k += 1
            p *= rate / k
            new_total = total + p
            if new_total == total and k > rate:
                break
            total = new_total
            sums.append(total)
        return np.array(sums)
    hi = int(rate + 12.0 * math.sqrt(rate) + 20.0)
    log_rate = math.log(rate)
    log_pmf = [k * log_rate - rate - math.lgamma(k + 1) for k in range(hi + 1)]
    return np.cumsum(np.exp(log_pmf))


@lru_cache(maxsize=None)
def _poisson_cdf_scalar(rate: float) -> tuple[float, ...]:
    return tuple(_poisson_cdf(rate))


def sample_poisson(rate: float, rng: np.random.Generator) -> int:
    """One Poisson(rate) draw by inversion with sequential search.

    A single uniform is taken from `rng` and the CDF partial sums are
    scanned for the smallest k with u <= F_k, so the result is a pure
    function of the stream state.
    """
    if not 0 < rate <= MAX_SCALAR_RATE:
        raise ValueError(
            f"rate must be in (0, {MAX_SCALAR_RATE}] for scalar sampling, got {rate}"
        )
    cdf = _poisson_cdf_scalar(rate)
    u = float(rng.random())
    k = 0
    last = len(cdf) - 1
    while u > cdf[k] and k < last:
        k += 1
    return k


def poisson_counts(rate: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n Poisson(rate) draws: same inversion as sample_poisson, vectorized.

    Consumes n uniforms from `rng` in stream order, so for rates within the
    scalar regime the result matches n successive sample_poisson calls.
    """
    if not 0 < rate <= MAX_VECTOR_RATE:
        raise ValueError(
            f"rate must be in (0, {MAX_VECTOR_RATE}] for walk sampling, got {rate}"
        )
    cdf = _poisson_cdf(rate)
    u = rng.random(n)
    return np.minimum(np.searchsorted(cdf, u, side="left"), len(cdf) - 1)


def step_queue(q_prev: int, arrivals: int, responses: int) -> int:
    """Lindley update: (q_prev + arrivals - responses) floored at zero."""
    if q_prev < 0 or arrivals < 0 or responses < 0:
        raise ValueError(
            f"backlog and counts must be nonnegative, got {(q_prev, arrivals, responses)}"
        )
    return max(q_prev + arrivals - responses, 0)


def simulate_walk(params: RateParams, horizon: int, rng: np.random.Generator) -> WalkResult:
    """Supremum of the unreflected cumulative backlog over `horizon` slots.

    The walk is the running sum of per-slot arrivals minus responses; unlike
    step_queue it is not floored at zero slot by slot, only its supremum is
    (the walk starts at zero).  Per walk, all arrival counts are drawn first,
    then all response counts.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1 slot, got {horizon}")
    arrivals = poisson_counts(params.lam, horizon, rng)
    responses = poisson_counts(params.mu, horizon, rng)
    walk = np.cumsum(arrivals - responses)
    return WalkResult(sup_backlog=int(max(int(walk.max()), 0)), horizon=horizon)


def estimate_tail(
    params: RateParams,
    gammas: Sequence[float],
    runs: int,
    horizon: int,
    master_seed: int,
) -> list[TailEstimate]:
    """Monte Carlo estimates of P(sup backlog > gamma) for each threshold.

    Every run is an independent walk whose stream is seeded with
    derive_seed(master_seed, run_index); results are therefore identical no
    matter how runs are batched or parallelized.  All thresholds are counted
    against the same run set, which makes p_hat nonincreasing in gamma.
    """
    if runs < 1:
        raise ValueError(f"runs must be at least 1, got {runs}")
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1 slot, got {horizon}")
    if len(gammas) == 0:
        raise ValueError("gammas must be nonempty")
    g = np.asarray(gammas, dtype=float)
    if not np.all(np.diff(g) > 0):
        raise ValueError(f"gammas must be strictly increasing, got {list(gammas)}")

    hits = np.zeros(len(g), dtype=np.int64)
    batch_rows = max(1, min(_WALK_BATCH, _BATCH_BUDGET // (2 * horizon), runs))
    uniforms = np.empty((batch_rows, 2 * horizon))
    done = 0
    while done < runs:
        nb = min(batch_rows, runs - done)
        for j in range(nb):
            rng = make_rng(derive_seed(master_seed, done + j))
            uniforms[j] = rng.random(2 * horizon)
        batch = uniforms[:nb]
        a_cdf = _poisson_cdf(params.lam)
        r_cdf = _poisson_cdf(params.mu)
        arrivals = np.minimum(
            np.searchsorted(a_cdf, batch[:, :horizon], side="left"), len(a_cdf) - 1
        )
        responses = np.minimum(
            np.searchsorted(r_cdf, batch[:, horizon:], side="left"), len(r_cdf) - 1
        )
        walks = np.cumsum(arrivals - responses, axis=1)
        sups = np.maximum(walks.max(axis=1), 0)
        hits += (sups[:, None] > g[None, :]).sum(axis=0)
        done += nb

    out = []
    for gamma, h in zip(g, hits):
        p_hat = h / runs
        std_err = math.sqrt(p_hat * (1.0 - p_hat) / runs)
        out.append(
            TailEstimate(
                gamma=float(gamma), runs=runs, hits=int(h), p_hat=p_hat, std_err=std_err
            )
        )
    return out


def fit_decay_slope(estimates: Sequence[TailEstimate]) -> SlopeFit:
    """Ordinary least squares of -ln(p_hat) against gamma.

    Zero-hit estimates carry no log information and are excluded; the count
    of exclusions is reported in the fit.
    """
    usable = [e for e in estimates if e.p_hat > 0]
    excluded = len(estimates) - len(usable)
    if len(usable) < 2:
        raise ValueError(
            f"need at least 2 estimates with p_hat > 0 to fit, have {len(usable)}"
        )
    x = np.array([e.gamma for e in usable])
    y = np.array([-math.log(e.p_hat) for e in usable])
    slope, intercept = np.polyfit(x, y, 1)
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        n_used=len(usable),
        n_excluded=excluded,
    )
