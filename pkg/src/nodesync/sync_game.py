"""Request-strategy model for a partial node facing m full nodes.

Each of the m send decisions is treated as one player of a common-payoff
game: sending to a node costs a fee and shares a reliability-weighted unit
of profit among all senders.  The best correlated equilibrium is found by
maximizing the expected total utility over the equilibrium polytope, which
is a linear program over all 2^m decision profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import lp_solver
from .lp_solver import Constraint, LpProblem, LpStatus, Relation

MAX_NODES = 12

# Probability below which a profile is not considered part of the support
# when a single decision vector is extracted from a distribution.
SUPPORT_MASS = 1e-6


@dataclass(frozen=True)
class GameSpec:
    """Per-node failure tolerances, profit scalars, and request costs."""

    m: int
    epsilon: tuple[float, ...]
    alpha: tuple[float, ...]
    cost: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.m <= MAX_NODES:
            raise ValueError(f"m must be in [1, {MAX_NODES}], got {self.m}")
        for name, values in (("epsilon", self.epsilon), ("alpha", self.alpha), ("cost", self.cost)):
            if len(values) != self.m:
                raise ValueError(f"{name} must have length m={self.m}, got {len(values)}")
        if any(not 0 < e < 1 for e in self.epsilon):
            raise ValueError(f"failure tolerances must be in (0, 1), got {self.epsilon}")
        if any(a <= 0 for a in self.alpha):
            raise ValueError(f"profit scalars must be positive, got {self.alpha}")
        if any(c < 0 for c in self.cost):
            raise ValueError(f"request costs must be nonnegative, got {self.cost}")

    @classmethod
    def uniform(cls, m: int, epsilon: float, alpha: float, cost: float) -> "GameSpec":
        return cls(m=m, epsilon=(epsilon,) * m, alpha=(alpha,) * m, cost=(cost,) * m)


@dataclass(frozen=True)
class Profile:
    """Send (1) / skip (0) decision for each of the m full nodes."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) == 0:
            raise ValueError("a profile needs at least one decision")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"decisions must be 0 or 1, got {self.bits}")

    @property
    def index(self) -> int:
        """Canonical encoding: bit i of the index is the decision for node i."""
        return sum(bit << i for i, bit in enumerate(self.bits))

    @classmethod
    def from_index(cls, index: int, m: int) -> "Profile":
        if not 0 <= index < (1 << m):
            raise ValueError(f"index {index} out of range for m={m}")
        return cls(bits=tuple((index >> i) & 1 for i in range(m)))


@dataclass(frozen=True)
class CorrelatedDistribution:
    """Probability distribution over all 2^m profiles, indexed by encoding."""

    m: int
    g: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "g", g)
        if g.shape != (1 << self.m,):
            raise ValueError(f"need {1 << self.m} probabilities, got shape {g.shape}")
        if g.min(initial=0.0) < 0:
            raise ValueError(f"probabilities must be nonnegative, min is {g.min()}")
        if abs(g.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {g.sum()}")

    @classmethod
    def point_mass(cls, profile: Profile) -> "CorrelatedDistribution":
        g = np.zeros(1 << len(profile.bits))
        g[profile.index] = 1.0
        return cls(m=len(profile.bits), g=g)


@dataclass(frozen=True)
class DecisionReport:
    """Solved request strategy plus the headline numbers around it."""

    distribution: CorrelatedDistribution
    objective: float
    marginals: tuple[float, ...]
    chosen_profile: Profile
    cautious_failure: float


class CeCheck(NamedTuple):
    ok: bool
    max_violation: float


def _bit(index: int, i: int) -> int:
    return (index >> i) & 1


def _utility_at(index: int, i: int, spec: GameSpec) -> float:
    """Utility of decision i under the profile with the given encoding."""
    if not _bit(index, i):
        return 0.0
    weight_sum = 0.0
    for j in range(spec.m):
        if _bit(index, j):
            weight_sum += 1.0 - spec.epsilon[j]
    share = (1.0 - spec.epsilon[i]) / weight_sum
    return spec.alpha[i] * share - spec.cost[i]


def _total_utility_at(index: int, spec: GameSpec) -> float:
    return sum(_utility_at(index, i, spec) for i in range(spec.m))


def profit(p: Profile, i: int, epsilon: Sequence[float]) -> float:
    """Reliability-weighted share of the unit profit earned by decision i.

    Sending nodes split the unit in proportion to their success weights
    1 - epsilon; a non-sender earns nothing, and the all-zero profile earns
    zero for everyone by convention.
    """
    m = len(p.bits)
    if len(epsilon) != m:
        raise ValueError(f"epsilon must have length {m}, got {len(epsilon)}")
    if not 0 <= i < m:
        raise ValueError(f"node index must be in [0, {m}), got {i}")
    if p.bits[i] == 0:
        return 0.0
    weight_sum = sum((1.0 - epsilon[j]) * p.bits[j] for j in range(m))
    if weight_sum == 0.0:
        return 0.0
    return (1.0 - epsilon[i]) / weight_sum


def utility(p: Profile, i: int, spec: GameSpec) -> float:
    """Profit scaled by alpha_i minus the request cost when sending."""
    if len(p.bits) != spec.m:
        raise ValueError(f"profile has {len(p.bits)} decisions for m={spec.m}")
    return spec.alpha[i] * profit(p, i, spec.epsilon) - p.bits[i] * spec.cost[i]


def total_utility(p: Profile, spec: GameSpec) -> float:
    """Sum of the m per-decision utilities under one profile."""
    if len(p.bits) != spec.m:
        raise ValueError(f"profile has {len(p.bits)} decisions for m={spec.m}")
    return _total_utility_at(p.index, spec)


def cautious_failure(epsilon: Sequence[float]) -> float:
    """Failure probability when requesting from every node: the product of
    the per-node failure tolerances."""
    if len(epsilon) == 0:
        raise ValueError("epsilon must be nonempty")
    if any(not 0 < e < 1 for e in epsilon):
        raise ValueError(f"failure tolerances must be in (0, 1), got {tuple(epsilon)}")
    return math.prod(epsilon)


def build_ns_lp(spec: GameSpec) -> LpProblem:
    """Linear program for the best correlated equilibrium.

    One variable per profile probability; the objective is the expected
    total utility.  Besides normalization, each decision i contributes two
    rows, one per ordered pair of actions (held, alt): conditional on being
    told to play `held`, switching to `alt` must not pay in expectation.
    """
    n = 1 << spec.m
    objective = tuple(_total_utility_at(k, spec) for k in range(n))
    rows = [Constraint(coeffs=(1.0,) * n, relation=Relation.EQ, rhs=1.0)]
    for i in range(spec.m):
        for held in (0, 1):
            coeffs = [0.0] * n
            for k in range(n):
                if _bit(k, i) == held:
                    coeffs[k] = _utility_at(k, i, spec) - _utility_at(k ^ (1 << i), i, spec)
            rows.append(Constraint(coeffs=tuple(coeffs), relation=Relation.GE, rhs=0.0))
    return LpProblem(n=n, objective=objective, constraints=tuple(rows))


def is_correlated_equilibrium(
    dist: CorrelatedDistribution, spec: GameSpec, tol: float = 1e-8
) -> CeCheck:
    """Check all 2m deviation constraints; reports the worst violation."""
    if dist.m != spec.m:
        raise ValueError(f"distribution is over m={dist.m} nodes, spec has m={spec.m}")
    worst = 0.0
    for i in range(spec.m):
        for held in (0, 1):
            lhs = 0.0
            for k in range(1 << spec.m):
                if _bit(k, i) == held and dist.g[k] > 0.0:
                    gain_keep = _utility_at(k, i, spec) - _utility_at(k ^ (1 << i), i, spec)
                    lhs += dist.g[k] * gain_keep
            worst = max(worst, -lhs)
    return CeCheck(ok=worst <= tol, max_violation=worst)


def solve_ns(spec: GameSpec) -> DecisionReport:
    """Best correlated equilibrium of the request game.

    Solves the LP, normalizes the returned distribution, extracts a single
    decision vector, and re-verifies the equilibrium constraints before
    reporting.  The equilibrium polytope of a finite game is never empty,
    so a non-optimal LP status is an internal failure.
    """
    solution = lp_solver.solve(build_ns_lp(spec))
    if solution.status is not LpStatus.OPTIMAL:
        raise RuntimeError(
            f"equilibrium program reported {solution.status.value}; "
            "the equilibrium polytope is never empty"
        )
    g = np.clip(np.asarray(solution.x, dtype=float), 0.0, None)
    g /= g.sum()
    dist = CorrelatedDistribution(m=spec.m, g=g)
    check = is_correlated_equilibrium(dist, spec, tol=1e-8)
    if not check.ok:
        raise RuntimeError(
            f"solver output fails the equilibrium check by {check.max_violation}"
        )
    marginals = tuple(
        float(g[[k for k in range(1 << spec.m) if _bit(k, i)]].sum()) for i in range(spec.m)
    )
    objective = float(sum(g[k] * _total_utility_at(k, spec) for k in range(1 << spec.m)))
    return DecisionReport(
        distribution=dist,
        objective=objective,
        marginals=marginals,
        chosen_profile=_extract_profile(g, spec),
        cautious_failure=cautious_failure(spec.epsilon),
    )


def _extract_profile(g: np.ndarray, spec: GameSpec) -> Profile:
    """Single decision vector for a distribution: among support profiles of
    maximum conditional total utility, take the most probable one, then the
    lowest encoding."""
    support = [k for k in range(1 << spec.m) if g[k] > SUPPORT_MASS]
    best_utility = max(_total_utility_at(k, spec) for k in support)
    candidates = [k for k in support if _total_utility_at(k, spec) >= best_utility - 1e-9]
    top_mass = max(g[k] for k in candidates)
    chosen = min(k for k in candidates if g[k] >= top_mass - 1e-12)
    return Profile.from_index(chosen, spec.m)


def best_pure_profile(spec: GameSpec) -> tuple[Profile, float]:
    """Brute-force baseline: the best single profile whose point mass is a
    correlated equilibrium.  The optimum of the LP is at least this good."""
    best: tuple[Profile, float] | None = None
    for k in range(1 << spec.m):
        profile = Profile.from_index(k, spec.m)
        check = is_correlated_equilibrium(
            CorrelatedDistribution.point_mass(profile), spec, tol=1e-9
        )
        if not check.ok:
            continue
        value = _total_utility_at(k, spec)
        if best is None or value > best[1]:
            best = (profile, value)
    if best is None:
        raise LookupError("no pure-profile correlated equilibrium exists for this spec")
    return best
