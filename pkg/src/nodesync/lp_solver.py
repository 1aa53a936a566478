"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Solves   maximize c . x   subject to rows of <= / == / >= constraints and
x >= 0.  Determinism is built in: the entering variable is the lowest
eligible index and ratio-test ties leave the row whose basic variable has
the lowest index, which also guarantees termination.  The tableau is
refactorized from the original data at regular intervals and the final
solution is recomputed from the terminal basis, so elimination round-off
cannot accumulate into the reported answer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8

MAX_VARS = 65536
MAX_ROWS = 4096

# Pivots between refactorizations of the tableau from the original data.
_REFACTOR_EVERY = 64
# Refreshed right-hand sides below this magnitude are degenerate zeros.
_RHS_SNAP = 1e-11


class Relation(enum.Enum):
    LE = "<="
    EQ = "=="
    GE = ">="


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[float, ...]
    relation: Relation
    rhs: float


@dataclass(frozen=True)
class LpProblem:
    """maximize objective . x  subject to constraints and x >= 0."""

    n: int
    objective: tuple[float, ...]
    constraints: tuple[Constraint, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need at least one variable, got n={self.n}")
        if self.n > MAX_VARS:
            raise ValueError(f"n={self.n} exceeds the dense-tableau cap of {MAX_VARS}")
        if len(self.constraints) > MAX_ROWS:
            raise ValueError(
                f"{len(self.constraints)} rows exceed the dense-tableau cap of {MAX_ROWS}"
            )
        if len(self.objective) != self.n:
            raise ValueError(
                f"objective has {len(self.objective)} coefficients for n={self.n}"
            )
        for idx, row in enumerate(self.constraints):
            if len(row.coeffs) != self.n:
                raise ValueError(
                    f"constraint {idx} has {len(row.coeffs)} coefficients for n={self.n}"
                )


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective_value: float | None = None


class _Tableau:
    """Simplex state over an immutable extended system [a_ext | b]."""

    def __init__(self, a_ext: np.ndarray, b: np.ndarray, costs: np.ndarray, basis: list[int]):
        self.a_ext = a_ext
        self.b = b
        self.costs = costs
        self.basis = basis
        self.rows: np.ndarray = np.empty(0)
        self.z_row: np.ndarray = np.empty(0)
        self.refactor()

    def refactor(self) -> None:
        """Rebuild rows = B^-1 [a_ext | b] and the z-row from scratch."""
        base = self.a_ext[:, self.basis]
        try:
            fresh = np.linalg.solve(base, np.column_stack([self.a_ext, self.b]))
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError("basis matrix became singular") from exc
        rhs = fresh[:, -1]
        rhs[np.abs(rhs) < _RHS_SNAP] = 0.0
        self.rows = fresh
        self.z_row = self.costs[self.basis] @ fresh
        self.z_row[:-1] -= self.costs

    def basic_values(self) -> np.ndarray:
        base = self.a_ext[:, self.basis]
        try:
            return np.linalg.solve(base, self.b)
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError("basis matrix became singular") from exc

    def pivot(self, row: int, col: int) -> None:
        self.rows[row] /= self.rows[row, col]
        factors = self.rows[:, col].copy()
        factors[row] = 0.0
        self.rows -= np.outer(factors, self.rows[row])
        self.z_row -= self.z_row[col] * self.rows[row]
        self.basis[row] = col

    def run(self) -> str:
        """Pivot until optimal or unbounded.  Bland's rule on both choices."""
        since_refactor = 0
        while True:
            eligible = np.nonzero(self.z_row[:-1] < -PIVOT_TOL)[0]
            if eligible.size == 0:
                return "optimal"
            col = int(eligible[0])
            direction = self.rows[:, col]
            open_rows = np.nonzero(direction > PIVOT_TOL)[0]
            if open_rows.size == 0:
                return "unbounded"
            # Ties must be recognized exactly (degenerate rows carry an
            # exact zero rhs) or the anti-cycling guarantee is void.
            ratios = self.rows[open_rows, -1] / direction[open_rows]
            tied = open_rows[ratios <= ratios.min()]
            leave = int(min(tied, key=lambda i: self.basis[i]))
            self.pivot(leave, col)
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0


def solve(problem: LpProblem) -> LpSolution:
    """Two-phase simplex; classifies the problem or returns a maximizer."""
    m = len(problem.constraints)
    n = problem.n
    a = np.array([row.coeffs for row in problem.constraints], dtype=float).reshape(m, n)
    b = np.array([row.rhs for row in problem.constraints], dtype=float)
    relations = [row.relation for row in problem.constraints]

    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0
    swap = {Relation.LE: Relation.GE, Relation.GE: Relation.LE, Relation.EQ: Relation.EQ}
    relations = [swap[rel] if f else rel for rel, f in zip(relations, flip)]

    n_slack = sum(rel is not Relation.EQ for rel in relations)
    n_art = sum(rel is not Relation.LE for rel in relations)
    n_real = n + n_slack

    a_ext = np.zeros((m, n_real + n_art))
    a_ext[:, :n] = a
    basis: list[int] = []
    slack_at = n
    art_at = n_real
    for i, rel in enumerate(relations):
        if rel is Relation.LE:
            a_ext[i, slack_at] = 1.0
            basis.append(slack_at)
            slack_at += 1
        elif rel is Relation.GE:
            a_ext[i, slack_at] = -1.0
            slack_at += 1
            a_ext[i, art_at] = 1.0
            basis.append(art_at)
            art_at += 1
        else:
            a_ext[i, art_at] = 1.0
            basis.append(art_at)
            art_at += 1

    if n_art > 0:
        phase1_costs = np.zeros(n_real + n_art)
        phase1_costs[n_real:] = -1.0
        state = _Tableau(a_ext, b, phase1_costs, basis)
        if state.run() != "optimal":
            raise ArithmeticError("phase 1 is bounded by construction")
        values = state.basic_values()
        infeasibility = sum(
            float(v) for bv, v in zip(basis, values) if bv >= n_real
        )
        if infeasibility > FEAS_TOL:
            return LpSolution(status=LpStatus.INFEASIBLE)

        # Artificials basic at level zero: pivot them out on the strongest
        # structural column, or drop the row entirely when it is redundant.
        state.refactor()
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] < n_real:
                continue
            magnitudes = np.abs(state.rows[i, :n_real])
            col = int(magnitudes.argmax())
            if magnitudes[col] > PIVOT_TOL:
                state.pivot(i, col)
            else:
                keep[i] = False
        a_ext = a_ext[keep]
        b = b[keep]
        basis = [bv for bv, k in zip(basis, keep) if k]

    a_ext = a_ext[:, :n_real]
    phase2_costs = np.zeros(n_real)
    phase2_costs[:n] = problem.objective
    state = _Tableau(a_ext, b, phase2_costs, basis)
    if state.run() == "unbounded":
        return LpSolution(status=LpStatus.UNBOUNDED)

    x = np.zeros(n)
    for bv, value in zip(basis, state.basic_values()):
        if bv < n:
            x[bv] = value
    x[(x < 0) & (x > -PIVOT_TOL)] = 0.0
    _check_feasible(problem, x)
    return LpSolution(
        status=LpStatus.OPTIMAL,
        x=x,
        objective_value=float(np.dot(problem.objective, x)),
    )


def _check_feasible(problem: LpProblem, x: np.ndarray) -> None:
    if x.min(initial=0.0) < -PIVOT_TOL:
        raise ArithmeticError(f"solution has a negative coordinate: {x.min()}")
    for idx, row in enumerate(problem.constraints):
        value = float(np.dot(row.coeffs, x))
        if row.relation is Relation.LE:
            bad = value > row.rhs + FEAS_TOL
        elif row.relation is Relation.GE:
            bad = value < row.rhs - FEAS_TOL
        else:
            bad = abs(value - row.rhs) > FEAS_TOL
        if bad:
            raise ArithmeticError(
                f"solution violates constraint {idx}: {value} vs {row.relation.value} {row.rhs}"
            )
