"""Relay-subset selection.

A node with candidate relays ``k`` (meeting rate ``lam_k``, latency
``L_k``) picks the subset minimizing ``(1 + sum lam_k L_k) / sum lam_k``.
The optimal subset is a threshold set: every candidate whose latency is
below the optimal value. :func:`best_relay_subset` finds it greedily; the
linear-fractional / Charnes-Cooper route and plain subset enumeration are
kept as independent checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "RelayCandidate",
    "RelaySelection",
    "best_relay_subset",
    "enumerate_relay_subsets",
    "LfpProblem",
    "LinearProgram",
    "LpSolution",
    "LpError",
    "relay_lfp",
    "charnes_cooper_transform",
    "solve_lp_small",
    "solve_lfp",
]


@dataclass(frozen=True)
class RelayCandidate:
    id: int
    rate: float
    latency: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"candidate {self.id}: rate must be positive")
        if not self.latency >= 0:
            raise ValueError(f"candidate {self.id}: latency must be nonnegative")


@dataclass(frozen=True)
class RelaySelection:
    chosen: frozenset
    value: float


EMPTY_SELECTION = RelaySelection(frozenset(), math.inf)


def best_relay_subset(candidates: Iterable[RelayCandidate]) -> RelaySelection:
    """Exact minimizer of ``(1 + sum lam*L) / sum lam`` over nonempty subsets."""
    usable = sorted(
        (c for c in candidates if math.isfinite(c.latency)), key=lambda c: (c.latency, c.id)
    )
    value = math.inf
    num, den = 1.0, 0.0
    chosen = []
    for c in usable:
        if not c.latency < value:
            break
        num += c.rate * c.latency
        den += c.rate
        value = num / den
        chosen.append(c.id)
    if not chosen:
        return EMPTY_SELECTION
    return RelaySelection(frozenset(chosen), value)


def enumerate_relay_subsets(candidates: Sequence[RelayCandidate]) -> RelaySelection:
    """Brute-force check over all ``2^n - 1`` nonempty subsets."""
    if len(candidates) > 20:
        raise ValueError("too many candidates to enumerate")
    best = EMPTY_SELECTION
    for r in range(1, len(candidates) + 1):
        for subset in itertools.combinations(candidates, r):
            den = sum(c.rate for c in subset)
            num = 1.0 + sum(c.rate * c.latency for c in subset)
            value = num / den
            if value < best.value:
                best = RelaySelection(frozenset(c.id for c in subset), value)
    return best


@dataclass(frozen=True)
class LfpProblem:
    """min (c.p + alpha) / (d.p + beta) subject to 0 <= p <= 1."""

    c: np.ndarray
    d: np.ndarray
    alpha: float = 1.0
    beta: float = 0.0
    ids: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if c.shape != d.shape or c.ndim != 1:
            raise ValueError("c and d must be vectors of equal length")
        if (d <= 0).any():
            raise ValueError("d entries must be positive")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def box_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """``A p <= b`` encoding of the box ``0 <= p <= 1``."""
        n = len(self.c)
        A = np.vstack([np.eye(n), -np.eye(n)])
        b = np.concatenate([np.ones(n), np.zeros(n)])
        return A, b

    def ratio(self, p) -> float:
        p = np.asarray(p, dtype=float)
        return float((self.c @ p + self.alpha) / (self.d @ p + self.beta))


def relay_lfp(candidates: Iterable[RelayCandidate]) -> LfpProblem:
    usable = [c for c in candidates if math.isfinite(c.latency)]
    return LfpProblem(
        c=np.array([c.rate * c.latency for c in usable]),
        d=np.array([c.rate for c in usable]),
        ids=tuple(c.id for c in usable),
    )


@dataclass(frozen=True)
class LinearProgram:
    """min objective.z  s.t.  A_eq z = b_eq,  A_ub z <= b_ub,  z >= 0.

    For a transformed fractional program ``z = (x, y)``.
    """

    objective: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray


@dataclass(frozen=True)
class LpSolution:
    objective: float
    x: np.ndarray
    y: float

    @property
    def p(self) -> np.ndarray:
        return self.x / self.y


class LpError(RuntimeError):
    pass


def charnes_cooper_transform(problem: LfpProblem) -> LinearProgram:
    """Substitute ``x = p / (d.p + beta)``, ``y = 1 / (d.p + beta)``.

    Gives  min c.x + alpha*y  s.t.  d.x + beta*y = 1,  A x <= b y,  y >= 0.
    """
    A, b = problem.box_matrix
    n = len(problem.c)
    return LinearProgram(
        objective=np.concatenate([problem.c, [problem.alpha]]),
        A_eq=np.concatenate([problem.d, [problem.beta]])[None, :],
        b_eq=np.array([1.0]),
        A_ub=np.hstack([A, -b[:, None]]),
        b_ub=np.zeros(2 * n),
    )


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _simplex(T: np.ndarray, basis: list[int], n_cols: int, tol: float) -> None:
    """Minimize the objective in the last row of tableau ``T`` (Bland's rule)."""
    m = T.shape[0] - 1
    while True:
        costs = T[-1, :n_cols]
        entering = next((j for j in range(n_cols) if costs[j] < -tol), None)
        if entering is None:
            return
        column = T[:m, entering]
        best_row, best_ratio = None, math.inf
        for r in range(m):
            if column[r] > tol:
                ratio = T[r, -1] / column[r]
                if ratio < best_ratio - tol or (
                    abs(ratio - best_ratio) <= tol and basis[r] < basis[best_row]
                ):
                    best_row, best_ratio = r, ratio
        if best_row is None:
            raise LpError("linear program is unbounded")
        _pivot(T, basis, best_row, entering)


def solve_lp_small(lp: LinearProgram, tol: float = 1e-12) -> LpSolution:
    """Two-phase dense tableau simplex; meant for a few dozen variables."""
    n_vars = len(lp.objective)
    if n_vars > 64:
        raise ValueError("solve_lp_small handles at most 64 variables")
    A_ub, b_ub = np.atleast_2d(lp.A_ub), np.asarray(lp.b_ub, dtype=float)
    A_eq, b_eq = np.atleast_2d(lp.A_eq), np.asarray(lp.b_eq, dtype=float)
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq
    # columns: original vars | slacks | artificials
    rows = np.zeros((m, n_vars + m_ub))
    rhs = np.concatenate([b_ub, b_eq])
    rows[:m_ub, :n_vars] = A_ub
    rows[:m_ub, n_vars:] = np.eye(m_ub)
    rows[m_ub:, :n_vars] = A_eq
    sign = np.where(rhs < 0, -1.0, 1.0)
    rows *= sign[:, None]
    rhs = rhs * sign
    needs_art = [r for r in range(m) if r >= m_ub or sign[r] < 0]
    n_core = n_vars + m_ub
    n_art = len(needs_art)
    T = np.zeros((m + 1, n_core + n_art + 1))
    T[:m, :n_core] = rows
    T[:m, -1] = rhs
    basis = [n_vars + r for r in range(m)]
    for k, r in enumerate(needs_art):
        T[r, n_core + k] = 1.0
        basis[r] = n_core + k
    # phase 1: minimize sum of artificials
    T[-1, n_core : n_core + n_art] = 1.0
    for r in needs_art:
        T[-1] -= T[r]
    _simplex(T, basis, n_core + n_art, tol)
    if T[-1, -1] < -1e-9:
        raise LpError("linear program is infeasible")
    for r in range(m):
        if basis[r] >= n_core:
            col = next((j for j in range(n_core) if abs(T[r, j]) > tol), None)
            if col is not None:
                _pivot(T, basis, r, col)
    # phase 2: drop artificial columns, price out the real objective
    T = np.delete(T, np.s_[n_core : n_core + n_art], axis=1)
    T[-1] = 0.0
    T[-1, :n_vars] = lp.objective
    for r in range(m):
        if basis[r] < n_core:
            T[-1] -= T[-1, basis[r]] * T[r]
    _simplex(T, basis, n_core, tol)
    z = np.zeros(n_core)
    for r in range(m):
        if basis[r] < n_core:
            z[basis[r]] = T[r, -1]
    objective = float(lp.objective @ z[:n_vars])
    return LpSolution(objective, z[: n_vars - 1], float(z[n_vars - 1]))


def solve_lfp(problem: LfpProblem) -> tuple[float, np.ndarray]:
    """Optimal ratio and minimizing ``p`` via the Charnes-Cooper LP."""
    if len(problem.c) == 0:
        return math.inf, np.zeros(0)
    sol = solve_lp_small(charnes_cooper_transform(problem))
    return sol.objective, sol.p
