"""Bounded-variable revised primal simplex.

Solves  min c'x  subject to  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub,
where any bound may be infinite.  Free variables are handled natively by the
bounded-variable mechanics (no variable splitting); fixed variables
(lb == ub) never enter the basis.

Two phases: a starting basis of artificial variables is driven to zero under
a sum-of-infeasibilities objective, then the true objective is optimized.
Pricing is Dantzig (most negative reduced cost); Bland's smallest-index rule
engages after 3*(#vars + #rows) consecutive degenerate steps so cycling
cannot occur.  The basis inverse is maintained by pivot updates and
refactorized periodically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2
_FREE = 3      # nonbasic free variable, held at value 0
_FIXED = 4     # lb == ub, never eligible to enter

_REFACTOR_EVERY = 100
_DEGEN_STEP = 1e-9


class SimplexIterationLimit(RuntimeError):
    """Iteration budget exhausted before reaching a terminal status."""


class SingularBasisError(RuntimeError):
    """Basis matrix numerically singular even after refactorization retry."""


@dataclass
class LinearProgram:
    """Canonical LP container: min c'x, A_eq x = b_eq, A_ub x <= b_ub, lb <= x <= ub."""

    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        n = self.c.size
        self.a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=float)
        self.a_ub = np.asarray(self.a_ub, dtype=float).reshape(-1, n)
        self.b_ub = np.asarray(self.b_ub, dtype=float)
        if not self.names:
            self.names = tuple(f"x{j}" for j in range(n))
        if self.lower.size != n or self.upper.size != n or len(self.names) != n:
            raise ValueError("bounds/names length must match objective length")
        if self.b_eq.size != self.a_eq.shape[0] or self.b_ub.size != self.a_ub.shape[0]:
            raise ValueError("constraint matrix/rhs dimensions inconsistent")
        if not np.all(np.isfinite(self.c)):
            raise ValueError("objective coefficients must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def num_variables(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    status: str                      # 'optimal' | 'infeasible' | 'unbounded'
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)


def _favorable_bound(c_j: float, lo: float, hi: float) -> float:
    if c_j > 0:
        return lo
    if c_j < 0:
        return hi
    if np.isfinite(lo):
        return lo
    if np.isfinite(hi):
        return hi
    return 0.0


def solve_lp(lp: LinearProgram, max_iterations: int | None = None) -> LpSolution:
    """Solve an LP, reporting optimal/infeasible/unbounded faithfully.

    Raises SimplexIterationLimit when the pivot budget runs out (distinct
    from infeasibility) and SingularBasisError on an unrecoverable basis.
    """
    n = lp.num_variables
    me, mi = lp.a_eq.shape[0], lp.a_ub.shape[0]
    m = me + mi

    if m == 0:
        # pure bound minimization
        x = np.empty(n)
        for j in range(n):
            v = _favorable_bound(lp.c[j], lp.lower[j], lp.upper[j])
            if not np.isfinite(v):
                return LpSolution(status="unbounded")
            x[j] = v
        return LpSolution(status="optimal", x=x, objective=float(lp.c @ x))

    # standard form rows [A_eq; A_ub], one slack per inequality row,
    # equilibrated so coefficient magnitudes are <= 1 per row
    a_rows = np.vstack([lp.a_eq, lp.a_ub])
    b = np.concatenate([lp.b_eq, lp.b_ub])
    scale = np.maximum(np.abs(a_rows).max(axis=1), 1e-12)
    a_rows = a_rows / scale[:, None]
    b = b / scale

    n_slack = mi
    n_total = n + n_slack
    a = np.zeros((m, n_total))
    a[:, :n] = a_rows
    a[me:, n:] = np.eye(mi)
    lb = np.concatenate([lp.lower, np.zeros(mi)])
    ub = np.concatenate([lp.upper, np.full(mi, np.inf)])

    core = _Core(a, b, lb, ub, max_iterations)
    status = core.run_two_phase(np.concatenate([lp.c, np.zeros(mi)]))
    if status != "optimal":
        return LpSolution(status=status, iterations=core.iterations)

    x_full = core.solution()
    x = x_full[:n]
    return LpSolution(
        status="optimal",
        x=x,
        objective=float(lp.c @ x),
        iterations=core.iterations,
        diagnostics={"phase1_iterations": core.phase1_iterations},
    )


class _Core:
    """Simplex engine on the standard-form system a x (+ artificials) = b."""

    def __init__(self, a, b, lb, ub, max_iterations):
        self.m, n_real = a.shape
        self.n_real = n_real
        # artificial columns appended after real+slack columns
        self.a = np.hstack([a, np.zeros((self.m, self.m))])
        self.b = b
        self.lb = np.concatenate([lb, np.zeros(self.m)])
        self.ub = np.concatenate([ub, np.full(self.m, np.inf)])
        self.n = self.a.shape[1]
        self.max_iterations = max_iterations or max(2000, 50 * (self.n + self.m))
        self.iterations = 0
        self.phase1_iterations = 0
        self.bland_threshold = 3 * (self.n + self.m)

        self.status = np.empty(self.n, dtype=int)
        for j in range(n_real):
            if self.lb[j] == self.ub[j]:
                self.status[j] = _FIXED
            elif np.isfinite(self.lb[j]):
                self.status[j] = _AT_LOWER
            elif np.isfinite(self.ub[j]):
                self.status[j] = _AT_UPPER
            else:
                self.status[j] = _FREE

        # residual of nonbasic start point determines artificial orientation
        x_nb = self._nonbasic_values(np.arange(n_real))
        resid = b - a @ x_nb
        signs = np.where(resid >= 0, 1.0, -1.0)
        for i in range(self.m):
            self.a[i, n_real + i] = signs[i]
        self.basis = np.arange(n_real, n_real + self.m)
        self.status[self.basis] = _BASIC
        self.binv = np.diag(signs)  # inverse of the initial +/-1 diagonal basis
        self.x_basic = np.abs(resid)
        self.pivots_since_refactor = 0

    def _nonbasic_values(self, cols) -> np.ndarray:
        vals = np.zeros(len(cols))
        for idx, j in enumerate(cols):
            s = self.status[j]
            if s in (_AT_LOWER, _FIXED):
                vals[idx] = self.lb[j]
            elif s == _AT_UPPER:
                vals[idx] = self.ub[j]
            else:
                vals[idx] = 0.0
        return vals

    def _recompute_basics(self):
        nonbasic = np.flatnonzero(self.status != _BASIC)
        x_nb = self._nonbasic_values(nonbasic)
        rhs = self.b - self.a[:, nonbasic] @ x_nb
        self.x_basic = self.binv @ rhs

    def _refactorize(self):
        bmat = self.a[:, self.basis]
        try:
            self.binv = np.linalg.solve(bmat, np.eye(self.m))
        except np.linalg.LinAlgError:
            raise SingularBasisError("basis matrix singular at refactorization") from None
        if not np.all(np.isfinite(self.binv)):
            raise SingularBasisError("basis inverse non-finite after refactorization")
        self.pivots_since_refactor = 0
        self._recompute_basics()

    def run_two_phase(self, c_real: np.ndarray) -> str:
        c1 = np.zeros(self.n)
        c1[self.n_real:] = 1.0
        status = self._iterate(c1, phase=1)
        self.phase1_iterations = self.iterations
        if status != "optimal":
            # a bounded-below phase-1 objective cannot be unbounded
            raise SingularBasisError("phase-1 terminated abnormally: " + status)
        feas_tol = 1e-7 * max(1.0, float(np.abs(self.b).max(initial=0.0)))
        art = self.basis >= self.n_real
        phase1_obj = float(np.sum(np.abs(self.x_basic[art]))) if art.any() else 0.0
        if phase1_obj > feas_tol:
            return "infeasible"
        self._drive_out_artificials()
        # artificials are pinned at zero for phase 2
        self.lb[self.n_real:] = 0.0
        self.ub[self.n_real:] = 0.0
        nonbasic_art = (self.status != _BASIC) & (np.arange(self.n) >= self.n_real)
        self.status[nonbasic_art] = _FIXED
        c2 = np.concatenate([c_real, np.zeros(self.m)])
        return self._iterate(c2, phase=2)

    def _drive_out_artificials(self):
        for r in range(self.m):
            j = self.basis[r]
            if j < self.n_real:
                continue
            row = self.binv[r, :] @ self.a[:, : self.n_real]
            candidates = np.flatnonzero(
                (np.abs(row) > 1e-7) & (self.status[: self.n_real] != _BASIC)
            )
            if candidates.size == 0:
                continue  # dependent row; artificial stays basic at zero
            q = candidates[np.argmax(np.abs(row[candidates]))]
            w = self.binv @ self.a[:, q]
            self.status[q] = _BASIC
            self.status[j] = _FIXED
            self._pivot(r, q, w)
        self._recompute_basics()

    def _pivot(self, r: int, q: int, w: np.ndarray):
        piv = w[r]
        if abs(piv) < 1e-12:
            raise SingularBasisError(f"pivot element too small: {piv!r}")
        self.binv[r, :] /= piv
        others = np.arange(self.m) != r
        self.binv[others, :] -= np.outer(w[others], self.binv[r, :])
        self.basis[r] = q
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= _REFACTOR_EVERY:
            self._refactorize()

    def _iterate(self, c: np.ndarray, phase: int) -> str:
        dual_tol = 1e-8 * max(1.0, float(np.abs(c).max()))
        degen_run = 0
        bland = False
        while True:
            if self.iterations >= self.max_iterations:
                raise SimplexIterationLimit(
                    f"simplex exceeded {self.max_iterations} iterations (phase {phase})"
                )
            self.iterations += 1

            y = c[self.basis] @ self.binv
            if not np.all(np.isfinite(y)) or not np.all(np.isfinite(self.x_basic)):
                # updated inverse drifted; rebuild once from scratch before giving up
                self._refactorize()
                y = c[self.basis] @ self.binv
                if not np.all(np.isfinite(y)) or not np.all(np.isfinite(self.x_basic)):
                    raise SingularBasisError("non-finite iterate after refactorization retry")
            d = c - y @ self.a
            can_increase = (self.status == _AT_LOWER) | (self.status == _FREE)
            can_decrease = (self.status == _AT_UPPER) | (self.status == _FREE)
            improving = (can_increase & (d < -dual_tol)) | (can_decrease & (d > dual_tol))
            idx = np.flatnonzero(improving)
            if idx.size == 0:
                return "optimal"
            if bland:
                q = int(idx[0])
            else:
                q = int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if d[q] < 0 else -1.0

            w = self.binv @ self.a[:, q]
            delta = -direction * w  # rate of change of each basic value per unit step

            # ratio test: basic variables hitting a bound, or the entering
            # variable flipping to its opposite bound
            t_limit = np.inf
            leave_row = -1
            wmax = max(1.0, float(np.abs(w).max()))
            piv_tol = 1e-9 * wmax
            for i in range(self.m):
                di = delta[i]
                if di < -piv_tol:
                    lo = self.lb[self.basis[i]]
                    if np.isfinite(lo):
                        t = (self.x_basic[i] - lo) / (-di)
                    else:
                        continue
                elif di > piv_tol:
                    hi = self.ub[self.basis[i]]
                    if np.isfinite(hi):
                        t = (hi - self.x_basic[i]) / di
                    else:
                        continue
                else:
                    continue
                t = max(t, 0.0)
                if t < t_limit - 1e-12:
                    t_limit, leave_row = t, i
                elif t <= t_limit + 1e-12 and leave_row >= 0:
                    if bland:
                        if self.basis[i] < self.basis[leave_row]:
                            leave_row = i
                    elif abs(w[i]) > abs(w[leave_row]):
                        leave_row = i

            gap = self.ub[q] - self.lb[q]
            if gap <= t_limit and np.isfinite(gap):
                # bound flip, no basis change
                t = gap
                self.x_basic += t * delta
                self.status[q] = _AT_UPPER if self.status[q] == _AT_LOWER else _AT_LOWER
            elif leave_row < 0:
                if phase == 1:
                    raise SingularBasisError("phase-1 direction unbounded: numerical failure")
                return "unbounded"
            else:
                t = t_limit
                entering_value = self._nonbasic_values([q])[0] + direction * t
                leaving = self.basis[leave_row]
                di = delta[leave_row]
                new_status = _AT_LOWER if di < 0 else _AT_UPPER
                if self.lb[leaving] == self.ub[leaving]:
                    new_status = _FIXED
                self.x_basic += t * delta
                self.x_basic[leave_row] = entering_value
                self.status[leaving] = new_status
                self.status[q] = _BASIC
                self._pivot(leave_row, q, w)

            if t <= _DEGEN_STEP:
                degen_run += 1
                if degen_run > self.bland_threshold:
                    bland = True
            else:
                degen_run = 0
                bland = False

    def solution(self) -> np.ndarray:
        self._refactorize()
        x = np.empty(self.n)
        nonbasic = np.flatnonzero(self.status != _BASIC)
        x[nonbasic] = self._nonbasic_values(nonbasic)
        x[self.basis] = self.x_basic
        return x
