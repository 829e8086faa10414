"""Dense linear programming on a two-phase primal simplex.

The solver is deliberately plain: a full tableau, a fixed deterministic
pivot rule, and fixed tolerances, so repeated solves of the same program
produce bit-identical answers and the downstream backward-induction
results are reproducible. Entering columns are chosen by most negative
reduced cost with smallest-index tie-breaking; under a degenerate stall
the rule drops to Bland's smallest-index selection, whose pairing with
the smallest-basic-index ratio tie-break rules out cycling. Every
program in this package is small and dense, which keeps the tableau
approach honest.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InputError, SolverFault

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
PIVOT_TOL = 1e-10


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective @ x subject to eq_matrix @ x = eq_rhs,
    ub_matrix @ x <= ub_rhs, and lower <= x <= upper.

    Lower bounds may be finite or -inf, upper bounds finite or +inf.
    Dimension mismatches and non-finite data are construction errors.
    """

    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    ub_matrix: np.ndarray
    ub_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        for name in ("objective", "eq_matrix", "eq_rhs", "ub_matrix", "ub_rhs", "lower", "upper"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        n = self.objective.size
        if self.objective.ndim != 1:
            raise InputError("objective must be one-dimensional")
        if self.eq_matrix.shape != (self.eq_rhs.size, n):
            raise InputError(
                f"equality block {self.eq_matrix.shape} does not match "
                f"{self.eq_rhs.size} rows over {n} variables"
            )
        if self.ub_matrix.shape != (self.ub_rhs.size, n):
            raise InputError(
                f"inequality block {self.ub_matrix.shape} does not match "
                f"{self.ub_rhs.size} rows over {n} variables"
            )
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise InputError("bound vectors must have one entry per variable")
        for name in ("objective", "eq_matrix", "eq_rhs", "ub_matrix", "ub_rhs"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InputError(f"{name} contains a non-finite entry")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise InputError("bounds may not contain NaN")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise InputError("lower bounds must be < +inf and upper bounds > -inf")

    @classmethod
    def build(cls, objective, *, eq=None, ub=None, lower=None, upper=None) -> "LinearProgram":
        """Assemble a program from optional pieces.

        ``eq`` and ``ub`` are (matrix, rhs) pairs; omitted blocks are empty.
        Bounds default to x >= 0 with no upper limit.
        """
        c = np.asarray(objective, dtype=float).ravel()
        n = c.size

        def block(pair):
            if pair is None:
                return np.zeros((0, n)), np.zeros(0)
            mat, rhs = pair
            arr = np.asarray(mat, dtype=float)
            if arr.size % max(n, 1) != 0:
                raise InputError(
                    f"constraint block of {arr.size} coefficients does not tile "
                    f"rows over {n} variables"
                )
            return arr.reshape(-1, n), np.asarray(rhs, dtype=float).ravel()

        eq_m, eq_r = block(eq)
        ub_m, ub_r = block(ub)
        lo = np.zeros(n) if lower is None else np.asarray(lower, dtype=float).ravel()
        up = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float).ravel()
        return cls(c, eq_m, eq_r, ub_m, ub_r, lo, up)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    def format_dump(self) -> str:
        """Plain-text listing of the full program, for fault reports."""
        lines = [f"maximize {np.array2string(self.objective, max_line_width=200)}"]
        for row, rhs in zip(self.eq_matrix, self.eq_rhs):
            lines.append(f"  {np.array2string(row, max_line_width=200)} == {rhs!r}")
        for row, rhs in zip(self.ub_matrix, self.ub_rhs):
            lines.append(f"  {np.array2string(row, max_line_width=200)} <= {rhs!r}")
        lines.append(f"  lower {np.array2string(self.lower, max_line_width=200)}")
        lines.append(f"  upper {np.array2string(self.upper, max_line_width=200)}")
        return "\n".join(lines)


@dataclass(frozen=True)
class LpSolution:
    """Solve outcome. ``x`` and ``objective`` are None unless Optimal."""

    status: Status
    x: np.ndarray | None
    objective: float | None
    iterations: int


def solve_lp(
    lp: LinearProgram,
    *,
    feasibility_tol: float = FEASIBILITY_TOL,
    optimality_tol: float = OPTIMALITY_TOL,
    pivot_tol: float = PIVOT_TOL,
    entering: str = "hybrid",
) -> LpSolution:
    """Solve ``lp`` to one of Optimal, Infeasible, or Unbounded.

    Deterministic by construction: ratio ties break by smallest
    basic-variable index and the transformation to standard form is
    fixed. ``entering`` picks the column rule, and with it the vertex
    reported among alternate optima:

    - "hybrid": most negative reduced cost, ties by smallest index;
      drops to smallest-index selection while a degenerate stall lasts.
      Fast on the larger occupation-measure programs.
    - "bland": smallest index throughout. Slower but the classic
      anti-cycling rule, used where the reported vertex must not depend
      on magnitudes.

    Free variables are pivoted straight into the basis (the rows they
    own never block a ratio test), so the tableau keeps one column per
    model variable.
    """
    if entering not in ("hybrid", "bland"):
        raise InputError(f"entering rule must be 'hybrid' or 'bland', got {entering!r}")
    n = lp.n_vars
    if np.any(lp.lower > lp.upper):
        return LpSolution(Status.INFEASIBLE, None, None, 0)

    # Shift to y >= 0 where a finite bound allows it: x = sign*y + shift.
    sign = np.ones(n)
    shift = np.zeros(n)
    free = np.zeros(n, dtype=bool)
    bound_rows: list[tuple[int, float]] = []
    for j in range(n):
        lo, up = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            shift[j] = lo
            if np.isfinite(up):
                bound_rows.append((j, up - lo))
        elif np.isfinite(up):
            sign[j] = -1.0
            shift[j] = up
        else:
            free[j] = True

    c_y = lp.objective * sign
    m_eq = lp.eq_rhs.size
    m_ub = lp.ub_rhs.size + len(bound_rows)
    m = m_eq + m_ub
    ncols = n + m_ub

    tab = np.zeros((m, ncols + 1))
    if m_eq:
        tab[:m_eq, :n] = lp.eq_matrix * sign
        tab[:m_eq, -1] = lp.eq_rhs - lp.eq_matrix @ shift
    row = m_eq
    if lp.ub_rhs.size:
        stop = row + lp.ub_rhs.size
        tab[row:stop, :n] = lp.ub_matrix * sign
        tab[row:stop, -1] = lp.ub_rhs - lp.ub_matrix @ shift
        row = stop
    for k, (j, cap) in enumerate(bound_rows):
        tab[row + k, j] = 1.0
        tab[row + k, -1] = cap
    for i in range(m_ub):
        tab[m_eq + i, n + i] = 1.0

    rhs_scale = max(1.0, float(np.max(np.abs(tab[:, -1]))) if m else 1.0)
    basis = np.full(m, -1, dtype=int)
    owned = np.zeros(m, dtype=bool)
    inactive = np.zeros(m, dtype=bool)
    pivots = 0
    pivot_cap = 2000 + 200 * (m + ncols)

    def do_pivot(r: int, c: int) -> None:
        nonlocal tab, pivots
        tab[r] = tab[r] / tab[r, c]
        factors = tab[:, c].copy()
        factors[r] = 0.0
        tab -= np.outer(factors, tab[r])
        tab[:, c] = 0.0
        tab[r, c] = 1.0
        basis[r] = c
        pivots += 1
        if pivots > pivot_cap:
            raise SolverFault(
                f"simplex exceeded {pivot_cap} pivots on a {m}x{ncols} tableau"
            )

    # Free variables enter the basis up front and never leave.
    unpivoted_free: list[int] = []
    for j in np.flatnonzero(free):
        choice = -1
        for r in range(m):
            if not owned[r] and abs(tab[r, j]) > pivot_tol:
                choice = r
                break
        if choice < 0:
            unpivoted_free.append(int(j))
        else:
            do_pivot(choice, int(j))
            owned[choice] = True

    for r in range(m):
        if not owned[r] and tab[r, -1] < 0.0:
            tab[r] *= -1.0

    # Crash basis: a slack row that kept its +1 slack and a nonnegative
    # right side starts from its own slack; everything else (equalities,
    # sign-flipped rows) takes an artificial.
    for i in range(m_ub):
        r = m_eq + i
        if not owned[r] and tab[r, n + i] > pivot_tol and tab[r, -1] >= 0.0:
            do_pivot(r, n + i)

    art_rows = [r for r in range(m) if not owned[r] and basis[r] < 0]
    n_art = len(art_rows)
    total = ncols + n_art
    tab = np.hstack([tab[:, :ncols], np.zeros((m, n_art)), tab[:, -1:]])
    for k, r in enumerate(art_rows):
        tab[r, ncols + k] = 1.0
        basis[r] = ncols + k

    # After this many zero-length steps in a row the entering rule drops
    # to Bland's smallest-index selection until real progress resumes.
    stall_limit = 40
    refresh_every = 512

    def run_phase(cost: np.ndarray, enterable: np.ndarray) -> str:
        in_basis = np.zeros(total, dtype=bool)
        for r in range(m):
            if not inactive[r]:
                in_basis[basis[r]] = True

        def fresh_z() -> np.ndarray:
            acc = -np.concatenate([cost, [0.0]])
            for r in range(m):
                if inactive[r]:
                    continue
                cb = cost[basis[r]]
                if cb != 0.0:
                    acc += cb * tab[r]
            return acc

        z = fresh_z()
        since_refresh = 0
        stalled = 0
        always_bland = entering == "bland"
        bland = always_bland
        while True:
            if since_refresh >= refresh_every:
                z = fresh_z()
                since_refresh = 0
            mask = enterable & ~in_basis & (z[:-1] < -optimality_tol)
            if not mask.any():
                if since_refresh == 0:
                    return "optimal"
                # Incremental updates drift; confirm on a recomputed row.
                z = fresh_z()
                since_refresh = 0
                continue
            if bland:
                col = int(np.flatnonzero(mask)[0])
            else:
                col = int(np.argmin(np.where(mask, z[:-1], np.inf)))
            best_ratio = None
            best_row = -1
            best_bvar = -1
            for r in range(m):
                if owned[r] or inactive[r]:
                    continue
                coeff = tab[r, col]
                if coeff <= pivot_tol:
                    continue
                ratio = max(tab[r, -1], 0.0) / coeff
                bvar = basis[r]
                if (
                    best_row < 0
                    or ratio < best_ratio
                    or (ratio == best_ratio and bvar < best_bvar)
                ):
                    best_ratio, best_row, best_bvar = ratio, r, bvar
            if best_row < 0:
                return "unbounded"
            in_basis[basis[best_row]] = False
            do_pivot(best_row, col)
            in_basis[col] = True
            delta = z[col]
            if delta != 0.0:
                z -= delta * tab[best_row]
            z[col] = 0.0
            since_refresh += 1
            if best_ratio <= 1e-12:
                stalled += 1
                if stalled >= stall_limit:
                    bland = True
            else:
                stalled = 0
                bland = always_bland

    # Phase 1: drive the artificial variables to zero.
    cost1 = np.zeros(total)
    cost1[ncols:] = -1.0
    enterable1 = np.ones(total, dtype=bool)
    enterable1[ncols:] = False
    for j in unpivoted_free:
        enterable1[j] = False
    if run_phase(cost1, enterable1) == "unbounded":
        raise SolverFault("phase-1 objective diverged; the program is numerically degenerate")
    residual = sum(
        max(tab[r, -1], 0.0) for r in range(m) if basis[r] >= ncols and not inactive[r]
    )
    if residual > feasibility_tol * rhs_scale:
        return LpSolution(Status.INFEASIBLE, None, None, pivots)

    # Pivot leftover artificials out; rows that cannot release one are
    # redundant. Fixed-at-zero free columns stay out of the basis.
    blocked = np.zeros(ncols, dtype=bool)
    blocked[unpivoted_free] = True
    for r in range(m):
        if basis[r] >= ncols and not inactive[r]:
            choice = -1
            for j in range(ncols):
                if not blocked[j] and abs(tab[r, j]) > pivot_tol:
                    choice = j
                    break
            if choice < 0:
                inactive[r] = True
            else:
                do_pivot(r, choice)

    # Phase 2 on the real objective.
    cost2 = np.zeros(total)
    cost2[:n] = c_y
    z0 = -np.concatenate([cost2, [0.0]])
    for r in range(m):
        if not inactive[r]:
            cb = cost2[basis[r]]
            if cb != 0.0:
                z0 += cb * tab[r]
    enterable2 = np.ones(total, dtype=bool)
    enterable2[ncols:] = False
    for j in unpivoted_free:
        # Such a column is zero outside rows owned by free basics, so any
        # nonzero reduced cost yields an unblockable improving ray.
        if abs(z0[j]) > optimality_tol:
            return LpSolution(Status.UNBOUNDED, None, None, pivots)
        enterable2[j] = False
    if run_phase(cost2, enterable2) == "unbounded":
        return LpSolution(Status.UNBOUNDED, None, None, pivots)

    y = np.zeros(n)
    for r in range(m):
        if inactive[r]:
            continue
        bvar = basis[r]
        if 0 <= bvar < n:
            val = tab[r, -1]
            if not free[bvar] and -1e-9 < val < 0.0:
                val = 0.0
            y[bvar] = val
    x = sign * y + shift
    return LpSolution(Status.OPTIMAL, _freeze(x), float(lp.objective @ x), pivots)


def residuals(lp: LinearProgram, x: np.ndarray) -> tuple[float, float]:
    """(worst constraint violation, worst bound violation) at a point."""
    worst_con = 0.0
    if lp.eq_rhs.size:
        worst_con = float(np.max(np.abs(lp.eq_matrix @ x - lp.eq_rhs)))
    if lp.ub_rhs.size:
        worst_con = max(worst_con, float(np.max(lp.ub_matrix @ x - lp.ub_rhs)))
    worst_bound = 0.0
    finite_lo = np.isfinite(lp.lower)
    finite_up = np.isfinite(lp.upper)
    if finite_lo.any():
        worst_bound = float(np.max(lp.lower[finite_lo] - x[finite_lo]))
    if finite_up.any():
        worst_bound = max(worst_bound, float(np.max(x[finite_up] - lp.upper[finite_up])))
    return max(worst_con, 0.0), max(worst_bound, 0.0)
