"""Self-contained linear-program solver: dense two-phase simplex.

Exact mode pivots in rational arithmetic (gmpy2.mpq internally, Fractions at
the API), so optima, feasibility verdicts, and dual certificates are exact.
Float mode runs the identical pivoting with a 1e-9 feasibility tolerance as a
performance escape hatch.

Pricing is Dantzig's rule with deterministic tie-breaking; after a streak of
degenerate pivots the solver switches to Bland's rule, which guarantees
termination and keeps reruns byte-identical.  Every exact solve self-checks
primal feasibility and the strong-duality identity and raises
InternalInvariantError on any discrepancy.

`dualize` builds the symmetric dual of a problem with nonnegative variables;
`solve_via_dual` exploits it to solve wide problems (many rows, few columns)
in the cheaper orientation while recovering and re-verifying the primal
solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from gmpy2 import mpq

from kboxkit.errors import InternalInvariantError, InvalidParameterError

LE, GE, EQ = "<=", ">=", "="
_RELATIONS = (LE, GE, EQ)

_BLAND_TRIGGER = 40
_FLOAT_TOL = 1e-9
_FLOAT_CHECK_TOL = 1e-6

Bound = tuple[Fraction | None, Fraction | None]
Row = tuple[tuple[Fraction, ...], str, Fraction]


def _fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class LpProblem:
    """min or max of objective . x over rows of linear constraints.

    Variable bounds default to x >= 0; a bound of None means unbounded on
    that side, so (None, None) declares a free variable.
    """

    sense: str
    objective: tuple[Fraction, ...]
    rows: tuple[Row, ...]
    bounds: tuple[Bound, ...] | None = None

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise InvalidParameterError(f"unknown sense {self.sense!r}")
        width = len(self.objective)
        for coeffs, rel, _rhs in self.rows:
            if len(coeffs) != width:
                raise InvalidParameterError("row width differs from objective")
            if rel not in _RELATIONS:
                raise InvalidParameterError(f"unknown relation {rel!r}")
        if self.bounds is not None:
            if len(self.bounds) != width:
                raise InvalidParameterError("bounds width differs from objective")
            for lb, ub in self.bounds:
                if lb is not None and ub is not None and ub < lb:
                    raise InvalidParameterError("lower bound exceeds upper bound")

    @classmethod
    def make(cls, sense, objective, rows, bounds=None) -> LpProblem:
        """Coerce plain numbers to Fractions and build a problem."""
        obj = tuple(_fr(c) for c in objective)
        rws = tuple(
            (tuple(_fr(a) for a in coeffs), rel, _fr(rhs)) for coeffs, rel, rhs in rows
        )
        bnd = None
        if bounds is not None:
            bnd = tuple(
                (None if lb is None else _fr(lb), None if ub is None else _fr(ub))
                for lb, ub in bounds
            )
        return cls(sense=sense, objective=obj, rows=rws, bounds=bnd)

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def effective_bounds(self) -> tuple[Bound, ...]:
        if self.bounds is not None:
            return self.bounds
        return ((Fraction(0), None),) * self.n_vars


@dataclass(frozen=True)
class LpSolution:
    """Solve certificate.  `dual` holds one multiplier per problem row; for
    problems with zero lower bounds and no finite upper bounds the duals
    satisfy value == dual . rhs exactly in exact mode."""

    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None
    primal: tuple[Fraction, ...] | None
    dual: tuple[Fraction, ...] | None
    pivots: int = 0


def _pivot(tableau, cost_rows, basis, r, c):
    row = tableau[r]
    inv = 1 / row[c]
    if inv != 1:
        row = [v * inv for v in row]
        tableau[r] = row
    for i, other in enumerate(tableau):
        if i != r:
            f = other[c]
            if f:
                tableau[i] = [a - f * b for a, b in zip(other, row)]
    for k, costs in enumerate(cost_rows):
        f = costs[c]
        if f:
            cost_rows[k] = [a - f * b for a, b in zip(costs, row)]
    basis[r] = c


def _run_simplex(tableau, cost_rows, basis, barred, m, n_cols, tol):
    """Minimize the first cost row.  Returns (status, pivot count)."""
    costs = cost_rows[0]
    pivots = 0
    streak = 0
    bland = False
    while True:
        costs = cost_rows[0]
        enter = -1
        if bland:
            for j in range(n_cols):
                if not barred[j] and costs[j] < -tol:
                    enter = j
                    break
        else:
            best = -tol
            for j in range(n_cols):
                if not barred[j] and costs[j] < best:
                    best = costs[j]
                    enter = j
        if enter < 0:
            return "optimal", pivots
        leave = -1
        best_ratio = None
        for i in range(m):
            a = tableau[i][enter]
            if a > tol:
                ratio = tableau[i][n_cols] / a
                if best_ratio is None or ratio < best_ratio:
                    best_ratio = ratio
                    leave = i
                elif bland and ratio == best_ratio and basis[i] < basis[leave]:
                    leave = i
        if leave < 0:
            return "unbounded", pivots
        degenerate = best_ratio <= tol
        _pivot(tableau, cost_rows, basis, leave, enter)
        pivots += 1
        streak = streak + 1 if degenerate else 0
        if streak >= _BLAND_TRIGGER:
            bland = True


def format_tableau(tableau, basis) -> str:
    """Plain-text dump of a simplex tableau (debugging aid)."""
    lines = []
    for i, row in enumerate(tableau):
        cells = "  ".join(str(v) for v in row)
        lines.append(f"x{basis[i]:<4} | {cells}")
    return "\n".join(lines)


def solve(p: LpProblem, mode: str = "exact", trace=None) -> LpSolution:
    """Two-phase simplex.  In exact mode the reported value is the true
    optimum and the solution is self-checked against the constraints and the
    strong-duality identity."""
    if mode not in ("exact", "float"):
        raise InvalidParameterError(f"unknown mode {mode!r}")
    exact = mode == "exact"
    tol = mpq(0) if exact else _FLOAT_TOL
    zero = mpq(0) if exact else 0.0
    one = mpq(1) if exact else 1.0
    if exact:
        def cv(x):
            return mpq(x.numerator, x.denominator)
    else:
        cv = float

    n_orig = p.n_vars
    bounds = p.effective_bounds()

    # Reduce every variable to a nonnegative one: shift when a finite lower
    # bound exists, reflect when only an upper bound does, split when free.
    transforms = []
    n_struct = 0
    cap_rows = []  # (column, residual upper bound)
    for lb, ub in bounds:
        if lb is not None:
            transforms.append(("shift", n_struct, cv(lb)))
            if ub is not None:
                cap_rows.append((n_struct, cv(ub) - cv(lb)))
            n_struct += 1
        elif ub is not None:
            transforms.append(("reflect", n_struct, cv(ub)))
            n_struct += 1
        else:
            transforms.append(("split", n_struct, n_struct + 1))
            n_struct += 2

    sense_sign = 1 if p.sense == "min" else -1
    cost = [zero] * n_struct
    const = zero
    for j, cj in enumerate(p.objective):
        c = cv(cj) * sense_sign
        if not c:
            continue
        tr = transforms[j]
        if tr[0] == "shift":
            cost[tr[1]] += c
            const += c * tr[2]
        elif tr[0] == "reflect":
            cost[tr[1]] -= c
            const += c * tr[2]
        else:
            cost[tr[1]] += c
            cost[tr[2]] -= c

    std_rows = []  # (coeff list, relation, rhs)
    for coeffs, rel, rhs in p.rows:
        row = [zero] * n_struct
        b = cv(rhs)
        for j, aij in enumerate(coeffs):
            if not aij:
                continue
            a = cv(aij)
            tr = transforms[j]
            if tr[0] == "shift":
                row[tr[1]] += a
                b -= a * tr[2]
            elif tr[0] == "reflect":
                row[tr[1]] -= a
                b -= a * tr[2]
            else:
                row[tr[1]] += a
                row[tr[2]] -= a
        std_rows.append((row, rel, b))
    for col, cap in cap_rows:
        row = [zero] * n_struct
        row[col] = one
        std_rows.append((row, LE, cap))

    # Normalize right-hand sides to be nonnegative, then attach slack,
    # surplus, and artificial columns.
    m = len(std_rows)
    flips = []
    rels = []
    mat = []
    rhs_vec = []
    for row, rel, b in std_rows:
        if b < zero:
            row = [-v for v in row]
            b = -b
            rel = GE if rel == LE else (LE if rel == GE else EQ)
            flips.append(-1)
        else:
            flips.append(1)
        mat.append(row)
        rels.append(rel)
        rhs_vec.append(b)

    slack_col = {}
    art_col = {}
    n_cols = n_struct
    for i, rel in enumerate(rels):
        if rel in (LE, GE):
            slack_col[i] = n_cols
            n_cols += 1
    for i, rel in enumerate(rels):
        if rel in (GE, EQ):
            art_col[i] = n_cols
            n_cols += 1
    artificials = set(art_col.values())

    tableau = []
    basis = []
    for i in range(m):
        row = mat[i] + [zero] * (n_cols - n_struct) + [rhs_vec[i]]
        if i in slack_col:
            row[slack_col[i]] = one if rels[i] == LE else -one
        if i in art_col:
            row[art_col[i]] = one
        tableau.append(row)
        basis.append(art_col.get(i, slack_col.get(i)))

    barred = [False] * n_cols
    for j in artificials:
        barred[j] = True  # may start basic but never re-enter

    total_pivots = 0
    cost_rows = []
    if artificials:
        costs1 = [zero] * (n_cols + 1)
        for i in range(m):
            if basis[i] in artificials:
                costs1 = [a - b for a, b in zip(costs1, tableau[i])]
        cost_rows = [costs1]
        status, pivots = _run_simplex(
            tableau, cost_rows, basis, barred, m, n_cols, tol
        )
        total_pivots += pivots
        if status != "optimal":
            raise InternalInvariantError("phase-1 objective is bounded by 0")
        residual = sum(
            (tableau[i][n_cols] for i in range(m) if basis[i] in artificials), zero
        )
        if residual > (tol if not exact else zero):
            return LpSolution("infeasible", None, None, None, total_pivots)
        # Pivot surviving zero-valued artificials out where possible.
        for i in range(m):
            if basis[i] in artificials:
                for j in range(n_cols):
                    if not barred[j]:
                        a = tableau[i][j]
                        if (a if a > zero else -a) > tol:
                            _pivot(tableau, cost_rows, basis, i, j)
                            total_pivots += 1
                            break

    costs2 = [cost[j] if j < n_struct else zero for j in range(n_cols)] + [const]
    for i in range(m):
        cb = cost[basis[i]] if basis[i] < n_struct else zero
        if cb:
            costs2 = [a - cb * b for a, b in zip(costs2, tableau[i])]
    cost_rows = [costs2]
    status, pivots = _run_simplex(tableau, cost_rows, basis, barred, m, n_cols, tol)
    total_pivots += pivots
    if trace is not None:
        trace.write(format_tableau(tableau, basis) + "\n")
    if status == "unbounded":
        return LpSolution("unbounded", None, None, None, total_pivots)

    costs2 = cost_rows[0]
    x_std = [zero] * n_cols
    for i in range(m):
        x_std[basis[i]] = tableau[i][n_cols]
    z = const + sum(
        (cost[basis[i]] * tableau[i][n_cols] for i in range(m) if basis[i] < n_struct),
        zero,
    )

    primal = []
    for tr in transforms:
        if tr[0] == "shift":
            primal.append(x_std[tr[1]] + tr[2])
        elif tr[0] == "reflect":
            primal.append(tr[2] - x_std[tr[1]])
        else:
            primal.append(x_std[tr[1]] - x_std[tr[2]])

    # Dual of row i from the reduced cost of its +1 unit column.
    y_std = []
    for i in range(m):
        col = art_col.get(i, slack_col.get(i))
        sigma = one
        if i not in art_col and rels[i] == GE:
            sigma = -one
        y_std.append(-costs2[col] / sigma)
    dual = tuple(
        _as_fraction(sense_sign * flips[i] * y_std[i], exact) for i in range(len(p.rows))
    )

    value = _as_fraction(sense_sign * z, exact)
    primal_fr = tuple(_as_fraction(v, exact) for v in primal)
    _self_check(p, value, primal_fr, z - const, y_std, rhs_vec, exact)
    return LpSolution("optimal", value, primal_fr, dual, total_pivots)


def _as_fraction(v, exact) -> Fraction:
    if exact:
        return Fraction(int(v.numerator), int(v.denominator))
    return Fraction(v)


def _self_check(p, value, primal, z_shifted, y_std, rhs_vec, exact):
    tol = Fraction(0) if exact else Fraction(_FLOAT_CHECK_TOL)

    obj = sum((c * x for c, x in zip(p.objective, primal)), Fraction(0))
    if abs(obj - value) > tol:
        raise InternalInvariantError("objective value does not match primal")

    for idx, (coeffs, rel, rhs) in enumerate(p.rows):
        lhs = sum((a * x for a, x in zip(coeffs, primal)), Fraction(0))
        ok = (
            lhs <= rhs + tol
            if rel == LE
            else lhs >= rhs - tol if rel == GE else abs(lhs - rhs) <= tol
        )
        if not ok:
            raise InternalInvariantError(f"optimal point violates row {idx}")
    for x, (lb, ub) in zip(primal, p.effective_bounds()):
        if lb is not None and x < lb - tol:
            raise InternalInvariantError("optimal point violates a lower bound")
        if ub is not None and x > ub + tol:
            raise InternalInvariantError("optimal point violates an upper bound")

    # Strong duality on the standardized form: objective == duals . rhs.
    dual_obj = sum((y * b for y, b in zip(y_std, rhs_vec)), 0 * z_shifted)
    gap = z_shifted - dual_obj
    if (abs(Fraction(str(gap))) if not exact else abs(gap)) > tol:
        raise InternalInvariantError("strong-duality gap on standardized form")


def dualize(p: LpProblem) -> LpProblem:
    """Symmetric dual of a problem whose variables are all nonnegative
    (default bounds).  Row relations map to dual variable signs; primal
    variables map to dual rows sharing the objective coefficients as
    right-hand sides."""
    for lb, ub in p.effective_bounds():
        if lb != 0 or ub is not None:
            raise InvalidParameterError(
                "dualize needs default bounds; encode other bounds as rows"
            )
    if p.sense == "min":
        dual_sense = "max"
        var_rel = LE
        bound_of = {GE: (Fraction(0), None), LE: (None, Fraction(0)), EQ: (None, None)}
    else:
        dual_sense = "min"
        var_rel = GE
        bound_of = {LE: (Fraction(0), None), GE: (None, Fraction(0)), EQ: (None, None)}
    dual_rows = tuple(
        (tuple(row[0][j] for row in p.rows), var_rel, p.objective[j])
        for j in range(p.n_vars)
    )
    return LpProblem(
        sense=dual_sense,
        objective=tuple(row[2] for row in p.rows),
        rows=dual_rows,
        bounds=tuple(bound_of[row[1]] for row in p.rows),
    )


def solve_via_dual(p: LpProblem, mode: str = "exact") -> LpSolution:
    """Solve a wide problem through its dual (fewer tableau rows) and read
    the primal solution off the dual multipliers, re-verifying it exactly.
    Falls back to a direct solve when the dual verdict is ambiguous."""
    dual = dualize(p)
    ds = solve(dual, mode=mode)
    if ds.status == "unbounded":
        return LpSolution("infeasible", None, None, None, ds.pivots)
    if ds.status != "optimal":
        # Dual infeasible: primal is unbounded or infeasible; decide directly.
        direct = solve(p, mode=mode)
        return LpSolution(
            direct.status,
            direct.value,
            direct.primal,
            direct.dual,
            ds.pivots + direct.pivots,
        )
    primal = ds.dual
    value = ds.value
    tol = Fraction(0) if mode == "exact" else Fraction(_FLOAT_CHECK_TOL)
    obj = sum((c * x for c, x in zip(p.objective, primal)), Fraction(0))
    if abs(obj - value) > tol:
        raise InternalInvariantError("recovered primal misses the dual optimum")
    for idx, (coeffs, rel, rhs) in enumerate(p.rows):
        lhs = sum((a * x for a, x in zip(coeffs, primal)), Fraction(0))
        ok = (
            lhs <= rhs + tol
            if rel == LE
            else lhs >= rhs - tol if rel == GE else abs(lhs - rhs) <= tol
        )
        if not ok:
            raise InternalInvariantError(f"recovered primal violates row {idx}")
    for x in primal:
        if x < -tol:
            raise InternalInvariantError("recovered primal violates nonnegativity")
    return LpSolution("optimal", value, primal, ds.primal, ds.pivots)
