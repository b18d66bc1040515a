"""Decision procedures on a mesh: avoidance of sure loss and coherence.

Avoidance of sure loss (ASL) for bounds A <= B means some k-increasing C
fits between them; equivalently every formal union of k-boxes has
nonnegative L.  `check_asl` decides it twice — once through the normalized
minimum of L, once through direct feasibility of the sandwich polytope — and
treats any disagreement as an internal error: on a finite mesh the two are
linked by LP duality, so a mismatch can only be a solver bug.

Coherence sharpens ASL per node: the upper bound is coherent when it is the
pointwise supremum of the sandwiched k-increasing functions (equivalently
P- >= B - A everywhere), the lower bound when it is the pointwise infimum
(P+ >= B - A).  Both characterizations are evaluated and must agree node by
node.

All procedures are pure; distinct calls may run concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from kboxkit.errors import (
    DomainError,
    InternalInvariantError,
    InvalidParameterError,
    PreconditionError,
)
from kboxkit.construct import check_k_increasing
from kboxkit.functionals import _elementary, min_l_optimum, p_neg, p_pos
from kboxkit.kbox import BoxUnion, box_volume, l_value, vertex_sign
from kboxkit.lp import GE, LE, LpProblem, solve_via_dual
from kboxkit.mesh import (
    GridFunction,
    Node,
    format_rational,
    pointwise_leq,
    structural_check,
)

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class AslVerdict:
    """Outcome of the avoidance-of-sure-loss check: either a violating
    union with L < 0 or a sandwiched k-increasing function, never both."""

    satisfied: bool
    violating_union: BoxUnion | None
    feasible_c: GridFunction | None

    def to_json_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "violating_union": (
                self.violating_union.to_json_dict() if self.violating_union else None
            ),
            "feasible_c": (
                self.feasible_c.to_json_dict() if self.feasible_c else None
            ),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


@dataclass(frozen=True)
class CoherenceReport:
    """Per-node coherence of one bound.  Each record carries the node, the
    relevant infimum functional value, the gap B - A, and the attained
    sup/inf of the sandwiched functions at that node."""

    side: str  # "upper" | "lower"
    coherent: bool
    per_node: tuple[tuple[Node, Fraction, Fraction, Fraction], ...]
    witnesses: tuple[Node, ...]

    def to_json_dict(self) -> dict:
        return {
            "side": self.side,
            "coherent": self.coherent,
            "witnesses": [list(w) for w in self.witnesses],
            "per_node": [
                {
                    "node": list(node),
                    "functional": format_rational(fval),
                    "gap": format_rational(gap),
                    "attained": format_rational(att),
                }
                for node, fval, gap, att in self.per_node
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _structural_precondition(f: GridFunction, name: str) -> None:
    report = structural_check(f)
    if not report.grounded or not report.one_increasing:
        raise PreconditionError(
            f"{name} must be grounded and 1-increasing",
            witness=report.witnesses,
        )


def _sandwich_lp(
    a: GridFunction, b: GridFunction, k: int, objective_node: Node | None
):
    """LP over the sandwich polytope {C : A <= C <= B, all elementary
    k-box volumes of C >= 0}, parametrized by shifted values C - A at the
    nodes where B > A.  Upper bounds are explicit rows so the problem stays
    dualizable.  Returns (problem, free node index map)."""
    mesh = a.mesh
    free: dict[Node, int] = {}
    for node in mesh.nodes():
        if a.value(node) != b.value(node):
            free[node] = len(free)
    nf = len(free)
    rows = []
    for box in _elementary(mesh, k):
        coeffs = [ZERO] * nf
        for v in box.vertices():
            if v in free:
                coeffs[free[v]] += vertex_sign(box, v)
        rows.append((tuple(coeffs), GE, -box_volume(a, box)))
    for node, i in free.items():
        coeffs = [ZERO] * nf
        coeffs[i] = ONE
        rows.append((tuple(coeffs), LE, b.value(node) - a.value(node)))
    obj = [ZERO] * nf
    if objective_node is None:
        obj = [ONE] * nf  # any bounded objective decides feasibility
    elif objective_node in free:
        obj[free[objective_node]] = ONE
    problem = LpProblem(
        sense="max", objective=tuple(obj), rows=tuple(rows)
    )
    return problem, free


def _sandwich_solve(a, b, k, objective_node, sense, mode):
    problem, free = _sandwich_lp(a, b, k, objective_node)
    if sense == "min":
        problem = LpProblem(
            sense="min", objective=problem.objective, rows=problem.rows
        )
    sol = solve_via_dual(problem, mode=mode)
    return sol, free


def check_asl(
    a: GridFunction, b: GridFunction, k: int, mode: str = "exact"
) -> AslVerdict:
    """Decide avoidance of sure loss by two independent procedures and
    demand agreement: the normalized minimum of L over unions, and direct
    feasibility of the sandwich polytope."""
    if a.mesh != b.mesh:
        raise InvalidParameterError("bounds live on different meshes")
    bad = pointwise_leq(a, b)
    if bad is not None:
        raise PreconditionError(
            f"lower bound exceeds upper bound at {bad}", witness=bad
        )
    _structural_precondition(a, "lower bound")
    _structural_precondition(b, "upper bound")
    if not 1 <= k <= a.mesh.n:
        raise InvalidParameterError(f"k={k} outside [1, {a.mesh.n}]")

    opt, violating = min_l_optimum(a, b, k, mode=mode)
    by_min_l = opt >= 0

    if pointwise_leq(b, a) is None:  # A = B everywhere: C is forced
        by_sandwich = check_k_increasing(a, k).passed
        sol, free = None, {}
    else:
        sol, free = _sandwich_solve(a, b, k, None, "max", mode)
        by_sandwich = sol.status == "optimal"

    if by_min_l != by_sandwich:
        raise InternalInvariantError(
            "the L-minimum and the sandwich polytope disagree on feasibility; "
            "grid-level duality rules this out, so a solver bug is present"
        )
    if not by_min_l:
        if mode == "exact" and l_value(a, b, violating) >= 0:
            raise InternalInvariantError("violating union fails to certify L < 0")
        return AslVerdict(satisfied=False, violating_union=violating, feasible_c=None)

    values = list(a.values)
    nodes = list(a.mesh.nodes())
    for node, i in free.items():
        values[a.mesh.flat_index(node)] += sol.primal[i]
    c = GridFunction(a.mesh, tuple(values), label="feasible")
    if mode == "exact":
        if pointwise_leq(a, c) is not None or pointwise_leq(c, b) is not None:
            raise InternalInvariantError("extracted function leaves the sandwich")
        if not check_k_increasing(c, k).passed:
            raise InternalInvariantError("extracted function is not k-increasing")
    return AslVerdict(satisfied=True, violating_union=None, feasible_c=c)


def _require_asl(a, b, k, mode):
    opt, witness = min_l_optimum(a, b, k, mode=mode)
    if opt < 0:
        raise DomainError(
            "avoidance of sure loss fails; sup/inf over an empty sandwich "
            "is undefined"
        )


def pointwise_sup(
    a: GridFunction, b: GridFunction, x: Node, k: int, mode: str = "exact"
) -> Fraction:
    """Largest value at x over all sandwiched k-increasing grid functions."""
    _require_asl(a, b, k, mode)
    if a.value(x) == b.value(x):
        return a.value(x)
    sol, free = _sandwich_solve(a, b, k, x, "max", mode)
    if sol.status != "optimal":
        raise InternalInvariantError("sandwich became infeasible after ASL held")
    return a.value(x) + sol.primal[free[x]]


def pointwise_inf(
    a: GridFunction, b: GridFunction, x: Node, k: int, mode: str = "exact"
) -> Fraction:
    """Smallest value at x over all sandwiched k-increasing grid functions."""
    _require_asl(a, b, k, mode)
    if a.value(x) == b.value(x):
        return a.value(x)
    sol, free = _sandwich_solve(a, b, k, x, "min", mode)
    if sol.status != "optimal":
        raise InternalInvariantError("sandwich became infeasible after ASL held")
    return a.value(x) + sol.primal[free[x]]


def _coherence(
    a: GridFunction, b: GridFunction, k: int, side: str, mode: str
) -> CoherenceReport:
    _require_asl(a, b, k, mode)
    per_node = []
    witnesses = []
    for node in a.mesh.nodes():
        gap = b.value(node) - a.value(node)
        if side == "upper":
            fval = p_neg(a, b, node, k, mode=mode).value
            attained = pointwise_sup(a, b, node, k, mode=mode)
            by_functional = fval >= gap
            by_attainment = attained == b.value(node)
        else:
            fval = p_pos(a, b, node, k, mode=mode).value
            attained = pointwise_inf(a, b, node, k, mode=mode)
            by_functional = fval >= gap
            by_attainment = attained == a.value(node)
        if by_functional != by_attainment:
            raise InternalInvariantError(
                f"coherence characterizations disagree at {node}; the two are "
                "equivalent at grid level, so a solver bug is present"
            )
        per_node.append((node, fval, gap, attained))
        if not by_functional:
            witnesses.append(node)
    return CoherenceReport(
        side=side,
        coherent=not witnesses,
        per_node=tuple(per_node),
        witnesses=tuple(witnesses),
    )


def coherence_upper(
    a: GridFunction, b: GridFunction, k: int, mode: str = "exact"
) -> CoherenceReport:
    """Is B the pointwise sup of the sandwiched k-increasing functions?
    Checked both as P- >= B - A and as attainment of B by the sup."""
    return _coherence(a, b, k, "upper", mode)


def coherence_lower(
    a: GridFunction, b: GridFunction, k: int, mode: str = "exact"
) -> CoherenceReport:
    """Is A the pointwise inf of the sandwiched k-increasing functions?"""
    return _coherence(a, b, k, "lower", mode)


@dataclass(frozen=True)
class LipschitzReport:
    """1-Lipschitz check along grid axes (enough by the triangle
    inequality): |f(u) - f(v)| <= |u_i - v_i| for axis neighbors."""

    passed: bool
    violations: tuple[tuple[Node, Node, Fraction, Fraction], ...]


def lipschitz_check(f: GridFunction) -> LipschitzReport:
    mesh = f.mesh
    violations = []
    for node in mesh.nodes():
        for axis in range(mesh.n):
            if node[axis] + 1 >= mesh.shape[axis]:
                continue
            succ = node[:axis] + (node[axis] + 1,) + node[axis + 1 :]
            diff = f.value(succ) - f.value(node)
            step = mesh.axes[axis][node[axis] + 1] - mesh.axes[axis][node[axis]]
            if abs(diff) > step:
                violations.append((node, succ, diff, step))
    return LipschitzReport(passed=not violations, violations=tuple(violations))
