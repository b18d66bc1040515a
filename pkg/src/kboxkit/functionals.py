"""Per-point infimum functionals over formal unions of k-boxes.

For bounds A <= B on a mesh, P- at a point x is the infimum of
L(union) / |multiplicity at x| over unions with negative multiplicity at x;
P+ is the positive-multiplicity counterpart.  gamma = min{P-, B - A} and
delta = min{P+, B - A} are the raise/lower increments of the construction
sweeps.  An empty infimum takes the convention value 0 (flagged, never a
sentinel inside arithmetic).

The infima are computed exactly by a linear program.  L is positively
homogeneous, so fixing |multiplicity| = 1 turns the fractional objective into
a linear one; the per-node max{mu*A, mu*B} terms linearize by splitting each
node multiplicity mu into a positive and a negative part (B prices the
positive part, A the negative one, and B >= A drives the split to
complementarity at the optimum).  Generators are the *elementary* k-boxes
only: cutting a box preserves every multiplicity, so each union is
multiplicity-equivalent to an elementary one with the same L, and the
restriction is exact while shrinking the LP by orders of magnitude.

A brute-force oracle enumerating small box multisets independently
upper-bounds the LP values, and `min_l_optimum` decides nonnegativity of L
over all unions (the avoidance-of-sure-loss criterion) with a violating
union as certificate when the optimum is negative.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from kboxkit.errors import (
    FunctionalUnboundedError,
    InternalInvariantError,
    InvalidParameterError,
    PreconditionError,
)
from kboxkit.kbox import (
    BoxUnion,
    KBox,
    enumerate_elementary_kboxes,
    enumerate_kboxes,
    l_value,
    multiplicity,
    vertex_sign,
)
from kboxkit.lp import EQ, LpProblem, solve
from kboxkit.mesh import GridFunction, GridMesh, Node, format_rational, pointwise_leq

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class FunctionalValue:
    """Value of a per-point infimum.  `empty` marks the convention value 0
    for an empty infimum set; `attained` says a witness union achieves the
    value (always true for LP optima on a finite mesh)."""

    value: Fraction
    witness: BoxUnion | None
    attained: bool
    empty: bool = False


@lru_cache(maxsize=64)
def _elementary(mesh: GridMesh, k: int) -> tuple[KBox, ...]:
    return tuple(enumerate_elementary_kboxes(mesh, k))


@lru_cache(maxsize=64)
def _all_boxes(mesh: GridMesh, k: int) -> tuple[KBox, ...]:
    return tuple(enumerate_kboxes(mesh, k))


def _require_sandwich(a: GridFunction, b: GridFunction) -> None:
    if a.mesh != b.mesh:
        raise InvalidParameterError("bounds live on different meshes")
    bad = pointwise_leq(a, b)
    if bad is not None:
        raise PreconditionError(
            f"lower bound exceeds upper bound at {bad}", witness=bad
        )


def _ray_lp(
    a: GridFunction,
    b: GridFunction,
    x: Node,
    k: int,
    sigma: int,
    normalization: str,
) -> tuple[LpProblem, tuple[KBox, ...]]:
    """LP whose value is the infimum of L over elementary-generated unions,
    normalized either by |multiplicity at x| = 1 (sigma gives the sign) or
    by total box weight 1 ("simplex" normalization, x ignored).

    Variables: one ray weight per elementary box, then a positive/negative
    multiplicity split per node where A < B.  Nodes with A = B price
    directly into the box-weight objective coefficients.
    """
    mesh = a.mesh
    boxes = _elementary(mesh, k)
    nb = len(boxes)

    split_index: dict[Node, int] = {}
    for node in mesh.nodes():
        if a.value(node) != b.value(node):
            split_index[node] = len(split_index)
    ns = len(split_index)
    nv = nb + 2 * ns  # t_R weights, then (mu+, mu-) per split node

    obj = [ZERO] * nv
    balance = [[ZERO] * nv for _ in range(ns)]
    norm_row = [ZERO] * nv

    for col, box in enumerate(boxes):
        for v in box.vertices():
            s = vertex_sign(box, v)
            if v in split_index:
                balance[split_index[v]][col] += s
            else:
                obj[col] += s * a.value(v)  # A == B here
            if normalization == "point" and v == x:
                norm_row[col] += sigma * s

    for node, i in split_index.items():
        pos = nb + 2 * i
        neg = nb + 2 * i + 1
        obj[pos] = b.value(node)
        obj[neg] = -a.value(node)
        balance[i][pos] = -ONE
        balance[i][neg] = ONE

    rows = [(tuple(r), EQ, ZERO) for r in balance]
    if normalization == "point":
        rows.append((tuple(norm_row), EQ, ONE))
    else:
        weight = [ONE] * nb + [ZERO] * (2 * ns)
        rows.append((tuple(weight), EQ, ONE))
    problem = LpProblem(sense="min", objective=tuple(obj), rows=tuple(rows))
    return problem, boxes


def _witness_from_weights(
    weights, boxes: tuple[KBox, ...], k: int
) -> BoxUnion:
    """Clear denominators of the optimal ray weights into integer counts."""
    scale = 1
    for w in weights:
        if w:
            scale = scale * w.denominator // math.gcd(scale, w.denominator)
    counts = {}
    for w, box in zip(weights, boxes):
        if w:
            counts[box] = counts.get(box, 0) + int(w * scale)
    return BoxUnion.from_counts(counts, k=k)


def _point_infimum(
    a: GridFunction, b: GridFunction, x: Node, k: int, sigma: int, mode: str
) -> FunctionalValue:
    _require_sandwich(a, b)
    mesh = a.mesh
    if not 1 <= k <= mesh.n:
        raise InvalidParameterError(f"k={k} outside [1, {mesh.n}]")
    if len(x) != mesh.n or any(not 0 <= c < g for c, g in zip(x, mesh.shape)):
        raise InvalidParameterError(f"{x} is not a mesh node index")
    problem, boxes = _ray_lp(a, b, x, k, sigma, normalization="point")
    sol = solve(problem, mode=mode)
    if sol.status == "infeasible":
        return FunctionalValue(value=ZERO, witness=None, attained=False, empty=True)
    if sol.status == "unbounded":
        raise FunctionalUnboundedError(
            f"infimum at {x} is -infinity; the bounds admit arbitrarily "
            "negative unions (avoidance of sure loss fails)"
        )
    witness = _witness_from_weights(sol.primal[: len(boxes)], boxes, k)
    if mode == "exact":
        m = multiplicity(witness, x)
        if m * sigma <= 0 or l_value(a, b, witness) != sol.value * abs(m):
            raise InternalInvariantError("witness union does not certify the optimum")
    return FunctionalValue(value=sol.value, witness=witness, attained=True)


def p_neg(
    a: GridFunction, b: GridFunction, x: Node, k: int, mode: str = "exact"
) -> FunctionalValue:
    """Infimum of L/|m(x)| over unions with negative multiplicity at x."""
    return _point_infimum(a, b, x, k, -1, mode)


def p_pos(
    a: GridFunction, b: GridFunction, x: Node, k: int, mode: str = "exact"
) -> FunctionalValue:
    """Infimum of L/m(x) over unions with positive multiplicity at x."""
    return _point_infimum(a, b, x, k, +1, mode)


def _adjacent_boxes_at(mesh: GridMesh, x: Node, k: int):
    """Elementary k-boxes having x as a vertex."""
    per_axis = []
    for i, (c, g) in enumerate(zip(x, mesh.shape)):
        opts = [(c, c)]
        if c > 0:
            opts.append((c - 1, c))
        if c < g - 1:
            opts.append((c, c + 1))
        per_axis.append(opts)
    for corners in itertools.product(*per_axis):
        if sum(1 for l, u in corners if l < u) == k:
            yield KBox(tuple(c[0] for c in corners), tuple(c[1] for c in corners))


def _single_box_zero(
    a: GridFunction, b: GridFunction, x: Node, k: int, sigma: int
) -> bool:
    """True when some elementary box with sign sigma at x has L = 0, which
    pins the infimum to 0 whenever it is known to be nonnegative."""
    for box in _adjacent_boxes_at(a.mesh, x, k):
        if vertex_sign(box, x) != sigma:
            continue
        total = ZERO
        for v in box.vertices():
            m = vertex_sign(box, v)
            total += m * (b.value(v) if m > 0 else a.value(v))
        if total == 0:
            return True
    return False


def gamma(
    a: GridFunction,
    b: GridFunction,
    x: Node,
    k: int,
    mode: str = "exact",
    assume_nonneg: bool = False,
) -> Fraction:
    """min{P-(x), B(x) - A(x)}, the raise increment at x.

    With `assume_nonneg` the caller certifies L >= 0 on all unions (so the
    infimum is >= 0); cheap zero certificates then skip the LP.  The empty
    infimum keeps its convention value 0.
    """
    gap = b.value(x) - a.value(x)
    if assume_nonneg:
        if gap == 0 or _single_box_zero(a, b, x, k, -1):
            return ZERO
    fv = p_neg(a, b, x, k, mode=mode)
    return min(fv.value, gap)


def delta(
    a: GridFunction,
    b: GridFunction,
    x: Node,
    k: int,
    mode: str = "exact",
    assume_nonneg: bool = False,
) -> Fraction:
    """min{P+(x), B(x) - A(x)}, the lower increment at x."""
    gap = b.value(x) - a.value(x)
    if assume_nonneg:
        if gap == 0 or _single_box_zero(a, b, x, k, +1):
            return ZERO
    fv = p_pos(a, b, x, k, mode=mode)
    return min(fv.value, gap)


def brute_force_infimum(
    a: GridFunction,
    b: GridFunction,
    x: Node,
    k: int,
    max_boxes: int,
    side: str = "neg",
) -> FunctionalValue:
    """Exhaustive minimum of L/|m(x)| over multisets of at most max_boxes
    mesh k-boxes (all boxes, not only elementary) whose multiplicity at x
    has the required sign.  Independent oracle for p_neg/p_pos: it always
    upper-bounds the LP value, with equality once max_boxes covers an
    optimal witness."""
    if max_boxes < 1:
        raise InvalidParameterError("max_boxes must be >= 1")
    if side not in ("neg", "pos"):
        raise InvalidParameterError(f"unknown side {side!r}")
    _require_sandwich(a, b)
    sigma = -1 if side == "neg" else 1
    boxes = _all_boxes(a.mesh, k)
    vertex_data = []
    for box in boxes:
        vertex_data.append(tuple((v, vertex_sign(box, v)) for v in box.vertices()))

    best: tuple[Fraction, dict] | None = None
    for size in range(1, max_boxes + 1):
        for combo in itertools.combinations_with_replacement(range(len(boxes)), size):
            mult: dict[Node, int] = {}
            for idx in combo:
                for v, s in vertex_data[idx]:
                    mult[v] = mult.get(v, 0) + s
            mx = mult.get(x, 0)
            if mx * sigma <= 0:
                continue
            total = ZERO
            for v, m in mult.items():
                if m > 0:
                    total += m * b.value(v)
                elif m < 0:
                    total += m * a.value(v)
            ratio = total / abs(mx)
            if best is None or ratio < best[0]:
                best = (ratio, dict(zip(*_combo_counts(combo))))
    if best is None:
        return FunctionalValue(value=ZERO, witness=None, attained=False, empty=True)
    counts = {boxes[i]: c for i, c in best[1].items()}
    return FunctionalValue(
        value=best[0], witness=BoxUnion.from_counts(counts, k=k), attained=True
    )


def _combo_counts(combo):
    idx = sorted(set(combo))
    return idx, [sum(1 for i in combo if i == j) for j in idx]


def min_l_optimum(
    a: GridFunction, b: GridFunction, k: int, mode: str = "exact"
) -> tuple[Fraction, BoxUnion | None]:
    """Minimum of L over unions normalized to total elementary weight 1.

    Nonnegative optimum certifies L >= 0 on every finite union (cutting
    makes any union elementary without changing L, and L is positively
    homogeneous).  A negative optimum comes with an integer-count violating
    union obtained by clearing denominators.
    """
    _require_sandwich(a, b)
    if not 1 <= k <= a.mesh.n:
        raise InvalidParameterError(f"k={k} outside [1, {a.mesh.n}]")
    problem, boxes = _ray_lp(a, b, None, k, 0, normalization="simplex")
    sol = solve(problem, mode=mode)
    if sol.status != "optimal":
        raise InternalInvariantError(
            f"weight-normalized minimum must be attained, got {sol.status}"
        )
    if sol.value >= 0:
        return sol.value, None
    witness = _witness_from_weights(sol.primal[: len(boxes)], boxes, k)
    if mode == "exact" and l_value(a, b, witness) >= 0:
        raise InternalInvariantError("violating union fails to certify L < 0")
    return sol.value, witness


@dataclass(frozen=True)
class SumInequalityReport:
    """Outcome of the per-node check P-(x) + P+(x) >= B(x) - A(x)."""

    holds: bool
    violations: tuple[tuple[Node, Fraction, Fraction, Fraction], ...]
    nodes_checked: int


def check_sum_inequality(
    a: GridFunction, b: GridFunction, k: int, mode: str = "exact"
) -> SumInequalityReport:
    """Verify P-(x) + P+(x) >= B(x) - A(x) at every mesh node.

    Preconditions: A = B at the unit-cube vertices, and L >= 0 on all
    unions (certified here via the weight-normalized minimum).  Nodes with
    B = A hold trivially under the certificate (both infima are >= 0, empty
    ones by convention 0) and skip their LPs.
    """
    _require_sandwich(a, b)
    mesh = a.mesh
    for node in mesh.nodes():
        if mesh.is_cube_vertex(node) and a.value(node) != b.value(node):
            raise PreconditionError(
                f"bounds differ at cube vertex {node}", witness=node
            )
    opt, witness = min_l_optimum(a, b, k, mode=mode)
    if opt < 0:
        raise PreconditionError(
            "some union has negative L; the inequality's hypothesis fails",
            witness=witness,
        )
    violations = []
    checked = 0
    for node in mesh.nodes():
        checked += 1
        gap = b.value(node) - a.value(node)
        if gap == 0:
            continue
        neg = p_neg(a, b, node, k, mode=mode).value
        pos = p_pos(a, b, node, k, mode=mode).value
        if neg + pos < gap:
            violations.append((node, neg, pos, gap))
    return SumInequalityReport(
        holds=not violations, violations=tuple(violations), nodes_checked=checked
    )


def functional_report(
    a: GridFunction,
    b: GridFunction,
    k: int,
    mode: str = "exact",
    include_witnesses: bool = False,
) -> dict:
    """Per-node JSON-ready records of P-, P+, gamma, delta."""
    _require_sandwich(a, b)
    mesh = a.mesh
    records = []
    for node in mesh.nodes():
        neg = p_neg(a, b, node, k, mode=mode)
        pos = p_pos(a, b, node, k, mode=mode)
        gap = b.value(node) - a.value(node)
        rec = {
            "node": [format_rational(c) for c in mesh.coords(node)],
            "index": list(node),
            "p_neg": format_rational(neg.value),
            "p_neg_empty": neg.empty,
            "p_pos": format_rational(pos.value),
            "p_pos_empty": pos.empty,
            "gamma": format_rational(min(neg.value, gap)),
            "delta": format_rational(min(pos.value, gap)),
        }
        if include_witnesses:
            rec["witnesses"] = {
                "p_neg": neg.witness.to_json_dict() if neg.witness else None,
                "p_pos": pos.witness.to_json_dict() if pos.witness else None,
            }
        records.append(rec)
    return {"k": k, "mode": mode, "records": records}
