"""k-boxes, vertex signs, multiplicities, signed volumes, and the bound
functional L on formal disjoint unions.

A k-box is a product of n closed intervals with exactly k nondegenerate
sides.  Corners are stored as axis-index vectors into a mesh, so box
identity, hashing, and multiset counting are exact.  Unions are *formal*:
member boxes may overlap geometrically; only vertex multiplicities matter.

The bound functional on a union takes the upper bound B at vertices with
positive multiplicity and the lower bound A at vertices with negative
multiplicity; its nonnegativity over all unions characterizes avoidance of
sure loss.  Because cutting a box in two never changes any multiplicity,
every union is multiplicity-equivalent to a union of *elementary* boxes
(adjacent-index sides), which is what the LP layers enumerate.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

from kboxkit.errors import DomainError, InvalidParameterError, PreconditionError
from kboxkit.mesh import GridFunction, GridMesh, Node, pointwise_leq

ZERO = Fraction(0)


@dataclass(frozen=True)
class KBox:
    """A k-box given by lower/upper corners as axis-index vectors.

    lower[i] < upper[i] exactly on the k varying coordinates and
    lower[i] == upper[i] elsewhere.
    """

    lower: Node
    upper: Node

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise InvalidParameterError("corner dimension mismatch")
        if not any(l < u for l, u in zip(self.lower, self.upper)):
            raise InvalidParameterError("a k-box needs at least one varying side")
        if any(l > u for l, u in zip(self.lower, self.upper)):
            raise InvalidParameterError("lower corner must be <= upper corner")

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def varying(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.lower[i] < self.upper[i])

    @property
    def k(self) -> int:
        return len(self.varying)

    def vertices(self) -> Iterator[Node]:
        """All 2^k vertices, as axis-index vectors."""
        choices = [
            (l,) if l == u else (l, u) for l, u in zip(self.lower, self.upper)
        ]
        return itertools.product(*choices)

    def is_vertex(self, node: Node) -> bool:
        return all(v in (l, u) for v, l, u in zip(node, self.lower, self.upper))

    def on_mesh(self, mesh: GridMesh) -> bool:
        return len(self.lower) == mesh.n and all(
            0 <= l and u < g for l, u, g in zip(self.lower, self.upper, mesh.shape)
        )

    def sort_key(self):
        """Canonical order: lexicographic on (varying set, lower, upper)."""
        return (self.varying, self.lower, self.upper)


def vertex_sign(box: KBox, vertex: Node) -> int:
    """Sign (-1)^(m-(n-k)) of a vertex, where m counts coordinates at the
    lower corner (degenerate coordinates included)."""
    if not box.is_vertex(vertex):
        raise DomainError(f"{vertex} is not a vertex of {box}")
    m = sum(1 for v, l in zip(vertex, box.lower) if v == l)
    return -1 if (m - (box.n - box.k)) % 2 else 1


@dataclass(frozen=True)
class BoxUnion:
    """Formal disjoint union: a multiset of k-boxes of a common order k."""

    boxes: tuple[tuple[KBox, int], ...]
    k: int

    def __post_init__(self):
        for box, count in self.boxes:
            if count < 1:
                raise InvalidParameterError("counts must be >= 1")
            if box.k != self.k:
                raise InvalidParameterError(
                    f"box of order {box.k} in a union of order {self.k}"
                )

    @classmethod
    def from_counts(cls, counts: Mapping[KBox, int], k: int | None = None) -> BoxUnion:
        boxes = tuple(sorted(counts.items(), key=lambda bc: bc[0].sort_key()))
        if k is None:
            if not boxes:
                raise InvalidParameterError("empty union needs an explicit k")
            k = boxes[0][0].k
        return cls(boxes=boxes, k=k)

    @classmethod
    def empty(cls, k: int) -> BoxUnion:
        return cls(boxes=(), k=k)

    @property
    def total_count(self) -> int:
        return sum(c for _, c in self.boxes)

    def multiplicity_map(self) -> dict[Node, int]:
        """Nonzero multiplicities of all points with respect to the union."""
        m: dict[Node, int] = {}
        for box, count in self.boxes:
            for v in box.vertices():
                m[v] = m.get(v, 0) + count * vertex_sign(box, v)
        return {node: z for node, z in m.items() if z != 0}

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "boxes": [
                {"lower": list(box.lower), "upper": list(box.upper), "count": count}
                for box, count in self.boxes
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, d: dict) -> BoxUnion:
        counts = {
            KBox(tuple(b["lower"]), tuple(b["upper"])): int(b["count"])
            for b in d["boxes"]
        }
        return cls.from_counts(counts, k=int(d["k"]))


def multiplicity(union: BoxUnion, point: Node) -> int:
    """Signed count of the point's occurrences as a vertex across the union."""
    total = 0
    for box, count in union.boxes:
        if box.is_vertex(point):
            total += count * vertex_sign(box, point)
    return total


def box_volume(f: GridFunction, box: KBox) -> Fraction:
    """Signed vertex sum of f over the box."""
    if not box.on_mesh(f.mesh):
        raise DomainError(f"box {box} is off the mesh")
    return sum((vertex_sign(box, v) * f.value(v) for v in box.vertices()), ZERO)


def l_value(a: GridFunction, b: GridFunction, union: BoxUnion) -> Fraction:
    """Bound functional of the union: B at positive-multiplicity vertices
    plus A at negative-multiplicity vertices (equivalently, the sum of
    max{m*A, m*B} over all nodes)."""
    bad = pointwise_leq(a, b)
    if bad is not None:
        raise PreconditionError(f"lower bound exceeds upper bound at {bad}", witness=bad)
    total = ZERO
    for node, m in union.multiplicity_map().items():
        total += m * (b.value(node) if m > 0 else a.value(node))
    return total


def union_with_multiplicity(point: Node, z: int, k: int, mesh: GridMesh) -> BoxUnion:
    """A union whose multiplicity at the point is exactly z, built from |z|
    copies of a single box through the point.

    The box fixes the trailing coordinates at the point, spans from 0 (or
    the point itself, on the flipped variant) along the first coordinate
    strictly inside (0, 1), and reaches 1 on varying coordinates sitting
    at 0.  Cube vertices admit no such box, so z != 0 there is an error.
    """
    n = mesh.n
    if not 1 <= k <= n:
        raise InvalidParameterError(f"k={k} outside [1, {n}]")
    if z == 0:
        return BoxUnion.empty(k)
    if mesh.is_cube_vertex(point):
        raise DomainError(f"{point} is a vertex of the unit cube")

    shape = mesh.shape
    pivot = next(
        i for i in range(n) if 0 < point[i] < shape[i] - 1
    )
    others = [i for i in range(n) if i != pivot][: k - 1]
    varying = [pivot] + others

    lower1, upper1 = list(point), list(point)
    lower2, upper2 = list(point), list(point)
    for j in varying:
        if j == pivot:
            lower1[j], upper1[j] = 0, point[j]
            lower2[j], upper2[j] = point[j], shape[j] - 1
        else:
            top = shape[j] - 1 if point[j] == 0 else point[j]
            lower1[j], upper1[j] = 0, top
            lower2[j], upper2[j] = 0, top
    box1 = KBox(tuple(lower1), tuple(upper1))
    box2 = KBox(tuple(lower2), tuple(upper2))

    sign1 = vertex_sign(box1, point)
    chosen = box1 if z * sign1 > 0 else box2
    return BoxUnion.from_counts({chosen: abs(z)}, k=k)


def _boxes_for_subset(
    mesh: GridMesh, subset: tuple[int, ...], elementary: bool
) -> Iterator[KBox]:
    shape = mesh.shape
    per_axis = []
    for i in range(mesh.n):
        if i in subset:
            if elementary:
                per_axis.append([(j, j + 1) for j in range(shape[i] - 1)])
            else:
                per_axis.append(
                    [(l, u) for l in range(shape[i]) for u in range(l + 1, shape[i])]
                )
        else:
            per_axis.append([(j, j) for j in range(shape[i])])
    for corners in itertools.product(*per_axis):
        yield KBox(tuple(c[0] for c in corners), tuple(c[1] for c in corners))


def enumerate_kboxes(mesh: GridMesh, k: int) -> Iterator[KBox]:
    """Every k-box with vertices on the mesh, each exactly once, in
    canonical order (varying set, then lower, then upper)."""
    if not 1 <= k <= mesh.n:
        raise InvalidParameterError(f"k={k} outside [1, {mesh.n}]")
    for subset in itertools.combinations(range(mesh.n), k):
        yield from sorted(
            _boxes_for_subset(mesh, subset, elementary=False), key=KBox.sort_key
        )


def enumerate_elementary_kboxes(mesh: GridMesh, k: int) -> Iterator[KBox]:
    """Every k-box whose varying sides join adjacent mesh coordinates.

    Cutting a box never changes a multiplicity, so every union of mesh
    k-boxes has the same multiplicity map as some union of these; infima
    of the bound functional may therefore be taken over elementary boxes.
    """
    if not 1 <= k <= mesh.n:
        raise InvalidParameterError(f"k={k} outside [1, {mesh.n}]")
    for subset in itertools.combinations(range(mesh.n), k):
        yield from sorted(
            _boxes_for_subset(mesh, subset, elementary=True), key=KBox.sort_key
        )


def count_kboxes(mesh: GridMesh, k: int) -> int:
    """Closed-form count matching enumerate_kboxes."""
    shape = mesh.shape
    total = 0
    for subset in itertools.combinations(range(mesh.n), k):
        term = 1
        for i in range(mesh.n):
            term *= math.comb(shape[i], 2) if i in subset else shape[i]
        total += term
    return total


def split_box(box: KBox, axis: int, at: int) -> tuple[KBox, KBox]:
    """Cut a box in two along a varying axis at an interior index."""
    if not box.lower[axis] < at < box.upper[axis]:
        raise DomainError(f"index {at} not strictly inside side {axis} of {box}")
    mid_hi = box.upper[:axis] + (at,) + box.upper[axis + 1 :]
    mid_lo = box.lower[:axis] + (at,) + box.lower[axis + 1 :]
    return KBox(box.lower, mid_hi), KBox(mid_lo, box.upper)
