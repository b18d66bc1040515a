"""Finite rectangular meshes in the unit n-cube and functions on them.

A mesh is a product of per-axis sorted rational coordinate lists, each
containing 0 and 1.  A grid function stores one exact rational value per
mesh node in row-major order (axis 0 slowest).  Values are `Fraction`
throughout; this module is the only place that parses or serializes them.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from kboxkit.errors import DomainError, InvalidParameterError

Node = tuple[int, ...]

ZERO = Fraction(0)
ONE = Fraction(1)

FAMILIES = ("product", "min", "lukasiewicz", "frank", "drastic")


def parse_rational(v) -> Fraction:
    """Convert an int, Fraction, 'p/q' string, or finite decimal literal to
    an exact Fraction."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise InvalidParameterError(f"not a rational: {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise InvalidParameterError(f"not a finite number: {v!r}")
        return Fraction(str(v))
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidParameterError(f"cannot parse rational {v!r}") from exc
    raise InvalidParameterError(f"cannot parse rational {v!r}")


def format_rational(v: Fraction):
    """Serialize a Fraction as an int (denominator 1) or a 'p/q' string."""
    if v.denominator == 1:
        return int(v)
    return f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True)
class GridMesh:
    """A finite rectangular mesh: per-axis strictly increasing rational
    coordinates in [0, 1], each axis containing both 0 and 1."""

    axes: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if len(self.axes) < 1:
            raise InvalidParameterError("mesh needs at least one axis")
        for i, axis in enumerate(self.axes):
            if len(axis) < 2:
                raise InvalidParameterError(f"axis {i} has fewer than 2 points")
            if axis[0] != 0 or axis[-1] != 1:
                raise InvalidParameterError(f"axis {i} must contain 0 and 1")
            if any(a >= b for a, b in zip(axis, axis[1:])):
                raise InvalidParameterError(f"axis {i} not strictly increasing")
            if any(c < 0 or c > 1 for c in axis):
                raise InvalidParameterError(f"axis {i} leaves [0, 1]")

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def node_count(self) -> int:
        return math.prod(self.shape)

    def nodes(self) -> Iterator[Node]:
        """All nodes in canonical row-major order (axis 0 slowest)."""
        return itertools.product(*(range(g) for g in self.shape))

    def coords(self, node: Node) -> tuple[Fraction, ...]:
        return tuple(self.axes[i][node[i]] for i in range(self.n))

    def flat_index(self, node: Node) -> int:
        idx = 0
        for i, g in enumerate(self.shape):
            idx = idx * g + node[i]
        return idx

    def node_of_coords(self, point: Sequence[Fraction]) -> Node:
        """Inverse of coords(); raises DomainError if the point is off-mesh."""
        node = []
        for i, x in enumerate(point):
            try:
                node.append(self.axes[i].index(Fraction(x)))
            except ValueError:
                raise DomainError(f"coordinate {x} not on axis {i}")
        return tuple(node)

    def is_cube_vertex(self, node: Node) -> bool:
        return all(node[i] in (0, len(self.axes[i]) - 1) for i in range(self.n))


def make_uniform_mesh(n: int, g: int) -> GridMesh:
    """Uniform mesh with g equally spaced points {0, 1/(g-1), ..., 1} per axis."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if g < 2:
        raise InvalidParameterError("g must be >= 2")
    axis = tuple(Fraction(i, g - 1) for i in range(g))
    return GridMesh(axes=(axis,) * n)


@dataclass(frozen=True)
class GridFunction:
    """Exact rational values at every node of a mesh, row-major."""

    mesh: GridMesh
    values: tuple[Fraction, ...]
    label: str | None = None

    def __post_init__(self):
        if len(self.values) != self.mesh.node_count:
            raise InvalidParameterError(
                f"{len(self.values)} values for {self.mesh.node_count} nodes"
            )
        if any(v < 0 or v > 1 for v in self.values):
            raise InvalidParameterError("grid values must lie in [0, 1]")

    def value(self, node: Node) -> Fraction:
        return self.values[self.mesh.flat_index(node)]

    def relabel(self, label: str | None) -> GridFunction:
        return GridFunction(self.mesh, self.values, label)

    def with_value(self, node: Node, v: Fraction, label: str | None = None) -> GridFunction:
        vals = list(self.values)
        vals[self.mesh.flat_index(node)] = Fraction(v)
        return GridFunction(self.mesh, tuple(vals), label if label is not None else self.label)

    def to_json_dict(self) -> dict:
        return {
            "n": self.mesh.n,
            "axes": [[format_rational(c) for c in axis] for axis in self.mesh.axes],
            "values": [format_rational(v) for v in self.values],
            **({"label": self.label} if self.label is not None else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, d: dict) -> GridFunction:
        axes = tuple(tuple(parse_rational(c) for c in axis) for axis in d["axes"])
        mesh = GridMesh(axes=axes)
        if "n" in d and d["n"] != mesh.n:
            raise InvalidParameterError("declared n does not match axes")
        values = tuple(parse_rational(v) for v in d["values"])
        return cls(mesh=mesh, values=values, label=d.get("label"))

    @classmethod
    def from_json(cls, text: str) -> GridFunction:
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"malformed JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise InvalidParameterError("grid-function JSON must be an object")
        try:
            return cls.from_json_dict(d)
        except (KeyError, TypeError) as exc:
            raise InvalidParameterError(f"bad grid-function JSON: {exc}") from exc


@dataclass(frozen=True)
class StructuralReport:
    """Result of the structural predicates on a grid function.

    Witnesses are nodes (or node pairs for monotonicity) exhibiting the
    first few violations of each failed flag.
    """

    grounded: bool
    one_increasing: bool
    uniform_marginals: bool
    value_at_one: Fraction
    witnesses: tuple = ()

    @property
    def is_semicopula(self) -> bool:
        return self.grounded and self.one_increasing and self.uniform_marginals

    @property
    def is_standardized(self) -> bool:
        return self.grounded and self.one_increasing and self.value_at_one == 1


def _frank_value(coords: tuple[Fraction, ...], theta: Fraction) -> Fraction:
    """n-variate Frank copula, with exact handling of neutral and zero
    coordinates so the structural predicates hold exactly.

    Coordinates equal to 1 are dropped (1 is the neutral element); a zero
    coordinate gives 0; one remaining coordinate gives itself.  The generic
    case is evaluated in float and rationalized via the shortest decimal.
    """
    if any(c == 0 for c in coords):
        return ZERO
    live = [c for c in coords if c != 1]
    if not live:
        return ONE
    if len(live) == 1:
        return live[0]
    th = float(theta)
    denom = math.expm1(-th)
    prod = 1.0
    for c in live:
        prod *= math.expm1(-th * float(c)) / denom
    val = -math.log1p(denom * prod) / th
    val = min(max(val, 0.0), 1.0)
    return Fraction(str(val))


def parse_family_spec(spec: str) -> tuple[str, Fraction | None]:
    """Parse 'name' or 'name(theta)' into (name, theta)."""
    spec = spec.strip()
    if spec.endswith(")") and "(" in spec:
        name, arg = spec[:-1].split("(", 1)
        return name.strip(), parse_rational(arg.strip())
    return spec, None


def family_value(
    family: str, coords: Sequence[Fraction], theta: Fraction | None = None
) -> Fraction:
    """Analytic value of a built-in (semi)copula family at one point.

    family is one of 'product', 'min', 'lukasiewicz', 'frank', 'drastic';
    'frank' requires theta != 0.  The drastic semicopula is the smallest
    one: min of the coordinates when all but at most one equal 1, else 0.
    """
    coords = tuple(parse_rational(c) for c in coords)
    n = len(coords)
    if family == "product":
        return math.prod(coords, start=ONE)
    if family == "min":
        return min(coords)
    if family == "lukasiewicz":
        return max(sum(coords) - (n - 1), ZERO)
    if family == "drastic":
        ones = sum(1 for x in coords if x == 1)
        return min(coords) if ones >= n - 1 else ZERO
    if family == "frank":
        if theta is None or theta == 0:
            raise InvalidParameterError("frank requires theta != 0")
        return _frank_value(coords, parse_rational(theta))
    raise InvalidParameterError(f"unknown family {family!r}")


def sample_family(family: str, mesh: GridMesh, theta: Fraction | None = None) -> GridFunction:
    """Sample one of the built-in (semi)copula families at every mesh node."""
    values = tuple(family_value(family, mesh.coords(node), theta) for node in mesh.nodes())
    label = family if family != "frank" else f"frank({format_rational(parse_rational(theta))})"
    return GridFunction(mesh=mesh, values=values, label=label)


def structural_check(f: GridFunction, max_witnesses: int = 8) -> StructuralReport:
    """Check groundedness, 1-increasingness, and uniform marginals on the grid."""
    mesh = f.mesh
    n = mesh.n
    shape = mesh.shape
    witnesses: list = []

    grounded = True
    for node in mesh.nodes():
        if any(i == 0 for i in node) and f.value(node) != 0:
            grounded = False
            if len(witnesses) < max_witnesses:
                witnesses.append(("grounded", node))

    one_increasing = True
    for node in mesh.nodes():
        for ax in range(n):
            if node[ax] + 1 < shape[ax]:
                nxt = node[:ax] + (node[ax] + 1,) + node[ax + 1 :]
                if f.value(nxt) < f.value(node):
                    one_increasing = False
                    if len(witnesses) < max_witnesses:
                        witnesses.append(("one_increasing", node, nxt))

    uniform_marginals = True
    top = tuple(g - 1 for g in shape)
    for ax in range(n):
        for j in range(shape[ax]):
            node = top[:ax] + (j,) + top[ax + 1 :]
            if f.value(node) != mesh.axes[ax][j]:
                uniform_marginals = False
                if len(witnesses) < max_witnesses:
                    witnesses.append(("uniform_marginals", node))

    return StructuralReport(
        grounded=grounded,
        one_increasing=one_increasing,
        uniform_marginals=uniform_marginals,
        value_at_one=f.value(top),
        witnesses=tuple(witnesses),
    )


def _monotone_repair(mesh: GridMesh, raw: dict[Node, Fraction]) -> list[Fraction]:
    """Row-major sweep replacing each value by the max over itself and its
    axis predecessors; the result is 1-increasing."""
    values: list[Fraction] = [ZERO] * mesh.node_count
    for node in mesh.nodes():
        v = raw[node]
        for ax in range(mesh.n):
            if node[ax] > 0:
                prev = node[:ax] + (node[ax] - 1,) + node[ax + 1 :]
                pv = values[mesh.flat_index(prev)]
                if pv > v:
                    v = pv
        values[mesh.flat_index(node)] = v
    return values


def _random_standardized(mesh: GridMesh, rng: random.Random, denominator: int) -> GridFunction:
    raw: dict[Node, Fraction] = {}
    top = tuple(g - 1 for g in mesh.shape)
    for node in mesh.nodes():
        if any(i == 0 for i in node):
            raw[node] = ZERO
        elif node == top:
            raw[node] = ONE
        else:
            raw[node] = Fraction(rng.randint(0, denominator), denominator)
    values = _monotone_repair(mesh, raw)
    values[mesh.flat_index(top)] = ONE
    return GridFunction(mesh, tuple(values))


def random_standardized_pair(
    mesh: GridMesh,
    rng: random.Random,
    denominator: int = 8,
    style: str = "free",
) -> tuple[GridFunction, GridFunction]:
    """Seeded random pair (A, B) of standardized grid functions with A <= B.

    style 'free' draws two independent random standardized functions and
    returns their pointwise min/max (may or may not avoid sure loss);
    style 'around-product' perturbs the product copula downward for A and
    upward for B, so the product is always sandwiched and the pair avoids
    sure loss by construction.
    """
    if style == "free":
        f = _random_standardized(mesh, rng, denominator)
        g = _random_standardized(mesh, rng, denominator)
        a_vals = tuple(min(x, y) for x, y in zip(f.values, g.values))
        b_vals = tuple(max(x, y) for x, y in zip(f.values, g.values))
    elif style == "around-product":
        pi = sample_family("product", mesh)
        top = tuple(g - 1 for g in mesh.shape)
        lo_raw: dict[Node, Fraction] = {}
        hi_raw: dict[Node, Fraction] = {}
        for node in mesh.nodes():
            p = pi.value(node)
            if any(i == 0 for i in node):
                lo_raw[node] = hi_raw[node] = ZERO
            elif node == top:
                lo_raw[node] = hi_raw[node] = ONE
            else:
                lo_raw[node] = max(ZERO, p - Fraction(rng.randint(0, denominator), 4 * denominator))
                hi_raw[node] = min(ONE, p + Fraction(rng.randint(0, denominator), 4 * denominator))
        lo = _monotone_repair(mesh, lo_raw)
        hi = _monotone_repair(mesh, hi_raw)
        a_vals = tuple(min(x, p) for x, p in zip(lo, pi.values))
        b_vals = tuple(max(x, p) for x, p in zip(hi, pi.values))
    else:
        raise InvalidParameterError(f"unknown style {style!r}")
    return (
        GridFunction(mesh, a_vals, label="A"),
        GridFunction(mesh, b_vals, label="B"),
    )


def pointwise_leq(f: GridFunction, g: GridFunction) -> Node | None:
    """First node (row-major) where f > g, or None if f <= g everywhere."""
    if f.mesh != g.mesh:
        raise DomainError("functions live on different meshes")
    for node in f.mesh.nodes():
        if f.value(node) > g.value(node):
            return node
    return None
