"""Extending a grid function to the whole unit cube.

Three modes:
- sup: value at x is the maximum of the grid function over nodes
  componentwise below x — the canonical extension that stays k-increasing
  when the grid data is;
- inf: minimum over nodes componentwise above x, the mirror construction;
- lipschitz: multilinear interpolation on the containing grid cell, the
  canonical continuous (checkerboard-type) extension for 1-Lipschitz data.

Every mode reproduces grid values exactly at mesh nodes.  All evaluation is
exact rational for rational query points.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from kboxkit.errors import DomainError, InvalidParameterError
from kboxkit.mesh import (
    GridFunction,
    family_value,
    parse_family_spec,
    parse_rational,
)

ZERO = Fraction(0)
ONE = Fraction(1)

MODES = ("sup", "inf", "lipschitz")


@dataclass(frozen=True)
class ExtendedFunction:
    """A grid function together with an extension rule for off-grid points."""

    base: GridFunction
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidParameterError(f"unknown extension mode {self.mode!r}")

    def __call__(self, x) -> Fraction:
        return evaluate(self, x)


def _checked_point(ext: ExtendedFunction, x) -> tuple[Fraction, ...]:
    coords = tuple(parse_rational(c) for c in x)
    if len(coords) != ext.base.mesh.n:
        raise DomainError(f"point has dimension {len(coords)}, mesh has {ext.base.mesh.n}")
    if any(c < 0 or c > 1 for c in coords):
        raise DomainError(f"{coords} lies outside the unit cube")
    return coords


def evaluate(ext: ExtendedFunction, x) -> Fraction:
    """Value of the extension at a cube point (exact for rational input)."""
    coords = _checked_point(ext, x)
    mesh = ext.base.mesh
    if ext.mode == "sup":
        best = None
        for node in mesh.nodes():
            if all(a <= c for a, c in zip(mesh.coords(node), coords)):
                v = ext.base.value(node)
                if best is None or v > best:
                    best = v
        return best
    if ext.mode == "inf":
        best = None
        for node in mesh.nodes():
            if all(a >= c for a, c in zip(mesh.coords(node), coords)):
                v = ext.base.value(node)
                if best is None or v < best:
                    best = v
        return best
    # multilinear interpolation on the containing cell
    cell = []
    weights = []
    for axis, c in zip(mesh.axes, coords):
        j = min(bisect_right(axis, c) - 1, len(axis) - 2)
        cell.append(j)
        weights.append((c - axis[j]) / (axis[j + 1] - axis[j]))
    total = ZERO
    n = mesh.n
    for corner in range(1 << n):
        w = ONE
        node = []
        for i in range(n):
            if corner >> i & 1:
                w *= weights[i]
                node.append(cell[i] + 1)
            else:
                w *= 1 - weights[i]
                node.append(cell[i])
        if w:
            total += w * ext.base.value(tuple(node))
    return total


@dataclass(frozen=True)
class ExtensionSandwichReport:
    """Sampled containment of an extension between two analytic bounds."""

    samples: int
    passed: bool
    violations: tuple[tuple[tuple[Fraction, ...], Fraction, Fraction, Fraction], ...]


def random_cube_point(rng: random.Random, n: int, denominator: int = 16):
    """A uniformly sampled rational point of the unit cube."""
    return tuple(Fraction(rng.randint(0, denominator), denominator) for _ in range(n))


def verify_extension_sandwich(
    a_spec: str,
    b_spec: str,
    ext: ExtendedFunction,
    samples: int,
    seed: int = 0,
    denominator: int = 16,
) -> ExtensionSandwichReport:
    """Sample rational cube points and check that the extension stays
    between the analytic family values A(x) <= eval(x) <= B(x), exactly.

    The bound specs name built-in families ('min', 'frank(1)', ...); the
    built-ins are continuous, so the containment guarantee of the grid
    construction carries over to the whole cube.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    a_name, a_theta = parse_family_spec(a_spec)
    b_name, b_theta = parse_family_spec(b_spec)
    n = ext.base.mesh.n
    rng = random.Random(seed)
    violations = []
    for _ in range(samples):
        point = random_cube_point(rng, n, denominator)
        lo = family_value(a_name, point, a_theta)
        hi = family_value(b_name, point, b_theta)
        val = evaluate(ext, point)
        if not lo <= val <= hi:
            violations.append((point, lo, val, hi))
    return ExtensionSandwichReport(
        samples=samples, passed=not violations, violations=tuple(violations)
    )


def extension_box_volume(ext: ExtendedFunction, lower, upper) -> Fraction:
    """Signed vertex sum of the extension over an arbitrary rational box
    (corners need not be mesh nodes)."""
    lo = _checked_point(ext, lower)
    hi = _checked_point(ext, upper)
    if any(l > u for l, u in zip(lo, hi)):
        raise DomainError("lower corner must be <= upper corner")
    varying = [i for i in range(len(lo)) if lo[i] < hi[i]]
    total = ZERO
    for mask in range(1 << len(varying)):
        point = list(lo)
        ups = 0
        for bit, axis in enumerate(varying):
            if mask >> bit & 1:
                point[axis] = hi[axis]
                ups += 1
        sign = 1 if (len(varying) - ups) % 2 == 0 else -1
        total += sign * evaluate(ext, point)
    return total
