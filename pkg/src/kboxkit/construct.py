"""Point-by-point construction of a k-increasing function between bounds.

Starting from the lower bound A, visiting every mesh node once and raising
the current function by gamma = min{P-, B - A} at the visited node keeps all
unions' L values nonnegative and the sandwich intact; after the single pass,
gamma vanishes everywhere and the result is k-increasing on the mesh
(provided A = B at the unit-cube vertices).  Lowering B by delta is the
mirror construction.  The visiting order is recorded: different orders may
produce different (all valid) results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from kboxkit.errors import InvalidParameterError, PreconditionError
from kboxkit.functionals import delta, gamma, min_l_optimum
from kboxkit.kbox import KBox, box_volume, enumerate_kboxes
from kboxkit.mesh import GridFunction, Node, format_rational

ZERO = Fraction(0)


@dataclass(frozen=True)
class SweepTrace:
    """Record of one construction pass."""

    direction: str  # "below" (raise A) | "above" (lower B)
    order: tuple[Node, ...]
    steps: tuple[tuple[Node, Fraction, Fraction], ...]  # (node, old value, change)
    result: GridFunction

    def to_json_dict(self) -> dict:
        return {
            "direction": self.direction,
            "order": [list(node) for node in self.order],
            "steps": [
                {
                    "node": list(node),
                    "old_value": format_rational(old),
                    "change": format_rational(change),
                }
                for node, old, change in self.steps
            ],
            "result": self.result.to_json_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


@dataclass(frozen=True)
class KIncreasingReport:
    """First violating k-box in canonical order, if any."""

    passed: bool
    violating_box: KBox | None = None
    volume: Fraction | None = None


def check_k_increasing(f: GridFunction, k: int) -> KIncreasingReport:
    """Enumerate every mesh k-box; report the lexicographically first one
    with negative signed volume."""
    for box in enumerate_kboxes(f.mesh, k):
        vol = box_volume(f, box)
        if vol < 0:
            return KIncreasingReport(passed=False, violating_box=box, volume=vol)
    return KIncreasingReport(passed=True)


def raise_step(
    a: GridFunction, b: GridFunction, x: Node, k: int, mode: str = "exact"
) -> GridFunction:
    """Raise A at x by gamma.  The caller certifies L >= 0 on all unions;
    the step preserves that property and the sandwich."""
    g = gamma(a, b, x, k, mode=mode, assume_nonneg=True)
    if g < 0 or g > b.value(x) - a.value(x):
        raise PreconditionError(
            f"increment {g} at {x} leaves [0, B-A]; nonnegativity of L "
            "was not actually satisfied",
            witness=x,
        )
    return a if g == 0 else a.with_value(x, a.value(x) + g)


def lower_step(
    a: GridFunction, b: GridFunction, x: Node, k: int, mode: str = "exact"
) -> GridFunction:
    """Lower B at x by delta; mirror of raise_step."""
    d = delta(a, b, x, k, mode=mode, assume_nonneg=True)
    if d < 0 or d > b.value(x) - a.value(x):
        raise PreconditionError(
            f"decrement {d} at {x} leaves [0, B-A]; nonnegativity of L "
            "was not actually satisfied",
            witness=x,
        )
    return b if d == 0 else b.with_value(x, b.value(x) - d)


def _checked_order(
    mesh, order: Sequence[Node] | None
) -> tuple[Node, ...]:
    canonical = tuple(mesh.nodes())
    if order is None:
        return canonical
    order = tuple(tuple(node) for node in order)
    if sorted(order) != sorted(canonical):
        raise InvalidParameterError("order must visit every mesh node exactly once")
    return order


def _certify(a: GridFunction, b: GridFunction, k: int, mode: str) -> None:
    for node in a.mesh.nodes():
        if a.mesh.is_cube_vertex(node) and a.value(node) != b.value(node):
            raise PreconditionError(
                f"bounds differ at cube vertex {node}; the construction only "
                "guarantees a k-increasing result when they agree there",
                witness=node,
            )
    opt, witness = min_l_optimum(a, b, k, mode=mode)
    if opt < 0:
        raise PreconditionError(
            "avoidance of sure loss fails (some union has L < 0); "
            "run the avoidance check for the full verdict",
            witness=witness,
        )


def sweep_from_below(
    a: GridFunction,
    b: GridFunction,
    k: int,
    order: Sequence[Node] | None = None,
    mode: str = "exact",
    certify: bool = True,
) -> SweepTrace:
    """One raising pass over all nodes.  The result C satisfies
    A <= C <= B, has gamma identically 0 against B, keeps L >= 0, and is
    k-increasing on the mesh."""
    if certify:
        _certify(a, b, k, mode)
    visit = _checked_order(a.mesh, order)
    current = a
    steps = []
    for node in visit:
        old = current.value(node)
        current = raise_step(current, b, node, k, mode=mode)
        steps.append((node, old, current.value(node) - old))
    result = current.relabel(f"{a.label or 'lower'}-raised")
    return SweepTrace(
        direction="below", order=visit, steps=tuple(steps), result=result
    )


def sweep_from_above(
    a: GridFunction,
    b: GridFunction,
    k: int,
    order: Sequence[Node] | None = None,
    mode: str = "exact",
    certify: bool = True,
) -> SweepTrace:
    """One lowering pass over all nodes; mirror of sweep_from_below."""
    if certify:
        _certify(a, b, k, mode)
    visit = _checked_order(a.mesh, order)
    current = b
    steps = []
    for node in visit:
        old = current.value(node)
        current = lower_step(a, current, node, k, mode=mode)
        steps.append((node, old, old - current.value(node)))
    result = current.relabel(f"{b.label or 'upper'}-lowered")
    return SweepTrace(
        direction="above", order=visit, steps=tuple(steps), result=result
    )
