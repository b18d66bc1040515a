"""kboxkit: sandwich feasibility, construction, and coherence for k-increasing
grid functions on finite meshes in the unit n-cube.

The library decides whether two grounded 1-increasing bound functions A <= B
on a finite rectangular mesh admit a k-increasing function C with
A <= C <= B, constructs such a C by iteratively raising A (or lowering B),
checks coherence of the bounds, and extends grid solutions to the whole cube.
All default arithmetic is exact rational.
"""

from kboxkit.mesh import (
    GridMesh,
    GridFunction,
    StructuralReport,
    make_uniform_mesh,
    family_value,
    parse_family_spec,
    sample_family,
    structural_check,
    random_standardized_pair,
    parse_rational,
    format_rational,
    pointwise_leq,
)
from kboxkit.kbox import (
    KBox,
    BoxUnion,
    vertex_sign,
    multiplicity,
    box_volume,
    l_value,
    union_with_multiplicity,
    enumerate_kboxes,
    enumerate_elementary_kboxes,
    count_kboxes,
    split_box,
)
from kboxkit.lp import LpProblem, LpSolution, solve, dualize, solve_via_dual
from kboxkit.functionals import (
    FunctionalValue,
    SumInequalityReport,
    p_neg,
    p_pos,
    gamma,
    delta,
    brute_force_infimum,
    min_l_optimum,
    check_sum_inequality,
    functional_report,
)
from kboxkit.construct import (
    SweepTrace,
    KIncreasingReport,
    raise_step,
    lower_step,
    sweep_from_below,
    sweep_from_above,
    check_k_increasing,
)
from kboxkit.analysis import (
    AslVerdict,
    CoherenceReport,
    LipschitzReport,
    check_asl,
    pointwise_sup,
    pointwise_inf,
    coherence_upper,
    coherence_lower,
    lipschitz_check,
)
from kboxkit.extend import (
    ExtendedFunction,
    ExtensionSandwichReport,
    evaluate,
    extension_box_volume,
    random_cube_point,
    verify_extension_sandwich,
)

__version__ = "0.1.0"

__all__ = [
    "GridMesh",
    "GridFunction",
    "StructuralReport",
    "make_uniform_mesh",
    "family_value",
    "parse_family_spec",
    "sample_family",
    "structural_check",
    "random_standardized_pair",
    "parse_rational",
    "format_rational",
    "pointwise_leq",
    "KBox",
    "BoxUnion",
    "vertex_sign",
    "multiplicity",
    "box_volume",
    "l_value",
    "union_with_multiplicity",
    "enumerate_kboxes",
    "enumerate_elementary_kboxes",
    "count_kboxes",
    "split_box",
    "LpProblem",
    "LpSolution",
    "solve",
    "dualize",
    "solve_via_dual",
    "FunctionalValue",
    "SumInequalityReport",
    "p_neg",
    "p_pos",
    "gamma",
    "delta",
    "brute_force_infimum",
    "min_l_optimum",
    "check_sum_inequality",
    "functional_report",
    "SweepTrace",
    "KIncreasingReport",
    "raise_step",
    "lower_step",
    "sweep_from_below",
    "sweep_from_above",
    "check_k_increasing",
    "AslVerdict",
    "CoherenceReport",
    "LipschitzReport",
    "check_asl",
    "pointwise_sup",
    "pointwise_inf",
    "coherence_upper",
    "coherence_lower",
    "lipschitz_check",
    "ExtendedFunction",
    "ExtensionSandwichReport",
    "evaluate",
    "extension_box_volume",
    "random_cube_point",
    "verify_extension_sandwich",
]
