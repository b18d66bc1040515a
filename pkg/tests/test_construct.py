"""Construction sweeps: postconditions, visiting orders, refusal paths."""

import random
from fractions import Fraction

import pytest

from kboxkit.errors import InvalidParameterError, PreconditionError
from kboxkit.construct import (
    check_k_increasing,
    lower_step,
    raise_step,
    sweep_from_above,
    sweep_from_below,
)
from kboxkit.functionals import delta, gamma, p_neg, p_pos
from kboxkit.kbox import BoxUnion, KBox
from kboxkit.mesh import (
    make_uniform_mesh,
    pointwise_leq,
    random_standardized_pair,
    sample_family,
)

F = Fraction


def _assert_sweep_posts(a, b, k, trace):
    c = trace.result
    assert pointwise_leq(a, c) is None
    assert pointwise_leq(c, b) is None
    assert check_k_increasing(c, k).passed
    if trace.direction == "below":
        for node in c.mesh.nodes():
            assert gamma(c, b, node, k, assume_nonneg=True) == 0
    else:
        for node in c.mesh.nodes():
            assert delta(a, c, node, k, assume_nonneg=True) == 0


class TestCheckKIncreasing:
    @pytest.mark.parametrize("k", [1, 2])
    def test_product_passes(self, p23, k):
        assert check_k_increasing(p23, k).passed

    def test_lukasiewicz_bivariate_passes(self, w23):
        assert check_k_increasing(w23, 2).passed

    def test_lukasiewicz_trivariate_fails_with_cube_witness(self, w33):
        # [KNOWN] W in three variables is not 3-increasing; the first
        # violating box in canonical order is [1/2,1]^3 with volume -1/2
        report = check_k_increasing(w33, 3)
        assert not report.passed
        assert report.violating_box == KBox((1, 1, 1), (2, 2, 2))
        assert report.volume == F(-1, 2)

    def test_lukasiewicz_trivariate_is_2_increasing(self, w33):
        assert check_k_increasing(w33, 2).passed


class TestSweepGolden:
    def test_w_m_sweep_from_below(self, w23, m23):
        trace = sweep_from_below(w23, m23, 2)
        assert trace.direction == "below"
        assert trace.order == tuple(w23.mesh.nodes())
        _assert_sweep_posts(w23, m23, 2, trace)

    def test_w_m_sweep_from_above(self, w23, m23):
        trace = sweep_from_above(w23, m23, 2)
        assert trace.direction == "above"
        _assert_sweep_posts(w23, m23, 2, trace)

    def test_equal_bounds_sweep_is_identity(self, p23):
        trace = sweep_from_below(p23, p23, 2)
        assert trace.result.values == p23.values
        assert all(change == 0 for _, _, change in trace.steps)

    def test_first_visited_node_formula_below(self, w23, m23):
        # the first visited node lands exactly at min{B, A + P-}
        center = (1, 1)
        order = [center] + [n for n in w23.mesh.nodes() if n != center]
        trace = sweep_from_below(w23, m23, 2, order=order)
        expected = min(
            m23.value(center), w23.value(center) + p_neg(w23, m23, center, 2).value
        )
        first_node, old, change = trace.steps[0]
        assert first_node == center
        assert old + change == expected
        assert trace.result.value(center) >= w23.value(center)
        _assert_sweep_posts(w23, m23, 2, trace)

    def test_first_visited_node_formula_above(self, w23, m23):
        center = (1, 1)
        order = [center] + [n for n in w23.mesh.nodes() if n != center]
        trace = sweep_from_above(w23, m23, 2, order=order)
        expected = max(
            w23.value(center), m23.value(center) - p_pos(w23, m23, center, 2).value
        )
        first_node, old, change = trace.steps[0]
        assert first_node == center
        assert old - change == expected
        _assert_sweep_posts(w23, m23, 2, trace)

    def test_trace_json_shape(self, w23, m23):
        d = sweep_from_below(w23, m23, 2).to_json_dict()
        assert d["direction"] == "below"
        assert len(d["steps"]) == 9
        assert "values" in d["result"]


class TestSweepRandomized:
    def test_posts_hold_for_random_pairs(self):
        mesh = make_uniform_mesh(2, 3)
        rng = random.Random(12)
        swept = 0
        for _ in range(8):
            a, b = random_standardized_pair(mesh, rng, style="around-product")
            for direction in (sweep_from_below, sweep_from_above):
                trace = direction(a, b, 2)
                _assert_sweep_posts(a, b, 2, trace)
                swept += 1
        assert swept == 16

    def test_steps_move_in_one_direction(self):
        mesh = make_uniform_mesh(2, 4)
        rng = random.Random(3)
        a, b = random_standardized_pair(mesh, rng, style="around-product")
        below = sweep_from_below(a, b, 2)
        assert all(change >= 0 for _, _, change in below.steps)
        above = sweep_from_above(a, b, 2)
        assert all(change >= 0 for _, _, change in above.steps)

    def test_different_orders_both_valid(self, w23, m23):
        forward = sweep_from_below(w23, m23, 2)
        backward = sweep_from_below(
            w23, m23, 2, order=list(w23.mesh.nodes())[::-1]
        )
        _assert_sweep_posts(w23, m23, 2, forward)
        _assert_sweep_posts(w23, m23, 2, backward)

    def test_three_dimensional_sweep(self):
        mesh = make_uniform_mesh(3, 3)
        a = sample_family("lukasiewicz", mesh)
        b = sample_family("min", mesh)
        for k in (2, 3):
            trace = sweep_from_below(a, b, k)
            c = trace.result
            assert pointwise_leq(a, c) is None
            assert pointwise_leq(c, b) is None
            assert check_k_increasing(c, k).passed


class TestRefusalPaths:
    def test_rejects_invalid_order(self, w23, m23):
        with pytest.raises(InvalidParameterError):
            sweep_from_below(w23, m23, 2, order=[(0, 0), (1, 1)])
        with pytest.raises(InvalidParameterError):
            sweep_from_below(w23, m23, 2, order=[(0, 0)] * 9)

    def test_refuses_when_l_can_go_negative(self, w33):
        with pytest.raises(PreconditionError) as err:
            sweep_from_below(w33, w33, 3)
        assert isinstance(err.value.witness, BoxUnion)

    def test_refuses_vertex_disagreement(self, mesh23, p23):
        from kboxkit.mesh import GridFunction

        a = GridFunction(mesh23, tuple(v / 2 for v in p23.values))
        with pytest.raises(PreconditionError):
            sweep_from_below(a, p23, 2)

    def test_single_steps_match_sweep_prefix(self, w23, m23):
        stepped = raise_step(w23, m23, (1, 1), 2)
        trace = sweep_from_below(
            w23, m23, 2, order=[(1, 1)] + [n for n in w23.mesh.nodes() if n != (1, 1)]
        )
        assert stepped.value((1, 1)) == trace.result.value((1, 1))
        lowered = lower_step(w23, m23, (1, 1), 2)
        assert lowered.value((1, 1)) <= m23.value((1, 1))
