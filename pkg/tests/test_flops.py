"""Flop-model arithmetic: hand-derived anchors, closed form vs direct sum,
and the solver cost ordering on a redundant dictionary."""

import itertools
import math

from mcchan.flops import (altmin_flops, altmin_flops_summed, flop_count,
                          gcg_flops, omp_flops, sketch_factor)


def test_sketch_factor_components():
    # (2q+3)(g+1) for the randomized sketch plus (4p+16) for the step update
    assert sketch_factor(0.375, power_iters=2, oversample=10) == 77 + 17.5
    assert sketch_factor(0.0, power_iters=0, oversample=0) == 3 + 16


def test_gcg_row_hand_derived_anchor():
    # 8 * 1 * (77 + 17.5) * 128 * 32
    assert gcg_flops(128, 32, 0.375, 1) == 3_096_576.0
    totals = flop_count(128, 32, 0.375, 1, inner_iters=2,
                        grid_tx=256, grid_rx=64)
    assert totals["gcg"] == 3_096_576.0
    assert totals["gcg_alt_total"] == totals["gcg"] + totals["altmin"]


def test_zero_rank_costs_nothing():
    totals = flop_count(128, 32, 0.375, 0, inner_iters=3,
                        grid_tx=256, grid_rx=64)
    assert totals["gcg"] == 0.0
    assert totals["altmin"] == 0.0
    assert totals["omp"] == 0.0


def test_altmin_closed_form_equals_per_rank_sum_exactly():
    # dyadic densities keep both evaluation orders bit-identical
    for (nt, nr), p, q_in, r in itertools.product(
            [(128, 32), (64, 16), (13, 7)], [0.25, 0.375, 0.5],
            range(1, 6), range(1, 11)):
        closed = altmin_flops(nt, nr, p, r, q_in)
        summed = altmin_flops_summed(nt, nr, p, r, q_in)
        assert closed == summed, (nt, nr, p, q_in, r)


def test_altmin_closed_form_tracks_sum_for_arbitrary_density():
    for p in [1 / 3, 0.123, 0.777]:
        for r in range(1, 11):
            closed = altmin_flops(128, 32, p, r, 5)
            summed = altmin_flops_summed(128, 32, p, r, 5)
            assert math.isclose(closed, summed, rel_tol=1e-12)


def test_gcg_alt_total_below_omp_through_rank_20():
    # completion density 0.375 (4 steps) vs 0.5 pursuit sampling (512 steps),
    # doubly redundant grid, two refinement passes per rank
    for r in range(1, 21):
        total = flop_count(128, 32, 0.375, r, inner_iters=2,
                           grid_tx=256, grid_rx=64)
        assert total["gcg_alt_total"] < omp_flops(128, 32, 0.5, r, 256, 64)


def test_costs_increase_with_rank():
    prev = flop_count(128, 32, 0.375, 1, inner_iters=2,
                      grid_tx=256, grid_rx=64)
    for r in range(2, 21):
        cur = flop_count(128, 32, 0.375, r, inner_iters=2,
                         grid_tx=256, grid_rx=64)
        for key in ("gcg", "altmin", "gcg_alt_total", "omp"):
            assert cur[key] > prev[key]
        prev = cur


def test_per_iteration_cost_is_symmetric_in_array_sizes():
    # V-update cost at (nt, nr) equals U-update cost at (nr, nt), so the
    # pass total is symmetric under swapping the array sizes
    from mcchan.flops import altmin_iter_flops
    for k in range(1, 8):
        assert altmin_iter_flops(128, 32, 0.4, k) == \
            altmin_iter_flops(32, 128, 0.4, k)
