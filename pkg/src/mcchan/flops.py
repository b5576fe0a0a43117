"""Closed-form flop cost models for the solvers.

These are analytic operation counts parameterized by problem size, not
measured instruction counts.  The greedy solver's count covers the
randomized top-singular-pair sketch plus the line-search bookkeeping per
outer iteration; the refinement count covers the per-rank alternating
ridge solves; the greedy-pursuit count covers the dictionary correlation
per selected path.
"""

from __future__ import annotations


def sketch_factor(p: float, power_iters: int = 2, oversample: int = 10) -> float:
    """Per-outer-iteration cost factor (units of 8*N_t*N_r)."""
    return (2 * power_iters + 3) * (oversample + 1) + (4 * p + 16)


def gcg_flops(num_tx: int, num_rx: int, p: float, rank: int,
              power_iters: int = 2, oversample: int = 10) -> float:
    """Total greedy-iteration cost for ``rank`` outer iterations."""
    return 8.0 * rank * sketch_factor(p, power_iters, oversample) * num_tx * num_rx


def altmin_iter_flops(num_tx: int, num_rx: int, p: float, k: int) -> float:
    """Cost of one alternating refinement pass at factor width k."""
    t_v = (8 * k ** 2 * p * num_rx + 4 * k ** 3 + 16 * k ** 2
           + 8 * k * p * num_rx) * num_tx
    t_u = (8 * k ** 2 * p * num_tx + 4 * k ** 3 + 16 * k ** 2
           + 8 * k * p * num_tx) * num_rx
    return float(t_v + t_u)


def altmin_flops(num_tx: int, num_rx: int, p: float, rank: int,
                 inner_iters: int) -> float:
    """Closed-form total refinement cost for a constant inner-iteration
    count: (Q/3) * r(r+1) * [16*p*N_t*N_r*(r+2) + (N_t+N_r)(3r^2+19r+8)]."""
    r = rank
    return inner_iters * (
        16.0 * p * num_tx * num_rx * r * (r + 1) * (r + 2)
        + (num_tx + num_rx) * r * (r + 1) * (3 * r ** 2 + 19 * r + 8)
    ) / 3.0


def altmin_flops_summed(num_tx: int, num_rx: int, p: float, rank: int,
                        inner_iters: int) -> float:
    """Same total accumulated rank by rank; equals ``altmin_flops`` exactly."""
    return inner_iters * sum(altmin_iter_flops(num_tx, num_rx, p, k)
                             for k in range(1, rank + 1))


def omp_flops(num_tx: int, num_rx: int, p: float, rank: int,
              grid_tx: int, grid_rx: int) -> float:
    """Dictionary-correlation cost for ``rank`` greedy selections over
    p*N_t*N_r measurements."""
    return 8.0 * p * rank * num_tx * num_rx * grid_tx * grid_rx


def flop_count(num_tx: int, num_rx: int, p: float, rank: int,
               inner_iters: int, power_iters: int = 2, oversample: int = 10,
               grid_tx: int | None = None, grid_rx: int | None = None) -> dict:
    """All model totals in one place."""
    out = {
        "gcg": gcg_flops(num_tx, num_rx, p, rank, power_iters, oversample),
        "altmin": altmin_flops(num_tx, num_rx, p, rank, inner_iters),
    }
    out["gcg_alt_total"] = out["gcg"] + out["altmin"]
    if grid_tx is not None and grid_rx is not None:
        out["omp"] = omp_flops(num_tx, num_rx, p, rank, grid_tx, grid_rx)
    return out
