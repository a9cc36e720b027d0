"""Severe ill-posedness in the Cauchy-Laplace boundary inversion.

Builds the top-edge-to-bottom-row operator on an N x N interior grid,
reports its singular-value collapse, and runs a short inference to show
which parts of the unknown boundary the data actually constrains: the
posterior only tightens along the handful of directions the operator
transmits, and falls back to the prior elsewhere.

Usage: python scripts/cauchy_laplace_conditioning.py [--grid 16]
"""

import argparse

import numpy as np

from skewtgibbs.forward import apply_forward, cauchy_laplace_operator, repeat_rows
from skewtgibbs.model import ObservedData, default_priors
from skewtgibbs.sampler import SamplerConfig, run_multi
from skewtgibbs.skewt import SkewTParams, sample_skew_t


def run(grid: int) -> None:
    base = cauchy_laplace_operator(grid)
    _, singular, vt = np.linalg.svd(base.matrix)
    print(f"Cauchy-Laplace operator, grid {grid}:")
    print(f"  sigma_max {singular[0]:.3e}  sigma_min {singular[-1]:.3e}")
    print(f"  condition number {singular[0] / singular[-1]:.3e}")
    decade = np.sum(singular > 1e-1 * singular[0])
    print(f"  singular values within a decade of the largest: {decade} of {grid}")

    operator = repeat_rows(base, 8 * grid)
    truth = np.sin(np.pi * np.arange(1, grid + 1) / (grid + 1))
    noise = SkewTParams(scale=0.001, skew=1.0, df=6.0)
    y = apply_forward(operator, truth) + sample_skew_t(operator.n_obs, noise, seed=2)
    data = ObservedData(y=y, operator=operator)
    spec = default_priors(grid, u_precision_scale=1.0)

    config = SamplerConfig(iterations=4000, burn_in=1000, chains=4, seed=9)
    chains = run_multi(data, spec, config)
    pooled = np.vstack([c.draws[:, :grid] for c in chains])
    modes = pooled @ vt.T
    sds = modes.std(axis=0, ddof=1)
    print("\nposterior sd along each singular direction (prior sd = 1.0):")
    print("  " + " ".join(f"{s:.2f}" for s in sds))
    informed = int(np.sum(sds < 0.5))
    print(f"\nthe data pins down {informed} of {grid} boundary modes; the rest")
    print("revert to the prior, as the singular-value collapse predicts")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--grid", type=int, default=16)
    run(parser.parse_args().grid)
