"""Kinetic Monte Carlo for the linear Boltzmann equation

    d_T F + grad e(V) . grad_X F = int sigma(V, U) F(U) dU - sigma_0(V) F(V).

Each particle waits an Exp(sigma_0(V)) time, flies freely through it and jumps with the
post-collision law of the kernel, until the horizon is reached.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from kinetics import streams
from kinetics.estimates import Estimate, mean_estimate

from .ensemble import observable_estimate

logger = logging.getLogger(__name__)


def _evolve_block(kernel, X, V, horizon, rng):
    gradient = kernel.model.electron.gradient
    n = len(V)
    jumps = np.zeros(n, dtype=np.int64)
    exposure = np.zeros(n)
    remaining = np.full(n, float(horizon))
    active = np.arange(n) if horizon > 0 else np.arange(0)
    while len(active):
        rates = kernel.branch_cross_sections(V[active])
        total = rates.sum(axis=-1)
        with np.errstate(divide="ignore"):
            wait = rng.standard_exponential(len(active)) / total
        left = remaining[active]
        step = np.minimum(wait, left)
        X[active] += step[:, None] * gradient(V[active])
        exposure[active] += total * step
        hop = wait < left
        remaining[active] = np.where(hop, left - wait, 0.0)
        movers = active[hop]
        if len(movers):
            V[movers], _ = kernel.sample_post_collision(V[movers], rng, rates=rates[hop])
            jumps[movers] += 1
        active = movers
    return X, V, jumps, exposure


def evolve(kernel, ensemble, T, threads=1, block_size=None):
    """The ensemble after macroscopic time ``T`` of the jump process generated by ``kernel``.

    Blocks of particles draw from their own streams (seed, epoch, block), so the result
    does not depend on ``threads``. Weights are untouched.
    """
    if T < 0:
        raise ValueError(f"horizon must be nonnegative, got {T}")
    # build the lazy cross-section table before the workers share the kernel
    kernel.table
    X, V = ensemble.X.copy(), ensemble.V.copy()
    jumps, exposure = ensemble.jumps.copy(), ensemble.exposure.copy()
    work = streams.blocks(len(ensemble), block_size)
    logger.info("evolving %d particles over T = %g in %d blocks", len(ensemble), T, len(work))

    def run(block):
        index, rows = block
        rng = streams.stream(ensemble.seed, streams.BOLTZMANN, 1, ensemble.epoch, index)
        return _evolve_block(kernel, X[rows].copy(), V[rows].copy(), T, rng)

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        results = list(pool.map(run, work))
    for (_, rows), (x, v, hops, rate) in zip(work, results):
        X[rows], V[rows] = x, v
        jumps[rows] += hops
        exposure[rows] += rate
    logger.info("evolved to T = %g, %d jumps", ensemble.T + T, int(jumps.sum() - ensemble.jumps.sum()))
    return ensemble.copy(X=X, V=V, jumps=jumps, exposure=exposure, T=ensemble.T + T, epoch=ensemble.epoch + 1)


@dataclass(frozen=True)
class JumpRateCheck:
    """Jumps per particle against int sigma_0(V_s) ds; their difference is a martingale."""

    jumps: Estimate
    exposure: Estimate
    difference: Estimate

    @property
    def agreed(self):
        return abs(self.difference.value) <= 3.0 * self.difference.stderr

    def as_dict(self):
        return {
            "jumps": self.jumps.as_dict(),
            "exposure": self.exposure.as_dict(),
            "difference": self.difference.as_dict(),
            "agreed": self.agreed,
        }


def jump_rate_check(ensemble):
    return JumpRateCheck(
        mean_estimate(ensemble.jumps, ensemble.w),
        mean_estimate(ensemble.exposure, ensemble.w),
        mean_estimate(ensemble.jumps - ensemble.exposure, ensemble.w),
    )


def observable_series(kernel, ensemble, J, times, threads=1, block_size=None):
    """<J, F_t> at each of the increasing ``times``; returns the rows and the final ensemble."""
    rows = []
    current = ensemble
    for t in times:
        current = evolve(kernel, current, max(0.0, t - current.T), threads=threads, block_size=block_size)
        estimate = observable_estimate(J, current)
        rows.append({"T": float(t), "value": estimate.value, "stderr": estimate.stderr})
    return rows, current
