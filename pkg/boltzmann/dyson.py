"""Monte Carlo evaluation of the Dyson series of the linear Boltzmann equation.

The order-n term is

    int J(X, V_0) int_{simplex} prod_j e^{-alpha_j sigma_0(V_j)} prod_j sigma(V_j, V_{j+1})
        F_0(X - sum_j alpha_j grad e(V_j), V_n)

over momenta V_0..V_n and times alpha_0..alpha_n summing to T; the damping is
e^{2 alpha Im Psi} with -2 Im Psi = sigma_0. Chains are drawn from the start: (Y, V_n)
from F_0, then each V_j from the post-collision law of V_{j+1}, and the times uniformly
on the simplex. The likelihood ratios are then T^n / n! and prod_{j >= 1} sigma_0(V_j).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from kinetics import streams
from kinetics.conf import knob
from kinetics.estimates import Estimate, mean_estimate

from .exceptions import ShellViolation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CollisionChain:
    """Times alpha_0..alpha_n, momenta V_0..V_n and branches sigma_1..sigma_n of one collision history.

    ``branches[j]`` is the branch of the jump V_{j+1} -> V_j.
    """

    times: np.ndarray
    momenta: np.ndarray
    branches: np.ndarray

    def __post_init__(self):
        if len(self.momenta) != len(self.times) or len(self.branches) != len(self.times) - 1:
            raise ShellViolation(
                f"inconsistent chain: {len(self.times)} times, {len(self.momenta)} momenta, "
                f"{len(self.branches)} branches"
            )
        if np.any(np.asarray(self.times) < 0):
            raise ShellViolation("chain times must be nonnegative")

    @property
    def order(self):
        return len(self.branches)

    @property
    def duration(self):
        return float(np.sum(self.times))

    def mismatches(self, model):
        """e(V_j) - e(V_{j+1}) + sigma_{j+1} omega(V_j - V_{j+1}) for each link."""
        V = np.asarray(self.momenta, dtype=float)
        if not self.order:
            return np.zeros(0)
        after, before = V[:-1], V[1:]
        return model.e(after) - model.e(before) + np.asarray(self.branches) * model.omega(after - before)

    def check_shell(self, model, tol=None):
        tol = knob("SHELL_TOLERANCE", tol)
        off = np.abs(self.mismatches(model))
        if off.size and off.max() > tol:
            link = int(np.argmax(off))
            raise ShellViolation(f"link {link} is {off[link]:.3g} off its collision shell (tolerance {tol:g})")


@dataclass
class ChainBatch:
    """``count`` chains of one order with their start positions and rates sigma_0(V_j)."""

    start: np.ndarray
    times: np.ndarray
    momenta: np.ndarray
    branches: np.ndarray
    rates: np.ndarray
    alive: np.ndarray

    def chain(self, row):
        return CollisionChain(self.times[row], self.momenta[row], self.branches[row])


def sample_chains(kernel, n, T, packet, count, rng):
    """Draw ``count`` order-``n`` chains started from ``packet``.

    Chains reaching a momentum with no open channel stop there and are marked dead; they
    contribute zero.
    """
    d = packet.dimension
    Y, start = packet.sample(rng, count)
    momenta = np.empty((count, n + 1, d))
    momenta[:, n] = start
    branches = np.zeros((count, n), dtype=np.int64)
    rates = np.zeros((count, n + 1))
    alive = np.ones(count, dtype=bool)
    for j in range(n - 1, -1, -1):
        before = momenta[:, j + 1]
        branch_rates = kernel.branch_cross_sections(before)
        rates[:, j + 1] = branch_rates.sum(axis=-1)
        alive &= rates[:, j + 1] > 0
        momenta[:, j] = before
        if alive.any():
            U, branch = kernel.sample_post_collision(before[alive], rng, rates=branch_rates[alive])
            momenta[alive, j] = U
            branches[alive, j] = branch
    rates[:, 0] = kernel.total_cross_section(momenta[:, 0])
    times = np.full((count, 1), float(T)) if n == 0 else T * rng.dirichlet(np.ones(n + 1), size=count)
    return ChainBatch(Y, times, momenta, branches, rates, alive)


def chain_contributions(kernel, batch, J, mass, T):
    """Weighted J(Y + sum alpha_j grad e(V_j), V_0) of each chain."""
    n = batch.branches.shape[1]
    displacement = np.einsum("cj,cjd->cd", batch.times, kernel.model.electron.gradient(batch.momenta))
    damping = np.exp(-np.sum(batch.times * batch.rates, axis=-1))
    weight = mass * T**n / math.factorial(n) * np.prod(batch.rates[:, 1:], axis=-1) * damping
    values = np.real(np.asarray(J(batch.start + displacement, batch.momenta[:, 0])))
    return np.where(batch.alive, weight * values, 0.0)


def dyson_term(kernel, n, T, packet, J, samples=None, seed=None, threads=1, block_size=None):
    """Monte Carlo estimate of the order-``n`` Dyson term of <J, F_T>."""
    if n < 0:
        raise ValueError(f"order must be nonnegative, got {n}")
    samples = int(knob("MC_SAMPLES", samples))
    if n and kernel.model.coupling.vanishes:
        return Estimate(0.0, 0.0, samples)
    kernel.table
    work = streams.blocks(samples, block_size)

    def run(block):
        index, rows = block
        rng = streams.stream(seed, streams.DYSON, n, index)
        batch = sample_chains(kernel, n, T, packet, rows.stop - rows.start, rng)
        return chain_contributions(kernel, batch, J, packet.mass, T)

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        values = np.concatenate(list(pool.map(run, work)))
    estimate = mean_estimate(values)
    logger.debug("Dyson term n=%d at T=%g: %.6g +- %.2g", n, T, estimate.value, estimate.stderr)
    return estimate


def poisson_tail(rate, T, orders):
    """P(more than ``orders`` jumps) for a rate bounded by ``rate``: the truncation bound of the partial sums."""
    return float(stats.poisson.sf(orders, rate * T))


@dataclass(frozen=True)
class DysonSeries:
    terms: list
    total: Estimate
    tail: float

    def as_dict(self):
        return {"terms": [term.as_dict() for term in self.terms], "total": self.total.as_dict(), "tail": self.tail}


def dyson_series(kernel, T, packet, J, orders=4, samples=None, seed=None, threads=1, rate_bound=None):
    """Partial sum over n <= ``orders``.

    ``tail`` bounds the truncation by the Poisson tail at ``rate_bound``, the largest tabulated
    sigma_0 by default.
    """
    terms = []
    for n in range(orders + 1):
        terms.append(dyson_term(kernel, n, T, packet, J, samples=samples, seed=seed, threads=threads))
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    if rate_bound is None:
        table = kernel.table
        rate_bound = float(table.values.sum(axis=-1).max()) if table is not None else math.inf
    tail = poisson_tail(rate_bound, T, orders) if math.isfinite(rate_bound) else 1.0
    logger.info("Dyson partial sum to order %d: %.6g +- %.2g (tail %.2g)", orders, total.value, total.stderr, tail)
    return DysonSeries(terms, total, tail)
