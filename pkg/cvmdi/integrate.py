"""Raw and post-selected key rates over the (A, B, gamma) volume.

The deterministic estimate is a Gauss-Legendre rule on a truncated box,
with amplitude nodes gathered where post-selection can keep points and
gamma nodes placed per (A, B) around the conditional peaks. It is split
into one task per Alice-amplitude node. The Monte Carlo oracle
forward-samples the protocol in fixed-size blocks, each with its own
random stream. Both reduce their partial sums with fsum in task order, so
results do not depend on the number of workers.
"""

import functools
import logging
import math
from dataclasses import dataclass

import numpy

from . import inforates, probability, protocol
from .base import BetaMode, DetectorModel, ParameterError, PSPoint
from .config import NUMCONFIG
from .parallel import getPool
from .utils import randomFromSeed, sum_columns

MIN_SAMPLES = 10000
# Samples evaluated at once inside a Monte Carlo block
_MC_CHUNK = 4096


@dataclass(frozen=True)
class GridSpec:
    n_a: int = 64
    n_b: int = 64
    n_g: int = 128
    cutoff_sigmas: float = 6.0

    def __post_init__(self):
        for f in ("n_a", "n_b", "n_g"):
            if int(getattr(self, f)) < 8:
                raise ParameterError("{} must be at least 8".format(f))
            object.__setattr__(self, f, int(getattr(self, f)))
        if not self.cutoff_sigmas >= 4.0:
            raise ParameterError("cutoff_sigmas must be at least 4")

    def refined(self, factor=1.5, cutoff_sigmas=None):
        return GridSpec(
            n_a=int(math.ceil(self.n_a * factor)),
            n_b=int(math.ceil(self.n_b * factor)),
            n_g=int(math.ceil(self.n_g * factor)),
            cutoff_sigmas=self.cutoff_sigmas if cutoff_sigmas is None else cutoff_sigmas,
        )


@dataclass(frozen=True)
class RateEstimate:
    value: float
    std_err: float
    n_evals: int
    ps_mass: float


def legendre_axis(low, high, n):
    (x, w) = numpy.polynomial.legendre.leggauss(n)
    half = (high - low) / 2.0
    return (half * x + (high + low) / 2.0, half * w)


def overlap_exponents(params, dn=None):
    """k_a, k_b with Eve's amplitude overlap exp(-A^2 k / 2) on each side."""
    if params.restricted:
        return (protocol.eve_geometry(params).k_a, 0.0)
    if dn is None:
        dn = protocol.derived_noise(params)
    return inforates.overlap_exponents(params, dn)


def _magnitude_axis(sigma, k, cutoff, n):
    """Gauss-Legendre on [0, cutoff*sqrt(sigma)].

    Past cutoff/sqrt(k) Eve's two states on this side are orthogonal to
    e^(-cutoff^2/2) and no point is post-selected, so three quarters of the
    nodes go below that amplitude and the rest cover the tail.
    """
    # A zero variance is the point mass at 0; sign_prior supplies its weight
    if sigma == 0.0:
        return (numpy.zeros(1), numpy.ones(1))
    box = cutoff * math.sqrt(sigma)
    core = cutoff / math.sqrt(k) if k > 0.0 else math.inf
    if core >= box:
        return legendre_axis(0.0, box, n)
    n_core = n - n // 4
    (x1, w1) = legendre_axis(0.0, core, n_core)
    (x2, w2) = legendre_axis(core, box, n - n_core)
    return (numpy.concatenate([x1, x2]), numpy.concatenate([w1, w2]))


def alice_axis(params, grid, dn=None):
    k_a = overlap_exponents(params, dn)[0]
    return _magnitude_axis(params.effective.sigma_a, k_a, grid.cutoff_sigmas, grid.n_a)


def bob_axis(params, grid, dn=None):
    k_b = overlap_exponents(params, dn)[1]
    return _magnitude_axis(probability.bob_prior_variance(params), k_b, grid.cutoff_sigmas, grid.n_b)


def gamma_nodes(params, grid, dn, amp_a, amp_b):
    """Gamma nodes and weights for each (A, B), shape amp_b.shape + (n_g,).

    The integrand is even in gamma, so only gamma >= 0 is sampled and the
    weights are doubled. Half the nodes sit on a window around each of the
    mixture centres |a - b| and a + b; overlapping windows are merged and
    split in two.
    """
    p = params.effective
    a = numpy.asarray(amp_a, dtype=float) * math.sqrt(p.eta * p.tau_a / 2.0)
    if params.restricted:
        b = numpy.zeros(numpy.shape(amp_b))
        width = grid.cutoff_sigmas * math.sqrt(dn.upsilon_tilde)
    else:
        b = numpy.asarray(amp_b, dtype=float) * math.sqrt(p.eta * p.tau_b / 2.0)
        width = grid.cutoff_sigmas * math.sqrt(dn.upsilon)
    (near, far) = numpy.broadcast_arrays(numpy.abs(a - b), a + b)
    (lo1, hi1) = (numpy.maximum(near - width, 0.0), near + width)
    (lo2, hi2) = (numpy.maximum(far - width, 0.0), far + width)
    merged = lo2 <= hi1
    mid = (lo1 + hi2) / 2.0
    (hi1, lo2) = (numpy.where(merged, mid, hi1), numpy.where(merged, mid, lo2))

    nodes = []
    weights = []
    m = grid.n_g // 2
    for (lo, hi, n) in ((lo1, hi1, m), (lo2, hi2, grid.n_g - m)):
        (x, w) = numpy.polynomial.legendre.leggauss(n)
        half = ((hi - lo) / 2.0)[..., None]
        nodes.append(half * (x + 1.0) + lo[..., None])
        weights.append(2.0 * half * w)
    return (numpy.concatenate(nodes, axis=-1), numpy.concatenate(weights, axis=-1))


def node_slab(params, grid, dn, baxis, amp_a, w_a):
    """Points and quadrature weights for one Alice node over all (B, gamma)."""
    (b, w_b) = baxis
    (g, w_g) = gamma_nodes(params, grid, dn, amp_a, b)
    point = PSPoint(float(amp_a), b[:, None], g)
    weight = w_a * w_b[:, None] * w_g * probability.joint_ps_density(point, dn, params)
    return (point, weight)


def _region_terms(rb, params):
    """Per-point contributions (raw, post-selected, in-region indicator)."""
    raw = rb.rate
    if params.beta_mode is BetaMode.GLOBAL:
        region = (rb.i_ab - rb.eve_info) > 0.0
    else:
        region = raw > 0.0
    return (raw, numpy.where(region, raw, 0.0), region)


def _alice_node_task(params, grid, dn, baxis, node):
    (point, weight) = node_slab(params, grid, dn, baxis, *node)
    rb = inforates.single_point_rate(point, dn, params)
    (raw, ps, region) = _region_terms(rb, params)
    return (
        math.fsum((weight * raw).ravel()),
        math.fsum((weight * ps).ravel()),
        math.fsum(numpy.where(region, weight, 0.0).ravel()),
        math.fsum(weight.ravel()),
    )


def integrate_rates(params, grid=None, threads=1):
    """Raw rate R and post-selected rate R_PS from a single grid pass."""
    if grid is None:
        grid = GridSpec()
    dn = protocol.derived_noise(params)
    if params.restricted or params.effective.detector_model is DetectorModel.TRUSTED:
        # Build the cached geometry once before forking
        protocol.eve_geometry(params)
    aaxis = alice_axis(params, grid, dn)
    baxis = bob_axis(params, grid, dn)
    logging.info(
        "Grid %sx%sx%s, A<=%.3g B<=%.3g",
        len(aaxis[0]), len(baxis[0]), grid.n_g, aaxis[0].max(), baxis[0].max(),
    )

    task = functools.partial(_alice_node_task, params, grid, dn, baxis)
    nodes = list(zip(aaxis[0].tolist(), aaxis[1].tolist()))
    with getPool(threads) as pool:
        parts = pool.map(task, nodes)
    (raw, ps, ps_mass, total_mass) = sum_columns(parts)

    n_evals = len(aaxis[0]) * len(baxis[0]) * grid.n_g
    ps_mass = min(max(ps_mass, 0.0), 1.0)
    logging.debug("Quadrature mass %s, R=%s, R_PS=%s", total_mass, raw, ps)
    return (
        RateEstimate(raw, 0.0, n_evals, 1.0),
        RateEstimate(ps, 0.0, n_evals, ps_mass),
    )


def raw_rate(params, grid=None, threads=1):
    return integrate_rates(params, grid, threads)[0]


def ps_rate(params, grid=None, threads=1):
    return integrate_rates(params, grid, threads)[1]


def sample_protocol(params, dn, rng, size):
    """Forward-sample (A, B, gamma) from the protocol's distribution."""
    p = params.effective

    def signed(sigma):
        if sigma == 0.0:
            return (numpy.zeros(size), rng.choice([-1, 1], size=size))
        x = rng.normal(0.0, math.sqrt(sigma), size=size)
        return (x, numpy.where(x >= 0.0, 1, -1))

    (x_a, kappa) = signed(p.sigma_a)
    a = numpy.abs(x_a) * math.sqrt(p.eta * p.tau_a / 2.0)
    if params.restricted:
        gamma = rng.normal(-kappa * a, math.sqrt(dn.upsilon_tilde))
        coeff = math.sqrt((p.mu * p.mu - 1.0) * p.eta * p.tau_b / 2.0)
        x_b = rng.normal(coeff * (gamma + kappa * a) / dn.upsilon_tilde, math.sqrt(dn.v_b))
    else:
        (x_b, bsign) = signed(p.sigma_b)
        b = numpy.abs(x_b) * math.sqrt(p.eta * p.tau_b / 2.0)
        gamma = rng.normal(-kappa * a + bsign * b, math.sqrt(dn.upsilon))
    return PSPoint(numpy.abs(x_a), numpy.abs(x_b), gamma)


def _mc_block_task(params, dn, seed, block):
    (index, size) = block
    rng = randomFromSeed(seed, index)
    point = sample_protocol(params, dn, rng, size)
    sums = []
    for start in range(0, size, _MC_CHUNK):
        sl = slice(start, min(start + _MC_CHUNK, size))
        chunk = PSPoint(point.amp_a[sl], point.amp_b[sl], point.gamma[sl])
        (raw, ps, region) = _region_terms(inforates.single_point_rate(chunk, dn, params), params)
        sums.append((
            math.fsum(ps), math.fsum(ps * ps),
            math.fsum(raw), math.fsum(raw * raw),
            float(numpy.count_nonzero(region)),
        ))
    return sum_columns(sums)


def _mean_and_error(total, total_sq, n):
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return (mean, math.sqrt(var / n))


def montecarlo_rates(params, n_samples, seed, threads=1):
    """Monte Carlo estimates of (R, R_PS); deterministic given the seed."""
    if n_samples < MIN_SAMPLES:
        raise ParameterError("n_samples must be at least {}".format(MIN_SAMPLES))
    dn = protocol.derived_noise(params)
    if params.restricted or params.effective.detector_model is DetectorModel.TRUSTED:
        protocol.eve_geometry(params)
    block_size = NUMCONFIG["mcBlockSize"]
    blocks = [
        (i, min(block_size, n_samples - start))
        for (i, start) in enumerate(range(0, n_samples, block_size))
    ]
    logging.info("Monte Carlo with %s samples in %s blocks, seed %s", n_samples, len(blocks), seed)
    task = functools.partial(_mc_block_task, params, dn, seed)
    with getPool(threads) as pool:
        parts = pool.map(task, blocks)
    (ps, ps_sq, raw, raw_sq, n_pos) = sum_columns(parts)
    (ps_mean, ps_err) = _mean_and_error(ps, ps_sq, n_samples)
    (raw_mean, raw_err) = _mean_and_error(raw, raw_sq, n_samples)
    return (
        RateEstimate(raw_mean, raw_err, n_samples, 1.0),
        RateEstimate(ps_mean, ps_err, n_samples, n_pos / n_samples),
    )


def raw_rate_montecarlo(params, n_samples, seed, threads=1):
    return montecarlo_rates(params, n_samples, seed, threads)[0]


def ps_rate_montecarlo(params, n_samples, seed, threads=1):
    return montecarlo_rates(params, n_samples, seed, threads)[1]


def convergence_check(params, grid=None, threads=1, factor=1.5, cutoff_sigmas=None):
    """Relative change of R_PS when every axis is refined by factor."""
    if grid is None:
        grid = GridSpec()
    base = ps_rate(params, grid, threads).value
    fine = ps_rate(params, grid.refined(factor, cutoff_sigmas), threads).value
    change = abs(fine - base) / max(base, 1e-12)
    logging.info("Refinement %s -> %s changes R_PS by %.3g relative", grid, factor, change)
    return change
