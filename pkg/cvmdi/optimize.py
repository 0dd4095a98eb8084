"""Optimisation of the free modulation parameters, and distance sweeps.

The free parameters are searched in log space, log(sigma) and log(mu - 1),
so the simplex never leaves the feasible region. Multi-starts run as one
task per start; each start is deterministic, so the result does not
depend on how the starts are spread over workers.
"""

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy
import scipy.optimize

from . import integrate, protocol
from .base import ParameterError
from .config import NUMCONFIG
from .parallel import getPool

DEFAULT_STARTS = (0.5, 2.0, 8.0, 32.0)
XATOL = 1e-3
MAXFEV = 200
# Largest log-parameter the simplex may visit
_LOG_BOUND = 9.0


class OptimizationError(RuntimeError):
    pass


class NoRangeError(OptimizationError):
    pass


@dataclass(frozen=True)
class OptResult:
    best_params: Dict[str, float]
    best_rate: float
    n_evals: int
    converged: bool
    params: object = field(repr=False, default=None)


@dataclass(frozen=True)
class SweepRow:
    distance_km: float
    best_rate: float
    best_params: Dict[str, float]

    def __post_init__(self):
        if self.distance_km < 0:
            raise ParameterError("distances must be non-negative")


def free_parameters(params):
    return ("sigma_a", "mu") if params.restricted else ("sigma_a", "sigma_b")


def _to_log(name, value):
    return math.log(value - 1.0) if name == "mu" else math.log(value)


def _from_log(name, x):
    x = min(max(x, -_LOG_BOUND), _LOG_BOUND)
    return 1.0 + math.exp(x) if name == "mu" else math.exp(x)


def _apply(params, free, x):
    return params.replace(**{n: _from_log(n, v) for (n, v) in zip(free, x)})


def _objective(params, free, grid, threads, x):
    try:
        rate = integrate.ps_rate(_apply(params, free, x), grid, threads).value
    except (ParameterError, ArithmeticError) as e:
        logging.debug("Objective failed at %s: %s", x, e)
        return math.inf
    if not math.isfinite(rate):
        return math.inf
    # Flat past the range, so the simplex contracts instead of chasing noise
    return -rate if rate >= NUMCONFIG["rateFloor"] else 0.0


def _run_start(params, free, grid, threads, x0):
    x0 = numpy.asarray(x0, dtype=float)
    simplex = numpy.array([x0] + [x0 + 0.5 * numpy.eye(len(x0))[i] for i in range(len(x0))])
    res = scipy.optimize.minimize(
        functools.partial(_objective, params, free, grid, threads),
        x0,
        method="Nelder-Mead",
        options={
            "xatol": XATOL,
            "fatol": math.inf,
            "maxfev": MAXFEV,
            "initial_simplex": simplex,
        },
    )
    return (tuple(float(v) for v in res.x), float(res.fun), int(res.nfev), bool(res.success))


def default_starts(params):
    return [dict((n, (1.0 + s) if n == "mu" else s) for n in free_parameters(params)) for s in DEFAULT_STARTS]


def optimize_rate(params, grid=None, threads=1, starts=None):
    """Maximise R_PS over the free parameters of the scenario.

    starts is a list of dicts of free-parameter values; by default four
    starts spread over two decades.
    """
    free = free_parameters(params)
    if starts is None:
        starts = default_starts(params)
    x0s = [tuple(_to_log(n, s[n]) for n in free) for s in starts]

    if len(x0s) > 1 and threads > 1:
        task = functools.partial(_run_start, params, free, grid, 1)
        with getPool(min(threads, len(x0s))) as pool:
            runs = pool.map(task, x0s)
    else:
        runs = [_run_start(params, free, grid, threads, x0) for x0 in x0s]

    finite = [r for r in runs if math.isfinite(r[1])]
    if len(finite) == 0:
        raise OptimizationError("no start produced a finite rate for {}".format(params))
    # Lowest objective, ties to the earliest start
    (x, fun, _, success) = min(finite, key=lambda r: r[1])
    best = {n: _from_log(n, v) for (n, v) in zip(free, x)}
    n_evals = sum(r[2] for r in runs)
    logging.info("Optimised %s: rate %.6g at %s after %s evaluations", free, -fun, best, n_evals)
    return OptResult(best, -fun, n_evals, success, params.replace(**best))


def _optimized_rate(params, grid, threads, start):
    starts = None if start is None else [start]
    return optimize_rate(params, grid, threads, starts)


def distance_sweep(base_params, distances_km, symmetric=True, grid=None, threads=1, warm_start=True):
    rows = []
    start = None
    for d in distances_km:
        params = protocol.params_at_total_distance(base_params, d, symmetric)
        res = _optimized_rate(params, grid, threads, start)
        rows.append(SweepRow(float(d), res.best_rate, res.best_params))
        if warm_start and res.best_rate > 0.0:
            start = res.best_params
    return rows


def _search_distance(rate_at, floor, resolution, first_step=8.0, limit=1000.0):
    """Largest distance with rate_at(d) >= floor, to within resolution.

    Assumes the rate falls with distance; the bracket always satisfies
    rate(lower) >= floor > rate(upper).
    """
    lower = 0.0
    upper = first_step
    while rate_at(upper) >= floor:
        lower = upper
        upper *= 2.0
        if upper > limit:
            raise OptimizationError("rate still above floor at {} km".format(lower))
    while upper - lower > resolution:
        mid = 0.5 * (lower + upper)
        if rate_at(mid) >= floor:
            lower = mid
        else:
            upper = mid
        logging.info("Distance bracket [%.3f, %.3f] km", lower, upper)
    return lower


class _WarmRate:
    """Optimised rate as a function of one distance, warm-starting as it goes."""

    def __init__(self, place, grid, threads, warm_start):
        self._place = place
        self._grid = grid
        self._threads = threads
        self._warm = warm_start
        self._start = None

    def __call__(self, d):
        res = _optimized_rate(self._place(d), self._grid, self._threads, self._start)
        # A zero-rate optimum sits on a plateau and is no use as a start
        if self._warm and res.best_rate > 0.0:
            self._start = res.best_params
        return res.best_rate


def max_range(base_params, rate_floor=1e-6, symmetric=True, grid=None, threads=1,
              warm_start=True, resolution=0.1):
    if not rate_floor > 0:
        raise ParameterError("rate_floor must be positive")
    rate_at = _WarmRate(
        lambda d: protocol.params_at_total_distance(base_params, d, symmetric),
        grid, threads, warm_start,
    )
    if rate_at(0.0) < rate_floor:
        raise NoRangeError("optimised rate is below {} already at 0 km".format(rate_floor))
    return _search_distance(rate_at, rate_floor, resolution)


def asymmetric_frontier(base_params, alice_km, rate_floor=1e-6, grid=None, threads=1,
                        warm_start=True, resolution=0.1):
    """For each Alice-relay distance, the largest Bob-relay distance in range."""
    if len(alice_km) == 0:
        raise ParameterError("alice_km must not be empty")
    rows = []
    for a in alice_km:
        rate_at = _WarmRate(
            functools.partial(protocol.params_at_distance, base_params, a),
            grid, threads, warm_start,
        )
        if rate_at(0.0) < rate_floor:
            bob = 0.0
        else:
            bob = _search_distance(rate_at, rate_floor, resolution)
        logging.info("Frontier: Alice %.3f km, Bob up to %.3f km", a, bob)
        rows.append((float(a), bob))
    return rows


def optimal_param_sweep(base_params, window_km, symmetric=True, grid=None, threads=1, warm_start=True):
    if not base_params.restricted:
        raise ParameterError("optimal_param_sweep needs a restricted scenario")
    return distance_sweep(base_params, window_km, symmetric, grid, threads, warm_start)
