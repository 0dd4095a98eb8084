"""The batch commands behind the command line.

Each command takes a resolved config dict and returns a ResultTable.
"""

import logging
import math

from . import config as cfg
from . import integrate, optimize, protocol
from .base import ProtocolParams
from .integrate import GridSpec
from .table import ResultTable

# Parameter regimes compared by the optimal-parameter table
REGIME_IDEAL = {"eps_a": 0.0, "eps_b": 0.0, "eta": 1.0, "beta_rec": 1.0, "s_det": 1.0}
REGIME_REALISTIC = {"eps_a": 0.05, "eps_b": 0.05, "eta": 0.8, "beta_rec": 0.95, "s_det": 1.0}


def build_params(config):
    return ProtocolParams(**cfg.paramDict(config))


def build_grid(config):
    return GridSpec(**cfg.gridDict(config))


def _placed_params(config):
    params = build_params(config)
    if config["distance_km"] >= 0:
        params = protocol.params_at_total_distance(params, config["distance_km"], config["symmetric"])
    return params


def _free_columns(params):
    return list(optimize.free_parameters(params))


def cmd_rate(config, threads=1):
    params = _placed_params(config)
    grid = build_grid(config)
    if config["optimize"]:
        params = optimize.optimize_rate(params, grid, threads).params
    (raw, ps) = integrate.integrate_rates(params, grid, threads)
    table = ResultTable([
        "distance_km", "tau_a", "tau_b", "sigma_a", "sigma_b", "mu",
        "raw_rate", "ps_rate", "ps_mass", "n_evals",
    ])
    table.add_row([
        max(config["distance_km"], 0.0), params.tau_a, params.tau_b,
        params.sigma_a, params.sigma_b, params.mu,
        raw.value, ps.value, ps.ps_mass, ps.n_evals,
    ])
    return table.stamp(config, "rate")


def cmd_sweep(config, threads=1):
    params = build_params(config)
    rows = optimize.distance_sweep(
        params, config["distances_km"], config["symmetric"], build_grid(config),
        threads, config["warm_start"],
    )
    free = _free_columns(params)
    table = ResultTable(["distance_km", "ps_rate"] + free)
    for r in rows:
        table.add_row([r.distance_km, r.best_rate] + [r.best_params[n] for n in free])
    return table.stamp(config, "sweep")


def cmd_frontier(config, threads=1):
    if len(config["alice_km"]) == 0:
        raise cfg.ConfigError("alice_km must list at least one distance", key="alice_km")
    rows = optimize.asymmetric_frontier(
        build_params(config), config["alice_km"], config["rate_floor"],
        build_grid(config), threads, config["warm_start"],
    )
    table = ResultTable(["alice_km", "max_bob_km"], rows)
    return table.stamp(config, "frontier")


def cmd_oracle(config, threads=1):
    if config["n_samples"] < integrate.MIN_SAMPLES:
        raise cfg.ConfigError(
            "n_samples must be at least {}".format(integrate.MIN_SAMPLES), key="n_samples"
        )
    params = _placed_params(config)
    (raw_q, ps_q) = integrate.integrate_rates(params, build_grid(config), threads)
    (raw_mc, ps_mc) = integrate.montecarlo_rates(params, config["n_samples"], config["seed"], threads)

    def z(q, mc):
        if mc.std_err > 0:
            return (mc.value - q.value) / mc.std_err
        return 0.0 if mc.value == q.value else math.copysign(math.inf, mc.value - q.value)

    table = ResultTable([
        "quantity", "quadrature", "montecarlo", "std_err", "z",
    ])
    table.add_row(["raw_rate", raw_q.value, raw_mc.value, raw_mc.std_err, z(raw_q, raw_mc)])
    table.add_row(["ps_rate", ps_q.value, ps_mc.value, ps_mc.std_err, z(ps_q, ps_mc)])
    logging.info("Oracle z-scores: raw %.3g, PS %.3g", z(raw_q, raw_mc), z(ps_q, ps_mc))
    return table.stamp(config, "oracle", seed=config["seed"])


def cmd_optparams(config, threads=1):
    base = build_params(config)
    if not base.restricted:
        raise cfg.ConfigError("optparams needs a restricted scenario", key="scenario")
    grid = build_grid(config)
    columns = ["distance_km"]
    results = []
    for (name, regime) in (("ideal", REGIME_IDEAL), ("realistic", REGIME_REALISTIC)):
        rows = optimize.optimal_param_sweep(
            base.replace(**regime), config["window_km"], config["symmetric"], grid,
            threads, config["warm_start"],
        )
        columns += [name + "_ps_rate", name + "_sigma_a", name + "_mu"]
        results.append(rows)
    table = ResultTable(columns)
    for (i, d) in enumerate(config["window_km"]):
        row = [float(d)]
        for rows in results:
            r = rows[i]
            row += [r.best_rate, r.best_params["sigma_a"], r.best_params["mu"]]
        table.add_row(row)
    return table.stamp(config, "optparams")


COMMANDS = {
    "rate": cmd_rate,
    "sweep": cmd_sweep,
    "frontier": cmd_frontier,
    "oracle": cmd_oracle,
    "optparams": cmd_optparams,
}
