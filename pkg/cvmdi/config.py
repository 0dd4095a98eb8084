import copy
import logging
import os

from sortedcontainers import SortedSet

# This config contains numerical constants whose values we never expect to
# change, they are shared by the toolbox and the rate code.
NUMCONFIG = {
    # Covariance matrices are symmetrized and checked to this tolerance
    "symmetryTol": 1e-12,
    # Allowed undershoot of symplectic eigenvalues below 1
    "physicalSlack": 1e-9,
    # Smallest measured-quadrature variance we are prepared to invert
    "homodyneFloor": 1e-14,
    # Added to the diagonal when a Cholesky factorisation fails
    "choleskyJitter": 1e-12,
    # Density-matrix eigenvalues are clamped into [0,1] inside this window
    "eigenClamp": 1e-10,
    # Maximum allowed deviation of a density matrix trace from 1
    "traceTol": 1e-9,
    # h(nu) is taken as 0 below 1 + entropyThreshold
    "entropyThreshold": 1e-12,
    # Probabilities are accepted this far outside [0,1] and clamped
    "probabilitySlack": 1e-12,
    # Samples per Monte Carlo block (each block owns its own RNG stream)
    "mcBlockSize": 65536,
    # Optimised rates below this are quadrature noise and count as zero
    "rateFloor": 1e-12,
}

CONFIG_DEFAULT = {
    # Link transmissivities (ignored when distance_km is given)
    "tau_a": 1.0,
    "tau_b": 1.0,
    # Excess noise on each link, shot-noise units
    "eps_a": 0.0,
    "eps_b": 0.0,
    # Relay detector efficiency and detector-noise TMSV variance
    "eta": 1.0,
    "s_det": 1.0,
    # trusted, untrusted or absorbed
    "detector_model": "untrusted",
    # Modulation variances
    "sigma_a": 2.0,
    "sigma_b": 2.0,
    # Bob's TMSV variance (restricted eavesdropping only)
    "mu": 3.0,
    # Reconciliation efficiency, and whether it is applied before the
    # post-selection decision (pointwise) or only to the accumulated rate
    "beta_rec": 1.0,
    "beta_mode": "pointwise",
    # complete_collective, restricted_individual or restricted_collective
    "scenario": "complete_collective",

    # Quadrature nodes per axis and half-width of the box in prior deviations
    "n_a": 64,
    "n_b": 64,
    "n_g": 128,
    "cutoff_sigmas": 6.0,

    # Total Alice-Bob distance for the rate command; negative means "use tau"
    "distance_km": -1.0,
    # Distances for sweeps (total), Alice-relay distances for the frontier,
    # and the window for the optimal-parameter table
    "distances_km": [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0],
    "alice_km": [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
    "window_km": [10.0, 12.0, 14.0, 16.0, 18.0, 20.0],
    # Split total distance evenly between the two links
    "symmetric": True,
    # Optimize the free modulation parameters before reporting a rate
    "optimize": False,
    # Warm-start each sweep row from the previous optimum
    "warm_start": True,
    # Smallest rate counted as "in range"
    "rate_floor": 1e-6,

    # Monte Carlo oracle
    "seed": 1,
    "n_samples": 1000000,

    # Output path (empty means stdout) and format, csv or json
    "output": "",
    "format": "csv",
    # Worker processes; 0 means CVMDI_THREADS or the number of CPUs
    "threads": 0,
}

PRESET_IDEAL = copy.deepcopy(CONFIG_DEFAULT)

PRESET_REALISTIC_COMPLETE = copy.deepcopy(CONFIG_DEFAULT)
PRESET_REALISTIC_COMPLETE["eps_a"] = 0.05
PRESET_REALISTIC_COMPLETE["eps_b"] = 0.05
PRESET_REALISTIC_COMPLETE["eta"] = 0.98
PRESET_REALISTIC_COMPLETE["beta_rec"] = 0.95

PRESET_REALISTIC_RESTRICTED = copy.deepcopy(CONFIG_DEFAULT)
PRESET_REALISTIC_RESTRICTED["eps_a"] = 0.05
PRESET_REALISTIC_RESTRICTED["eps_b"] = 0.05
PRESET_REALISTIC_RESTRICTED["eta"] = 0.8
PRESET_REALISTIC_RESTRICTED["beta_rec"] = 0.95
PRESET_REALISTIC_RESTRICTED["detector_model"] = "absorbed"
PRESET_REALISTIC_RESTRICTED["scenario"] = "restricted_collective"

PRESETS = {
    "ideal": PRESET_IDEAL,
    "realistic-complete": PRESET_REALISTIC_COMPLETE,
    "realistic-restricted": PRESET_REALISTIC_RESTRICTED,
}

# Keys which are passed straight through to ProtocolParams / GridSpec
PARAM_KEYS = SortedSet([
    "tau_a", "tau_b", "eps_a", "eps_b", "eta", "s_det", "detector_model",
    "sigma_a", "sigma_b", "mu", "beta_rec", "beta_mode", "scenario",
])
GRID_KEYS = SortedSet(["n_a", "n_b", "n_g", "cutoff_sigmas"])

_TRUE_WORDS = SortedSet(["1", "on", "true", "yes"])
_FALSE_WORDS = SortedSet(["0", "false", "no", "off"])


class ConfigError(ValueError):
    def __init__(self, message, *, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line


def getDefaultConfig():
    return copy.deepcopy(CONFIG_DEFAULT)


def getPresetConfig(name):
    if name not in PRESETS:
        raise ConfigError(
            "Unknown preset {} (choices: {})".format(name, ", ".join(sorted(PRESETS))),
            key="preset",
        )
    return copy.deepcopy(PRESETS[name])


def parseValue(key, text, *, line=None):
    default = CONFIG_DEFAULT[key]
    text = text.strip()
    try:
        if isinstance(default, bool):
            if text.lower() in _TRUE_WORDS:
                return True
            if text.lower() in _FALSE_WORDS:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, list):
            return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(
            "Cannot parse value '{}' for {}".format(text, key), key=key, line=line
        ) from None
    return text


def LoadConfigFromDict(config, d):
    for (k, v) in d.items():
        if k not in CONFIG_DEFAULT:
            raise ConfigError("Invalid CONFIG option: " + k, key=k)
        if isinstance(v, str) and not isinstance(CONFIG_DEFAULT[k], str):
            v = parseValue(k, v)
        config[k] = v
    return config


def LoadConfigFromFile(config, file):
    with open(file, encoding="utf-8") as f:
        for (lineno, raw) in enumerate(f, start=1):
            text = raw.split("#", 1)[0].strip()
            if text == "":
                continue
            if "=" not in text:
                raise ConfigError(
                    "{}:{}: expected 'key = value'".format(file, lineno), line=lineno
                )
            (k, v) = text.split("=", 1)
            k = k.strip()
            if k not in CONFIG_DEFAULT:
                raise ConfigError(
                    "{}:{}: invalid CONFIG option: {}".format(file, lineno, k),
                    key=k,
                    line=lineno,
                )
            config[k] = parseValue(k, v, line=lineno)
    logging.info("Loaded config from %s", file)
    return config


def LoadOverrides(config, overrides):
    for o in overrides:
        if "=" not in o:
            raise ConfigError("Override '{}' is not key=value".format(o))
        (k, v) = o.split("=", 1)
        k = k.strip()
        if k not in CONFIG_DEFAULT:
            raise ConfigError("Invalid CONFIG option: " + k, key=k)
        config[k] = parseValue(k, v)
    return config


def resolveThreads(config):
    if config["threads"] > 0:
        return config["threads"]
    env = os.environ.get("CVMDI_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("CVMDI_THREADS must be an integer", key="threads") from None
    return os.cpu_count() or 1


def paramDict(config):
    return {k: config[k] for k in PARAM_KEYS}


def gridDict(config):
    return {k: config[k] for k in GRID_KEYS}
