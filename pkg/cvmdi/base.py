import dataclasses
import enum
import functools
from dataclasses import dataclass
from typing import Optional

import numpy


class ParameterError(ValueError):
    pass


class Scenario(str, enum.Enum):
    COMPLETE = "complete_collective"
    RESTRICTED_INDIVIDUAL = "restricted_individual"
    RESTRICTED_COLLECTIVE = "restricted_collective"

    @property
    def restricted(self):
        return self is not Scenario.COMPLETE


class DetectorModel(str, enum.Enum):
    # Who holds the modes that model relay detector inefficiency
    TRUSTED = "trusted"
    UNTRUSTED = "untrusted"
    ABSORBED = "absorbed"


class BetaMode(str, enum.Enum):
    POINTWISE = "pointwise"
    GLOBAL = "global"


def _coerce(enumtype, value, name):
    if isinstance(value, enumtype):
        return value
    try:
        return enumtype(value)
    except ValueError:
        choices = ", ".join(e.value for e in enumtype)
        raise ParameterError("{} must be one of {}, not {!r}".format(name, choices, value)) from None


def _check_range(name, value, low, high, *, low_open=False, high_open=False):
    if not numpy.isfinite(value):
        raise ParameterError("{} must be finite, got {}".format(name, value))
    if (value < low) or (low_open and value == low):
        raise ParameterError("{} = {} is below its range".format(name, value))
    if high is not None and ((value > high) or (high_open and value == high)):
        raise ParameterError("{} = {} is above its range".format(name, value))


@dataclass(frozen=True)
class ProtocolParams:
    """Every channel, detector, modulation and reconciliation parameter.

    All variances are in shot-noise units. Instances are immutable and
    hashable, so they can key caches and be shipped to worker processes.
    """

    tau_a: float = 1.0
    tau_b: float = 1.0
    eps_a: float = 0.0
    eps_b: float = 0.0
    eta: float = 1.0
    s_det: float = 1.0
    detector_model: DetectorModel = DetectorModel.UNTRUSTED
    sigma_a: float = 2.0
    sigma_b: float = 2.0
    mu: float = 3.0
    beta_rec: float = 1.0
    scenario: Scenario = Scenario.COMPLETE
    beta_mode: BetaMode = BetaMode.POINTWISE

    def __post_init__(self):
        object.__setattr__(
            self, "detector_model", _coerce(DetectorModel, self.detector_model, "detector_model")
        )
        object.__setattr__(self, "scenario", _coerce(Scenario, self.scenario, "scenario"))
        object.__setattr__(self, "beta_mode", _coerce(BetaMode, self.beta_mode, "beta_mode"))
        for f in ("tau_a", "tau_b", "eps_a", "eps_b", "eta", "s_det",
                  "sigma_a", "sigma_b", "mu", "beta_rec"):
            object.__setattr__(self, f, float(getattr(self, f)))

        _check_range("tau_a", self.tau_a, 0.0, 1.0, low_open=True)
        _check_range("tau_b", self.tau_b, 0.0, 1.0, low_open=True)
        _check_range("eps_a", self.eps_a, 0.0, None)
        _check_range("eps_b", self.eps_b, 0.0, None)
        _check_range("eta", self.eta, 0.0, 1.0, low_open=True)
        _check_range("s_det", self.s_det, 1.0, None)
        _check_range("sigma_a", self.sigma_a, 0.0, None)
        _check_range("sigma_b", self.sigma_b, 0.0, None)
        _check_range("mu", self.mu, 1.0, None)
        _check_range("beta_rec", self.beta_rec, 0.0, 1.0, low_open=True)

        if self.detector_model is DetectorModel.ABSORBED and self.s_det != 1.0:
            raise ParameterError("the absorbed detector model is only valid with s_det = 1")
        if self.scenario.restricted and not self.mu > 1.0:
            raise ParameterError("restricted eavesdropping needs mu > 1, got {}".format(self.mu))

    @property
    def restricted(self):
        return self.scenario.restricted

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @functools.cached_property
    def effective(self):
        """The parameters the physics sees.

        The absorbed model folds the detector efficiency into the link
        transmissivities and then behaves as ideal detection.
        """
        if self.detector_model is not DetectorModel.ABSORBED:
            return self
        return dataclasses.replace(
            self, tau_a=self.eta * self.tau_a, tau_b=self.eta * self.tau_b, eta=1.0
        )

    @property
    def has_detector_modes(self):
        return self.detector_model is not DetectorModel.ABSORBED

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["detector_model"] = self.detector_model.value
        d["scenario"] = self.scenario.value
        d["beta_mode"] = self.beta_mode.value
        return d


@dataclass(frozen=True)
class OmegaPair:
    omega_a: float
    omega_b: float

    def __post_init__(self):
        if self.omega_a < 1.0 or self.omega_b < 1.0:
            raise ParameterError("thermal variances must be >= 1")


@dataclass(frozen=True)
class DerivedNoise:
    """Scalars shared by the closed-form probabilities.

    The restricted-scenario fields are None unless mu > 1.
    """

    upsilon: float
    upsilon_tilde: float
    upsilon_tilde_prime: float
    delta_coeff: Optional[float]
    v_b: Optional[float]
    xi: Optional[float]
    gamma_prime_factor: float


@dataclass(frozen=True)
class PSPoint:
    """One post-selection coordinate.

    The fields may also be broadcastable numpy arrays, in which case every
    single-point function evaluates on the whole broadcast grid.
    """

    amp_a: object
    amp_b: object
    gamma: object

    def __post_init__(self):
        if numpy.any(numpy.asarray(self.amp_a) < 0) or numpy.any(numpy.asarray(self.amp_b) < 0):
            raise ParameterError("amplitudes must be non-negative")


@dataclass(frozen=True)
class SignPair:
    kappa: int
    bsign: int

    def __post_init__(self):
        if self.kappa not in (1, -1) or self.bsign not in (1, -1):
            raise ParameterError("signs must be +1 or -1")


SIGNS = (1, -1)
SIGN_PAIRS = tuple(SignPair(k, b) for k in SIGNS for b in SIGNS)
