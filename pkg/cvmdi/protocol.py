"""Channel and relay model, and the construction of Eve's conditional states.

Mode order of the pre-relay state is fixed:

    A, B, E1, e1, E2, e2, [D1, d1, D2, d2], [b]

A and B are the modes sent by Alice and Bob, (E1, e1) and (E2, e2) the
entangling-cloner TMSVs on the two links, (D1, d1) and (D2, d2) the
detector-noise TMSVs at the relay (absent in the absorbed model), and b is
the mode Bob keeps in the restricted scenario. Capital letters are the
modes injected into a beam splitter, lower case the retained halves.
"""

import functools
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy

from . import gaussian
from .base import DerivedNoise, DetectorModel, OmegaPair, ParameterError
from .gaussian import GaussianState

DB_PER_KM = 0.2


def tau_from_db(loss_db):
    if not loss_db >= 0.0:
        raise ParameterError("loss must be non-negative, got {} dB".format(loss_db))
    return 10.0 ** (-loss_db / 10.0)


def tau_from_km(length_km, db_per_km=DB_PER_KM):
    if not length_km >= 0.0:
        raise ParameterError("length must be non-negative, got {} km".format(length_km))
    return tau_from_db(db_per_km * length_km)


def params_at_distance(params, alice_km, bob_km):
    return params.replace(tau_a=tau_from_km(alice_km), tau_b=tau_from_km(bob_km))


def params_at_total_distance(params, total_km, symmetric=True):
    """Place the relay in the middle, or at Alice's end when not symmetric."""
    if symmetric:
        return params_at_distance(params, total_km / 2.0, total_km / 2.0)
    return params_at_distance(params, 0.0, total_km)


def _omega(eps, eta_tau):
    x = eta_tau / 2.0
    if not x < 1.0:
        raise ParameterError("eta*tau/2 must be below 1")
    return 1.0 + eps * x / (1.0 - x)


def omega_from_epsilon(params):
    """Thermal variances of the two cloners for the configured excess noise.

    The excess noise is referred to the channel input of each
    point-to-point link Alice (Bob) to relay detector.
    """
    p = params.effective
    return OmegaPair(_omega(p.eps_a, p.eta * p.tau_a), _omega(p.eps_b, p.eta * p.tau_b))


def derived_noise(params, omegas=None):
    p = params.effective
    if omegas is None:
        omegas = omega_from_epsilon(params)
    (eta, ta, tb) = (p.eta, p.tau_a, p.tau_b)
    s_det = p.s_det if p.has_detector_modes else 1.0
    upsilon = (1.0 - eta) * s_det + (eta / 2.0) * (
        ta + tb + (1.0 - ta) * omegas.omega_a + (1.0 - tb) * omegas.omega_b
    )

    if p.mu > 1.0:
        extra = (eta / 2.0) * tb * (p.mu - 1.0)
        upsilon_tilde = upsilon + extra
        upsilon_tilde_prime = upsilon
        delta_coeff = math.sqrt(eta * tb / 2.0) * math.sqrt((p.mu - 1.0) / (p.mu + 1.0))
        v_b = (p.mu + 1.0) * (1.0 - (p.mu - 1.0) * eta * tb / (2.0 * upsilon_tilde))
        xi = math.sqrt((p.mu + 1.0) / (p.mu - 1.0))
        gamma_prime_factor = (upsilon_tilde_prime + extra) / upsilon_tilde
    else:
        upsilon_tilde = upsilon
        upsilon_tilde_prime = upsilon
        delta_coeff = None
        v_b = None
        xi = None
        gamma_prime_factor = 1.0

    return DerivedNoise(
        upsilon=upsilon,
        upsilon_tilde=upsilon_tilde,
        upsilon_tilde_prime=upsilon_tilde_prime,
        delta_coeff=delta_coeff,
        v_b=v_b,
        xi=xi,
        gamma_prime_factor=gamma_prime_factor,
    )


def mode_labels(params):
    p = params.effective
    labels = ["A", "B", "E1", "e1", "E2", "e2"]
    if p.has_detector_modes:
        labels += ["D1", "d1", "D2", "d2"]
    if p.restricted:
        labels.append("b")
    return labels


def eve_labels(params):
    """Modes held by Eve after the relay, in residual order."""
    p = params.effective
    labels = ["E1", "e1", "E2", "e2"]
    if p.detector_model is DetectorModel.UNTRUSTED:
        labels += ["D1", "d1", "D2", "d2"]
    return labels


def build_pre_relay_state(params, kappa, amp_a, bsign=1, amp_b=0.0):
    """All modes after the two links, before the relay.

    In the restricted scenario Bob sends half of a TMSV(mu) and bsign,
    amp_b are ignored.
    """
    if kappa not in (1, -1) or bsign not in (1, -1):
        raise ParameterError("signs must be +1 or -1")
    if amp_a < 0 or amp_b < 0:
        raise ParameterError("amplitudes must be non-negative")
    p = params.effective
    omegas = omega_from_epsilon(params)

    parts = [gaussian.coherent_state(kappa * amp_a)]
    if p.restricted:
        parts.append(gaussian.tmsv_state(p.mu))
    else:
        parts.append(gaussian.coherent_state(bsign * amp_b))
    parts += [gaussian.tmsv_state(omegas.omega_a), gaussian.tmsv_state(omegas.omega_b)]
    if p.has_detector_modes:
        parts += [gaussian.tmsv_state(p.s_det), gaussian.tmsv_state(p.s_det)]
    state = gaussian.tensor_product(*parts)

    if p.restricted:
        # Bob's TMSV was built as (B, b) at positions 1, 2; move b to the end
        n = state.n_modes
        state = gaussian.permute_modes(state, [0, 1] + list(range(3, n)) + [2])

    state = gaussian.beam_splitter(state, 0, 2, p.tau_a)
    state = gaussian.beam_splitter(state, 1, 4, p.tau_b)
    return state


@dataclass(frozen=True)
class RelayResult:
    residual: GaussianState
    labels: Tuple[str, ...]
    density_q: float
    density_p: float


def relay_and_condition(state, params, gamma_q, gamma_p=0.0):
    """Balanced beam splitter, detector loss, then the two homodynes.

    q is measured on B'' = (B' - A')/sqrt(2) and p on A'' = (A' + B')/sqrt(2).
    The residual state holds every mode except A and B, in pre-relay
    order; detector-noise modes are traced out for trusted detectors.
    """
    p = params.effective
    labels = mode_labels(params)
    if state.n_modes != len(labels):
        raise ParameterError("state does not match the parameter set's mode layout")

    state = gaussian.beam_splitter(state, 0, 1, 0.5)
    if p.has_detector_modes:
        state = gaussian.beam_splitter(state, 0, labels.index("D1"), p.eta)
        state = gaussian.beam_splitter(state, 1, labels.index("D2"), p.eta)

    (state, density_q) = gaussian.condition_homodyne(state, 1, "q", gamma_q)
    (state, density_p) = gaussian.condition_homodyne(state, 0, "p", gamma_p)
    labels = labels[2:]

    if p.detector_model is DetectorModel.TRUSTED:
        keep = [i for (i, l) in enumerate(labels) if l[0] not in "Dd"]
        state = gaussian.partial_trace(state, keep)
        labels = [labels[i] for i in keep]
    return RelayResult(state, tuple(labels), density_q, density_p)


def _eve_part(result):
    keep = [i for (i, l) in enumerate(result.labels) if l != "b"]
    return gaussian.partial_trace(result.residual, keep)


def eve_state_complete(params, kappa, bsign, amp_a, amp_b, gamma):
    if params.restricted:
        raise ParameterError("eve_state_complete needs the complete scenario")
    state = build_pre_relay_state(params, kappa, amp_a, bsign, amp_b)
    return _eve_part(relay_and_condition(state, params, gamma, 0.0))


def eve_state_restricted(params, kappa, amp_a, gamma):
    """Eve's state when she ignores Bob's announcements; b is traced out."""
    if not params.restricted:
        raise ParameterError("eve_state_restricted needs a restricted scenario")
    state = build_pre_relay_state(params, kappa, amp_a)
    return _eve_part(relay_and_condition(state, params, gamma, 0.0))


@dataclass(frozen=True, eq=False)
class EveGeometry:
    """Eve's conditional covariance matrix and the linear response of her mean.

    Her mean at any point is kappa*A*resp_a + bsign*B*resp_b + gamma*resp_g.
    k_a, k_b are resp^T V^-1 resp, so the trace overlap of the two states
    differing only in kappa is exp(-A^2 k_a).
    """

    cm: numpy.ndarray
    resp_a: numpy.ndarray
    resp_b: numpy.ndarray
    resp_g: numpy.ndarray
    k_a: float
    k_b: float
    labels: Tuple[str, ...]

    def mean(self, kappa, amp_a, bsign=1, amp_b=0.0, gamma=0.0):
        return kappa * amp_a * self.resp_a + bsign * amp_b * self.resp_b + gamma * self.resp_g


def _eve_mean_and_cm(params, kappa, amp_a, bsign, amp_b, gamma):
    if params.restricted:
        s = eve_state_restricted(params, kappa, amp_a, gamma)
    else:
        s = eve_state_complete(params, kappa, bsign, amp_a, amp_b, gamma)
    return (s.mean, s.cm)


@functools.lru_cache(maxsize=256)
def eve_geometry(params):
    (base, cm) = _eve_mean_and_cm(params, 1, 0.0, 1, 0.0, 0.0)
    resp_a = _eve_mean_and_cm(params, 1, 1.0, 1, 0.0, 0.0)[0] - base
    resp_g = _eve_mean_and_cm(params, 1, 0.0, 1, 0.0, 1.0)[0] - base
    if params.restricted:
        resp_b = numpy.zeros_like(resp_a)
    else:
        resp_b = _eve_mean_and_cm(params, 1, 0.0, 1, 1.0, 0.0)[0] - base

    k_a = gaussian.inverse_quadratic_form(cm, resp_a)
    k_b = gaussian.inverse_quadratic_form(cm, resp_b) if not params.restricted else 0.0
    for arr in (resp_a, resp_b, resp_g):
        arr.setflags(write=False)
    logging.debug("Eve geometry for %s: k_a=%s k_b=%s", params, k_a, k_b)
    return EveGeometry(
        cm=cm, resp_a=resp_a, resp_b=resp_b, resp_g=resp_g,
        k_a=k_a, k_b=k_b, labels=tuple(eve_labels(params)),
    )
