"""Closed-form densities and sign posteriors at a post-selection point.

Every function broadcasts over numpy arrays in the PSPoint fields. Signs
(kappa for Alice, bsign for Bob) are plain +1/-1 integers.

Priors are written as a density over the magnitude paired with a sign
atom: p(sign, magnitude) = N(sign*magnitude; 0, sigma). Summing over the
sign gives the folded density of the magnitude on [0, inf).

In the restricted scenario Bob's variable x = bsign*B is the q outcome of
his heterodyne measurement, which has variance mu+1. Given x, the relay
outcome is Gaussian around -kappa*a + x*Delta with variance upsilon, and
the closed forms below are written in that factorisation; the oracles use
the other order, p(gamma|kappa A) p(x|kappa A gamma).
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy
import scipy.special
import scipy.stats

from .base import SIGN_PAIRS, SIGNS, ParameterError, SignPair


@dataclass(frozen=True, eq=False)
class SignPosteriors:
    """Sign probabilities at one point (or a broadcast grid of points).

    kappa_given_b[(k, b)] = p(kappa=k | bsign=b, A, B, gamma)
    b_given_kappa[(k, b)] = p(bsign=b | kappa=k, A, B, gamma)
    kappa[k] = p(kappa=k | A, B, gamma), bsign[b] likewise
    joint[(k, b)] = p(kappa=k, bsign=b | A, B, gamma)
    kappa_given_ag[k] = p(kappa=k | A, gamma), restricted scenario only
    """

    kappa_given_b: Dict[Tuple[int, int], numpy.ndarray]
    b_given_kappa: Dict[Tuple[int, int], numpy.ndarray]
    kappa: Dict[int, numpy.ndarray]
    bsign: Dict[int, numpy.ndarray]
    joint: Dict[Tuple[int, int], numpy.ndarray]
    kappa_given_ag: Optional[Dict[int, numpy.ndarray]] = None


def _alice_shift(amp_a, params):
    p = params.effective
    return numpy.asarray(amp_a, dtype=float) * math.sqrt(p.eta * p.tau_a / 2.0)


def _bob_shift(amp_b, params):
    p = params.effective
    return numpy.asarray(amp_b, dtype=float) * math.sqrt(p.eta * p.tau_b / 2.0)


def _check_restricted(dn, params):
    if not params.restricted or dn.delta_coeff is None:
        raise ParameterError("restricted-scenario quantity requested with mu <= 1 or complete scenario")


def gaussian_prior_density(x, sigma):
    if not sigma > 0:
        raise ParameterError("prior variance must be positive, got {}".format(sigma))
    return scipy.stats.norm.pdf(x, loc=0.0, scale=math.sqrt(sigma))


def sign_prior(amp, sigma):
    """p(sign, magnitude) for one sign.

    With sigma = 0 the magnitude is the point 0 and this returns the mass
    1/2 of each sign instead of a density.
    """
    if sigma == 0.0:
        return numpy.where(numpy.asarray(amp) == 0.0, 0.5, 0.0)
    return gaussian_prior_density(amp, sigma)


def bob_prior_variance(params):
    return params.effective.mu + 1.0 if params.restricted else params.effective.sigma_b


def p_gamma_complete(point, signs, dn, params):
    mean = -signs.kappa * _alice_shift(point.amp_a, params) + signs.bsign * _bob_shift(point.amp_b, params)
    return scipy.stats.norm.pdf(point.gamma, loc=mean, scale=math.sqrt(dn.upsilon))


def p_gamma_restricted(amp_a, kappa, gamma, dn, params):
    mean = -kappa * _alice_shift(amp_a, params)
    return scipy.stats.norm.pdf(gamma, loc=mean, scale=math.sqrt(dn.upsilon_tilde))


def _bb_mean_coeff(params):
    p = params.effective
    return math.sqrt((p.mu * p.mu - 1.0) * p.eta * p.tau_b / 2.0)


def p_bb_given_kag(point, kappa, dn, params, bsign=1):
    """Density of Bob's heterodyne variable bsign*B given Alice's sign and gamma."""
    _check_restricted(dn, params)
    x = bsign * numpy.asarray(point.amp_b, dtype=float)
    mean = _bb_mean_coeff(params) * (point.gamma + kappa * _alice_shift(point.amp_a, params)) / dn.upsilon_tilde
    return scipy.stats.norm.pdf(x, loc=mean, scale=math.sqrt(dn.v_b))


def _logistic(z):
    # 1/(1+exp(z)) without overflow
    return scipy.special.expit(-z)


def _log_logistic(z):
    return scipy.special.log_expit(-z)


def _joint_from_loglik(loglik):
    keys = list(loglik)
    stacked = numpy.stack(numpy.broadcast_arrays(*[loglik[k] for k in keys]))
    norm = scipy.special.logsumexp(stacked, axis=0)
    return {k: numpy.exp(stacked[i] - norm) for (i, k) in enumerate(keys)}


def cond_sign_probs_complete(point, dn, params):
    a = _alice_shift(point.amp_a, params)
    b = _bob_shift(point.amp_b, params)
    g = numpy.asarray(point.gamma, dtype=float)
    u = dn.upsilon

    kappa_given_b = {}
    b_given_kappa = {}
    for k in SIGNS:
        for s in SIGNS:
            kappa_given_b[(k, s)] = _logistic(2.0 * k * a * (g - s * b) / u)
            b_given_kappa[(k, s)] = _logistic(-2.0 * s * b * (g + k * a) / u)

    # log of e^{2 gamma (a+b)/u} p(b=-|k=+) / p(b=+|k=-)
    log_rk = (2.0 * g * (a + b) / u
              + _log_logistic(2.0 * b * (g + a) / u)
              - _log_logistic(-2.0 * b * (g - a) / u))
    # log of e^{-2 gamma (a+b)/u} p(k=-|b=+) / p(k=+|b=-)
    log_rb = (-2.0 * g * (a + b) / u
              + _log_logistic(-2.0 * a * (g - b) / u)
              - _log_logistic(2.0 * a * (g + b) / u))
    kappa = {k: _logistic(k * log_rk) for k in SIGNS}
    bsign = {s: _logistic(s * log_rb) for s in SIGNS}

    loglik = {(k, s): -((g + k * a - s * b) ** 2) / (2.0 * u) for k in SIGNS for s in SIGNS}
    joint = _joint_from_loglik(loglik)
    return SignPosteriors(kappa_given_b, b_given_kappa, kappa, bsign, joint)


def kappa_given_ag_probs(amp_a, gamma, dn, params):
    """p(kappa | A, gamma), Alice's sign seen by someone ignoring Bob's data."""
    a = _alice_shift(amp_a, params)
    g = numpy.asarray(gamma, dtype=float)
    return {k: _logistic(2.0 * k * a * g / dn.upsilon_tilde) for k in SIGNS}


def cond_sign_probs_restricted(point, dn, params):
    _check_restricted(dn, params)
    a = _alice_shift(point.amp_a, params)
    bd = numpy.asarray(point.amp_b, dtype=float) * dn.delta_coeff
    g = numpy.asarray(point.gamma, dtype=float)
    gp = g * dn.gamma_prime_factor
    u = dn.upsilon_tilde_prime

    kappa_given_b = {}
    b_given_kappa = {}
    for k in SIGNS:
        for s in SIGNS:
            kappa_given_b[(k, s)] = _logistic(2.0 * k * a * (gp - s * bd) / u)
            b_given_kappa[(k, s)] = _logistic(-2.0 * s * bd * (gp + k * a) / u)

    kappa_given_ag = kappa_given_ag_probs(point.amp_a, g, dn, params)

    # log of e^{2 a (gamma' + B Delta)/u} p(b=-|k=+) / p(b=-|k=-)
    log_rk = (2.0 * a * (gp + bd) / u
              + _log_logistic(2.0 * bd * (gp + a) / u)
              - _log_logistic(2.0 * bd * (gp - a) / u))
    # log of e^{-2 B Delta (gamma' - a)/u} p(k=-|b=+) / p(k=-|b=-)
    log_rb = (-2.0 * bd * (gp - a) / u
              + _log_logistic(-2.0 * a * (gp - bd) / u)
              - _log_logistic(-2.0 * a * (gp + bd) / u))
    kappa = {k: _logistic(k * log_rk) for k in SIGNS}
    bsign = {s: _logistic(s * log_rb) for s in SIGNS}

    loglik = {(k, s): -((gp + k * a - s * bd) ** 2) / (2.0 * u) for k in SIGNS for s in SIGNS}
    joint = _joint_from_loglik(loglik)
    return SignPosteriors(kappa_given_b, b_given_kappa, kappa, bsign, joint, kappa_given_ag)


def cond_sign_probs(point, dn, params):
    if params.restricted:
        return cond_sign_probs_restricted(point, dn, params)
    return cond_sign_probs_complete(point, dn, params)


def _posteriors_from_likelihoods(lik, with_ag=None):
    total = sum(lik.values())
    joint = {ks: lik[ks] / total for ks in lik}
    kappa = {k: joint[(k, 1)] + joint[(k, -1)] for k in SIGNS}
    bsign = {s: joint[(1, s)] + joint[(-1, s)] for s in SIGNS}
    kappa_given_b = {(k, s): joint[(k, s)] / bsign[s] for k in SIGNS for s in SIGNS}
    b_given_kappa = {(k, s): joint[(k, s)] / kappa[k] for k in SIGNS for s in SIGNS}
    return SignPosteriors(kappa_given_b, b_given_kappa, kappa, bsign, joint, with_ag)


def bayes_sign_probs_complete(point, dn, params):
    """Direct Bayes over the four Gaussian likelihoods of gamma."""
    lik = {(sp.kappa, sp.bsign): p_gamma_complete(point, sp, dn, params) for sp in SIGN_PAIRS}
    return _posteriors_from_likelihoods(lik)


def bayes_sign_probs_restricted(point, dn, params):
    """Direct Bayes from p(gamma|kappa A) p(x|kappa A gamma)."""
    lik = {}
    for k in SIGNS:
        pg = p_gamma_restricted(point.amp_a, k, point.gamma, dn, params)
        for s in SIGNS:
            lik[(k, s)] = pg * p_bb_given_kag(point, k, dn, params, bsign=s)
    pg = {k: p_gamma_restricted(point.amp_a, k, point.gamma, dn, params) for k in SIGNS}
    ag = {k: pg[k] / (pg[1] + pg[-1]) for k in SIGNS}
    return _posteriors_from_likelihoods(lik, ag)


def joint_ps_density(point, dn, params):
    """p(A, B, gamma) summed over the four sign combinations."""
    p = params.effective
    total = 0.0
    for k in SIGNS:
        prior_a = sign_prior(k * numpy.asarray(point.amp_a, dtype=float), p.sigma_a)
        if params.restricted:
            pg = p_gamma_restricted(point.amp_a, k, point.gamma, dn, params)
            for s in SIGNS:
                total = total + p_bb_given_kag(point, k, dn, params, bsign=s) * pg * prior_a
        else:
            for s in SIGNS:
                prior_b = sign_prior(s * numpy.asarray(point.amp_b, dtype=float), p.sigma_b)
                total = total + p_gamma_complete(point, SignPair(k, s), dn, params) * prior_a * prior_b
    return total
