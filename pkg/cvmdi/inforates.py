"""Single-point information quantities.

Alice and Bob's mutual information on the sign bits, and Eve's
information for the three eavesdropping scenarios. All functions accept
PSPoints holding broadcastable arrays.
"""

import logging
import math
from dataclasses import dataclass

import numpy
import scipy.special

from . import probability
from .base import SIGNS, DetectorModel, ParameterError, Scenario
from .config import NUMCONFIG
from .gaussian import binary_entropy, gaussian_entropy
from .protocol import eve_geometry

LOG2 = math.log(2.0)


class ConsistencyError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class OverlapCoeffs:
    """Amplitude overlaps of Eve's states and the squared basis coefficients.

    Eve's state for signs (kappa, bsign) is, up to phases,
    (c0|0> + kappa c1|1>) (x) (c+|+> + bsign c-|->).
    """

    ov_a: object
    ov_b: object
    c0sq: object
    c1sq: object
    cpsq: object
    cmsq: object

    @classmethod
    def from_overlaps(cls, ov_a, ov_b):
        ov_a = numpy.asarray(ov_a, dtype=float)
        ov_b = numpy.asarray(ov_b, dtype=float)
        return cls(ov_a, ov_b, (1.0 + ov_a) / 2.0, (1.0 - ov_a) / 2.0,
                   (1.0 + ov_b) / 2.0, (1.0 - ov_b) / 2.0)


@dataclass(frozen=True, eq=False)
class RateBreakdown:
    i_ab: object
    eve_info: object
    rate: object


def single_point_mutual_info(point, dn, params, posteriors=None):
    """H(kappa | A B gamma) - sum_b p(b | A B gamma) H(kappa | b A B gamma)."""
    if posteriors is None:
        posteriors = probability.cond_sign_probs(point, dn, params)
    h = binary_entropy(posteriors.kappa[1])
    for s in SIGNS:
        h = h - posteriors.bsign[s] * binary_entropy(posteriors.kappa_given_b[(1, s)])
    return numpy.clip(h, 0.0, 1.0)


def overlap_exponents(params, dn):
    """k with A = exp(-A^2 k / 2), for Alice's and Bob's side."""
    p = params.effective
    if p.detector_model is DetectorModel.TRUSTED:
        geo = eve_geometry(params)
        return (geo.k_a, geo.k_b)
    k_a = 1.0 - p.eta * p.tau_a / dn.upsilon
    k_b = 1.0 - p.eta * p.tau_b / dn.upsilon
    if k_a < -NUMCONFIG["physicalSlack"] or k_b < -NUMCONFIG["physicalSlack"]:
        raise ParameterError(
            "relay noise {} below the transmitted signal, unphysical state".format(dn.upsilon)
        )
    return (max(k_a, 0.0), max(k_b, 0.0))


def overlap_coeffs(point, dn, params):
    (k_a, k_b) = overlap_exponents(params, dn)
    amp_a = numpy.asarray(point.amp_a, dtype=float)
    amp_b = numpy.asarray(point.amp_b, dtype=float)
    return OverlapCoeffs.from_overlaps(
        numpy.exp(-0.5 * amp_a * amp_a * k_a), numpy.exp(-0.5 * amp_b * amp_b * k_b)
    )


def _sign_vector(coeffs, kappa, bsign):
    c0 = numpy.sqrt(coeffs.c0sq)
    c1 = numpy.sqrt(coeffs.c1sq)
    cp = numpy.sqrt(coeffs.cpsq)
    cm = numpy.sqrt(coeffs.cmsq)
    return numpy.stack(
        numpy.broadcast_arrays(c0 * cp, bsign * c0 * cm, kappa * c1 * cp, kappa * bsign * c1 * cm),
        axis=-1,
    )


def eve_total_matrix(coeffs, joint_sign_probs):
    """Eve's state averaged over the signs, in the {0+, 0-, 1+, 1-} basis.

    joint_sign_probs maps (kappa, bsign) to p(kappa, bsign | A B gamma).
    Works on stacks, returning an array of shape (..., 4, 4).
    """
    rho = 0.0
    for ((k, s), p) in joint_sign_probs.items():
        v = _sign_vector(coeffs, k, s)
        p = numpy.asarray(p, dtype=float)[..., None, None]
        rho = rho + p * (v[..., :, None] * v[..., None, :])
    trace = numpy.trace(rho, axis1=-2, axis2=-1)
    if numpy.max(numpy.abs(trace - 1.0)) > NUMCONFIG["traceTol"]:
        raise ConsistencyError("Eve's total matrix has trace {}".format(trace))
    return rho


def eve_conditional_matrix(coeffs, kappa, b_given_kappa):
    """Eve's state for a fixed Alice sign, averaged over Bob's sign."""
    return eve_total_matrix(coeffs, {(kappa, s): b_given_kappa[(kappa, s)] for s in SIGNS})


def eigen_entropy(eigenvalues):
    """Shannon entropy in bits of a spectrum, after clamping and renormalising."""
    ev = numpy.asarray(eigenvalues, dtype=float)
    if numpy.any(ev < -NUMCONFIG["eigenClamp"]):
        raise ConsistencyError("density matrix eigenvalue {} below zero".format(ev.min()))
    ev = numpy.clip(ev, 0.0, 1.0)
    ev = ev / numpy.sum(ev, axis=-1, keepdims=True)
    return numpy.sum(scipy.special.entr(ev), axis=-1) / LOG2


def matrix_entropy(rho):
    return eigen_entropy(numpy.linalg.eigvalsh(rho))


def conditional_eigenvalues(p_plus, ov_b):
    """The two eigenvalues of Eve's state for a fixed Alice sign."""
    p_plus = numpy.asarray(p_plus, dtype=float)
    ov_b = numpy.asarray(ov_b, dtype=float)
    root = numpy.sqrt(numpy.clip(1.0 - 4.0 * p_plus * (1.0 - p_plus) * (1.0 - ov_b * ov_b), 0.0, 1.0))
    return (0.5 * (1.0 + root), 0.5 * (1.0 - root))


def single_point_holevo_complete(point, dn, params, posteriors=None):
    if posteriors is None:
        posteriors = probability.cond_sign_probs_complete(point, dn, params)
    coeffs = overlap_coeffs(point, dn, params)
    s_total = matrix_entropy(eve_total_matrix(coeffs, posteriors.joint))
    s_cond = 0.0
    for k in SIGNS:
        (lam, _) = conditional_eigenvalues(posteriors.b_given_kappa[(k, 1)], coeffs.ov_b)
        s_cond = s_cond + posteriors.kappa[k] * binary_entropy(lam)
    return numpy.clip(s_total - s_cond, 0.0, 2.0)


def mixture_cm_inflation(cm, mean_plus, mean_minus, p_plus):
    """Covariance matrix of a two-component mixture of equal-CM Gaussians."""
    p_plus = numpy.asarray(p_plus, dtype=float)
    if numpy.any(p_plus < 0.0) or numpy.any(p_plus > 1.0):
        raise ParameterError("mixture weight outside [0,1]: {}".format(p_plus))
    d = numpy.asarray(mean_plus, dtype=float) - numpy.asarray(mean_minus, dtype=float)
    w = (p_plus * (1.0 - p_plus))[..., None, None]
    return numpy.asarray(cm, dtype=float) + w * (d[..., :, None] * d[..., None, :])


def single_point_holevo_restricted(amp_a, gamma, dn, params):
    """Upper bound on Eve's Holevo information when she ignores Bob's data.

    The non-Gaussian mixture over Alice's sign is replaced by the Gaussian
    state with the same first and second moments.
    """
    if not params.restricted:
        raise ParameterError("restricted Holevo bound needs a restricted scenario")
    geo = eve_geometry(params)
    amp_a = numpy.asarray(amp_a, dtype=float)
    p_plus = probability.kappa_given_ag_probs(amp_a, gamma, dn, params)[1]
    mean_plus = amp_a[..., None] * geo.resp_a
    inflated = mixture_cm_inflation(geo.cm, mean_plus, -mean_plus, p_plus)
    chi = gaussian_entropy(inflated) - gaussian_entropy(geo.cm)
    return numpy.clip(chi, 0.0, None)


def individual_information(fidelity):
    """Eve's information from a single-copy measurement on two states.

    fidelity is the trace overlap of the two states; her error probability
    is bounded below by (1 - sqrt(1 - F))/2.
    """
    f = numpy.asarray(fidelity, dtype=float)
    if numpy.any(f < -1e-10) or numpy.any(f > 1.0 + 1e-10):
        raise ConsistencyError("fidelity outside [0,1]: {}".format(f))
    f = numpy.clip(f, 0.0, 1.0)
    err = 0.5 * (1.0 - numpy.sqrt(1.0 - f))
    return numpy.clip(1.0 - binary_entropy(err), 0.0, 1.0)


def single_point_iae_individual(amp_a, gamma, dn, params):
    """1 - H2(F-) at the point; gamma only sets the output shape."""
    if not params.restricted:
        raise ParameterError("individual attack bound needs a restricted scenario")
    geo = eve_geometry(params)
    amp_a = numpy.asarray(amp_a, dtype=float)
    fidelity = numpy.exp(-amp_a * amp_a * geo.k_a)
    (fidelity, _) = numpy.broadcast_arrays(fidelity, numpy.asarray(gamma, dtype=float))
    return individual_information(fidelity)


def eve_information(point, dn, params, posteriors=None):
    if params.scenario is Scenario.COMPLETE:
        return single_point_holevo_complete(point, dn, params, posteriors)
    if params.scenario is Scenario.RESTRICTED_COLLECTIVE:
        return single_point_holevo_restricted(point.amp_a, point.gamma, dn, params)
    return single_point_iae_individual(point.amp_a, point.gamma, dn, params)


def single_point_rate(point, dn, params):
    posteriors = probability.cond_sign_probs(point, dn, params)
    i_ab = single_point_mutual_info(point, dn, params, posteriors)
    eve = eve_information(point, dn, params, posteriors)
    (i_ab, eve) = numpy.broadcast_arrays(i_ab, eve)
    rate = params.beta_rec * i_ab - eve
    logging.debug("Single-point rate at %s: %s", point, rate)
    return RateBreakdown(i_ab, eve, rate)
