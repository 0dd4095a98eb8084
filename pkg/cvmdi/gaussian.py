"""A small Gaussian-state toolbox.

States are stored in shot-noise units (vacuum variance 1) with the
quadratures ordered (q1, p1, q2, p2, ...). A coherent state with mean
q-quadrature x has amplitude alpha = x/2.
"""

import logging
import math

import numpy
import scipy.linalg
import scipy.special
import scipy.stats

from .base import ParameterError
from .config import NUMCONFIG

LOG2 = math.log(2.0)


class DegenerateStateError(ArithmeticError):
    pass


class GaussianState:
    """Mean vector and covariance matrix of an n-mode Gaussian state."""

    def __init__(self, mean, cm, *, check=True):
        cm = numpy.array(cm, dtype=float)
        mean = numpy.array(mean, dtype=float).reshape(-1)
        if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] % 2 != 0:
            raise ParameterError("covariance matrix must be square with even size")
        if mean.shape[0] != cm.shape[0]:
            raise ParameterError(
                "mean has length {} but cm is {}x{}".format(mean.shape[0], *cm.shape)
            )
        cm = 0.5 * (cm + cm.T)
        if check:
            nu = _raw_symplectic_eigenvalues(cm)
            if nu[0] < 1.0 - NUMCONFIG["physicalSlack"]:
                raise ParameterError(
                    "unphysical covariance matrix, smallest symplectic eigenvalue {}".format(nu[0])
                )
        mean.setflags(write=False)
        cm.setflags(write=False)
        self._mean = mean
        self._cm = cm

    @property
    def mean(self):
        return self._mean

    @property
    def cm(self):
        return self._cm

    @property
    def n_modes(self):
        return self._cm.shape[0] // 2

    def __repr__(self):
        return "GaussianState(n_modes={}, mean={}, cm={})".format(
            self.n_modes, self._mean.tolist(), self._cm.tolist()
        )


def _mode_indices(modes):
    return [k for m in modes for k in (2 * m, 2 * m + 1)]


def _check_mode(state, m):
    if not (0 <= m < state.n_modes):
        raise ParameterError("mode {} out of range for {} modes".format(m, state.n_modes))


def vacuum_state(n_modes=1):
    return GaussianState(numpy.zeros(2 * n_modes), numpy.eye(2 * n_modes), check=False)


def coherent_state(q, p=0.0):
    return GaussianState([q, p], numpy.eye(2), check=False)


def thermal_state(nu):
    if nu < 1.0:
        raise ParameterError("thermal variance must be >= 1, got {}".format(nu))
    return GaussianState(numpy.zeros(2), nu * numpy.eye(2), check=False)


def tmsv_state(mu):
    if not mu >= 1.0:
        raise ParameterError("TMSV variance must be >= 1, got {}".format(mu))
    c = math.sqrt(mu * mu - 1.0)
    z = numpy.diag([1.0, -1.0])
    cm = numpy.block([[mu * numpy.eye(2), c * z], [c * z, mu * numpy.eye(2)]])
    return GaussianState(numpy.zeros(4), cm, check=False)


def tensor_product(*states):
    if len(states) == 0:
        raise ParameterError("tensor_product needs at least one state")
    mean = numpy.concatenate([s.mean for s in states])
    cm = scipy.linalg.block_diag(*[s.cm for s in states])
    return GaussianState(mean, cm, check=False)


def partial_trace(state, keep):
    keep = list(keep)
    if len(keep) == 0:
        raise ParameterError("partial_trace needs at least one mode to keep")
    if len(set(keep)) != len(keep):
        raise ParameterError("duplicate modes in keep list {}".format(keep))
    for m in keep:
        _check_mode(state, m)
    idx = _mode_indices(keep)
    return GaussianState(state.mean[idx], state.cm[numpy.ix_(idx, idx)], check=False)


def permute_modes(state, order):
    if sorted(order) != list(range(state.n_modes)):
        raise ParameterError("{} is not a permutation of the modes".format(order))
    return partial_trace(state, order)


def beam_splitter(state, i, j, T):
    """Mix modes i and j: i -> sqrt(T) i + sqrt(1-T) j, j -> -sqrt(1-T) i + sqrt(T) j."""
    if i == j:
        raise ParameterError("beam splitter needs two distinct modes")
    _check_mode(state, i)
    _check_mode(state, j)
    if not (0.0 <= T <= 1.0):
        raise ParameterError("transmissivity {} outside [0,1]".format(T))
    t = math.sqrt(T)
    r = math.sqrt(1.0 - T)
    S = numpy.eye(2 * state.n_modes)
    (iq, ip, jq, jp) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1)
    for (a, b) in ((iq, jq), (ip, jp)):
        S[a, a] = t
        S[a, b] = r
        S[b, a] = -r
        S[b, b] = t
    return GaussianState(S @ state.mean, S @ state.cm @ S.T, check=False)


def condition_homodyne(state, mode, quad, outcome):
    """Measure one quadrature of one mode and condition on the outcome.

    Returns (residual state, probability density of the outcome).
    """
    _check_mode(state, mode)
    if quad not in ("q", "p"):
        raise ParameterError("quadrature must be 'q' or 'p', not {!r}".format(quad))
    k = 2 * mode + (0 if quad == "q" else 1)
    vkk = state.cm[k, k]
    if not vkk > 0.0:
        raise DegenerateStateError("measured quadrature variance {} is not positive".format(vkk))
    vkk = max(vkk, NUMCONFIG["homodyneFloor"])

    rest = [x for x in range(2 * state.n_modes) if x not in (2 * mode, 2 * mode + 1)]
    c = state.cm[rest, k]
    cm = state.cm[numpy.ix_(rest, rest)] - numpy.outer(c, c) / vkk
    mean = state.mean[rest] + c / vkk * (outcome - state.mean[k])
    density = scipy.stats.norm.pdf(outcome, loc=state.mean[k], scale=math.sqrt(vkk))
    return (GaussianState(mean, cm, check=False), density)


def heterodyne_q_density(state, mode, outcome):
    """Density of the q-outcome of a heterodyne measurement on one mode.

    The outcome is the q-quadrature plus one unit of vacuum noise.
    """
    _check_mode(state, mode)
    k = 2 * mode
    return scipy.stats.norm.pdf(
        outcome, loc=state.mean[k], scale=math.sqrt(state.cm[k, k] + 1.0)
    )


def symplectic_form(n_modes):
    return scipy.linalg.block_diag(*([numpy.array([[0.0, 1.0], [-1.0, 0.0]])] * n_modes))


def _check_symmetric(cm):
    scale = max(1.0, float(numpy.max(numpy.abs(cm))))
    asym = float(numpy.max(numpy.abs(cm - numpy.swapaxes(cm, -1, -2))))
    if asym > NUMCONFIG["symmetryTol"] * scale:
        raise ParameterError("covariance matrix is not symmetric (deviation {})".format(asym))


def _raw_symplectic_eigenvalues(cm):
    # Eigenvalues of i V^1/2 Omega V^1/2 come in +-nu pairs, the upper half
    # are the symplectic eigenvalues; works on stacks of matrices
    cm = numpy.asarray(cm, dtype=float)
    n = cm.shape[-1] // 2
    (w, u) = numpy.linalg.eigh(cm)
    root = (u * numpy.sqrt(numpy.clip(w, 0.0, None))[..., None, :]) @ numpy.swapaxes(u, -1, -2)
    herm = 1j * (root @ symplectic_form(n) @ root)
    ev = numpy.linalg.eigvalsh(herm)
    return ev[..., n:]


def symplectic_eigenvalues(cm):
    """Sorted symplectic eigenvalues, each clamped to at least 1.

    Accepts a single 2n x 2n matrix or a stack of them.
    """
    cm = numpy.asarray(cm, dtype=float)
    if cm.ndim < 2 or cm.shape[-1] != cm.shape[-2] or cm.shape[-1] % 2 != 0:
        raise ParameterError("covariance matrix must be square with even size")
    _check_symmetric(cm)
    return numpy.maximum(_raw_symplectic_eigenvalues(cm), 1.0)


def entropy_function(nu):
    """h(nu) in bits, zero for nu at or below 1."""
    nu = numpy.asarray(nu, dtype=float)
    a = (nu + 1.0) / 2.0
    b = numpy.clip((nu - 1.0) / 2.0, 0.0, None)
    h = (scipy.special.xlogy(a, a) - scipy.special.xlogy(b, b)) / LOG2
    return numpy.where(nu <= 1.0 + NUMCONFIG["entropyThreshold"], 0.0, h)


def gaussian_entropy(cm):
    """Von Neumann entropy in bits; a stack of matrices gives a stack of entropies."""
    return numpy.sum(entropy_function(symplectic_eigenvalues(cm)), axis=-1)


def _cho_factor(cm):
    try:
        return scipy.linalg.cho_factor(cm)
    except numpy.linalg.LinAlgError:
        logging.debug("Cholesky failed, retrying with jitter")
    try:
        return scipy.linalg.cho_factor(cm + NUMCONFIG["choleskyJitter"] * numpy.eye(cm.shape[0]))
    except numpy.linalg.LinAlgError:
        raise DegenerateStateError("covariance matrix is singular") from None


def inverse_quadratic_form(cm, u, v=None):
    """u^T cm^-1 v, with a jittered Cholesky solve."""
    cm = numpy.asarray(cm, dtype=float)
    u = numpy.asarray(u, dtype=float)
    v = u if v is None else numpy.asarray(v, dtype=float)
    return float(u @ scipy.linalg.cho_solve(_cho_factor(cm), v))


def pure_overlap_same_cm(mean1, mean2, cm):
    """exp(-1/4 d^T V^-1 d) for two Gaussian states sharing the covariance matrix V.

    For pure states this is the trace overlap |<psi1|psi2>|^2.
    """
    d = numpy.asarray(mean1, dtype=float) - numpy.asarray(mean2, dtype=float)
    if d.shape[0] != numpy.asarray(cm).shape[0]:
        raise ParameterError("means and covariance matrix have different sizes")
    return math.exp(-0.25 * inverse_quadratic_form(cm, d))


def binary_entropy(p):
    p = numpy.asarray(p, dtype=float)
    slack = NUMCONFIG["probabilitySlack"]
    if numpy.any(p < -slack) or numpy.any(p > 1.0 + slack) or numpy.any(numpy.isnan(p)):
        raise ParameterError("probability outside [0,1]: {}".format(p))
    p = numpy.clip(p, 0.0, 1.0)
    h = (scipy.special.entr(p) + scipy.special.entr(1.0 - p)) / LOG2
    return float(h) if h.ndim == 0 else h
