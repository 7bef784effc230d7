"""Marginal likelihood over all complete alignments."""
from __future__ import annotations

import math

import numpy as np

from .lattice import MAX_ENUMERATED_PATHS, LatticeInstance, brute_force_scores, log_total, num_paths
from .errors import ValidationError

NEG_INF = -math.inf


def _logaddexp(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # -inf + -inf must stay -inf rather than produce nan
    out = np.full(np.broadcast(a, b).shape, NEG_INF)
    live = np.isfinite(a) | np.isfinite(b)
    out[live] = np.logaddexp(np.broadcast_to(a, out.shape)[live], np.broadcast_to(b, out.shape)[live])
    return out


def forward_table(instance: LatticeInstance) -> np.ndarray:
    """Log forward masses, shape ``(I, J)``.

    ``fwd[i, j]`` is the log-probability of all prefixes that sit on input
    ``i + 1`` at output step ``j + 1``, emissions included.
    """
    I, J = instance.I, instance.J
    emis = instance.emission_table
    log_emit, log_shift = instance.model.log_emit, instance.model.log_shift
    fwd = np.full((I, J), NEG_INF)
    fwd[0, 0] = emis[0, 0]
    for j in range(1, J):
        stay = fwd[:, j - 1] + log_emit[:, j]
        move = np.full(I, NEG_INF)
        move[1:] = fwd[:-1, j - 1] + log_shift[:-1, j]
        fwd[:, j] = emis[:, j] + _logaddexp(stay, move)
    return fwd


def forward_marginal(instance: LatticeInstance) -> float:
    """``log p(y | x)`` summed over complete paths.

    Returns ``-inf`` when ``I > J`` (no path exists).  A NaN anywhere in the
    table is a numerical failure and raises ``FloatingPointError``.
    """
    if instance.I > instance.J:
        return NEG_INF
    fwd = forward_table(instance)
    if np.isnan(fwd).any():
        raise FloatingPointError("forward recursion produced NaN")
    return float(fwd[-1, -1])


def brute_force_marginal(instance: LatticeInstance, limit: int = MAX_ENUMERATED_PATHS) -> float:
    """Log-sum-exp of the joint score of every enumerated complete path."""
    if num_paths(instance.I, instance.J) > limit:
        raise ValidationError(f"too many paths to enumerate for I={instance.I}, J={instance.J}")
    _, scores = brute_force_scores(instance)
    return log_total(scores)


def negative_log_likelihood(instance: LatticeInstance) -> float:
    return -forward_marginal(instance)
