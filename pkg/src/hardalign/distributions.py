"""Sampling primitives for the binary Emit/Shift transition variable.

Two continuous routes lead to a discrete transition:

* Logistic condition: the Emit probability ``alpha_1 = sigmoid(log_alpha, lam)``
  is turned into a Bernoulli draw with the Gumbel-Max trick.  For two classes
  the Gumbel pair collapses to a single Logistic variable, so only ``L`` is
  ever sampled.
* Binary Concrete condition: the Logistic noise goes *inside* the tempered
  sigmoid, ``X = sigmoid((log_alpha + L) / lam)``, and ``X`` is thresholded
  at 0.5.

All samplers accept an optional ``size`` and then return numpy arrays.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ValidationError

# Uniform draws are clamped to [EPS, 1 - EPS] so the Logistic transform stays finite.
EPS = 2.0 ** -53


class TransitionAction(enum.IntEnum):
    """Alignment transition. The integer value is the position increment ``k``."""

    EMIT = 0
    SHIFT = 1


EMIT = TransitionAction.EMIT
SHIFT = TransitionAction.SHIFT


def check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValidationError(f"lambda must be positive and finite, got {lam!r}")
    return lam


@dataclass(frozen=True)
class BinConcreteParams:
    """Location (as ``log_alpha``) and temperature of a binary Concrete density."""

    log_alpha: float
    lam: float

    def __post_init__(self):
        if not math.isfinite(self.log_alpha):
            raise ValidationError(f"log_alpha must be finite, got {self.log_alpha!r}")
        check_lambda(self.lam)

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)


class NoiseSource:
    """Seeded stream of standard-Uniform draws strictly inside (0, 1)."""

    def __init__(self, seed: int | None = 0):
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def uniform(self, size=None):
        if size is None:
            u = self.rng.random()
            return min(max(u, EPS), 1.0 - EPS)
        return np.clip(self.rng.random(size), EPS, 1.0 - EPS)

    def logistic(self, size=None):
        return logistic_from_uniform(self.uniform(size))

    def __repr__(self):
        return f"NoiseSource(seed={self.seed!r})"


def logistic_from_uniform(u):
    """``L = log(U) - log(1 - U)``."""
    if np.ndim(u) == 0:
        return math.log(u) - math.log1p(-u)
    u = np.asarray(u, dtype=float)
    return np.log(u) - np.log1p(-u)


def sample_logistic(noise: NoiseSource, size=None):
    """Draw standard Logistic noise."""
    return noise.logistic(size)


def sigmoid_temp(x, lam: float):
    """Tempered sigmoid ``1 / (1 + exp(-x / lam))``."""
    lam = check_lambda(lam)
    out = expit(np.asarray(x, dtype=float) / lam)
    return float(out) if out.ndim == 0 else out


def emit_prob(log_alpha, lam: float):
    """Emit probability ``alpha_1``; the Shift probability is ``1 - alpha_1``."""
    return sigmoid_temp(log_alpha, lam)


def log_sigmoid(x):
    """Numerically stable ``log(sigmoid(x))``."""
    out = -np.logaddexp(0.0, -np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def log_emit_prob(log_alpha, lam: float):
    return log_sigmoid(np.asarray(log_alpha, dtype=float) / check_lambda(lam))


def log_shift_prob(log_alpha, lam: float):
    return log_sigmoid(-np.asarray(log_alpha, dtype=float) / check_lambda(lam))


def _threshold(score, size):
    # score >= 0 -> Emit; the tie goes to Emit
    if size is None:
        return EMIT if score >= 0.0 else SHIFT
    return np.where(np.asarray(score) >= 0.0, int(EMIT), int(SHIFT))


def sample_bernoulli(log_alpha: float, noise: NoiseSource, size=None):
    """Gumbel-Max draw of a transition with Emit probability ``sigmoid(log_alpha)``.

    ``argmax(L + log a1, log a2)`` is Emit exactly when ``L + log_alpha >= 0``
    because ``log_alpha = log a1 - log a2``.  With ``size`` the result is an
    integer array of increments (0 = Emit, 1 = Shift).
    """
    if not math.isfinite(log_alpha):
        raise ValidationError(f"log_alpha must be finite, got {log_alpha!r}")
    return _threshold(sample_logistic(noise, size) + log_alpha, size)


def binconcrete_from_logistic(params: BinConcreteParams, noise_value):
    """Reparameterized binary Concrete sample for a given Logistic draw."""
    out = expit((params.log_alpha + np.asarray(noise_value, dtype=float)) / params.lam)
    return float(out) if out.ndim == 0 else out


def binconcrete_sample(params: BinConcreteParams, noise: NoiseSource, size=None):
    """Draw ``X = sigmoid((log_alpha + L) / lam)`` from BinConcrete(alpha, lam).

    For small ``lam`` a large share of draws lands within one ulp of 1.0 (or
    rounds to it); use :func:`binconcrete_sample_logit` when the tails matter.
    """
    return binconcrete_from_logistic(params, sample_logistic(noise, size))


def binconcrete_sample_logit(params: BinConcreteParams, noise: NoiseSource, size=None):
    """Same draw as :func:`binconcrete_sample` (same noise use), returned as ``logit(X)``."""
    return (params.log_alpha + sample_logistic(noise, size)) / params.lam


def binconcrete_log_density(x, params: BinConcreteParams):
    """Log of ``lam * a * x^(-lam-1) (1-x)^(-lam-1) / (a x^(-lam) + (1-x)^(-lam))^2``.

    Evaluated entirely in log space; ``x`` must lie in the open unit interval.
    """
    x = np.asarray(x, dtype=float)
    if not np.all((x > 0.0) & (x < 1.0)):
        raise ValidationError("binary Concrete density is defined on the open interval (0, 1)")
    lam, log_alpha = params.lam, params.log_alpha
    log_x = np.log(x)
    log_1mx = np.log1p(-x)
    out = (
        math.log(lam)
        + log_alpha
        + (-lam - 1.0) * (log_x + log_1mx)
        - 2.0 * np.logaddexp(log_alpha - lam * log_x, -lam * log_1mx)
    )
    return float(out) if out.ndim == 0 else out


def binconcrete_cdf(x, params: BinConcreteParams):
    """``P(X <= x) = sigmoid(lam * logit(x) - log_alpha)``; accepts the closed interval."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        logit = np.log(x) - np.log1p(-x)
    out = expit(params.lam * logit - params.log_alpha)
    return float(out) if out.ndim == 0 else out


def binconcrete_logit_cdf(t, params: BinConcreteParams):
    """CDF of ``logit(X)``; equals ``binconcrete_cdf(sigmoid(t))`` without rounding."""
    out = expit(params.lam * np.asarray(t, dtype=float) - params.log_alpha)
    return float(out) if out.ndim == 0 else out


def discretize(x):
    """Threshold a relaxed sample at 0.5 (0.5 itself maps to Emit)."""
    if np.ndim(x) == 0:
        return EMIT if x >= 0.5 else SHIFT
    return np.where(np.asarray(x) >= 0.5, int(EMIT), int(SHIFT))


def binconcrete_sample_grad(params: BinConcreteParams, noise_value: float) -> float:
    """Derivative of the reparameterized sample w.r.t. ``log_alpha`` at fixed noise."""
    s = binconcrete_from_logistic(params, noise_value)
    return s * (1.0 - s) / params.lam
