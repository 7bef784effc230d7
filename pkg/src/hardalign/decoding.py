"""Alignment search: deterministic or stochastic, greedy or beam.

Every search decision compares a (possibly perturbed) Emit log-odds with 0:

* deterministic:           ``log_alpha / lam``
* stochastic Logistic:     ``log_alpha / lam + L``   (noise after the sigmoid link)
* stochastic BinConcrete:  ``(log_alpha + L) / lam`` (noise inside the sigmoid)

Beam search ranks branches by ``log sigmoid(+-u)`` of that perturbed log-odds
``u``, so a width-1 beam makes exactly the greedy decision.  Noise only ever
affects ranking; reported scores are the unperturbed log-probabilities.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .distributions import (
    EMIT,
    SHIFT,
    BinConcreteParams,
    NoiseSource,
    TransitionAction,
    binconcrete_sample,
    check_lambda,
    discretize,
    log_sigmoid,
    sample_bernoulli,
)
from .errors import InfeasibleError, ValidationError
from .lattice import AlignmentPath, LatticeInstance, instance_path_log_prob


class Distribution(str, enum.Enum):
    LOGISTIC = "logistic"
    BINCONCRETE = "binconcrete"


class Mode(str, enum.Enum):
    FIXED = "fixed"
    OPEN = "open"


@dataclass(frozen=True)
class SearchConfig:
    """Search settings.

    ``lam=None`` keeps the instance's temperature; a value overrides it for
    both decisions and scoring.  ``max_outputs`` caps OPEN mode and defaults
    to the instance's ``J``.
    """

    beam_width: int = 1
    stochastic: bool = False
    distribution: Distribution = Distribution.LOGISTIC
    lam: Optional[float] = None
    mode: Mode = Mode.FIXED
    max_outputs: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.beam_width, bool) or not isinstance(self.beam_width, int) or self.beam_width < 1:
            raise ValidationError(f"beam_width must be an integer >= 1, got {self.beam_width!r}")
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.lam is not None:
            object.__setattr__(self, "lam", check_lambda(self.lam))
        if self.max_outputs is not None and self.max_outputs < 1:
            raise ValidationError(f"max_outputs must be >= 1, got {self.max_outputs!r}")


class DecodeResult(NamedTuple):
    path: AlignmentPath
    score: float


@dataclass(frozen=True)
class BeamHypothesis:
    path: AlignmentPath
    score: float
    rank_score: float
    finished: bool = False

    @property
    def position(self) -> int:
        return self.path[-1]

    @property
    def step(self) -> int:
        return len(self.path)


def greedy_step(log_alpha: float, lam: float, stochastic: bool, distribution, noise: Optional[NoiseSource]):
    """Pick one transition for a single lattice cell."""
    if not stochastic:
        # the mean alpha_1 > 0.5 test is lambda-free: sign of log_alpha
        return EMIT if log_alpha >= 0.0 else SHIFT
    lam = check_lambda(lam)
    if Distribution(distribution) is Distribution.LOGISTIC:
        return sample_bernoulli(log_alpha / lam, noise)
    return discretize(binconcrete_sample(BinConcreteParams(log_alpha, lam), noise))


def decision_log_odds(log_alpha, lam, stochastic, distribution, noise):
    if not stochastic:
        return log_alpha / lam
    noise_value = noise.logistic()
    if distribution is Distribution.LOGISTIC:
        return log_alpha / lam + noise_value
    return (log_alpha + noise_value) / lam


def _prepare(instance: LatticeInstance, config: SearchConfig):
    if config.lam is not None and config.lam != instance.lam:
        instance = instance.with_lambda(config.lam)
    if config.mode is Mode.FIXED:
        if instance.I > instance.J:
            raise InfeasibleError(f"no complete path: I={instance.I} > J={instance.J}")
        horizon = instance.J
    else:
        horizon = instance.J if config.max_outputs is None else config.max_outputs
        if horizon > instance.J:
            raise ValidationError(f"max_outputs={horizon} exceeds the logit table width J={instance.J}")
    noise = NoiseSource(config.seed) if config.stochastic else None
    return instance, horizon, noise


def _allowed(i, j, I, J, fixed):
    """Feasible actions from 0-based input ``i`` when deciding 0-based step ``j``."""
    if not fixed:
        return True, i < I - 1
    remaining = J - 1 - j
    return (I - 1 - i) <= remaining, i < I - 1 and (I - 2 - i) <= remaining


def greedy_decode(instance: LatticeInstance, config: SearchConfig) -> DecodeResult:
    """Stepwise greedy search; infeasible choices are overridden in FIXED mode.

    With emission scores the local decision compares the joint scores of the
    two successors, which is what a width-1 beam does.  Without emissions it
    is the plain per-cell transition argmax.
    """
    instance, horizon, noise = _prepare(instance, config)
    I, J, lam = instance.I, instance.J, instance.lam
    fixed = config.mode is Mode.FIXED
    logits = instance.model.logits
    log_emit, log_shift = instance.model.log_emit, instance.model.log_shift
    emis = instance.emission_table

    path = [1]
    score = float(emis[0, 0])
    for j in range(1, horizon):
        i = path[-1] - 1
        # emission difference between the two successor cells, folded into the log-odds
        emis_gap = emis[i, j] - (emis[i + 1, j] if i + 1 < I else 0.0)
        log_alpha = logits[i, j] + lam * emis_gap
        action = greedy_step(log_alpha, lam, config.stochastic, config.distribution, noise)
        emit_ok, shift_ok = _allowed(i, j, I, J, fixed)
        if action is EMIT and not emit_ok:
            action = SHIFT
        elif action is SHIFT and not shift_ok and fixed:
            action = EMIT
        if action is EMIT:
            score += log_emit[i, j] + emis[i, j]
            path.append(i + 1)
        elif i == I - 1:
            score += log_shift[i, j]
            break
        else:
            score += log_shift[i, j] + emis[i + 1, j]
            path.append(i + 2)
    return DecodeResult(tuple(path), float(score))


def beam_decode(instance: LatticeInstance, config: SearchConfig) -> DecodeResult:
    """Beam search without hypothesis recombination."""
    instance, horizon, noise = _prepare(instance, config)
    I, J, lam = instance.I, instance.J, instance.lam
    fixed = config.mode is Mode.FIXED
    width = config.beam_width
    logits = instance.model.logits
    log_emit, log_shift = instance.model.log_emit, instance.model.log_shift
    emis = instance.emission_table

    start = float(emis[0, 0])
    beam = [BeamHypothesis((1,), start, start)]
    for j in range(1, horizon):
        candidates = []
        for parent, hyp in enumerate(beam):
            if hyp.finished:
                candidates.append((hyp, SHIFT, I + 1, parent))
                continue
            i = hyp.position - 1
            if config.stochastic:
                u = decision_log_odds(logits[i, j], lam, True, config.distribution, noise)
                rank_emit, rank_shift = log_sigmoid(u), log_sigmoid(-u)
            else:
                rank_emit, rank_shift = log_emit[i, j], log_shift[i, j]
            emit_ok, shift_ok = _allowed(i, j, I, J, fixed)
            if emit_ok:
                child = BeamHypothesis(
                    hyp.path + (i + 1,),
                    hyp.score + log_emit[i, j] + emis[i, j],
                    hyp.rank_score + rank_emit + emis[i, j],
                )
                candidates.append((child, EMIT, i + 1, parent))
            if shift_ok:
                child = BeamHypothesis(
                    hyp.path + (i + 2,),
                    hyp.score + log_shift[i, j] + emis[i + 1, j],
                    hyp.rank_score + rank_shift + emis[i + 1, j],
                )
                candidates.append((child, SHIFT, i + 2, parent))
            elif not fixed and i == I - 1:
                child = BeamHypothesis(
                    hyp.path, hyp.score + log_shift[i, j], hyp.rank_score + rank_shift, finished=True
                )
                candidates.append((child, SHIFT, I + 1, parent))
        assert candidates, "feasibility pruning emptied the beam"
        candidates.sort(key=lambda c: (-c[0].rank_score, int(c[1]), c[2], c[3]))
        beam = [c[0] for c in candidates[:width]]
        if all(h.finished for h in beam):
            break
    best = beam[0]
    return DecodeResult(best.path, float(best.score))


def decode(instance: LatticeInstance, config: SearchConfig) -> DecodeResult:
    """Search for an alignment; returns the path and its true log-probability.

    FIXED mode returns a complete path of length ``J``.  In OPEN mode a path
    shorter than the cap ended with a Shift past the last input, and that final
    Shift is included in the score.
    """
    return beam_decode(instance, config)


def sequence_log_prob(path, instance: LatticeInstance, max_outputs: Optional[int] = None) -> float:
    """Score of an OPEN-mode result, charging the terminating Shift when present."""
    cap = instance.J if max_outputs is None else max_outputs
    score = instance_path_log_prob(path, instance)
    if len(path) < cap:
        if path[-1] != instance.I:
            raise ValidationError("a terminated path must end on the last input")
        score += instance.model.log_shift[instance.I - 1, len(path)]
    return float(score)


def expected_emit_run_check(
    log_alpha: float,
    trials: int,
    noise: NoiseSource,
    lam: float = 1.0,
    distribution=Distribution.LOGISTIC,
    max_run: int = 10**6,
) -> float:
    """Mean number of consecutive Emits before the first Shift under stochastic greedy.

    With a constant Emit probability ``p`` the run length is geometric with
    mean ``p / (1 - p)``.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    total = 0
    for _ in range(trials):
        run = 0
        while run < max_run and greedy_step(log_alpha, lam, True, distribution, noise) is EMIT:
            run += 1
        total += run
    return total / trials


__all__ = [
    "BeamHypothesis",
    "DecodeResult",
    "Distribution",
    "Mode",
    "SearchConfig",
    "TransitionAction",
    "beam_decode",
    "decision_log_odds",
    "decode",
    "expected_emit_run_check",
    "greedy_decode",
    "greedy_step",
    "sequence_log_prob",
]
