"""Monotone alignment lattice: logit tables, paths and the transition kernel.

Indices in the public API are 1-based, as in ``z_j = i`` with ``i`` in
``1..I`` and ``j`` in ``1..J``.  Tables are stored 0-based with shape
``(I, J)``: ``logits[i - 1, j - 1]`` is the log-odds of Emit over Shift
for the decision taken at output step ``j`` while sitting on input ``i``.
Column 0 is never read, since ``z_1 = 1`` is fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import comb, logsumexp

from .distributions import check_lambda, log_sigmoid
from .errors import ValidationError

MAX_ENUMERATED_PATHS = 10**6

AlignmentPath = tuple  # tuple[int, ...] of 1-based input positions


@dataclass(frozen=True, eq=False)
class TransitionLogits:
    """Dense ``(I, J)`` table of Emit log-odds plus the sigmoid temperature."""

    logits: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        arr = np.array(self.logits, dtype=float)
        if arr.ndim != 2 or min(arr.shape) < 1:
            raise ValidationError(f"logits must be a non-empty 2-D table, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("logits must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "logits", arr)
        object.__setattr__(self, "lam", check_lambda(self.lam))

    @property
    def num_inputs(self) -> int:
        return self.logits.shape[0]

    @property
    def max_outputs(self) -> int:
        return self.logits.shape[1]

    @cached_property
    def log_emit(self) -> np.ndarray:
        return log_sigmoid(self.logits / self.lam)

    @cached_property
    def log_shift(self) -> np.ndarray:
        return log_sigmoid(-self.logits / self.lam)

    def with_lambda(self, lam: float) -> "TransitionLogits":
        return TransitionLogits(self.logits, lam)


@dataclass(frozen=True, eq=False)
class LatticeInstance:
    """Logits, optional emission log-likelihoods and optional reference path."""

    model: TransitionLogits
    emission: Optional[np.ndarray] = None
    truth_path: Optional[AlignmentPath] = None
    _emission_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        shape = self.model.logits.shape
        if self.emission is None:
            table = np.zeros(shape)
        else:
            table = np.array(self.emission, dtype=float)
            if table.shape != shape:
                raise ValidationError(f"emission shape {table.shape} does not match logits {shape}")
            if not np.all(np.isfinite(table)):
                raise ValidationError("emission scores must be finite")
            table.setflags(write=False)
            object.__setattr__(self, "emission", table)
        object.__setattr__(self, "_emission_table", table)
        if self.truth_path is not None:
            path = tuple(int(z) for z in self.truth_path)
            violation = validate_path(path, self.I, require_complete=True)
            if violation is not None:
                raise ValidationError(f"truth_path: {violation}")
            if len(path) != self.J:
                raise ValidationError(f"truth_path has length {len(path)}, expected J={self.J}")
            object.__setattr__(self, "truth_path", path)

    @property
    def I(self) -> int:  # noqa: E743
        return self.model.num_inputs

    @property
    def J(self) -> int:
        return self.model.max_outputs

    @property
    def lam(self) -> float:
        return self.model.lam

    @property
    def emission_table(self) -> np.ndarray:
        """Emission log-likelihoods, all zeros when the instance has none."""
        return self._emission_table

    def with_lambda(self, lam: float) -> "LatticeInstance":
        return LatticeInstance(self.model.with_lambda(lam), self.emission, self.truth_path)

    @classmethod
    def from_arrays(cls, logits, lam=1.0, emission=None, truth_path=None):
        return cls(TransitionLogits(logits, lam), emission, truth_path)

    # JSON wire format: I, J, lambda, logits (flat row-major), emission, truth_path
    def to_json(self) -> dict:
        out = {
            "I": self.I,
            "J": self.J,
            "lambda": self.lam,
            "logits": self.model.logits.ravel().tolist(),
        }
        if self.emission is not None:
            out["emission"] = self.emission.ravel().tolist()
        if self.truth_path is not None:
            out["truth_path"] = list(self.truth_path)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "LatticeInstance":
        if not isinstance(data, dict):
            raise ValidationError("instance JSON must be an object")
        for key in ("I", "J", "lambda", "logits"):
            if key not in data:
                raise ValidationError(f"missing field '{key}'")
        I, J = data["I"], data["J"]
        for key, value in (("I", I), ("J", J)):
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValidationError(f"field '{key}' must be a positive integer")
        try:
            lam = check_lambda(data["lambda"])
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"field 'lambda': {exc}") from None
        logits = _read_table(data["logits"], I, J, "logits")
        emission = None
        if data.get("emission") is not None:
            emission = _read_table(data["emission"], I, J, "emission")
        truth = data.get("truth_path")
        if truth is not None:
            if not isinstance(truth, list) or not all(
                isinstance(z, int) and not isinstance(z, bool) for z in truth
            ):
                raise ValidationError("field 'truth_path' must be an array of integers")
        try:
            return cls.from_arrays(logits, lam, emission, truth)
        except ValidationError:
            raise
        except ValueError as exc:
            raise ValidationError(str(exc)) from None


def _read_table(value, I, J, name):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"field '{name}' must be numeric") from None
    # accept flat row-major or nested rows
    if arr.shape == (I * J,):
        arr = arr.reshape(I, J)
    if arr.shape != (I, J):
        raise ValidationError(f"field '{name}' must hold I*J = {I * J} values")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"field '{name}' must be finite")
    return arr


class PathViolation(NamedTuple):
    """First broken invariant of a path; ``step`` is the 1-based output index."""

    step: int
    reason: str

    def __str__(self):
        return f"step {self.step}: {self.reason}"


def validate_path(path: Sequence[int], I: int, require_complete: bool = True) -> Optional[PathViolation]:
    """Return ``None`` for a valid path, otherwise the first violation."""
    if len(path) == 0:
        return PathViolation(1, "empty path")
    for j, z in enumerate(path, start=1):
        if not 1 <= z <= I:
            return PathViolation(j, f"position {z} outside 1..{I}")
        if j == 1:
            if z != 1:
                return PathViolation(1, f"path must start at input 1, got {z}")
        elif z - path[j - 2] not in (0, 1):
            return PathViolation(j, f"increment {z - path[j - 2]} not in {{0, 1}}")
    if require_complete and path[-1] != I:
        return PathViolation(len(path), f"path ends at {path[-1]}, not at I={I}")
    return None


def transition_log_prob(z_prev: int, z: int, j: int, model: TransitionLogits) -> float:
    """Log-probability of moving from ``z_prev`` at step ``j-1`` to ``z`` at step ``j``.

    Emit and Shift both read the logit of the cell being left, ``(z_prev, j)``.
    """
    I, J = model.num_inputs, model.max_outputs
    if not (1 <= z_prev <= I and 1 <= z <= I):
        raise ValidationError(f"positions ({z_prev}, {z}) outside 1..{I}")
    if not 2 <= j <= J:
        raise ValidationError(f"step {j} outside 2..{J}")
    if z == z_prev:
        return float(model.log_emit[z_prev - 1, j - 1])
    if z == z_prev + 1:
        return float(model.log_shift[z_prev - 1, j - 1])
    return -math.inf


def path_log_prob(path: Sequence[int], model: TransitionLogits, emission=None) -> float:
    """Joint log-probability of a (possibly partial) path and its emissions.

    The first step carries no transition factor. ``emission`` may be an
    ``(I, J)`` table or a :class:`LatticeInstance`'s emission (``None`` = zero).
    """
    path = tuple(int(z) for z in path)
    violation = validate_path(path, model.num_inputs, require_complete=False)
    if violation is not None:
        raise ValidationError(f"invalid path: {violation}")
    if len(path) > model.max_outputs:
        raise ValidationError(f"path length {len(path)} exceeds J={model.max_outputs}")
    total = 0.0
    for j in range(1, len(path)):
        prev = path[j - 1] - 1
        table = model.log_emit if path[j] == path[j - 1] else model.log_shift
        total += table[prev, j]
    if emission is not None:
        emission = np.asarray(emission, dtype=float)
        total += float(sum(emission[z - 1, j] for j, z in enumerate(path)))
    return float(total)


def instance_path_log_prob(path: Sequence[int], instance: LatticeInstance) -> float:
    return path_log_prob(path, instance.model, instance.emission)


def num_paths(I: int, J: int) -> int:
    """Number of complete paths, ``C(J-1, I-1)``."""
    if I > J or I < 1:
        return 0
    return int(comb(J - 1, I - 1, exact=True))


def enumerate_paths(I: int, J: int, limit: int = MAX_ENUMERATED_PATHS) -> list:
    """All complete monotone paths for an ``I x J`` lattice, in lexicographic order."""
    if I < 1 or J < 1:
        raise ValidationError("I and J must be positive")
    if I > J:
        return []
    count = num_paths(I, J)
    if count > limit:
        raise ValidationError(f"{count} paths exceed the enumeration guard of {limit}")

    out = []

    def extend(prefix):
        j, z = len(prefix), prefix[-1]
        if j == J:
            out.append(tuple(prefix))
            return
        remaining = J - j
        # Emit first keeps the output lexicographic
        if I - z <= remaining - 1:
            prefix.append(z)
            extend(prefix)
            prefix.pop()
        if z < I:
            prefix.append(z + 1)
            extend(prefix)
            prefix.pop()

    extend([1])
    return out


def segment_lengths(path: Sequence[int], I: int) -> np.ndarray:
    """Number of output steps aligned to each input (length ``I``)."""
    return np.bincount(np.asarray(path, dtype=int) - 1, minlength=I)


def brute_force_scores(instance: LatticeInstance):
    """``(paths, log-probs)`` for every complete path of ``instance``."""
    paths = enumerate_paths(instance.I, instance.J)
    scores = np.array([instance_path_log_prob(p, instance) for p in paths])
    return paths, scores


def log_total(scores) -> float:
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        return -math.inf
    return float(logsumexp(scores))
