"""Synthetic lattice instances, the condition grid and proxy metrics.

Ground-truth paths are drawn from the model itself, conditioned on being
complete.  Metrics are desk-scale proxies (exact-path accuracy, per-input
duration error, decoded NLL, run-to-run variance), not listening-test scores.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .decoding import Distribution, Mode, SearchConfig, beam_decode, greedy_decode
from .distributions import EMIT, SHIFT, NoiseSource, check_lambda
from .errors import ValidationError
from .lattice import LatticeInstance, TransitionLogits, instance_path_log_prob, segment_lengths, validate_path

EMISSION_DIM = 4
REPEATS = 5

CSV_COLUMNS = (
    "distribution",
    "lambda",
    "search",
    "randomness",
    "path_accuracy",
    "duration_mae",
    "decoded_nll",
    "run_variance",
)

SEARCHES = ("greedy", "beam")
RANDOMNESS = ("deterministic", "stochastic")


def derive_seed(*labels) -> int:
    """Stable 63-bit seed from a sequence of labels (order-sensitive)."""
    text = "\x1f".join(repr(x) for x in labels)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class GeneratorSpec:
    I: int  # noqa: E741
    J: int
    logit_scale: float = 4.0
    lam: float = 1.0
    emission_sigma: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        for name in ("I", "J"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValidationError(f"field '{name}' must be a positive integer")
        if self.I > self.J:
            raise ValidationError(f"field 'I' ({self.I}) must not exceed 'J' ({self.J})")
        if not (math.isfinite(self.logit_scale) and self.logit_scale >= 0):
            raise ValidationError("field 'logit_scale' must be finite and >= 0")
        try:
            check_lambda(self.lam)
        except ValidationError:
            raise ValidationError("field 'lambda' must be positive and finite") from None
        if self.emission_sigma is not None and not (
            math.isfinite(self.emission_sigma) and self.emission_sigma > 0
        ):
            raise ValidationError("field 'emission_sigma' must be positive")

    def replace(self, **changes) -> "GeneratorSpec":
        return GeneratorSpec(**{**asdict(self), **changes})

    def to_json(self) -> dict:
        return {
            "I": self.I,
            "J": self.J,
            "logit_scale": self.logit_scale,
            "lambda": self.lam,
            "emission_sigma": self.emission_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorSpec":
        if not isinstance(data, dict):
            raise ValidationError("generator spec must be a JSON object")
        known = {"I", "J", "logit_scale", "lambda", "emission_sigma", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown field '{sorted(unknown)[0]}'")
        for key in ("I", "J"):
            if key not in data:
                raise ValidationError(f"missing field '{key}'")
        kwargs = {"I": data["I"], "J": data["J"]}
        for key, attr in (("logit_scale", "logit_scale"), ("lambda", "lam"), ("emission_sigma", "emission_sigma")):
            if key in data and data[key] is not None:
                value = data[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ValidationError(f"field '{key}' must be a number")
                kwargs[attr] = float(value)
        if "seed" in data:
            if isinstance(data["seed"], bool) or not isinstance(data["seed"], int):
                raise ValidationError("field 'seed' must be an integer")
            kwargs["seed"] = data["seed"]
        return cls(**kwargs)


@dataclass(frozen=True)
class ConditionGrid:
    distributions: tuple = ("logistic", "binconcrete")
    lambdas: tuple = (1.0, 0.2, 0.05)
    searches: tuple = SEARCHES
    beam_width: int = 10
    randomness: tuple = RANDOMNESS
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        for name, allowed in (
            ("distributions", {d.value for d in Distribution}),
            ("searches", set(SEARCHES)),
            ("randomness", set(RANDOMNESS)),
        ):
            values = tuple(getattr(self, name))
            if not values:
                raise ValidationError(f"field '{name}' must be non-empty")
            bad = [v for v in values if v not in allowed]
            if bad:
                raise ValidationError(f"field '{name}' has unknown value {bad[0]!r}")
            object.__setattr__(self, name, values)
        lambdas = tuple(self.lambdas)
        if not lambdas:
            raise ValidationError("field 'lambdas' must be non-empty")
        try:
            object.__setattr__(self, "lambdas", tuple(check_lambda(x) for x in lambdas))
        except (TypeError, ValueError):
            raise ValidationError("field 'lambdas' must hold positive numbers") from None
        if isinstance(self.beam_width, bool) or not isinstance(self.beam_width, int) or self.beam_width < 1:
            raise ValidationError("field 'beam_width' must be an integer >= 1")
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ValidationError("field 'trials' must be an integer >= 1")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ValidationError("field 'seed' must be an integer")

    def conditions(self):
        for dist in self.distributions:
            for lam in self.lambdas:
                for search in self.searches:
                    for randomness in self.randomness:
                        yield dist, lam, search, randomness

    @classmethod
    def from_json(cls, data: dict) -> "ConditionGrid":
        if not isinstance(data, dict):
            raise ValidationError("condition grid must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown field '{sorted(unknown)[0]}'")
        kwargs = {}
        for key, value in data.items():
            if key in ("distributions", "lambdas", "searches", "randomness"):
                if not isinstance(value, list):
                    raise ValidationError(f"field '{key}' must be an array")
                value = tuple(value)
            kwargs[key] = value
        return cls(**kwargs)


@dataclass
class ResultRecord:
    distribution: str
    lam: float
    search: str
    randomness: str
    path_accuracy: float
    duration_mae: float
    decoded_nll: float
    run_variance: float

    def csv_row(self) -> list:
        return [
            self.distribution,
            f"{self.lam:.6f}",
            self.search,
            self.randomness,
            f"{self.path_accuracy:.6f}",
            f"{self.duration_mae:.6f}",
            f"{self.decoded_nll:.6f}",
            f"{self.run_variance:.6f}",
        ]


def _completion_table(model: TransitionLogits) -> np.ndarray:
    """``back[i, j]``: log-probability of reaching ``(I, J)`` from input ``i`` at step ``j``."""
    I, J = model.num_inputs, model.max_outputs
    back = np.full((I, J), -np.inf)
    back[I - 1, J - 1] = 0.0
    for j in range(J - 2, -1, -1):
        stay = model.log_emit[:, j + 1] + back[:, j + 1]
        move = np.full(I, -np.inf)
        move[:-1] = model.log_shift[:-1, j + 1] + back[1:, j + 1]
        with np.errstate(invalid="ignore"):
            back[:, j] = np.logaddexp(stay, move)
    return back


def sample_complete_path(model: TransitionLogits, noise: NoiseSource) -> tuple:
    """Stochastic greedy draw conditioned on finishing at ``(I, J)``.

    Each step's Emit log-odds is reweighted by the completion mass of both
    successors, so the result is an exact draw from the model's distribution
    restricted to complete paths.
    """
    I, J = model.num_inputs, model.max_outputs
    back = _completion_table(model)
    path = [1]
    for j in range(1, J):
        i = path[-1] - 1
        emit = model.log_emit[i, j] + back[i, j]
        shift = model.log_shift[i, j] + back[i + 1, j] if i + 1 < I else -np.inf
        # infinite odds when only one successor can still complete
        odds = emit - shift
        action = EMIT if noise.logistic() + odds >= 0.0 else SHIFT
        path.append(i + 1 if action is EMIT else i + 2)
    return tuple(path)


def generate_instance(spec: GeneratorSpec) -> LatticeInstance:
    """Random logits, a model-consistent complete truth path, optional Gaussian emissions."""
    seeds = np.random.SeedSequence(spec.seed).spawn(3)
    logit_rng = np.random.default_rng(seeds[0])
    logits = logit_rng.uniform(-spec.logit_scale, spec.logit_scale, size=(spec.I, spec.J))
    model = TransitionLogits(logits, spec.lam)
    truth = sample_complete_path(model, NoiseSource(seeds[1]))

    emission = None
    if spec.emission_sigma is not None:
        rng = np.random.default_rng(seeds[2])
        sigma = spec.emission_sigma
        means = rng.normal(size=(spec.I, EMISSION_DIM))
        frames = means[np.asarray(truth) - 1] + sigma * rng.normal(size=(spec.J, EMISSION_DIM))
        # isotropic Gaussian log-density of frame j under input i
        sq = ((frames[None, :, :] - means[:, None, :]) ** 2).sum(axis=-1)
        emission = -0.5 * sq / sigma**2 - EMISSION_DIM * (math.log(sigma) + 0.5 * math.log(2 * math.pi))
    return LatticeInstance(model, emission, truth)


def duration_error(decoded: Sequence[int], truth: Sequence[int], I: int) -> float:
    """Mean absolute difference of per-input segment lengths."""
    return float(np.abs(segment_lengths(decoded, I) - segment_lengths(truth, I)).mean())


def _decode_one(instance, dist, search, stochastic, beam_width, seed):
    width = 1 if search == "greedy" else beam_width
    config = SearchConfig(
        beam_width=width, stochastic=stochastic, distribution=dist, mode=Mode.FIXED, seed=seed
    )
    result = greedy_decode(instance, config) if search == "greedy" else beam_decode(instance, config)
    violation = validate_path(result.path, instance.I, require_complete=True)
    if violation is not None or len(result.path) != instance.J:
        raise AssertionError(f"decoder returned an invalid path: {violation}")
    return result


def grid_instances(grid: ConditionGrid, spec: GeneratorSpec, lam: float) -> list:
    """Instances shared by every condition with temperature ``lam``."""
    return [
        generate_instance(spec.replace(lam=lam, seed=derive_seed("instance", grid.seed, spec.seed, lam, k)))
        for k in range(grid.trials)
    ]


def evaluate_condition(grid, spec, dist, lam, search, randomness, instances=None) -> ResultRecord:
    if instances is None:
        instances = grid_instances(grid, spec, lam)
    stochastic = randomness == "stochastic"
    hits, mae, nll, variances = [], [], [], []
    for k, instance in enumerate(instances):
        repeats = REPEATS if stochastic else 1
        scores = []
        for r in range(repeats):
            seed = derive_seed("decode", grid.seed, spec.seed, dist, lam, search, randomness, k, r)
            result = _decode_one(instance, dist, search, stochastic, grid.beam_width, seed)
            scores.append(-instance_path_log_prob(result.path, instance))
            if r == 0:
                hits.append(result.path == instance.truth_path)
                mae.append(duration_error(result.path, instance.truth_path, instance.I))
        nll.append(scores[0])
        variances.append(float(np.var(scores)) if stochastic else 0.0)
    return ResultRecord(
        distribution=dist,
        lam=lam,
        search=search,
        randomness=randomness,
        path_accuracy=float(np.mean(hits)),
        duration_mae=float(np.mean(mae)),
        decoded_nll=float(np.mean(nll)),
        run_variance=float(np.mean(variances)),
    )


def run_grid(grid: ConditionGrid, spec: GeneratorSpec) -> list:
    """One :class:`ResultRecord` per condition, in grid axis order.

    Instances depend only on the grid seed, the generator seed, ``lambda``
    and the trial index, so conditions at equal ``lambda`` see the same
    instances and adding a condition leaves the others untouched.
    """
    cache = {}
    records = []
    for dist, lam, search, randomness in grid.conditions():
        if lam not in cache:
            cache[lam] = grid_instances(grid, spec, lam)
        records.append(evaluate_condition(grid, spec, dist, lam, search, randomness, cache[lam]))
    return records


def records_to_csv(records: Sequence[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in records:
        writer.writerow(record.csv_row())
    return buf.getvalue()
