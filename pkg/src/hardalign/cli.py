"""Command-line front end.

Exit codes: 0 success, 1 validation error (bad JSON, bad field, bad flag),
2 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np
from scipy import integrate

from .decoding import Distribution, Mode, SearchConfig, beam_decode, greedy_decode
from .distributions import BinConcreteParams, binconcrete_log_density
from .errors import ValidationError
from .harness import ConditionGrid, GeneratorSpec, generate_instance, records_to_csv, run_grid
from .lattice import LatticeInstance, brute_force_scores, num_paths
from .likelihood import brute_force_marginal, forward_marginal

DEFAULT_GENERATOR = {"I": 5, "J": 12, "logit_scale": 4.0, "lambda": 1.0, "seed": 0}
BRUTE_FORCE_LIMIT = 10**5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read_json(path):
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from None


def _write(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_gen(args):
    spec = GeneratorSpec.from_json(_read_json(args.spec))
    _write(_dump(generate_instance(spec).to_json()), args.out)


def cmd_likelihood(args):
    instance = LatticeInstance.from_json(_read_json(args.instance))
    out = {"forward": forward_marginal(instance), "brute_force": None}
    if num_paths(instance.I, instance.J) <= args.brute_force_limit:
        out["brute_force"] = brute_force_marginal(instance)
    # -inf is not valid JSON
    for key, value in out.items():
        if value is not None and math.isinf(value):
            out[key] = "-inf"
    _write(_dump(out), args.out)


def cmd_decode(args):
    instance = LatticeInstance.from_json(_read_json(args.instance))
    config = SearchConfig(
        beam_width=1 if args.greedy else args.beam_width,
        stochastic=args.stochastic,
        distribution=Distribution(args.distribution),
        lam=args.lam,
        mode=Mode(args.mode),
        max_outputs=args.max_outputs,
        seed=args.seed,
    )
    result = greedy_decode(instance, config) if args.greedy else beam_decode(instance, config)
    _write(_dump({"path": list(result.path), "score": result.score}), args.out)


def cmd_experiment(args):
    grid = ConditionGrid.from_json(_read_json(args.grid))
    spec_data = _read_json(args.generator) if args.generator else DEFAULT_GENERATOR
    spec = GeneratorSpec.from_json(spec_data)
    _write(records_to_csv(run_grid(grid, spec)), args.out)


def density_mass(params: BinConcreteParams) -> float:
    """Quadrature of the density over (0, 1).

    The density behaves like ``x**(lam - 1)`` at both ends, so each half is
    integrated against an algebraic weight, and the upper half is mapped onto
    ``(0, 0.5)`` through the ``x -> 1 - x``, ``alpha -> 1 / alpha`` symmetry.
    """
    lam = params.lam
    total = 0.0
    for p in (params, BinConcreteParams(-params.log_alpha, lam)):
        def smooth(x, p=p):
            if x <= 0.0:
                return lam * math.exp(-p.log_alpha)  # limit at the endpoint
            return math.exp(binconcrete_log_density(x, p) - (lam - 1.0) * math.log(x))

        total += integrate.quad(smooth, 0.0, 0.5, weight="alg", wvar=(lam - 1.0, 0.0),
                                epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return total


def _selftest_checks(seed: int, trials: int):
    rng = np.random.default_rng(seed)
    worst_fwd = worst_beam = 0.0
    reductions = 0
    for t in range(trials):
        I = int(rng.integers(1, 5))
        J = int(rng.integers(I, 9))
        lam = float(rng.choice([1.0, 0.2, 0.05]))
        emission = rng.normal(size=(I, J)) if t % 2 else None
        instance = LatticeInstance.from_arrays(rng.uniform(-3, 3, (I, J)), lam, emission)
        worst_fwd = max(worst_fwd, abs(forward_marginal(instance) - brute_force_marginal(instance)))
        _, scores = brute_force_scores(instance)
        exact = beam_decode(instance, SearchConfig(beam_width=num_paths(I, J)))
        worst_beam = max(worst_beam, abs(exact.score - scores.max()))
        reductions += greedy_decode(instance, SearchConfig()).path == beam_decode(instance, SearchConfig()).path
    yield "forward == brute force", worst_fwd <= 1e-10, f"max |diff| {worst_fwd:.2e}"
    yield "exhaustive beam == argmax path", worst_beam <= 1e-9, f"max |diff| {worst_beam:.2e}"
    yield "beam-1 == greedy", reductions == trials, f"{reductions}/{trials}"
    worst_norm = 0.0
    for log_alpha in (math.log(0.5), math.log(2.0)):
        for lam in (1.0, 0.2):
            total = density_mass(BinConcreteParams(log_alpha, lam))
            worst_norm = max(worst_norm, abs(total - 1.0))
    yield "binary Concrete density integrates to 1", worst_norm <= 1e-6, f"max |err| {worst_norm:.2e}"


def cmd_selftest(args):
    ok = True
    for name, passed, detail in _selftest_checks(args.seed, args.trials):
        ok &= passed
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return 0 if ok else 1


def build_parser():
    parser = _Parser(prog="hardalign", description="Hard monotonic alignment toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a lattice instance from a generator spec")
    p.add_argument("spec", help="GeneratorSpec JSON file ('-' for stdin)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("likelihood", help="forward and brute-force log-marginals")
    p.add_argument("instance")
    p.add_argument("--brute-force-limit", type=int, default=BRUTE_FORCE_LIMIT)
    p.add_argument("--out")
    p.set_defaults(func=cmd_likelihood)

    p = sub.add_parser("decode", help="search for an alignment path")
    p.add_argument("instance")
    search = p.add_mutually_exclusive_group()
    search.add_argument("--beam-width", type=int, default=1)
    search.add_argument("--greedy", action="store_true")
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--deterministic", dest="stochastic", action="store_false")
    noise.add_argument("--stochastic", dest="stochastic", action="store_true")
    p.set_defaults(stochastic=False)
    p.add_argument("--distribution", choices=[d.value for d in Distribution], default="logistic")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="fixed")
    p.add_argument("--max-outputs", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("experiment", help="run a condition grid and write CSV")
    p.add_argument("grid", help="ConditionGrid JSON file")
    p.add_argument("--generator", help="GeneratorSpec JSON file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("selftest", help="oracle cross-checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args) or 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
