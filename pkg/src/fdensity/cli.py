"""Command-line front end.

Exit status: 0 on success, 1 when a verification or axiom check fails,
2 on usage or precondition errors, 3 when ``separate`` finds no witness.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

from . import diagnostics, separator
from .errors import DomainError, NotFound, PreconditionError
from .modulus import ModulusDescriptor, check_axioms
from .sets import (
    BUILTIN_NAMES,
    Builtin,
    default_grid,
    density_profile,
    f_density_profile,
    load_set,
    membership_verdict,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NOT_FOUND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_arg(text: str) -> int:
    """Integers, also written as 1e6 or 10^6."""
    text = text.strip()
    if "^" in text:
        base, _, exp = text.partition("^")
        return int(base) ** int(exp)
    try:
        return int(text)
    except ValueError:
        pass
    try:
        d = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not d.is_finite() or d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(d)


def _real_arg(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}") from None


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from None


def parse_modulus(text: str) -> ModulusDescriptor:
    if text.startswith("@"):
        return ModulusDescriptor.from_json(_read_json(text[1:]))
    return ModulusDescriptor.parse(text)


def parse_set(text: str):
    if text in BUILTIN_NAMES:
        return Builtin(text)
    if not Path(text).exists():
        raise UsageError(f"--set: {text!r} is neither a built-in set nor a readable file")
    try:
        return load_set(text)
    except OSError as exc:
        raise UsageError(f"cannot read {text}: {exc.strerror}") from None


@dataclass
class RunConfig:
    subcommand: str
    modulus: dict | None = None
    set: dict | None = None
    horizon: int | None = None
    window: float | None = None
    epsilon: float | None = None
    threshold: float | None = None
    tail: float | None = None
    kmax: int | None = None
    tol: float | None = None
    xi: str | None = None
    stages: int | None = None
    cap: int | None = None
    samples: int | None = None
    budget: int | None = None
    seed: int | None = None
    result: str | None = None
    output: str | None = None
    set_output: str | None = None
    format: str | None = None

    def to_json(self) -> dict:
        out = {}
        for key, value in asdict(self).items():
            if value is None:
                continue
            if isinstance(value, int) and not isinstance(value, bool) and abs(value) >= 1 << 53:
                value = str(value)
            out[key] = value
        return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fdensity", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def out_flags(sp):
        sp.add_argument("--output", "-o", help="output file (default: stdout)")

    d = sub.add_parser("density", help="natural / f-density profile of a set")
    d.add_argument("--set", required=True, help=f"set JSON file or one of {', '.join(BUILTIN_NAMES)}")
    d.add_argument("--horizon", type=_int_arg, required=True)
    d.add_argument("--modulus")
    d.add_argument("--format", choices=("csv", "json"), default="csv")
    d.add_argument("--threshold", type=float, default=0.01)
    d.add_argument("--tail", type=float, default=0.25)
    out_flags(d)

    g = sub.add_parser("diagnose", help="Theorem 2 ratio verdict and Theorem 1 g-trend")
    g.add_argument("--modulus", required=True)
    g.add_argument("--horizon", type=_int_arg, required=True)
    g.add_argument("--kmax", type=int)
    g.add_argument("--epsilon", type=float, default=diagnostics.THEOREM2_EPSILON)
    g.add_argument("--window", type=float, default=diagnostics.DEFAULT_WINDOW)
    out_flags(g)

    lm = sub.add_parser("lemma1", help="check g_f(k) = a^k")
    lm.add_argument("--modulus", required=True)
    lm.add_argument("--kmax", type=int, required=True)
    lm.add_argument("--tol", type=float, required=True)
    lm.add_argument("--horizon", type=_int_arg, default=10**6)
    out_flags(lm)

    s = sub.add_parser("separate", help="build the separating block set")
    s.add_argument("--modulus", required=True)
    s.add_argument("--xi", type=_real_arg, default=separator.DEFAULT_XI)
    s.add_argument("--stages", type=int, default=separator.DEFAULT_STAGES)
    s.add_argument("--cap", type=_int_arg, default=separator.DEFAULT_CAP)
    s.add_argument("--set-output", help="where to write the set A (default: <output>.set.json)")
    out_flags(s)

    v = sub.add_parser("verify", help="re-check a separator result")
    v.add_argument("--result", required=True)
    v.add_argument("--modulus", required=True)
    v.add_argument("--samples", type=int, default=16)
    out_flags(v)

    a = sub.add_parser("axioms", help="property-check the modulus axioms")
    a.add_argument("--modulus", required=True)
    a.add_argument("--budget", type=int, default=10**4)
    a.add_argument("--seed", type=int, default=0)
    out_flags(a)
    return p


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _positive(name, value, minimum=1):
    if value < minimum:
        raise PreconditionError(f"--{name} must be >= {minimum}, got {value}")


def _cmd_density(args, cfg: RunConfig) -> int:
    A = parse_set(args.set)
    m = parse_modulus(args.modulus) if args.modulus else None
    _positive("horizon", args.horizon)
    if not 0 < args.tail <= 1:
        raise PreconditionError("--tail must lie in (0, 1]")
    cfg.set, cfg.horizon, cfg.format = A.to_json(), args.horizon, args.format
    cfg.modulus = None if m is None else m.to_json()
    cfg.threshold, cfg.tail = args.threshold, args.tail
    grid = default_grid(args.horizon)
    desc = {"kind": "default", "horizon": str(args.horizon)}
    if m is None:
        prof = density_profile(A, grid, desc)
    else:
        prof = f_density_profile(A, m, grid, desc)
    if args.format == "csv":
        _emit(prof.to_csv(), args.output)
        return EXIT_OK
    out = {"config": cfg.to_json(), "profile": prof.to_json()}
    if len(prof.rows) >= 2:
        out["membership"] = membership_verdict(prof, args.threshold, args.tail).to_json()
    _emit(_dump(out), args.output)
    return EXIT_OK


def _default_kmax(horizon: int) -> int:
    k = 10
    while k > 3 and horizon < (1 << k) * 100:
        k -= 1
    return k


def _cmd_diagnose(args, cfg: RunConfig) -> int:
    m = parse_modulus(args.modulus)
    kmax = args.kmax if args.kmax is not None else _default_kmax(args.horizon)
    if args.horizon < 100:
        raise PreconditionError("--horizon must be >= 100")
    if kmax < 3 or args.horizon < (1 << kmax) * 100:
        raise PreconditionError(f"--kmax {kmax} needs 3 <= kmax and horizon >= 2^kmax * 100")
    if not 0 < args.epsilon < 0.5:
        raise PreconditionError("--epsilon must lie in (0, 0.5)")
    if not 0 < args.window <= 1:
        raise PreconditionError("--window must lie in (0, 1]")
    cfg.modulus, cfg.horizon, cfg.kmax = m.to_json(), args.horizon, kmax
    cfg.epsilon, cfg.window = args.epsilon, args.window
    t2 = diagnostics.theorem2_verdict(m, args.horizon, args.epsilon, args.window)
    t1 = diagnostics.theorem1_trend(m, kmax, args.horizon, args.window)
    out = {"config": cfg.to_json(), "theorem2": t2.to_json(), "theorem1": t1.to_json()}
    _emit(_dump(out), args.output)
    return EXIT_OK


def _cmd_lemma1(args, cfg: RunConfig) -> int:
    m = parse_modulus(args.modulus)
    _positive("kmax", args.kmax)
    if args.tol < 0:
        raise PreconditionError("--tol must be >= 0")
    cfg.modulus, cfg.kmax, cfg.tol, cfg.horizon = m.to_json(), args.kmax, args.tol, args.horizon
    res = diagnostics.lemma1_check(m, args.kmax, args.horizon, args.tol)
    _emit(_dump({"config": cfg.to_json(), **res.to_json()}), args.output)
    return EXIT_OK if res.passed else EXIT_FAIL


def _cmd_separate(args, cfg: RunConfig) -> int:
    m = parse_modulus(args.modulus)
    xi = args.xi
    if not 0 < xi < 1:
        raise PreconditionError("--xi must lie in (0, 1)")
    _positive("stages", args.stages)
    _positive("cap", args.cap)
    set_out = args.set_output
    if set_out is None and args.output is not None:
        set_out = str(Path(args.output).with_suffix(".set.json"))
    cfg.modulus, cfg.xi, cfg.stages, cfg.cap = m.to_json(), f"{xi.numerator}/{xi.denominator}", args.stages, args.cap
    cfg.set_output = set_out
    try:
        res = separator.build_separating_set(m, xi, args.stages, args.cap)
    except NotFound as exc:
        out = {"config": cfg.to_json(), "error": "NotFound", "stage": exc.stage,
               "message": str(exc),
               "completed_stages": [{"k": s.k, "n": str(s.n), "m": str(s.m)} for s in exc.partial],
               "explanation": "no witness below the cap; finite evidence consistent with "
                              f"g_f(k) <= xi at stage {exc.stage}"}
        _emit(_dump(out), args.output)
        return EXIT_NOT_FOUND
    body = res.to_json()
    _emit(_dump({"config": cfg.to_json(), **body}), args.output)
    if set_out is not None:
        Path(set_out).write_text(_dump(body["set"]))
    return EXIT_OK


def _cmd_verify(args, cfg: RunConfig) -> int:
    m = parse_modulus(args.modulus)
    _positive("samples", args.samples)
    res = separator.SeparatorResult.from_json(_read_json(args.result))
    cfg.modulus, cfg.result, cfg.samples = m.to_json(), args.result, args.samples
    rep = separator.verify_construction(res, m, args.samples)
    _emit(_dump({"config": cfg.to_json(), **rep.to_json()}), args.output)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _cmd_axioms(args, cfg: RunConfig) -> int:
    m = parse_modulus(args.modulus)
    _positive("budget", args.budget)
    cfg.modulus, cfg.budget, cfg.seed = m.to_json(), args.budget, args.seed
    rep = check_axioms(m, args.budget, args.seed)
    _emit(_dump({"config": cfg.to_json(), **rep.to_json()}), args.output)
    return EXIT_OK if rep.all_passed else EXIT_FAIL


_COMMANDS = {
    "density": _cmd_density,
    "diagnose": _cmd_diagnose,
    "lemma1": _cmd_lemma1,
    "separate": _cmd_separate,
    "verify": _cmd_verify,
    "axioms": _cmd_axioms,
}


def run(argv) -> int:
    try:
        args = build_parser().parse_args(list(argv))
        cfg = RunConfig(args.subcommand, output=getattr(args, "output", None))
        return _COMMANDS[args.subcommand](args, cfg)
    except (UsageError, DomainError, PreconditionError) as exc:
        msg = " ".join(str(exc).split())
        print(f"fdensity: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"fdensity: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
