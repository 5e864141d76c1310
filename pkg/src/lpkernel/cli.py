"""Command line: ``lpkernel gen|partition|build|verify|bench``.

Reports are JSON on stdout (or ``--out``); a short summary goes to stderr.
Exit codes: 0 all certificates pass, 1 a verification failed, 2 bad usage,
bad config or bad input.
"""
from __future__ import annotations

import argparse
import json
import resource
import sys
import time
import warnings
from fractions import Fraction

from . import formats
from .generate import GenConfig, generate_family
from .operator_builder import (
    InexactError,
    allocate_theta,
    dense_image_operator,
    kernel_operator_via_duality,
    kernel_operator_via_quotient,
)
from .sparse_space import FLOAT, ORACLE, Kind, SpaceDescriptor
from .suites import SUITES, run_suite
from .support_graph import (
    ZeroMemberError,
    build_incidence,
    components_equivrel,
    components_graph,
    disjoint_partition,
    partition_report,
)
from .verification import DEFAULT_TOL, certify_kernel, check_dense_image, check_duality_chain

CONSTRUCTIONS = ("dense-image", "kernel-duality", "kernel-quotient")
SCALAR_MODES = (ORACLE, FLOAT)
SUITE_ALIASES = {"lemma25": "roundtrip"}
GLOBAL_DEFAULTS = {"space": "lp", "p": Fraction(2), "mode": None, "tol": DEFAULT_TOL, "seed": 0,
                   "out": None, "threads": 1, "format": "jsonl", "universe": None}


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None
    return value


def _pair(text: str, cast=int) -> tuple[str, object]:
    kind, _, value = text.partition(":")
    if not value:
        raise argparse.ArgumentTypeError(f"expected KIND:VALUE, got {text!r}")
    try:
        return kind, cast(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value in {text!r}") from None


def _range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    try:
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--space", choices=("lp", "c0"))
    common.add_argument("--p", type=_fraction, help="exponent as NUM/DEN, e.g. 3/2")
    common.add_argument("--mode", action="append",
                        help="scalar mode oracle|float; for build also the construction")
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="write the JSON report (or family) here instead of stdout")
    common.add_argument("--threads", type=int, help="cap on internal parallelism")
    common.add_argument("--format", choices=("jsonl", "csv"), help="family file format")
    common.add_argument("--universe", type=int, help="universe size for CSV input and gen")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="lpkernel", parents=[common],
                                     description="Sparse families, disjoint partitions and kernel operators.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a random family")
    g.add_argument("--n", type=int, default=100, help="number of vectors")
    g.add_argument("--support", type=lambda s: _pair(s, float), default=("fixed", 2.0),
                   help="fixed:K or geometric:MEAN")
    g.add_argument("--values", type=_range, default=(-8, 8), help="numerator range LO:HI")
    g.add_argument("--den-max", type=int, default=1)

    p = sub.add_parser("partition", parents=[common], help="components and disjoint partition of a family")
    p.add_argument("family")
    p.add_argument("--algo", choices=("equivrel", "graph", "both"), default="equivrel")

    b = sub.add_parser("build", parents=[common], help="build an operator and certify it")
    b.add_argument("family")
    b.add_argument("--operator-out", help="also write the bare operator JSON here")
    b.add_argument("--trials", type=int, default=100, help="norm-bound samples for dense-image")

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=("all", *SUITES, *SUITE_ALIASES))
    v.add_argument("--instances", type=int, default=100)
    v.add_argument("--operator", help="certify this operator file instead of random instances")
    v.add_argument("--family", help="with --operator: the family whose span must be the kernel")

    be = sub.add_parser("bench", parents=[common], help="time incidence, components and partition")
    be.add_argument("--n", type=int, default=10 ** 6)
    be.add_argument("--support", type=lambda s: _pair(s, float), default=("geometric", 8.0))
    be.add_argument("--algo", choices=("equivrel", "graph"), default="equivrel")
    return parser


def _settings(args) -> argparse.Namespace:
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    modes = args.mode or []
    args.construction = None
    scalar = None
    for m in modes:
        if m in SCALAR_MODES:
            scalar = m
        elif m in CONSTRUCTIONS and args.command == "build":
            args.construction = m
        else:
            allowed = SCALAR_MODES + (CONSTRUCTIONS if args.command == "build" else ())
            raise UsageError(f"--mode {m!r}: choose from {', '.join(allowed)}")
    args.scalar_mode = scalar
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if args.space == "lp" and args.p < 1:
        raise UsageError("--p must be >= 1")
    return args


def _space(args, size: int) -> SpaceDescriptor:
    if args.space == "c0":
        return SpaceDescriptor.c0(range(size))
    return SpaceDescriptor.lp(args.p, range(size))


def _cap_threads(n: int):
    try:
        import numba

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # threading-layer probing is noisy
            numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))
    except (ImportError, ValueError):
        pass


def _emit(report: dict, args, compact: bool = False):
    text = json.dumps(report, indent=None if compact else 2, default=str) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(msg: str):
    print(msg, file=sys.stderr)


def _load_family(path: str, args):
    try:
        if args.format == "csv":
            if args.universe is None:
                raise UsageError("CSV input needs --universe")
            return formats.read_family_csv(path, _space(args, args.universe), args.scalar_mode or ORACLE)
        return formats.read_family_jsonl(path, args.scalar_mode)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except formats.FormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _zero_member_message(path: str, family, exc: ZeroMemberError) -> str:
    lines = getattr(family, "source_lines", None)
    where = ""
    if lines is not None:
        row = family.index_of(exc.vector_id)
        where = f" line {int(lines[row])}:"
    return f"{path}:{where} zero vector (id {exc.vector_id}) in the family"


def cmd_gen(args) -> int:
    if args.universe is None:
        raise UsageError("gen needs --universe")
    kind, param = args.support
    support = (kind, int(param)) if kind == "fixed" else (kind, param)
    try:
        cfg = GenConfig(n_vectors=args.n, universe_size=args.universe, support=support,
                        value_range=args.values, den_max=args.den_max, seed=args.seed,
                        space=args.space, p=args.p, mode=args.scalar_mode or ORACLE)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    fam = generate_family(cfg)
    writer = formats.write_family_csv if args.format == "csv" else formats.write_family_jsonl
    writer(fam, args.out or sys.stdout)
    _say(f"generated {len(fam)} vectors, {fam.nnz} nonzeros, mean support "
         f"{fam.nnz / max(len(fam), 1):.3f}")
    return 0


def cmd_partition(args) -> int:
    fam = _load_family(args.family, args)
    try:
        inc = build_incidence(fam)
        if args.algo == "graph":
            comp = components_graph(fam, inc)
        else:
            comp = components_equivrel(fam, inc)
    except ZeroMemberError as exc:
        raise UsageError(_zero_member_message(args.family, fam, exc)) from None
    report = {"algo": args.algo}
    code = 0
    if args.algo == "both":
        agree = comp == components_graph(fam, inc)
        report["algorithms_agree"] = bool(agree)
        _say(f"algorithms agree: {str(agree).lower()}")
        code = 0 if agree else 1
    part = disjoint_partition(fam, comp)
    report.update(partition_report(fam, comp, part))
    report["hash"] = part.digest()
    report.update(part.to_json())
    _emit(report, args, compact=len(fam) > 10 ** 4)
    _say(f"{report['n_vectors']} vectors, {report['n_components']} components, {report['n_groups']} groups")
    return code


def _span_text(fam) -> str:
    parts = []
    for _, vec in fam:
        items = list(vec.items())
        if len(items) == 1 and items[0][1] == 1:
            parts.append(f"e{items[0][0]}")
        else:
            parts.append("(" + ", ".join(f"{lab}: {v}" for lab, v in items) + ")")
    return "span{" + ", ".join(parts) + "}"


def cmd_build(args) -> int:
    if args.construction is None:
        raise UsageError(f"build needs --mode {'|'.join(CONSTRUCTIONS)}")
    fam = _load_family(args.family, args)
    space = fam.space
    if args.construction == "kernel-duality" and (space.kind is Kind.C0 or space.p == 1):
        raise UsageError(f"kernel-duality needs an l_p space with 1 < p < oo, got {space}; "
                         "use kernel-quotient for c0 and l_1")
    try:
        if args.construction == "dense-image":
            Dn = fam.nonzero()
            part = disjoint_partition(Dn, components_equivrel(Dn))
            theta = allocate_theta(part, space)
            T = dense_image_operator(Dn, part, theta)
            cert = check_dense_image(Dn, part, theta, trials=args.trials, seed=args.seed, tol=args.tol)
            verdict = "exact" if cert["exact"] else f"tol {args.tol}"
            cert["statement"] = f"rank = dim span D: {verdict if not cert['failures'] else 'FAILED'}"
        else:
            if args.construction == "kernel-duality":
                T = kernel_operator_via_duality(fam)
            else:
                T = kernel_operator_via_quotient(fam)
            cert = certify_kernel(T, fam, tol=args.tol)
            ident = cert["identities"][0]
            verdict = "exact" if ident["exact"] else f"tol {args.tol}"
            cert["statement"] = f"ker = {_span_text(fam)}: {verdict if ident['pass'] else 'FAILED'}"
    except ValueError as exc:
        if isinstance(exc, InexactError):
            raise
        raise UsageError(str(exc)) from None
    op = formats.operator_to_json(T)
    if args.operator_out:
        with open(args.operator_out, "w", encoding="utf-8") as fh:
            json.dump(op, fh, indent=1)
            fh.write("\n")
    _emit({"construction": args.construction, "space": space.header(), "certificate": cert, "operator": op}, args)
    _say(cert["statement"])
    return 1 if cert["failures"] else 0


def _verify_operator_file(args) -> dict:
    if not args.family:
        raise UsageError("--operator needs --family")
    try:
        with open(args.operator, encoding="utf-8") as fh:
            data = json.load(fh)
        T = formats.operator_from_json(data.get("operator", data))
    except OSError as exc:
        raise UsageError(f"cannot read {args.operator}: {exc.strerror}") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.operator}: malformed operator ({exc})") from None
    fam = _load_family(args.family, args)
    if not T.domain.same_universe(fam.space):
        raise UsageError("operator domain and family universe differ")
    reports = [certify_kernel(T, fam, tol=args.tol)]
    if T.domain.kind is Kind.LP and T.domain.p > 1 and T.domain == T.codomain:
        try:
            reports.append(check_duality_chain(T, tol=args.tol))
        except InexactError:
            pass  # symbolic scales; the kernel certificate already covers it
    return {"check": "operator_file", "operator": args.operator, "family": args.family, "reports": reports}


def cmd_verify(args) -> int:
    _cap_threads(args.threads)
    if args.operator:
        report = _verify_operator_file(args)
        failures = [f for r in report["reports"] for f in r["failures"]]
    else:
        if args.instances < 0:
            raise UsageError("--instances must be >= 0")
        names = list(SUITES) if args.suite == "all" else [SUITE_ALIASES.get(args.suite, args.suite)]
        reports = []
        for name in names:
            t0 = time.perf_counter()
            rep = run_suite(name, args.instances, seed=args.seed, threads=args.threads)
            _say(f"{name}: {args.instances} instances, {len(rep['failures'])} failures "
                 f"({time.perf_counter() - t0:.1f} s)")
            reports.append(rep)
        failures = [f for r in reports for f in r["failures"]]
        report = {"suite": args.suite, "seed": args.seed, "instances": args.instances, "reports": reports}
    report["failures"] = len(failures)
    report["pass"] = not failures
    _emit(report, args)
    if failures:
        _say(f"FAIL: {len(failures)} failures; first: {json.dumps(failures[0], default=str)}")
        return 1
    _say("PASS")
    return 0


def _peak_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def cmd_bench(args) -> int:
    _cap_threads(args.threads)
    universe = args.universe or 10 ** 7
    kind, param = args.support
    support = (kind, int(param)) if kind == "fixed" else (kind, param)
    try:
        cfg = GenConfig(n_vectors=args.n, universe_size=universe, support=support, seed=args.seed,
                        space=args.space, p=args.p, mode=args.scalar_mode or ORACLE)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    timings = {}
    t0 = time.perf_counter()
    fam = generate_family(cfg)
    timings["generate_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    inc = build_incidence(fam)
    timings["incidence_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    comp = components_graph(fam, inc) if args.algo == "graph" else components_equivrel(fam, inc)
    timings["components_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    part = disjoint_partition(fam, comp)
    timings["partition_s"] = time.perf_counter() - t0
    wall = timings["incidence_s"] + timings["components_s"] + timings["partition_s"]
    sizes = comp.sizes()
    report = {
        "n_vectors": len(fam),
        "nnz": fam.nnz,
        "mean_support": fam.nnz / max(len(fam), 1),
        "universe_size": universe,
        "algo": args.algo,
        "n_components": int(len(sizes)),
        "peak_groups": part.n_groups,
        "hash": part.digest(),
        "timing": {**{k: round(v, 4) for k, v in timings.items()}, "wall_s": round(wall, 4),
                   "throughput_vectors_per_s": round(len(fam) / wall, 1) if wall > 0 else None,
                   "peak_rss_mb": round(_peak_rss_mb(), 1), "threads": args.threads},
    }
    _emit(report, args)
    _say(f"{len(fam)} vectors partitioned in {wall:.2f} s into {part.n_groups} groups; hash {report['hash'][:16]}")
    return 0


COMMANDS = {"gen": cmd_gen, "partition": cmd_partition, "build": cmd_build,
            "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _settings(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        _say(f"error: {exc}")
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
