"""Command-line entry point: ``mdlab <group> <command> [options]``.

Exit codes: 0 success, 1 infeasible point or failed check, 2 usage error,
3 input error. Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, gf2code, probkit, schemes
from .distortion import build_dxz
from .errors import Blowup, MDLabError
from .gf2code import LinearCode
from .region import fixtures
from .region.builder import Setup, build_cms_system, build_linear_system
from .region.fm import INFEASIBLE, RateRegion, is_member, project, sample_slice
from .region.system import dump_systems, load_systems

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_output(path, text: str, args, argv, inputs, started) -> None:
    """Write ``text`` to ``path`` (stdout when None) plus a sibling manifest."""
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
    _manifest(path, args, argv, inputs, started)


def _manifest(path, args, argv, inputs, started) -> None:
    manifest = {
        "command": args.command_name,
        "argv": list(argv),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "inputs": {str(p): _digest(p) for p in inputs if p},
        "output": str(path),
        "duration_s": round(time.perf_counter() - started, 6),
    }
    Path(f"{path}.manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _load_code(path) -> LinearCode:
    with open(path) as fh:
        doc = json.load(fh)
    return LinearCode.from_dict(doc["code"] if "code" in doc else doc)


# simulate


def _scheme_code(args, criterion: str, crossover: float) -> LinearCode:
    if args.code:
        return _load_code(args.code)
    _log(f"searching {args.trials} random ({args.n}, {args.k}) codes ({criterion})")
    found = gf2code.search_code(args.n, args.k, args.trials, criterion, crossover, args.seed, args.threads)
    return found.code


def cmd_simulate(args, argv, started) -> int:
    if args.scheme == "three-desc":
        code = _scheme_code(args, "source", args.delta)
        cfg = schemes.ThreeDescConfig(args.delta, code, args.blocks, args.seed)
    else:
        lam = 0.0 if args.lam is None else args.lam
        code = _scheme_code(args, "channel", args.delta - lam)
        cfg = schemes.FourDescConfig(args.delta, lam, code, args.blocks, args.seed)
    report = schemes.run_monte_carlo(cfg, threads=args.threads)
    _write_output(args.out, report.to_json(), args, argv, [args.code], started)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK


# code search


def cmd_code_search(args, argv, started) -> int:
    found = gf2code.search_code(args.n, args.k, args.trials, args.criterion, args.crossover, args.seed, args.threads)
    doc = {"code": found.code.to_dict(), "report": found.report.to_dict(), "trial": found.trial}
    _write_output(args.out, _json(doc), args, argv, [], started)
    return EXIT_OK


# region


_EXAMPLES = {
    "three-desc": (fixtures.three_desc_setup, fixtures.three_desc_witness, 0.2),
    "four-desc": (fixtures.four_desc_setup, fixtures.four_desc_witness, 0.11),
}


def cmd_region_example(args, argv, started) -> int:
    make_setup, make_witness, default = _EXAMPLES[args.name]
    delta = default if args.delta is None else args.delta
    _write_output(args.out, _json(make_setup(delta).to_dict()), args, argv, [], started)
    if args.witness:
        Path(args.witness).write_text(_json(make_witness(delta)))
    return EXIT_OK


def cmd_region_build(args, argv, started) -> int:
    setup = Setup.load(args.setup)
    if args.scheme == "cms":
        systems = [build_cms_system(setup)]
    else:
        systems = build_linear_system(setup, pin_rate_reductions=args.pin)
    _log(f"built {len(systems)} system(s): " + ", ".join(f"{s.name} ({len(s.rows)} rows)" for s in systems))
    if args.out is None:
        sys.stdout.write(_json({"systems": [s.to_dict() for s in systems]}))
    else:
        dump_systems(systems, args.out, {"scheme": args.scheme, "L": setup.L})
        _manifest(args.out, args, argv, [args.setup], started)
    return EXIT_OK


def cmd_region_project(args, argv, started) -> int:
    systems = load_systems(args.system)
    keep = [k.strip() for k in args.keep.split(",") if k.strip()]
    region = project(systems, keep, prune=args.prune)
    for line in region.log:
        _log(line)
    _write_output(args.out, _json(region.to_dict()), args, argv, [args.system], started)
    return EXIT_OK


def _parse_point(text: str, kept) -> list | dict:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if parts and all("=" in p for p in parts):
        return {k.strip(): float(v) for k, v in (p.split("=", 1) for p in parts)}
    return [float(p) for p in parts]


def cmd_region_member(args, argv, started) -> int:
    region = RateRegion.load(args.region)
    status = is_member(region, _parse_point(args.point, region.kept))
    print(status)
    return EXIT_FAIL if status == INFEASIBLE else EXIT_OK


def cmd_region_witness(args, argv, started) -> int:
    systems = load_systems(args.system)
    with open(args.assign) as fh:
        assign = {k: float(v) for k, v in json.load(fh).items()}
    any_ok = False
    for s in systems:
        rep = s.check_witness(assign)
        any_ok |= rep.ok
        verdict = "ok" if rep.ok else "violated"
        print(f"{s.name}: {verdict} ({rep.checked} rows, min slack {rep.min_slack:.3e})")
        for label, slack in rep.violated:
            _log(f"  {label}: slack {slack:.3e}")
    return EXIT_OK if any_ok else EXIT_FAIL


def _parse_range(text: str) -> tuple:
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must be a:b:step, got {text!r}") from None
    return a, b, step


def cmd_region_slice(args, argv, started) -> int:
    region = RateRegion.load(args.region)
    fixed = _parse_point(args.fix, region.kept) if args.fix else {}
    if not isinstance(fixed, dict):
        raise MDLabError("--fix takes name=value pairs")
    start, stop, step = args.range
    rows = sample_slice(region, fixed, args.sweep, start, stop, step)
    lines = [f"{args.sweep},status,member"]
    lines += [f"{v:.12g},{s},{int(s != INFEASIBLE)}" for v, s in rows]
    _write_output(args.out, "\n".join(lines) + "\n", args, argv, [args.region], started)
    return EXIT_OK


# check


def cmd_check(args, argv, started) -> int:
    lemma = args.lemma
    if args.dist:
        pmf = probkit.JointPmf.load(args.dist)
        groups = [g.split("+") for g in args.vars.split(",")] if args.vars else [[n] for n in pmf.names[:4]]
        if len(groups) != 4:
            raise MDLabError("--vars needs four groups A,B,C,D (use + to join names)")
        if lemma == "lemma2":
            res = probkit.check_lemma2(pmf, *groups, tol=args.tol)
        else:
            res = probkit.check_lemma3(pmf, *groups, tol=args.tol)
        print(_json({
            "hypotheses_hold": res.hypotheses_hold,
            "conclusion_holds": res.conclusion_holds,
            "implication_holds": res.implication_holds,
            "deviations": res.deviations,
        }), end="")
        return EXIT_OK if res.implication_holds else EXIT_FAIL
    rng = np.random.default_rng(args.seed)
    held = hyp = 0
    for _ in range(args.random):
        if lemma == "lemma2":
            pmf = probkit.random_lemma2_case(rng)
            res = probkit.check_lemma2(pmf, "A", "B", "C", "D", tol=args.tol, conclusion_tol=10 * args.tol)
        else:
            pmf = probkit.random_lemma3_case(rng)
            res = probkit.check_lemma3(pmf, "A", "B", "C", "D", tol=args.tol)
        held += res.implication_holds
        hyp += res.hypotheses_hold
    print(f"{held}/{args.random} implications hold")
    _log(f"hypotheses held in {hyp}/{args.random} cases")
    return EXIT_OK if held == args.random else EXIT_FAIL


# dist


def cmd_dist_make_dxz(args, argv, started) -> int:
    table = build_dxz(args.delta, args.c)
    _write_output(args.out, _json(table.to_dict()), args, argv, [], started)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mdlab", description="Linear-code multiple-descriptions laboratory.")
    p.add_argument("--version", action="version", version=f"mdlab {__version__}")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    sim = groups.add_parser("simulate", help="Monte-Carlo runs of the linear schemes")
    sim.add_argument("scheme", choices=["three-desc", "four-desc"])
    sim.add_argument("--delta", type=float, required=True)
    sim.add_argument("--lambda", dest="lam", type=float, default=None, help="four-desc: noise bias is delta - lambda")
    sim.add_argument("--n", type=int, default=16)
    sim.add_argument("--k", type=int, default=8)
    sim.add_argument("--trials", type=int, default=200, help="code search trials when --code is absent")
    sim.add_argument("--blocks", type=int, default=10_000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--code", help="code JSON (from `code search` or a bare generator document)")
    sim.add_argument("--threads", type=int, default=1)
    sim.add_argument("--out", help="report JSON (stdout when omitted)")
    sim.add_argument("--csv", help="optional per-decoder CSV")
    sim.set_defaults(func=cmd_simulate, command_name="simulate")

    code = groups.add_parser("code", help="linear code utilities").add_subparsers(dest="cmd", required=True)
    search = code.add_parser("search", help="random search for a good code")
    search.add_argument("--n", type=int, required=True)
    search.add_argument("--k", type=int, required=True)
    search.add_argument("--trials", type=int, default=500)
    search.add_argument("--criterion", choices=["source", "channel", "both"], default="source")
    search.add_argument("--crossover", type=float, default=0.1)
    search.add_argument("--seed", type=int, default=0)
    search.add_argument("--threads", type=int, default=1)
    search.add_argument("--out")
    search.set_defaults(func=cmd_code_search, command_name="code search")

    reg = groups.add_parser("region", help="rate-region systems").add_subparsers(dest="cmd", required=True)
    ex = reg.add_parser("example", help="emit a built-in setup (and its witness rates)")
    ex.add_argument("name", choices=sorted(_EXAMPLES))
    ex.add_argument("--delta", type=float)
    ex.add_argument("--out")
    ex.add_argument("--witness", help="write the witness assignment JSON here")
    ex.set_defaults(func=cmd_region_example, command_name="region example")

    build = reg.add_parser("build", help="build the inequality system(s) of a setup")
    build.add_argument("--setup", required=True)
    build.add_argument("--scheme", choices=["cms", "linear"], default="cms")
    build.add_argument("--pin", action="store_true", help="linear: fix every rate reduction at q - H")
    build.add_argument("--out")
    build.set_defaults(func=cmd_region_build, command_name="region build")

    proj = reg.add_parser("project", help="Fourier-Motzkin projection onto the kept variables")
    proj.add_argument("--system", required=True)
    proj.add_argument("--keep", required=True)
    proj.add_argument("--prune", choices=["syntactic", "lp"], default="syntactic")
    proj.add_argument("--out")
    proj.set_defaults(func=cmd_region_project, command_name="region project")

    mem = reg.add_parser("member", help="membership of a rate point")
    mem.add_argument("--region", required=True)
    mem.add_argument("--point", required=True, help="v1,v2,... or R1=v1,R2=v2,...")
    mem.set_defaults(func=cmd_region_member, command_name="region member")

    wit = reg.add_parser("witness", help="check a full variable assignment row by row")
    wit.add_argument("--system", required=True)
    wit.add_argument("--assign", required=True)
    wit.set_defaults(func=cmd_region_witness, command_name="region witness")

    sl = reg.add_parser("slice", help="membership along one rate coordinate")
    sl.add_argument("--region", required=True)
    sl.add_argument("--fix", default="")
    sl.add_argument("--sweep", required=True)
    sl.add_argument("--range", type=_parse_range, required=True)
    sl.add_argument("--out")
    sl.set_defaults(func=cmd_region_slice, command_name="region slice")

    chk = groups.add_parser("check", help="Markov-chain lemma checkers")
    chk.add_argument("lemma", choices=["lemma2", "lemma3"])
    src = chk.add_mutually_exclusive_group(required=True)
    src.add_argument("--dist", help="pmf JSON")
    src.add_argument("--random", type=int, help="number of random cases")
    chk.add_argument("--vars", help="A,B,C,D variable groups for --dist (join names with +)")
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--tol", type=float, default=None)
    chk.set_defaults(func=cmd_check, command_name="check")

    dist = groups.add_parser("dist", help="distortion tables").add_subparsers(dest="cmd", required=True)
    dxz = dist.add_parser("make-dxz", help="joint log-likelihood distortion for bit pairs")
    dxz.add_argument("--delta", type=float, required=True)
    dxz.add_argument("--c", type=float, default=1.0)
    dxz.add_argument("--out")
    dxz.set_defaults(func=cmd_dist_make_dxz, command_name="dist make-dxz")
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "tol", "unset") is None:
        args.tol = 1e-6 if args.lemma == "lemma2" and args.random else 1e-9
    if getattr(args, "threads", 1) < 1:
        _log("mdlab: error: --threads must be >= 1")
        return EXIT_USAGE
    started = time.perf_counter()
    try:
        return args.func(args, argv, started)
    except Blowup as exc:
        _log(f"mdlab: blowup: {exc}")
        return EXIT_INPUT
    except (MDLabError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        _log(f"mdlab: error: {type(exc).__name__}: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
