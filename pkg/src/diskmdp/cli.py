"""Command-line front end.

    diskmdp explore MODEL [--workdir DIR] [--property P] [--partition EXPR] [--compress]
    diskmdp check   MODEL [...] [--epsilon E] [--max-outer N]
    diskmdp info    DIR
    diskmdp selftest

Exit status: 0 success, 1 failed internal check or model error, 2 usage error.
"""
from __future__ import annotations

import argparse
import math
import shutil
import sys
import tempfile
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analyze import (AnalysisReport, ConvergenceConfig, analyze_workdir, build_explicit,
                      expected_reward_reference, value_iteration_reference)
from .analyze.config import DEFAULT_EPSILON
from .corpus import CASES, MODELS
from .errors import DiskMdpError
from .explore import ExplorationConfig, ExplorationReport, explore
from .lang import format_property, load_model, select_property
from .store.files import IO_STATS, PartitionFileSet, detect_compression, read_meta
from .store.records import Branch, StateEnd, TransitionEnd, decode_stream


class UsageError(Exception):
    pass


def _epsilon(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError("epsilon must be finite and positive")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _constant(text: str) -> tuple[str, object]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    if value in ("true", "false"):
        return name, value == "true"
    for conv in (int, float):
        try:
            return name, conv(value)
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"bad constant value {value!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diskmdp", description="Out-of-core MDP model checker.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "kv"), default="text")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("model", type=Path)
    run.add_argument("--workdir", type=Path)
    run.add_argument("--property", help="property name or inline, e.g. 'Pmax=? [F done]'")
    run.add_argument("--partition", help="partitioning expression, e.g. 'i+1 bound 10'")
    run.add_argument("--compress", action="store_true")
    run.add_argument("--force", action="store_true", help="clear a non-empty workdir")
    run.add_argument("--const", action="append", type=_constant, default=[],
                     metavar="NAME=VALUE")

    sub.add_parser("explore", parents=[common, run], help="explore the state space only")
    p = sub.add_parser("check", parents=[common, run], help="explore and compute the property")
    p.add_argument("--epsilon", type=_epsilon, default=DEFAULT_EPSILON)
    p.add_argument("--max-outer", type=_positive)
    p = sub.add_parser("info", parents=[common], help="statistics of an explored workdir")
    p.add_argument("workdir", type=Path, nargs="?")
    p.add_argument("--workdir", dest="workdir_opt", type=Path)
    p = sub.add_parser("selftest", parents=[common], help="check the bundled model corpus")
    p.add_argument("--epsilon", type=_epsilon, default=1e-8)
    return ap


# -- output -----------------------------------------------------------------------

def _fmt_value(v: float) -> str:
    return "infinite" if math.isinf(v) else repr(v)


def _emit(fmt: str, rows: list[tuple[str, str, object]], out) -> None:
    """rows are (key, label, value); kv uses the key, text the label."""
    for key, label, value in rows:
        if isinstance(value, float) and key != "value":
            value = f"{value:.6g}"
        if fmt == "kv":
            print(f"{key}={value}", file=out)
        else:
            print(f"{label:<24} {value}", file=out)


def _exploration_rows(rep: ExplorationReport, compress: bool) -> list:
    disk = rep.bytes_on_disk.get("matrix", 0)
    return [
        ("states_total", "states", rep.states_total),
        ("p", "partitions", rep.partition_count),
        ("n_max", "largest partition", rep.n_max),
        ("s_max", "max successor partitions", rep.s_max),
        ("c_max", "max incoming cross edges", rep.c_max),
        ("cross_edges", "cross edges", rep.cross_edge_count),
        ("forward_acyclic", "forward acyclic", str(rep.forward_acyclic).lower()),
        ("outer_explore", "exploration iterations", rep.outer_iterations),
        ("peak_resident_states", "peak resident states", rep.peak_resident_states),
        ("explore_seconds", "exploration seconds", rep.seconds),
        ("compressed", "compressed", str(compress).lower()),
        ("matrix_bytes_raw", "matrix bytes (raw)", rep.matrix_bytes_raw),
        ("matrix_bytes_disk", "matrix bytes (disk)", disk),
    ]


def _analysis_rows(rep: AnalysisReport) -> list:
    return [
        ("outer_check", "analysis iterations", rep.outer_iterations),
        ("inner_sweeps", "inner sweeps", rep.inner_sweeps),
        ("monotonicity_violations", "value decreases", rep.stats.decreases),
        ("range_violations", "out-of-range values", rep.stats.out_of_range),
        ("check_seconds", "analysis seconds", rep.check_seconds),
        ("value", "value", _fmt_value(rep.value)),
    ]


# -- commands -------------------------------------------------------------------------

def _prepare_workdir(path: Path, force: bool) -> None:
    if path.exists():
        if not path.is_dir():
            raise UsageError(f"{path} is not a directory")
        if any(path.iterdir()):
            if not force:
                raise UsageError(f"workdir {path} is not empty (use --force to clear it)")
            shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)


def _load(args):
    try:
        text = args.model.read_text("utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read model: {exc}") from None
    model = load_model(text, dict(args.const), args.partition)
    try:
        prop = select_property(model, args.property)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    return model, prop


def cmd_explore(args, out) -> int:
    model, prop = _load(args)
    workdir = args.workdir or args.model.with_suffix(".work")
    _prepare_workdir(workdir, args.force)
    rep = explore(model, None, prop, ExplorationConfig(workdir, args.compress))
    rows = [("workdir", "workdir", str(workdir)),
            ("property", "property", format_property(prop))] + _exploration_rows(rep, args.compress)
    _emit(args.format, rows, out)
    return 0


def cmd_check(args, out) -> int:
    model, prop = _load(args)
    cfg = ConvergenceConfig(args.epsilon, args.max_outer)
    temp = None
    if args.workdir is None:
        temp = tempfile.mkdtemp(prefix="diskmdp-")
        workdir = Path(temp)
    else:
        workdir = args.workdir
        _prepare_workdir(workdir, args.force)
    IO_STATS.reset()
    try:
        exp = explore(model, None, prop, ExplorationConfig(workdir, args.compress))
        rep = analyze_workdir(workdir, prop, cfg)
    finally:
        if temp is not None:
            shutil.rmtree(temp, ignore_errors=True)
    rows = [("property", "property", format_property(prop))]
    rows += _exploration_rows(exp, args.compress) + _analysis_rows(rep)
    rows.append(("backward_seeks", "backward seeks", IO_STATS.backward_seeks))
    _emit(args.format, rows, out)
    bad = rep.stats.decreases or rep.stats.out_of_range or IO_STATS.backward_seeks
    return 1 if bad else 0


def inspect_workdir(workdir: Path) -> dict:
    """Decode every matrix file of a workdir; nothing is written."""
    meta = read_meta(workdir)
    compress = detect_compression(workdir)
    parts = []
    for i, m in enumerate(meta, 1):
        fs = PartitionFileSet(workdir, i, compress)
        info = {"partition": i, "states": m.state_count, "successors": list(m.successors),
                "branches": 0, "transitions": 0, "targets": 0, "decoded_states": 0,
                "negative_indices": 0, "bad_indices": 0, "raw_bytes": 0, "disk_bytes": 0}
        if fs.exists("matrix"):
            info["disk_bytes"] = fs.path("matrix").stat().st_size

            def counted(chunks):
                for c in chunks:
                    info["raw_bytes"] += len(c)
                    yield c

            for r in decode_stream(counted(fs.chunks("matrix")), i):
                if isinstance(r, Branch):
                    info["branches"] += 1
                    if r.index < 0:
                        info["negative_indices"] += 1
                    elif not (1 <= r.partition <= len(meta)
                              and r.index < meta[r.partition - 1].state_count):
                        info["bad_indices"] += 1
                elif isinstance(r, TransitionEnd):
                    info["transitions"] += 1
                elif isinstance(r, StateEnd):
                    info["decoded_states"] += 1
                    info["targets"] += r.is_target
        parts.append(info)
    return {"compressed": compress, "partitions": parts}


def cmd_info(args, out) -> int:
    workdir = args.workdir or args.workdir_opt
    if workdir is None:
        raise UsageError("info needs a workdir")
    if not (workdir / "meta").exists():
        raise UsageError(f"{workdir} holds no explored model")
    res = inspect_workdir(workdir)
    parts = res["partitions"]
    tot = {k: sum(p[k] for p in parts) for k in
           ("states", "branches", "transitions", "targets", "negative_indices", "bad_indices",
            "raw_bytes", "disk_bytes")}
    mismatched = sum(p["states"] != p["decoded_states"] for p in parts)
    if args.format == "text":
        print(f"{'part':>6} {'states':>10} {'transitions':>12} {'branches':>10} {'succ':>5} "
              f"{'raw bytes':>12} {'disk bytes':>12}", file=out)
        for p in parts:
            print(f"{p['partition']:>6} {p['states']:>10} {p['transitions']:>12} "
                  f"{p['branches']:>10} {len(p['successors']):>5} {p['raw_bytes']:>12} "
                  f"{p['disk_bytes']:>12}", file=out)
    counts = [p["states"] for p in parts]
    rows = [
        ("states_total", "states", tot["states"]),
        ("p", "partitions", len(parts)),
        ("n_max", "largest partition", max(counts, default=0)),
        ("s_max", "max successor partitions", max((len(p["successors"]) for p in parts), default=0)),
        ("transitions", "transitions", tot["transitions"]),
        ("branches", "branches", tot["branches"]),
        ("targets", "target states", tot["targets"]),
        ("negative_indices", "negative indices", tot["negative_indices"]),
        ("bad_indices", "out-of-range indices", tot["bad_indices"]),
        ("compressed", "compressed", str(res["compressed"]).lower()),
        ("matrix_bytes_raw", "matrix bytes (raw)", tot["raw_bytes"]),
        ("matrix_bytes_disk", "matrix bytes (disk)", tot["disk_bytes"]),
    ]
    _emit(args.format, rows, out)
    return 1 if tot["negative_indices"] or tot["bad_indices"] or mismatched else 0


def run_selftest(epsilon: float = 1e-8, out=None) -> list[tuple[str, bool, str]]:
    results = []
    for case in CASES:
        entry = MODELS[case.model]
        model = load_model(entry.text(), entry.small or None)
        prop = select_property(model, case.prop)
        cfg = ConvergenceConfig(epsilon)
        with tempfile.TemporaryDirectory(prefix="diskmdp-selftest-") as tmp:
            start = time.perf_counter()
            explore(model, None, prop, ExplorationConfig(Path(tmp) / "w"))
            rep = analyze_workdir(Path(tmp) / "w", prop, cfg)
        mdp = build_explicit(model, prop, with_partitions=False)
        ref = (expected_reward_reference(mdp, prop.direction, cfg) if prop.is_reward
               else value_iteration_reference(mdp, prop.direction, cfg))
        if math.isinf(case.expected):
            ok = math.isinf(rep.value) and math.isinf(ref.value)
        else:
            ok = (abs(rep.value - case.expected) <= case.tolerance
                  and abs(ref.value - case.expected) <= case.tolerance)
        ok = ok and rep.stats.decreases == 0 and ref.decreases == 0
        detail = (f"{_fmt_value(rep.value)} (reference {_fmt_value(ref.value)}, expected "
                  f"{_fmt_value(case.expected)}, {time.perf_counter() - start:.2f}s)")
        results.append((f"{case.model}/{case.prop}", ok, detail))
        if out is not None:
            print(f"{'PASS' if ok else 'FAIL'} {case.model}/{case.prop}: {detail}", file=out)
    return results


def cmd_selftest(args, out) -> int:
    results = run_selftest(args.epsilon, out if args.format == "text" else None)
    if args.format == "kv":
        for name, ok, _ in results:
            print(f"{name}={'pass' if ok else 'fail'}", file=out)
    return 0 if all(ok for _, ok, _ in results) else 1


COMMANDS = {"explore": cmd_explore, "check": cmd_check, "info": cmd_info,
            "selftest": cmd_selftest}


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"diskmdp: error: {exc}", file=err)
        return 2
    except DiskMdpError as exc:
        print(f"diskmdp: {type(exc).__name__}: {exc}", file=err)
        return 1
    except OSError as exc:
        print(f"diskmdp: {exc}", file=err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
