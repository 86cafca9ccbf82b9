"""``forge`` command-line interface."""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
import warnings
from pathlib import Path
from typing import Optional

from .analyzer import analyze
from .bayes import ExplorerBudget
from .dataset import (corpus_stats, emit_finetune_pairs, load_records, write_pairs)
from .design_space import DEFAULT_MAX_DESIGNS, EnumerationBudget, build_design_tree
from .errors import ForgeError
from .metrics import KernelADRS, StrategyLabel, adrs, format_metrics_report, pareto_front
from .orchestrator import ANALYTIC, BAYES, FULL, discover_kernels, make_jobs, schedule
from .pragmas import FUNCTION_KINDS, enumerate_sites
from .qor import DEFAULT_PARTS, load_part_catalog

log = logging.getLogger("hlsdse")



def read_config(path) -> dict:
    """``key = value`` lines (``#`` comments); keys may use dashes or underscores."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string("[forge]\n" + Path(path).read_text(encoding="utf-8"))
    return {k.strip().lstrip("-").replace("-", "_"): v.strip()
            for k, v in parser.items("forge")}


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if not getattr(args, "config", None):
        return
    actions = {a.dest: a for a in parser._actions}
    for key, raw in read_config(args.config).items():
        if key not in actions:
            raise SystemExit(f"forge: unknown key {key!r} in {args.config}")
        action = actions[key]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            value = action.type(raw)
        else:
            value = raw
        setattr(args, key, value)


def _common(p: argparse.ArgumentParser, search=True, data=True) -> None:
    if search:
        p.add_argument("--search_dir", default="./kernels", help="directory of kernel subdirectories")
    if data:
        p.add_argument("--data_path", default="./designs", help="output dataset root")
    p.add_argument("--config", help="file of 'key = value' lines overriding flags")
    p.add_argument("-v", "--verbose", action="store_true")


def _exploration(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max_workers", type=int, default=1, help="kernels (and evaluations) in flight")
    p.add_argument("--part", help="target device; required, e.g. xcu280-fsvh2892-2L-e")
    p.add_argument("--part-catalog", dest="part_catalog",
                   help="file of 'part bram lut dsp ff clock_ns' records")
    p.add_argument("--backend", choices=("analytic", "external"), default="analytic")
    p.add_argument("--adapter", help="external synthesis command template "
                                     "({workdir}, {script}, {top}, {part})")
    p.add_argument("--timeout", type=float, default=600.0, help="per-design adapter timeout (s)")
    p.add_argument("--hold-function-sites", dest="hold_function_sites", action="store_true",
                   help="pin inline/function-pipeline sites to off")
    p.add_argument("--source-name", dest="source_name",
                   help="dataset source name (default: search_dir basename)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forge", description="HLS pragma design-space exploration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="print loops, arrays and design-space size per kernel")
    _common(p, data=False)
    p.add_argument("--hold-function-sites", dest="hold_function_sites", action="store_true")

    p = sub.add_parser("full-dse", help="enumerate and evaluate every legal configuration")
    _common(p)
    _exploration(p)
    p.add_argument("--max-designs", dest="max_designs", type=int, default=DEFAULT_MAX_DESIGNS,
                   help="cap per kernel; 0 means unbounded")
    p.add_argument("--prune-equivalent", dest="prune_equivalent", action="store_true")

    p = sub.add_parser("bayes-dse", help="Gaussian-process search per kernel")
    _common(p)
    _exploration(p)
    p.add_argument("--bayesian_opt_number", type=int, default=40,
                   help="optimization iterations per restart")
    p.add_argument("--n-init", dest="n_init", type=int, default=20)
    p.add_argument("--restarts", dest="n_opt", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("pareto", help="print the Pareto front of each designs.json")
    _common(p, search=False)

    p = sub.add_parser("adrs", help="ADRS of predicted fronts against reference fronts")
    _common(p, search=False)
    p.add_argument("--reference", required=True, help="reference dataset root")
    p.add_argument("--classic", action="store_true", help="textbook (omega-gamma)/gamma orientation")
    p.add_argument("--output", help="write the metrics report here instead of stdout")

    p = sub.add_parser("emit-pairs", help="write instruction-tuning pairs from labeled fronts")
    _common(p, search=False)
    p.add_argument("--output", default="pairs.jsonl")

    p = sub.add_parser("stats", help="corpus statistics over every designs.json")
    _common(p, search=False)
    return parser


def _catalog(args) -> Optional[dict]:
    if getattr(args, "part_catalog", None):
        return {**DEFAULT_PARTS, **load_part_catalog(args.part_catalog)}
    return None


def _backend(args) -> str:
    if args.backend == "analytic":
        return ANALYTIC
    if not args.adapter:
        raise SystemExit("forge: --backend external needs --adapter")
    return args.adapter


def _run(args, mode: str) -> int:
    if not args.part:
        raise SystemExit("forge: --part is required (flag or config file)")
    if mode == FULL:
        budget = EnumerationBudget(args.max_designs or None, args.prune_equivalent)
    else:
        budget = ExplorerBudget(args.n_opt, args.n_init, args.bayesian_opt_number, args.seed)
    jobs = make_jobs(args.search_dir, args.data_path, mode, budget, _backend(args), args.part,
                     args.hold_function_sites, args.timeout, args.source_name, _catalog(args))
    manifest_path = Path(args.data_path) / jobs[0].source_name / "manifest.json"
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest = schedule(jobs, args.max_workers, manifest_path)
    for name, st in manifest.kernels.items():
        extra = f" ({st.reason})" if st.reason else ""
        print(f"{name}\t{st.status}\tdesigns={st.designs}\tfailed={st.failed_designs}{extra}")
    return 0 if not manifest.failed else 1


def _designs_files(root) -> list:
    root = Path(root)
    if root.is_file():
        return [root]
    return sorted(root.rglob("designs.json"))


def _cmd_analyze(args) -> int:
    hold = FUNCTION_KINDS if args.hold_function_sites else ()
    status = 0
    for k in discover_kernels(args.search_dir):
        try:
            info = analyze(k.unit)
        except ForgeError as exc:
            print(f"{k.name}\tFAILED\t{exc.diagnostic()}")
            status = 1
            continue
        tree = build_design_tree(info, hold)
        print(f"{k.name}\ttop={info.top_function}\tsites={len(enumerate_sites(info))}"
              f"\tdesigns={tree.leaf_count}")
        for fn in info.functions:
            for loop in fn.iter_loops():
                tc = "?" if loop.trip_count is None else loop.trip_count
                print(f"  loop {loop.key}\ttrip_count={tc}\tdepth={loop.depth}")
        for arr in info.arrays:
            print(f"  array {arr.key}\tdims={'x'.join(map(str, arr.dims))}\tbits={arr.element_bits}")
    return status


def _cmd_pareto(args) -> int:
    for path in _designs_files(args.data_path):
        pairs = load_records(path)
        if not pairs:
            continue
        front = pareto_front([p for _, p in pairs])
        print(f"{path}\t{len(front)}/{len(pairs)}")
        for p in front:
            print(f"  design_{p.design_id}\tlatency={p.latency}\taru={p.aru:.6g}")
    return 0


def _fronts(root) -> dict:
    out = {}
    for path in _designs_files(root):
        pairs = load_records(path)
        if pairs:
            out[pairs[0][0]["algo_name"]] = pareto_front([p for _, p in pairs])
    return out


def _cmd_adrs(args) -> int:
    ref, pred = _fronts(args.reference), _fronts(args.data_path)
    rows = []
    for kernel in sorted(ref):
        if kernel not in pred:
            print(f"forge: no predicted designs for {kernel}", file=sys.stderr)
            continue
        rows.append(KernelADRS(kernel, len(ref[kernel]), len(pred[kernel]),
                               adrs(ref[kernel], pred[kernel], classic=args.classic)))
    text = format_metrics_report(rows)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0 if rows else 1


def _cmd_emit_pairs(args) -> int:
    pairs = []
    for path in _designs_files(args.data_path):
        loaded = load_records(path)
        base = next((p for r, p in loaded if r["is_kernel"]), None)
        if base is None:
            print(f"forge: {path} has no baseline design; skipped", file=sys.stderr)
            continue
        front = [p for r, p in loaded if r["is_pareto"]]
        labels = {id(p): StrategyLabel(r["latency-resource-strategy"])
                  for r, p in loaded if r["is_pareto"]
                  and r["latency-resource-strategy"] != "none"}
        pairs += emit_finetune_pairs(base.source, front, labels)
    write_pairs(args.output, pairs)
    print(f"{len(pairs)} pairs written to {args.output}")
    return 0


def _cmd_stats(args) -> int:
    records = [r for path in _designs_files(args.data_path) for r, _ in load_records(path)]
    sys.stdout.write(corpus_stats(records).format())
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    _apply_config(args, sub)
    warnings.formatwarning = lambda msg, *a, **k: f"forge: warning: {msg}\n"
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "full-dse":
            return _run(args, FULL)
        if args.command == "bayes-dse":
            return _run(args, BAYES)
        if args.command == "pareto":
            return _cmd_pareto(args)
        if args.command == "adrs":
            return _cmd_adrs(args)
        if args.command == "emit-pairs":
            return _cmd_emit_pairs(args)
        return _cmd_stats(args)
    except ForgeError as exc:
        print(f"forge: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
