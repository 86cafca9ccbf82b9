"""Kernel discovery, per-kernel pipelines and a resumable parallel scheduler."""

from __future__ import annotations

import json
import logging
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .analyzer import SourceUnit, analyze
from .analyzer.source import C_LIKE_SUFFIXES
from .bayes import BayesianExplorer, ExplorerBudget, cost
from .dataset import RecordMeta, atomic_write_text, to_record, write_records
from .design_space import EnumerationBudget, build_design_tree, enumerate_designs
from .errors import ForgeError, MissingTop, NoKernels
from .metrics import DesignPoint, KernelADRS, adrs, format_metrics_report, pareto_front, \
    tertile_labels
from .pragmas import FUNCTION_KINDS, PragmaConfig, insert_pragmas
from .qor import AnalyticEvaluator, ExternalEvaluator, PartSpec, compute_aru, get_part, \
    render_report

log = logging.getLogger(__name__)

FULL = "FULL"
BAYES = "BAYES"
ANALYTIC = "analytic"


@dataclass(frozen=True)
class Kernel:
    name: str
    path: Path
    unit: SourceUnit


def _has_sources(d: Path) -> bool:
    return any(p.is_file() and p.suffix.lower() in C_LIKE_SUFFIXES for p in d.iterdir())


def discover_kernels(search_dir) -> list:
    """One kernel per immediate subdirectory holding C-like sources, sorted by name.

    Subdirectories whose files define no function are skipped with a warning;
    other analysis problems are left for the job to report.
    """
    root = Path(search_dir)
    if not root.is_dir():
        raise NoKernels(f"search directory {root} does not exist")
    out = []
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        if not _has_sources(d):
            continue
        unit = SourceUnit.from_dir(d)
        try:
            analyze(unit)
        except MissingTop as exc:
            if "no function definition" in str(exc):
                warnings.warn(f"skipping {d.name}: {exc}", stacklevel=2)
                continue
        except ForgeError:
            pass
        out.append(Kernel(d.name, d, unit))
    if not out:
        raise NoKernels(f"no kernels found under {root}")
    return out


@dataclass(frozen=True)
class Job:
    kernel: Kernel
    mode: str = FULL
    budget: Union[EnumerationBudget, ExplorerBudget, None] = None
    backend: str = ANALYTIC            # "analytic" or an adapter command template
    part: Optional[str] = None          # required; there is no default device
    output_root: Path = Path("designs")
    source_name: str = "kernels"
    hold_function_sites: bool = False
    timeout: float = 600.0
    catalog: Optional[dict] = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if not self.part:
            raise ValueError("a job needs an explicit part")
        if self.mode not in (FULL, BAYES):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.budget is None:
            object.__setattr__(self, "budget",
                               EnumerationBudget() if self.mode == FULL else ExplorerBudget())
        want = EnumerationBudget if self.mode == FULL else ExplorerBudget
        if not isinstance(self.budget, want):
            raise ValueError(f"{self.mode} jobs need a {want.__name__}")

    @property
    def kernel_dir(self) -> Path:
        return Path(self.output_root) / self.source_name / self.kernel.name


@dataclass
class KernelOutput:
    kernel: str
    records: list
    failed_designs: int
    front_size: int
    directory: Path


def _evaluator(job: Job):
    if job.backend == ANALYTIC:
        return AnalyticEvaluator()
    return ExternalEvaluator(job.backend, job.kernel_dir / "_work", job.timeout)


def _log_line(restart: int, iteration: int, config: PragmaConfig, c, wall: float) -> str:
    return json.dumps({"restart": restart, "iteration": iteration, "config": config.canonical(),
                       "cost": c if c is not None else "FAILED", "wall_time": round(wall, 6)})


def _full(job, unit, info, part, evaluator, inner_workers, out_dir) -> tuple:
    hold = FUNCTION_KINDS if job.hold_function_sites else ()
    tree = build_design_tree(info, hold)
    result = enumerate_designs(tree, job.budget)
    if result.truncated:
        log.info("%s: enumeration truncated at %d designs", job.kernel.name, len(result))

    def run(cfg):
        t0 = time.perf_counter()
        rep = evaluator.evaluate(unit, info, cfg, part)
        return rep, time.perf_counter() - t0

    if inner_workers > 1 and job.backend != ANALYTIC:
        with ThreadPoolExecutor(inner_workers) as pool:
            outcomes = list(pool.map(run, result.configs))
    else:
        outcomes = [run(c) for c in result.configs]
    points, lines, failed = [], [], 0
    for k, (cfg, (rep, wall)) in enumerate(zip(result.configs, outcomes)):
        c = cost(rep, part) if rep.ok else None
        lines.append(_log_line(0, k, cfg, c, wall))
        if c is None:
            failed += 1
            continue
        points.append(DesignPoint(cfg, rep.worst_case_latency, compute_aru(rep, part), rep,
                                  design_id=str(k)))
    atomic_write_text(out_dir / "run_log.jsonl", "".join(l + "\n" for l in lines))
    return points, failed


def _bayes(job, unit, info, part, evaluator, out_dir) -> tuple:
    hold = FUNCTION_KINDS if job.hold_function_sites else ()
    tree = build_design_tree(info, hold)
    log_path = out_dir / "run_log.jsonl"
    if log_path.exists():
        log_path.unlink()
    baseline = PragmaConfig.all_off(tree.sites)
    rep = evaluator.evaluate(unit, info, baseline, part)
    points = []
    failed = 0
    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(_log_line(-1, 0, baseline, cost(rep, part) if rep.ok else None, 0.0) + "\n")
    if rep.ok:
        points.append(DesignPoint(baseline, rep.worst_case_latency, compute_aru(rep, part), rep,
                                  design_id="0"))
    else:
        failed += 1
    explorer = BayesianExplorer(unit, info, evaluator, part, job.budget, tree=tree,
                                log_path=log_path)
    explorer.prime(baseline, rep)
    res = explorer.run()
    failed += sum(1 for o in res.observations if o.failed and o.config != baseline)
    for p in res.points:
        if p.config.settings == baseline.settings:
            continue
        p.design_id = str(len(points))
        points.append(p)
    return points, failed


def run_pipeline(job: Job, inner_workers: int = 1) -> KernelOutput:
    """Analyze, explore, evaluate, label and write one kernel's dataset directory."""
    part = get_part(job.part, job.catalog)
    unit = job.kernel.unit
    info = analyze(unit)
    out_dir = job.kernel_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    evaluator = _evaluator(job)
    if job.mode == FULL:
        points, failed = _full(job, unit, info, part, evaluator, inner_workers, out_dir)
    else:
        points, failed = _bayes(job, unit, info, part, evaluator, out_dir)
    points.sort(key=lambda p: int(p.design_id))
    for p in points:
        p.source = insert_pragmas(unit, info, p.config)

    records = []
    front_size = 0
    if points:
        front = pareto_front(points, job.kernel.name)
        front_size = len(front)
        labels = tertile_labels(front)
        for p in points:
            meta = RecordMeta(design_id=p.design_id, algo_name=job.kernel.name,
                              source_name=job.source_name, top_function_name=info.top_function,
                              is_pareto=id(p) in labels, is_kernel=p.config.pragma_count == 0,
                              strategy=labels.get(id(p)))
            records.append(to_record(p, part, meta))
            d = out_dir / f"design_{p.design_id}"
            p.source.write(d)
            atomic_write_text(d / "csynth.xml", render_report(p.report))
        baseline = next((p for p in points if p.config.pragma_count == 0), None)
        if baseline is not None and baseline.latency > 0 and baseline.aru > 0:
            row = KernelADRS(job.kernel.name, len(front), 1, adrs(front, [baseline]))
            atomic_write_text(out_dir / "metrics.txt", format_metrics_report([row]))
    write_records(out_dir / "designs.json", records)
    return KernelOutput(job.kernel.name, records, failed, front_size, out_dir)


# ---- scheduling ------------------------------------------------------------------------

PENDING, DONE, FAILED_STATUS = "PENDING", "DONE", "FAILED"


@dataclass
class KernelStatus:
    status: str = PENDING
    reason: str = ""
    designs: int = 0
    failed_designs: int = 0
    wall_time: float = 0.0


@dataclass
class RunManifest:
    kernels: dict = field(default_factory=dict)    # name -> KernelStatus, in job order

    @property
    def failed(self) -> list:
        return [k for k, s in self.kernels.items() if s.status == FAILED_STATUS]

    def to_json(self) -> str:
        return json.dumps({"kernels": {k: vars(s) for k, s in self.kernels.items()}},
                          indent=2) + "\n"

    @classmethod
    def load(cls, path) -> "RunManifest":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls({k: KernelStatus(**v) for k, v in data.get("kernels", {}).items()})


def schedule(jobs: list, max_workers: int = 1, manifest_path=None) -> RunManifest:
    """Run jobs with at most ``max_workers`` in flight; resumable via the manifest.

    Kernels already DONE in an existing manifest (with their designs.json
    present) are skipped. A failing job is recorded and never stops others.
    """
    if max_workers < 1:
        raise ValueError("max_workers must be >= 1")
    previous = RunManifest()
    if manifest_path is not None and Path(manifest_path).exists():
        try:
            previous = RunManifest.load(manifest_path)
        except (ValueError, TypeError):
            log.warning("ignoring unreadable manifest %s", manifest_path)
    manifest = RunManifest()
    todo = []
    for job in jobs:
        old = previous.kernels.get(job.kernel.name)
        if old is not None and old.status == DONE and (job.kernel_dir / "designs.json").exists():
            manifest.kernels[job.kernel.name] = old
        else:
            manifest.kernels[job.kernel.name] = KernelStatus()
            todo.append(job)
    lock = threading.Lock()

    def flush():
        if manifest_path is not None:
            atomic_write_text(manifest_path, manifest.to_json())

    def run(job: Job, inner: int) -> KernelStatus:
        t0 = time.perf_counter()
        try:
            out = run_pipeline(job, inner)
            st = KernelStatus(DONE, "", len(out.records), out.failed_designs)
        except ForgeError as exc:
            st = KernelStatus(FAILED_STATUS, f"{exc.code}: {exc}")
        except Exception as exc:       # keep other kernels running
            log.exception("kernel %s crashed", job.kernel.name)
            st = KernelStatus(FAILED_STATUS, f"{type(exc).__name__}: {exc}")
        st.wall_time = round(time.perf_counter() - t0, 3)
        return st

    with lock:
        flush()
    if not todo:
        return manifest
    outer = min(max_workers, len(todo))
    inner = max(1, max_workers // outer)
    if outer == 1:
        for job in todo:
            st = run(job, inner)
            with lock:
                manifest.kernels[job.kernel.name] = st
                flush()
        return manifest
    with ThreadPoolExecutor(outer) as pool:
        futures = {pool.submit(run, job, inner): job for job in todo}
        for fut in as_completed(futures):
            job = futures[fut]
            with lock:
                manifest.kernels[job.kernel.name] = fut.result()
                flush()
    return manifest


def make_jobs(search_dir, data_path, mode: str, budget, backend: str = ANALYTIC,
              part: Optional[str] = None, hold_function_sites: bool = False,
              timeout: float = 600.0, source_name: Optional[str] = None,
              catalog: Optional[dict] = None) -> list:
    if not part:
        raise ValueError("make_jobs needs an explicit part")
    kernels = discover_kernels(search_dir)
    get_part(part, catalog)
    src = source_name or Path(search_dir).resolve().name
    return [Job(k, mode, budget, backend, part, Path(data_path), src, hold_function_sites,
                timeout, catalog) for k in kernels]
