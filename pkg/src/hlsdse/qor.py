"""Quality-of-result reports, part budgets, ARU and evaluation backends."""

from __future__ import annotations

import itertools
import math
import os
import shlex
import subprocess
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

from .analyzer import KernelInfo, LoopInfo, SourceUnit
from .errors import (BackendUnavailable, InvalidReport, MalformedReport, NoResources,
                     UnknownPart)
from .pragmas import PragmaConfig, SiteKind, insert_pragmas

RESOURCES = ("bram_18k", "lut", "dsp", "ff")


@dataclass(frozen=True)
class QoRReport:
    best_case_latency: int = 0
    worst_case_latency: int = 0
    bram_18k: int = 0
    lut: int = 0
    dsp: int = 0
    ff: int = 0
    target_clock_period: float = 10.0
    estimated_clock_period: float = 10.0
    status: str = "OK"
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "OK"

    @classmethod
    def failed(cls, reason: str) -> "QoRReport":
        return cls(status="FAILED", reason=reason)

    def used(self) -> dict:
        return {k: getattr(self, k) for k in RESOURCES}


@dataclass(frozen=True)
class PartSpec:
    name: str
    bram_18k: int
    lut: int
    dsp: int
    ff: int
    clock_ns: float = 10.0

    def available(self) -> dict:
        return {k: getattr(self, k) for k in RESOURCES}


DEFAULT_PARTS = {
    "xcu280-fsvh2892-2L-e": PartSpec("xcu280-fsvh2892-2L-e", 4032, 1303680, 9024, 2607360, 10.0),
    "xczu9eg-ffvb1156-2-e": PartSpec("xczu9eg-ffvb1156-2-e", 1824, 274080, 2520, 548160, 10.0),
}


def load_part_catalog(path) -> dict:
    """Read ``part_name bram lut dsp ff clock_ns`` records (``#`` comments allowed)."""
    parts = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 6:
            raise ValueError(f"{path}:{n}: expected 6 fields, got {len(fields)}")
        name, bram, lut, dsp, ff, clock = fields
        parts[name] = PartSpec(name, int(bram), int(lut), int(dsp), int(ff), float(clock))
    return parts


def get_part(name: str, catalog: Optional[dict] = None) -> PartSpec:
    catalog = DEFAULT_PARTS if catalog is None else catalog
    try:
        return catalog[name]
    except KeyError:
        raise UnknownPart(f"unknown part {name!r}; known: {', '.join(sorted(catalog))}") from None


def compute_aru(report: QoRReport, part: PartSpec) -> float:
    """Mean used/available ratio over resource classes the part actually has."""
    used = report.used()
    if any(v < 0 for v in used.values()):
        raise InvalidReport(f"negative resource usage in {used}")
    avail = part.available()
    ratios = [used[k] / avail[k] for k in RESOURCES if avail[k] != 0]
    if not ratios:
        raise NoResources(f"part {part.name} has no available resources")
    return sum(ratios) / len(ratios)


# ---- report XML ---------------------------------------------------------------

_LAT = "PerformanceEstimates/SummaryOfOverallLatency"
_CLK = "PerformanceEstimates/SummaryOfTimingAnalysis"
_RES = "AreaEstimates/Resources"
_PATHS = {
    "best_case_latency": f"{_LAT}/Best-caseLatency",
    "worst_case_latency": f"{_LAT}/Worst-caseLatency",
    "estimated_clock_period": f"{_CLK}/EstimatedClockPeriod",
    "target_clock_period": f"{_CLK}/TargetClockPeriod",
    "bram_18k": f"{_RES}/BRAM_18K",
    "lut": f"{_RES}/LUT",
    "dsp": f"{_RES}/DSP",
    "ff": f"{_RES}/FF",
}


def _byte_offset(data: bytes, line: int, col: int) -> int:
    lines = data.split(b"\n")
    off = sum(len(l) + 1 for l in lines[:max(line - 1, 0)])
    return min(off + col, len(data))


def _number(text: Optional[str], integer: bool):
    if text is None:
        return None
    text = text.strip()
    try:
        return int(text) if integer else float(text)
    except ValueError:
        try:
            v = float(text)
        except ValueError:
            return None
        return int(v) if integer and v.is_integer() else (v if not integer else None)


def parse_report(report_text) -> QoRReport:
    data = report_text.encode("utf-8") if isinstance(report_text, str) else bytes(report_text)
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise MalformedReport(f"malformed report: {exc}", _byte_offset(data, line, col)) from None
    if root.tag != "profile":
        found = root.find(".//profile")
        if found is None:
            raise MalformedReport(f"unexpected root element <{root.tag}>", 0)
        root = found
    values = {}
    for name, path in _PATHS.items():
        node = root.find(path)
        values[name] = _number(node.text if node is not None else None,
                               "clock" not in name)
    if values["worst_case_latency"] is None or values["best_case_latency"] is None:
        return QoRReport.failed("no latency")
    missing = [k for k, v in values.items() if v is None]
    if missing:
        return QoRReport.failed("missing " + ", ".join(missing))
    return QoRReport(**values)


def render_report(report: QoRReport) -> str:
    """Write ``report`` at the element paths :func:`parse_report` reads."""
    root = ET.Element("profile")
    for name, path in _PATHS.items():
        node = root
        for part in path.split("/"):
            child = node.find(part)
            node = child if child is not None else ET.SubElement(node, part)
        value = getattr(report, name)
        node.text = repr(float(value)) if "clock" in name else str(int(value))
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


# ---- evaluators --------------------------------------------------------------------

class Evaluator(Protocol):
    def evaluate(self, unit: SourceUnit, info: KernelInfo, config: PragmaConfig,
                 part: PartSpec) -> QoRReport: ...


def _effective_partition(info: KernelInfo, config: PragmaConfig) -> dict:
    """Array key -> product of per-dimension partition factors."""
    factors = {a.key: 1 for a in info.arrays}
    for site, v in zip(config.sites, config.settings):
        if site.kind is not SiteKind.ARRAY_PARTITION or v.is_off:
            continue
        arr = info.array(site.target)
        f = arr.dims[site.dim - 1] if v.ptype == "complete" else v.factor
        factors[arr.key] *= max(1, f)
    return factors


def analytic_evaluate(info: KernelInfo, config: PragmaConfig, part: PartSpec) -> QoRReport:
    """Closed-form latency/resource model; deterministic and cheap."""
    settings = {s.key: v for s, v in zip(config.sites, config.settings)}
    parts = _effective_partition(info, config)
    lut_units = 0
    dsp = 0

    def unroll_of(loop: LoopInfo) -> int:
        v = settings.get(f"loop:{loop.key}:unroll")
        return v.factor if v is not None and v.kind == "unroll" else 1

    def latency(loop: LoopInfo) -> int:
        nonlocal lut_units, dsp
        u = unroll_of(loop)
        tc = loop.trip_count if loop.trip_count is not None else 1
        iters = -(-tc // u)
        s = loop.body_stmt_count
        lut_units += s * u
        dsp += loop.multiply_stmts * u
        child = sum(latency(c) for c in loop.children)
        pipe = settings.get(f"loop:{loop.key}:pipeline")
        if pipe is not None and pipe.kind == "on":
            ii = 1
            for key, count in loop.array_accesses:
                ii = max(ii, -(-(count * u) // (2 * parts.get(key, 1))))
            return s + (iters - 1) * ii
        return iters * (s + child)

    total = 0
    for fn in info.reachable_functions():
        for loop in fn.loops:
            total += latency(loop)
    lut = max(10, 10 * lut_units)
    ff = (lut * 4) // 5
    bram = 0
    for arr in info.arrays:
        bram += parts[arr.key] * max(1, math.ceil(arr.size * arr.element_bits / 18432))
    return QoRReport(total, total, bram, lut, dsp, ff,
                     part.clock_ns, round(0.35 * part.clock_ns, 6))


class AnalyticEvaluator:
    name = "analytic"

    def evaluate(self, unit, info, config, part):
        return analytic_evaluate(info, config, part)


DEFAULT_TIMEOUT = 600.0

_SCRIPT = """open_project -reset proj
set_top {top}
{files}
open_solution -reset solution1
set_part {{{part}}}
create_clock -period {clock} -name default
csynth_design
exit
"""


def synthesis_script(unit: SourceUnit, top: str, part: PartSpec) -> str:
    files = "\n".join(f"add_files src/{f.file_name}" for f in unit.files)
    return _SCRIPT.format(top=top, files=files, part=part.name, clock=part.clock_ns)


def find_report(workdir) -> Optional[Path]:
    hits = sorted(Path(workdir).rglob("csynth.xml"))
    return hits[0] if hits else None


def external_evaluate(workdir, unit: SourceUnit, info: KernelInfo, config: PragmaConfig,
                      adapter: str, part: PartSpec,
                      timeout: float = DEFAULT_TIMEOUT) -> QoRReport:
    """Run an external synthesis adapter on the annotated unit in ``workdir``.

    ``adapter`` is a command template; ``{workdir}``, ``{script}``, ``{top}``
    and ``{part}`` are substituted before it is split into argv.
    """
    workdir = Path(workdir)
    (workdir / "src").mkdir(parents=True, exist_ok=True)
    annotated = insert_pragmas(unit, info, config)
    annotated.write(workdir / "src")
    script = workdir / "script.tcl"
    script.write_text(synthesis_script(annotated, info.top_function, part), encoding="utf-8")
    argv = [a.format(workdir=str(workdir), script=str(script), top=info.top_function,
                     part=part.name) for a in shlex.split(adapter)]
    try:
        proc = subprocess.run(argv, cwd=workdir, capture_output=True, timeout=timeout)
    except FileNotFoundError as exc:
        raise BackendUnavailable(f"adapter not found: {exc.filename or argv[0]}") from None
    except subprocess.TimeoutExpired:
        return QoRReport.failed("timeout")
    (workdir / "adapter.log").write_bytes(proc.stdout + proc.stderr)
    report = find_report(workdir)
    if report is None:
        if proc.returncode != 0:
            raise BackendUnavailable(f"adapter exited {proc.returncode} without a report")
        return QoRReport.failed("no report")
    return parse_report(report.read_bytes())


class ExternalEvaluator:
    """Evaluator that gives each design its own numbered workdir under ``root``."""

    name = "external"

    def __init__(self, adapter: str, root, timeout: float = DEFAULT_TIMEOUT):
        self.adapter = adapter
        self.root = Path(root)
        self.timeout = timeout
        self._ids = itertools.count(1)

    def evaluate(self, unit, info, config, part):
        # a counter plus pid keeps concurrent callers in disjoint directories
        workdir = self.root / f"eval_{os.getpid()}_{next(self._ids)}"
        return external_evaluate(workdir, unit, info, config, self.adapter, part, self.timeout)
