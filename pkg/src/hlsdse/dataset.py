"""Design records in the published JSON layout, fine-tune pairs and corpus statistics."""

from __future__ import annotations

import json
import os
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .analyzer import SourceFile, SourceUnit
from .errors import EmptyInput, IncompleteMeta, RecordParseError, SchemaViolation, UnlabeledFront
from .metrics import DesignPoint, StrategyLabel
from .qor import PartSpec, QoRReport, compute_aru

# key order and spelling exactly as published, typos included
RECORD_KEYS = (
    "File Path", "Part",
    "Avialable_BRAM_18K", "Avialable_LUT", "Avialable_DSP", "Avialable_FF",
    "TargetClockPeriod", "EstimatedClockPeriod",
    "Best-caseLatency", "Worst-caseLatency",
    "BRAM_18K", "LUT", "DSP", "FF",
    "design_id", "algo_name", "source_name",
    "is_pareto", "is_kernel",
    "code_length", "pragma_number",
    "top_function_name", "latency-resource-strategy",
    "source_code",
)
NORMALIZED = {k: k.replace("Avialable_", "Available_") for k in RECORD_KEYS}
_DENORMALIZED = {v: k for k, v in NORMALIZED.items()}
NO_STRATEGY = "none"


@dataclass
class RecordMeta:
    design_id: Optional[str] = None
    algo_name: Optional[str] = None
    source_name: Optional[str] = None
    top_function_name: Optional[str] = None
    file_path: Optional[str] = None      # defaults to <source>/<algo>/design_<id>
    is_pareto: bool = False
    is_kernel: bool = False
    strategy: Optional[StrategyLabel] = None

    REQUIRED = ("design_id", "algo_name", "source_name", "top_function_name")


def to_record(point: DesignPoint, part: PartSpec, meta: RecordMeta) -> dict:
    """Build one record; ``point.source`` must be the annotated unit."""
    missing = [k for k in RecordMeta.REQUIRED if getattr(meta, k) in (None, "")]
    if point.source is None:
        missing.append("source")
    if point.report is None:
        missing.append("report")
    if missing:
        raise IncompleteMeta(f"missing record metadata: {', '.join(missing)}")
    rep: QoRReport = point.report
    if not rep.ok:
        raise IncompleteMeta(f"design {meta.design_id} has a failed report ({rep.reason})")
    unit: SourceUnit = point.source
    design_id = str(meta.design_id)
    path = meta.file_path or f"{meta.source_name}/{meta.algo_name}/design_{design_id}"
    strategy = meta.strategy.value if (meta.is_pareto and meta.strategy is not None) else NO_STRATEGY
    values = [
        path, part.name,
        part.bram_18k, part.lut, part.dsp, part.ff,
        float(rep.target_clock_period), float(rep.estimated_clock_period),
        int(rep.best_case_latency), int(rep.worst_case_latency),
        int(rep.bram_18k), int(rep.lut), int(rep.dsp), int(rep.ff),
        design_id, meta.algo_name, meta.source_name,
        bool(meta.is_pareto), bool(meta.is_kernel),
        unit.code_length(), unit.pragma_lines(),
        meta.top_function_name, strategy,
        [{"file_name": f.file_name, "file_content": f.file_content} for f in unit.files],
    ]
    return dict(zip(RECORD_KEYS, values))


def dumps_records(records: Iterable[dict]) -> str:
    ordered = [{k: r[k] for k in RECORD_KEYS} for r in records]
    return json.dumps(ordered, indent=4, ensure_ascii=False) + "\n"


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def write_records(path, records: Iterable[dict]) -> None:
    atomic_write_text(path, dumps_records(records))


def check_record(rec, index: int = 0) -> None:
    if not isinstance(rec, dict):
        raise SchemaViolation("", f"record {index} is not an object")
    for k in RECORD_KEYS:
        if k not in rec:
            raise SchemaViolation(k, f"record {index} is missing key {k!r}")
    for k in rec:
        if k not in RECORD_KEYS:
            raise SchemaViolation(k, f"record {index} has unexpected key {k!r}")
    files = rec["source_code"]
    if not isinstance(files, list) or not all(
            isinstance(f, dict) and set(f) == {"file_name", "file_content"} for f in files):
        raise SchemaViolation("source_code", f"record {index} has a malformed source_code array")


def point_from_record(rec: dict) -> DesignPoint:
    part = part_from_record(rec)
    rep = QoRReport(rec["Best-caseLatency"], rec["Worst-caseLatency"], rec["BRAM_18K"],
                    rec["LUT"], rec["DSP"], rec["FF"], rec["TargetClockPeriod"],
                    rec["EstimatedClockPeriod"])
    files = rec["source_code"]
    unit = SourceUnit(tuple(SourceFile(f["file_name"], f["file_content"]) for f in files)) \
        if files else None
    return DesignPoint(None, rep.worst_case_latency, compute_aru(rep, part), rep, unit,
                       str(rec["design_id"]))


def part_from_record(rec: dict) -> PartSpec:
    return PartSpec(rec["Part"], rec["Avialable_BRAM_18K"], rec["Avialable_LUT"],
                    rec["Avialable_DSP"], rec["Avialable_FF"], rec["TargetClockPeriod"])


def normalize_keys(rec: dict) -> dict:
    return {NORMALIZED.get(k, k): v for k, v in rec.items()}


def denormalize_keys(rec: dict) -> dict:
    return {_DENORMALIZED.get(k, k): v for k, v in rec.items()}


def loads_records(text, normalize: bool = False) -> list:
    data = text if isinstance(text, bytes) else text.encode("utf-8")
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise RecordParseError(f"invalid UTF-8: {exc.reason}", exc.start) from None
    except json.JSONDecodeError as exc:
        offset = len(exc.doc[:exc.pos].encode("utf-8"))
        raise RecordParseError(f"{exc.msg} (line {exc.lineno}, column {exc.colno})", offset) from None
    if not isinstance(doc, list):
        raise SchemaViolation("", "top level must be a JSON array of records")
    out = []
    for i, rec in enumerate(doc):
        check_record(rec, i)
        point = point_from_record(rec)
        out.append((normalize_keys(rec) if normalize else rec, point))
    return out


def load_records(path, normalize: bool = False) -> list:
    """Read a record array; returns ``(record, DesignPoint)`` pairs.

    ``normalize=True`` renames the misspelled availability keys in the
    returned dicts only; files are never rewritten.
    """
    return loads_records(Path(path).read_bytes(), normalize)


# ---- fine-tune pairs -------------------------------------------------------------

@dataclass(frozen=True)
class FinetunePair:
    instruction: str
    input: str
    output: str

    def to_json(self) -> str:
        return json.dumps({"instruction": self.instruction, "input": self.input,
                           "output": self.output}, ensure_ascii=False)


def concat_sources(unit: SourceUnit) -> str:
    return "".join(f.file_content if f.file_content.endswith("\n") else f.file_content + "\n"
                   for f in unit.files)


def emit_finetune_pairs(kernel: SourceUnit, front, labels: dict) -> list:
    """One pair per front member; ``labels`` maps ``id(point)`` to a StrategyLabel."""
    pts = list(front)
    if not pts:
        warnings.warn("empty front; no fine-tune pairs emitted", stacklevel=2)
        return []
    text = concat_sources(kernel)
    out = []
    for p in pts:
        label = labels.get(id(p))
        if label is None:
            raise UnlabeledFront(f"front member {p.design_id or p!r} has no strategy label")
        if p.source is None:
            raise UnlabeledFront(f"front member {p.design_id or p!r} has no annotated source")
        out.append(FinetunePair(StrategyLabel(label).instruction, text, concat_sources(p.source)))
    return out


def write_pairs(path, pairs: Iterable[FinetunePair]) -> None:
    atomic_write_text(path, "".join(p.to_json() + "\n" for p in pairs))


# ---- corpus statistics -------------------------------------------------------------

@dataclass
class CorpusStats:
    design_counts: dict            # "<source>/<algo>" -> number of designs
    pareto_counts: dict
    mean_pragmas: float
    mean_code_length: float
    kernels: int = field(init=False)
    designs: int = field(init=False)

    def __post_init__(self):
        self.kernels = len(self.design_counts)
        self.designs = sum(self.design_counts.values())

    def format(self) -> str:
        lines = [f"kernels {self.kernels}", f"designs {self.designs}",
                 f"mean_pragma_number {self.mean_pragmas:.4f}",
                 f"mean_code_length {self.mean_code_length:.4f}"]
        for k in sorted(self.design_counts):
            lines.append(f"{k} designs={self.design_counts[k]} pareto={self.pareto_counts.get(k, 0)}")
        return "\n".join(lines) + "\n"


def corpus_stats(records: Iterable[dict]) -> CorpusStats:
    recs = list(records)
    if not recs:
        raise EmptyInput("no records")
    counts: Counter = Counter()
    pareto: dict = defaultdict(int)
    for r in recs:
        key = f"{r['source_name']}/{r['algo_name']}"
        counts[key] += 1
        if r["is_pareto"]:
            pareto[key] += 1
    return CorpusStats(dict(counts), dict(pareto),
                       sum(r["pragma_number"] for r in recs) / len(recs),
                       sum(r["code_length"] for r in recs) / len(recs))
