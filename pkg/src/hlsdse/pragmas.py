"""Pragma vocabulary, legal sites, configuration validity and source rewriting."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .analyzer import KernelInfo, Location, SourceUnit
from .errors import InsertionConflict, InvalidConfig


class SiteKind(str, enum.Enum):
    LOOP_UNROLL = "unroll"
    LOOP_PIPELINE = "pipeline"
    ARRAY_PARTITION = "partition"
    FUNCTION_INLINE = "inline"
    FUNCTION_PIPELINE = "fpipeline"

    @property
    def is_loop(self) -> bool:
        return self in (SiteKind.LOOP_UNROLL, SiteKind.LOOP_PIPELINE)

    @property
    def is_function(self) -> bool:
        return self in (SiteKind.FUNCTION_INLINE, SiteKind.FUNCTION_PIPELINE)


FUNCTION_KINDS = frozenset({SiteKind.FUNCTION_INLINE, SiteKind.FUNCTION_PIPELINE})


@dataclass(frozen=True)
class PragmaSite:
    kind: SiteKind
    target: str                  # loop key, array key or function name
    dim: int = 0                 # 1-based dimension for ARRAY_PARTITION
    insertion_location: Optional[Location] = field(default=None, compare=False)

    @property
    def key(self) -> str:
        if self.kind is SiteKind.FUNCTION_INLINE:
            return f"func:{self.target}:inline"
        if self.kind is SiteKind.FUNCTION_PIPELINE:
            return f"func:{self.target}:pipeline"
        if self.kind is SiteKind.LOOP_PIPELINE:
            return f"loop:{self.target}:pipeline"
        if self.kind is SiteKind.LOOP_UNROLL:
            return f"loop:{self.target}:unroll"
        return f"array:{self.target}:dim{self.dim}"

    def __str__(self) -> str:
        return self.key


@dataclass(frozen=True, order=False)
class Setting:
    """One decision: off, on, unroll by ``factor``, or partition."""

    kind: str                    # off | on | unroll | partition
    factor: Optional[int] = None
    ptype: Optional[str] = None  # cyclic | block | complete

    @property
    def rank(self) -> tuple:
        # per-site option order used everywhere: off, ascending factors
        # (cyclic before block), complete last
        if self.kind == "off":
            return (0,)
        if self.kind == "on":
            return (1,)
        if self.kind == "unroll":
            return (1, self.factor)
        if self.ptype == "complete":
            return (2,)
        return (1, self.factor, 0 if self.ptype == "cyclic" else 1)

    @property
    def is_off(self) -> bool:
        return self.kind == "off"

    def __str__(self) -> str:
        if self.kind in ("off", "on"):
            return self.kind
        if self.kind == "unroll":
            return f"x{self.factor}"
        if self.ptype == "complete":
            return "complete"
        return f"{self.ptype}{self.factor}"

    @classmethod
    def parse(cls, text: str) -> "Setting":
        if text == "off":
            return OFF
        if text == "on":
            return ON
        if text == "complete":
            return COMPLETE
        if text.startswith("x"):
            return unroll(int(text[1:]))
        for t in ("cyclic", "block"):
            if text.startswith(t):
                return partition(t, int(text[len(t):]))
        raise ValueError(f"bad setting {text!r}")


OFF = Setting("off")
ON = Setting("on")
COMPLETE = Setting("partition", None, "complete")


def unroll(factor: int) -> Setting:
    return Setting("unroll", factor)


def partition(ptype: str, factor: Optional[int] = None) -> Setting:
    if ptype == "complete":
        return COMPLETE
    if ptype not in ("cyclic", "block"):
        raise ValueError(f"unknown partition type {ptype!r}")
    return Setting("partition", factor, ptype)


@dataclass(frozen=True)
class PragmaConfig:
    """A total assignment of settings to a kernel's sites (aligned tuples)."""

    sites: tuple
    settings: tuple

    def __post_init__(self):
        if len(self.sites) != len(self.settings):
            raise ValueError("sites and settings differ in length")

    @classmethod
    def all_off(cls, sites: Iterable[PragmaSite]) -> "PragmaConfig":
        sites = tuple(sites)
        return cls(sites, (OFF,) * len(sites))

    @classmethod
    def from_mapping(cls, sites: Iterable[PragmaSite], chosen: dict) -> "PragmaConfig":
        """Build from ``{site key or site: setting}``; unmentioned sites are OFF."""
        sites = tuple(sites)
        by_key = {(k.key if isinstance(k, PragmaSite) else k): v for k, v in chosen.items()}
        unknown = set(by_key) - {s.key for s in sites}
        if unknown:
            raise KeyError(f"unknown sites: {sorted(unknown)}")
        return cls(sites, tuple(by_key.get(s.key, OFF) for s in sites))

    @classmethod
    def from_canonical(cls, text: str, sites: Iterable[PragmaSite]) -> "PragmaConfig":
        chosen = {}
        for part in filter(None, text.split(";")):
            key, _, value = part.rpartition("=")
            chosen[key] = Setting.parse(value)
        return cls.from_mapping(sites, chosen)

    @property
    def decisions(self) -> dict:
        return dict(zip(self.sites, self.settings))

    def get(self, key: str) -> Setting:
        for s, v in zip(self.sites, self.settings):
            if s.key == key:
                return v
        raise KeyError(key)

    @property
    def pragma_count(self) -> int:
        return sum(1 for v in self.settings if not v.is_off)

    @property
    def order_key(self) -> tuple:
        return tuple(v.rank for v in self.settings)

    def canonical(self) -> str:
        return ";".join(f"{s.key}={v}" for s, v in zip(self.sites, self.settings))

    def with_setting(self, key: str, setting: Setting) -> "PragmaConfig":
        settings = list(self.settings)
        for i, s in enumerate(self.sites):
            if s.key == key:
                settings[i] = setting
                return PragmaConfig(self.sites, tuple(settings))
        raise KeyError(key)

    def __str__(self) -> str:
        return self.canonical()


# ---- sites ------------------------------------------------------------------

def enumerate_sites(info: KernelInfo) -> list[PragmaSite]:
    """Every legal pragma site, in exploration order.

    Per function in source order: inline (non-top only), pipeline, then each
    loop in preorder (pipeline, unroll), then the function's arrays per
    dimension. File-scope arrays come last.
    """
    sites: list[PragmaSite] = []
    for fn in info.functions:
        body = fn.body_start_location
        if fn.name != info.top_function:
            sites.append(PragmaSite(SiteKind.FUNCTION_INLINE, fn.name, 0, body))
        sites.append(PragmaSite(SiteKind.FUNCTION_PIPELINE, fn.name, 0, body))
        for loop in fn.iter_loops():
            sites.append(PragmaSite(SiteKind.LOOP_PIPELINE, loop.key, 0, loop.body_start_location))
            sites.append(PragmaSite(SiteKind.LOOP_UNROLL, loop.key, 0, loop.body_start_location))
        for arr in fn.arrays:
            where = arr.insert_after or body
            for d in range(1, len(arr.dims) + 1):
                sites.append(PragmaSite(SiteKind.ARRAY_PARTITION, arr.key, d, where))
    top_body = info.top.body_start_location
    for arr in info.global_arrays():
        for d in range(1, len(arr.dims) + 1):
            sites.append(PragmaSite(SiteKind.ARRAY_PARTITION, arr.key, d, top_body))
    return sites


# ---- validity ---------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    rule: str        # R1 | NOT_POW2 | BOUND | UNIT_DIM | KIND | COVERAGE | INLINE_TOP
    site: str
    message: str


@dataclass(frozen=True)
class ValidityReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def validate_config(config: PragmaConfig, info: KernelInfo) -> ValidityReport:
    out: list[Violation] = []
    expected = {s.key for s in enumerate_sites(info)}
    given = [s.key for s in config.sites]
    if len(set(given)) != len(given):
        out.append(Violation("COVERAGE", "", "duplicate sites in configuration"))
    for k in sorted(expected - set(given)):
        out.append(Violation("COVERAGE", k, "site missing from configuration"))
    for k in sorted(set(given) - expected):
        out.append(Violation("COVERAGE", k, "site not present in kernel"))

    pipelined = {s.target for s, v in config.decisions.items()
                 if s.kind is SiteKind.LOOP_PIPELINE and v.kind == "on"}
    for site, v in config.decisions.items():
        k = site.key
        if v.is_off:
            continue
        if site.kind in (SiteKind.LOOP_PIPELINE, SiteKind.FUNCTION_INLINE,
                         SiteKind.FUNCTION_PIPELINE):
            if v.kind != "on":
                out.append(Violation("KIND", k, f"setting {v} not allowed here"))
            if site.kind is SiteKind.FUNCTION_INLINE and site.target == info.top_function:
                out.append(Violation("INLINE_TOP", k, "top function cannot be inlined"))
            continue
        if site.kind is SiteKind.LOOP_UNROLL:
            if v.kind != "unroll" or not v.factor or v.factor < 1:
                out.append(Violation("KIND", k, f"setting {v} not allowed here"))
                continue
            if not _pow2(v.factor):
                out.append(Violation("NOT_POW2", k, f"unroll factor {v.factor} is not a power of two"))
            try:
                loop = info.loop(site.target)
            except KeyError:
                continue
            if loop.trip_count is None:
                out.append(Violation("BOUND", k, "unroll on a loop with unknown trip count"))
            elif v.factor > loop.trip_count:
                out.append(Violation("BOUND", k,
                                     f"unroll factor {v.factor} exceeds trip count {loop.trip_count}"))
            anc = [a for a in info.ancestors(site.target) if a in pipelined]
            if anc:
                out.append(Violation("R1", k, f"inner loop unrolled under pipelined loop {anc[0]}"))
            continue
        # array partition
        if v.kind != "partition":
            out.append(Violation("KIND", k, f"setting {v} not allowed here"))
            continue
        try:
            arr = info.array(site.target)
        except KeyError:
            continue
        if not 1 <= site.dim <= len(arr.dims):
            out.append(Violation("BOUND", k, f"dimension {site.dim} outside 1..{len(arr.dims)}"))
            continue
        extent = arr.dims[site.dim - 1]
        if extent <= 1:
            out.append(Violation("UNIT_DIM", k, "partition of a dimension with extent 1"))
        if v.ptype != "complete":
            if not v.factor or not _pow2(v.factor) or v.factor < 2:
                out.append(Violation("NOT_POW2", k, f"partition factor {v.factor} is not a power of two"))
            elif v.factor >= extent:
                out.append(Violation("BOUND", k,
                                     f"partition factor {v.factor} not below extent {extent}"))
    return ValidityReport(tuple(out))


# ---- directive text -----------------------------------------------------------

def directive_text(site: PragmaSite, setting: Setting, info: KernelInfo) -> str:
    if site.kind in (SiteKind.LOOP_PIPELINE, SiteKind.FUNCTION_PIPELINE):
        return "#pragma HLS pipeline"
    if site.kind is SiteKind.FUNCTION_INLINE:
        return "#pragma HLS inline"
    if site.kind is SiteKind.LOOP_UNROLL:
        return f"#pragma HLS unroll factor={setting.factor}"
    name = info.array(site.target).name
    if setting.ptype == "complete":
        return f"#pragma HLS array_partition variable={name} type=complete dim={site.dim}"
    return (f"#pragma HLS array_partition variable={name} type={setting.ptype} "
            f"factor={setting.factor} dim={site.dim}")


# ---- rewriting ------------------------------------------------------------------

def _line_bounds(text: str, offset: int) -> tuple[int, int]:
    start = text.rfind("\n", 0, offset) + 1
    end = text.find("\n", offset)
    return start, (len(text) if end < 0 else end)


def _indent_of(text: str, line_start: int) -> str:
    i = line_start
    while i < len(text) and text[i] in " \t":
        i += 1
    return text[line_start:i]


def _rest_is_blank(text: str, offset: int) -> bool:
    _, end = _line_bounds(text, offset)
    rest = text[offset:end].strip()
    return not rest or rest.startswith("//")


def _after(text: str, offset: int, lines: list[str], closing_brace: bool) -> list[tuple[int, str]]:
    """Edits placing ``lines`` right after ``offset`` (just past '{' or ';')."""
    if _rest_is_blank(text, offset):
        _, eol = _line_bounds(text, offset)
        if eol >= len(text):
            return [(len(text), "\n" + "".join(l + "\n" for l in lines).rstrip("\n"))]
        next_start = eol + 1
        next_end = _line_bounds(text, next_start)[1] if next_start < len(text) else next_start
        here = _indent_of(text, _line_bounds(text, offset)[0])
        nxt = text[next_start:next_end]
        if closing_brace and nxt.strip() and not nxt.strip().startswith("}"):
            indent = _indent_of(text, next_start)
        elif closing_brace:
            indent = here + "    "
        else:
            indent = here
        return [(next_start, "".join(indent + l + "\n" for l in lines))]
    return [(offset, "\n" + "\n".join(lines) + "\n")]


def insert_pragmas(unit: SourceUnit, info: KernelInfo, config: PragmaConfig) -> SourceUnit:
    """Materialize ``config`` as directive lines in a copy of ``unit``.

    Loop directives open the loop body, function directives (and partitions of
    parameters and file-scope arrays) open the function body, and partitions of
    local arrays follow their declaration. Unbraced loop bodies get braces.
    An all-OFF configuration returns the unit unchanged.
    """
    report = validate_config(config, info)
    if not report.ok:
        raise InvalidConfig("; ".join(f"{v.rule} {v.site}: {v.message}" for v in report.violations))
    texts = {f.file_name: f.file_content for f in unit.files}
    edits: dict[str, list[tuple[int, int, str]]] = {}
    seq = 0

    def add(file: str, offset: int, text: str, order: Optional[int] = None) -> None:
        # closing braces sharing an offset go innermost first
        nonlocal seq
        key = (1, order) if order is not None else (0, seq)
        edits.setdefault(file, []).append((offset, key, text))
        seq += 1

    # group directive lines by anchor, keeping site order within an anchor
    # (site order already puts inline before pipeline and pipeline before unroll)
    anchors: dict[tuple, list[str]] = {}
    anchor_kind: dict[tuple, str] = {}
    for site, setting in config.decisions.items():
        if setting.is_off:
            continue
        line = directive_text(site, setting, info)
        if site.kind.is_loop:
            loop = info.loop(site.target)
            key = ("loop", loop.key)
            anchor_kind[key] = "loop"
        elif site.kind.is_function:
            key = ("func", site.target)
            anchor_kind[key] = "func"
        else:
            arr = info.array(site.target)
            if arr.insert_after is not None:
                key = ("decl", arr.insert_after.file, arr.insert_after.offset)
                anchor_kind[key] = "decl"
            else:
                fn = arr.scope or info.top_function
                key = ("func", fn)
                anchor_kind[key] = "func"
        anchors.setdefault(key, []).append(line)

    for key, lines in anchors.items():
        kind = anchor_kind[key]
        if kind == "loop":
            loop = info.loop(key[1])
            loc = loop.body_start_location
            text = texts[loc.file]
            if loop.body_braced:
                for off, t in _after(text, loc.offset + 1, lines, True):
                    add(loc.file, off, t)
            else:
                line_start = _line_bounds(text, loc.offset)[0]
                own_line = not text[line_start:loc.offset].strip()
                ind = _indent_of(text, _line_bounds(text, loop.header_location.offset)[0])
                if own_line:
                    # brace on a line of its own so the body line stays untouched
                    inner = _indent_of(text, line_start)
                    add(loc.file, line_start,
                        ind + "{\n" + "".join(inner + l + "\n" for l in lines))
                else:
                    inner = ind + "    "
                    add(loc.file, loc.offset,
                        "{\n" + "".join(inner + l + "\n" for l in lines) + inner)
                add(loc.file, loop.body_end, "\n" + ind + "}", -loop.depth)
        elif kind == "func":
            loc = info.function(key[1]).body_start_location
            for off, t in _after(texts[loc.file], loc.offset + 1, lines, True):
                add(loc.file, off, t)
        else:
            _, file, offset = key
            for off, t in _after(texts[file], offset, lines, False):
                add(file, off, t)

    out = {}
    for file, es in edits.items():
        text = texts[file]
        es.sort()
        seen = set()
        for off, _, t in es:
            if (off, t) in seen and t.strip() != "}":
                raise InsertionConflict(f"duplicate directive block at {file}:{off}")
            seen.add((off, t))
        for off, _, t in reversed(es):
            text = text[:off] + t + text[off:]
        out[file] = text
    return unit.replace_contents(out)


def extract_config(info: KernelInfo, sites: Optional[list] = None) -> PragmaConfig:
    """Recover the configuration expressed by the ``#pragma HLS`` lines in ``info``.

    Raises :class:`InvalidConfig` when a directive cannot be bound to a site
    or two directives claim the same site.
    """
    sites = sites if sites is not None else enumerate_sites(info)
    by_key = {s.key: s for s in sites}
    chosen: dict[str, Setting] = {}

    def put(key: str, setting: Setting, where) -> None:
        if key not in by_key:
            raise InvalidConfig(f"directive at {where} targets unknown site {key}")
        if key in chosen:
            raise InvalidConfig(f"directive at {where} duplicates {key}")
        chosen[key] = setting

    for d in info.directives:
        params = dict(d.params)
        where = str(d.location)
        if d.directive == "pipeline":
            if "off" in params:
                continue
            if d.loop is not None:
                put(f"loop:{d.loop}:pipeline", ON, where)
            else:
                put(f"func:{d.function}:pipeline", ON, where)
        elif d.directive == "unroll":
            if d.loop is None:
                raise InvalidConfig(f"unroll outside a loop at {where}")
            factor = params.get("factor")
            if factor is None:
                tc = info.loop(d.loop).trip_count
                if tc is None:
                    raise InvalidConfig(f"full unroll of unknown trip count at {where}")
                factor = tc
            put(f"loop:{d.loop}:unroll", unroll(int(factor)), where)
        elif d.directive == "inline":
            if "off" in params:
                continue
            put(f"func:{d.function}:inline", ON, where)
        elif d.directive == "array_partition":
            if d.array is None:
                raise InvalidConfig(f"array_partition of unknown variable at {where}")
            ptype = params.get("type")
            if ptype is None:
                ptype = next((k for k in ("cyclic", "block", "complete") if k in params), "complete")
            dim = int(params.get("dim", 1))
            factor = params.get("factor")
            setting = COMPLETE if ptype == "complete" else partition(ptype, int(factor) if factor else None)
            put(f"array:{d.array}:dim{dim}", setting, where)
    return PragmaConfig(tuple(sites), tuple(chosen.get(s.key, OFF) for s in sites))
