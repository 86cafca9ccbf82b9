"""Exhaustive enumeration of legal pragma configurations."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Optional

from .analyzer import KernelInfo
from .pragmas import (COMPLETE, OFF, ON, PragmaConfig, PragmaSite, Setting, SiteKind,
                      enumerate_sites, partition, unroll)

UNBOUNDED = None
DEFAULT_MAX_DESIGNS = 100_000
PRUNE_THRESHOLD = 4096


def generate_factors(n: int) -> list[int]:
    """Powers of two in ``[2, n]``."""
    if n < 1:
        raise ValueError("n must be positive")
    out, f = [], 2
    while f <= n:
        out.append(f)
        f *= 2
    return out


def site_options(site: PragmaSite, info: KernelInfo) -> list[Setting]:
    if site.kind in (SiteKind.LOOP_PIPELINE, SiteKind.FUNCTION_PIPELINE, SiteKind.FUNCTION_INLINE):
        return [OFF, ON]
    if site.kind is SiteKind.LOOP_UNROLL:
        tc = info.loop(site.target).trip_count
        return [OFF] + ([unroll(f) for f in generate_factors(tc)] if tc else [])
    extent = info.array(site.target).dims[site.dim - 1]
    if extent <= 1:
        return [OFF]
    opts = [OFF]
    for f in generate_factors(extent):
        if f < extent:
            opts += [partition("cyclic", f), partition("block", f)]
    return opts + [COMPLETE]


@dataclass(frozen=True)
class DesignTree:
    """Ordered sites with their option lists; leaves are full configurations."""

    info: KernelInfo
    sites: tuple
    options: tuple                 # tuple of option tuples, aligned with sites
    # per level: index of the pipeline level of every ancestor loop (R1)
    guards: tuple = field(repr=False)
    # per unroll level: partition levels of arrays the loop indexes
    pairs: tuple = field(repr=False)

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def leaf_count(self) -> int:
        return count_completions(self, 0, frozenset())

    def level(self, key: str) -> int:
        for i, s in enumerate(self.sites):
            if s.key == key:
                return i
        raise KeyError(key)


def build_design_tree(info: KernelInfo, hold_off: Iterable = ()) -> DesignTree:
    """Build the tree over every site of ``info``.

    ``hold_off`` names site kinds or site keys whose options are pinned to
    OFF; the sites stay in the configuration so manifests remain comparable.
    """
    held = set(hold_off)
    sites = tuple(enumerate_sites(info))
    index = {s.key: i for i, s in enumerate(sites)}
    options = []
    for s in sites:
        opts = [OFF] if (s.kind in held or s.key in held) else site_options(s, info)
        options.append(tuple(opts))
    guards = []
    pairs = []
    for s in sites:
        g: tuple = ()
        p: tuple = ()
        if s.kind is SiteKind.LOOP_UNROLL:
            g = tuple(index[f"loop:{a}:pipeline"] for a in info.ancestors(s.target))
            loop = info.loop(s.target)
            p = tuple(sorted({index[f"array:{k}:dim{d}"] for k, d in loop.indexed
                              if f"array:{k}:dim{d}" in index}))
        guards.append(g)
        pairs.append(p)
    return DesignTree(info, sites, tuple(options), tuple(guards), tuple(pairs))


def _allowed(tree: DesignTree, level: int, chosen: list) -> tuple:
    opts = tree.options[level]
    if tree.guards[level] and any(chosen[g] == ON for g in tree.guards[level]):
        return (OFF,)
    return opts


def count_completions(tree: DesignTree, level: int, pipelined: frozenset) -> int:
    """Leaves below a node at ``level`` given the set of pipeline levels set ON.

    Ignores equivalent-factor pruning (it measures the unpruned subtree).
    """
    return _counter(tree)(level, pipelined)


_COUNTERS: dict = {}


def _counter(tree: DesignTree):
    fn = _COUNTERS.get(id(tree))
    if fn is not None and fn[0] is tree:
        return fn[1]
    n = len(tree.sites)
    # a pipeline level only matters while some later unroll level is guarded by it
    last_use = {}
    for lv, g in enumerate(tree.guards):
        for p in g:
            last_use[p] = max(last_use.get(p, -1), lv)

    @lru_cache(maxsize=None)
    def rec(level: int, pipelined: frozenset) -> int:
        if level == n:
            return 1
        if tree.guards[level] and any(g in pipelined for g in tree.guards[level]):
            return count(level + 1, pipelined)
        total = 0
        for opt in tree.options[level]:
            nxt = pipelined | {level} if (opt == ON and level in last_use) else pipelined
            total += count(level + 1, nxt)
        return total

    def count(level: int, pipelined: frozenset) -> int:
        return rec(level, frozenset(p for p in pipelined if last_use.get(p, -1) >= level))

    if len(_COUNTERS) > 64:
        _COUNTERS.clear()
    _COUNTERS[id(tree)] = (tree, count)
    return count


def _pipelined_set(tree: DesignTree, chosen: list, level: int) -> frozenset:
    return frozenset(i for i in range(level) if chosen[i] == ON
                     and tree.sites[i].kind is SiteKind.LOOP_PIPELINE)


@dataclass(frozen=True)
class EnumerationBudget:
    max_designs: Optional[int] = DEFAULT_MAX_DESIGNS
    prune_equivalent: bool = False
    prune_threshold: int = PRUNE_THRESHOLD

    def __post_init__(self):
        if self.max_designs is not None and self.max_designs < 1:
            raise ValueError("max_designs must be at least 1 when bounded")


@dataclass
class EnumerationResult:
    configs: list
    truncated: bool = False

    def __iter__(self):
        return iter(self.configs)

    def __len__(self) -> int:
        return len(self.configs)

    def __getitem__(self, i):
        return self.configs[i]


def _pair_filter(unroll_setting: Setting, opt: Setting) -> bool:
    if unroll_setting.is_off:
        return opt.is_off
    return opt.kind == "partition" and opt.ptype in ("cyclic", "block") \
        and opt.factor == unroll_setting.factor


def iter_designs(tree: DesignTree, prune_equivalent: bool = False,
                 prune_threshold: int = PRUNE_THRESHOLD,
                 prefix: tuple = ()) -> Iterator[PragmaConfig]:
    """Depth-first leaves, optionally restricted to those starting with ``prefix``."""
    n = len(tree.sites)
    chosen: list = [None] * n
    # partition level -> list of unroll settings it must agree with
    bound: dict[int, list] = {}

    def rec(level: int):
        if level == n:
            yield PragmaConfig(tree.sites, tuple(chosen))
            return
        opts = _allowed(tree, level, chosen)
        if level < len(prefix):
            opts = tuple(o for o in opts if o == prefix[level])
        if level in bound:
            opts = tuple(o for o in opts if all(_pair_filter(u, o) for u in bound[level]))
        pair_levels = tree.pairs[level] if prune_equivalent else ()
        if pair_levels:
            size = count_completions(tree, level, _pipelined_set(tree, chosen, level))
            if size <= prune_threshold:
                pair_levels = ()
        for opt in opts:
            chosen[level] = opt
            for p in pair_levels:
                bound.setdefault(p, []).append(opt)
            yield from rec(level + 1)
            for p in pair_levels:
                bound[p].pop()
                if not bound[p]:
                    del bound[p]
        chosen[level] = None

    yield from rec(0)


def enumerate_designs(tree: DesignTree,
                      budget: EnumerationBudget = EnumerationBudget()) -> EnumerationResult:
    out = []
    truncated = False
    for cfg in iter_designs(tree, budget.prune_equivalent, budget.prune_threshold):
        if budget.max_designs is not None and len(out) >= budget.max_designs:
            truncated = True
            break
        out.append(cfg)
    return EnumerationResult(out, truncated)


def branches(tree: DesignTree) -> list[tuple]:
    """Top-level option prefixes; DFS order is preserved by branch index."""
    if not tree.sites:
        return [()]
    return [(o,) for o in tree.options[0]]


def enumerate_branch(tree: DesignTree, branch: tuple,
                     budget: EnumerationBudget = EnumerationBudget()) -> EnumerationResult:
    out = []
    truncated = False
    for cfg in iter_designs(tree, budget.prune_equivalent, budget.prune_threshold, branch):
        if budget.max_designs is not None and len(out) >= budget.max_designs:
            truncated = True
            break
        out.append(cfg)
    return EnumerationResult(out, truncated)


def merge_branches(results: list, budget: EnumerationBudget = EnumerationBudget()) -> EnumerationResult:
    """Concatenate per-branch results in branch order and re-apply the cap."""
    out = []
    truncated = False
    for r in results:
        out.extend(r.configs)
        truncated = truncated or r.truncated
    if budget.max_designs is not None and len(out) > budget.max_designs:
        out = out[:budget.max_designs]
        truncated = True
    elif budget.max_designs is not None and len(out) == budget.max_designs:
        # a later branch may have been cut exactly at the cap
        truncated = truncated or any(r.truncated for r in results)
    return EnumerationResult(out, truncated)


def manifest_lines(configs: Iterable[PragmaConfig]) -> list[str]:
    return [f"design_{k}\t{cfg.canonical()}" for k, cfg in enumerate(configs)]


def write_manifest(path, configs: Iterable[PragmaConfig]) -> None:
    text = "".join(line + "\n" for line in manifest_lines(configs))
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_manifest(path, sites: Iterable[PragmaSite]) -> list[PragmaConfig]:
    sites = tuple(sites)
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            _, _, text = line.partition("\t")
            out.append(PragmaConfig.from_canonical(text, sites))
    return out
