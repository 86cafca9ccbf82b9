"""Gaussian-process Bayesian search over discrete pragma configurations."""

from __future__ import annotations

import bisect
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import erfcx, ndtr

from .analyzer import KernelInfo, SourceUnit
from .design_space import DesignTree, build_design_tree, count_completions, iter_designs
from .errors import DegenerateFit, InvalidReport, SpaceExhausted
from .metrics import DesignPoint
from .pragmas import ON, PragmaConfig, SiteKind
from .qor import PartSpec, QoRReport, compute_aru

LENGTH_SCALES = (0.05, 0.1, 0.2, 0.4, 0.8)
DEFAULT_NOISE = 1e-6
MAX_CANDIDATES = 10_000
ARU_FLOOR = 1e-6


def cost(report: QoRReport, part: PartSpec) -> float:
    """Euclidean norm of (log10 latency, log10 ARU) with both clamped away from zero."""
    if not report.ok:
        raise InvalidReport(f"cannot cost a failed report ({report.reason})")
    aru = compute_aru(report, part)
    return cost_from(report.worst_case_latency, aru)


def cost_from(latency: float, aru: float) -> float:
    lat = math.log10(max(latency, 1))
    res = math.log10(max(aru, ARU_FLOOR))
    return math.hypot(lat, res)


# ---- search space -------------------------------------------------------------------

class SearchSpace:
    """Per-site option indices mapped evenly onto [0, 1]."""

    def __init__(self, tree: DesignTree):
        self.tree = tree
        self.sites = tree.sites
        self.options = tree.options
        self._index = [{o: i for i, o in enumerate(opts)} for opts in tree.options]
        self._scale = np.array([max(len(o) - 1, 1) for o in tree.options], dtype=float)
        self._legal: Optional[list] = None
        self._legal_x: Optional[np.ndarray] = None
        self._pipe_levels = {i for i, s in enumerate(tree.sites)
                             if s.kind is SiteKind.LOOP_PIPELINE}
        self._last_use = {}
        for lv, g in enumerate(tree.guards):
            for p in g:
                self._last_use[p] = max(self._last_use.get(p, -1), lv)
        self._branches: dict = {}

    @property
    def dims(self) -> int:
        return len(self.sites)

    def indices(self, config: PragmaConfig) -> list:
        return [self._index[i][v] for i, v in enumerate(config.settings)]

    def encode(self, config: PragmaConfig) -> np.ndarray:
        return np.asarray(self.indices(config), dtype=float) / self._scale

    def decode(self, x) -> PragmaConfig:
        x = np.asarray(x, dtype=float)
        idx = np.rint(np.clip(x, 0.0, 1.0) * self._scale).astype(int)
        settings = tuple(self.options[i][min(k, len(self.options[i]) - 1)]
                         for i, k in enumerate(idx))
        return PragmaConfig(self.sites, settings)

    @property
    def legal_count(self) -> int:
        return self.tree.leaf_count

    def all_legal(self) -> list:
        if self._legal is None:
            self._legal = list(iter_designs(self.tree))
            self._legal_x = (np.array([self.indices(c) for c in self._legal], dtype=float)
                             / self._scale) if self._legal else np.zeros((0, self.dims))
        return self._legal

    def all_legal_encoded(self) -> np.ndarray:
        self.all_legal()
        return self._legal_x

    def sample(self, rng: np.random.Generator) -> PragmaConfig:
        """Uniform draw over legal leaves: one random rank, then unrank it."""
        return self.from_indices(self.sample_indices(rng))

    def from_indices(self, idx) -> PragmaConfig:
        return PragmaConfig(self.sites, tuple(self.options[i][k] for i, k in enumerate(idx)))

    def sample_indices(self, rng: np.random.Generator) -> tuple:
        total = self.legal_count
        r = _randbelow(rng, total) if total > 1 else 0
        chosen = []
        pipelined: frozenset = frozenset()
        for level, opts in enumerate(self.options):
            cum, nexts = self._branch(level, pipelined)
            k = bisect.bisect_right(cum, r)
            if k:
                r -= cum[k - 1]
            chosen.append(k)
            pipelined = nexts[k]
        return tuple(chosen)

    def _branch(self, level: int, pipelined: frozenset):
        # only pipeline levels that still guard a later unroll level matter
        key = (level, frozenset(p for p in pipelined if self._last_use.get(p, -1) >= level))
        hit = self._branches.get(key)
        if hit is not None:
            return hit
        guards = self.tree.guards[level]
        if guards and any(g in pipelined for g in guards):
            hit = ([count_completions(self.tree, level + 1, pipelined)], [pipelined])
        else:
            cum, nexts, run = [], [], 0
            for o in self.options[level]:
                nxt = pipelined | {level} if (o == ON and level in self._pipe_levels) else pipelined
                run += count_completions(self.tree, level + 1, nxt)
                cum.append(run)
                nexts.append(nxt)
            hit = (cum, nexts)
        self._branches[key] = hit
        return hit


def _randbelow(rng: np.random.Generator, n: int) -> int:
    if n < 2 ** 62:
        return int(rng.integers(n))
    nbytes = (n.bit_length() + 7) // 8
    while True:   # rejection keeps huge spaces exactly uniform
        r = int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - n.bit_length())
        if r < n:
            return r


# ---- surrogate ----------------------------------------------------------------------

def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d, 0.0)


def rbf(a: np.ndarray, b: np.ndarray, length_scale: float) -> np.ndarray:
    return np.exp(-0.5 * _sq_dists(a, b) / (length_scale * length_scale))


@dataclass
class Surrogate:
    x: np.ndarray
    y: np.ndarray                  # raw costs
    length_scale: float
    noise: float
    y_mean: float
    y_scale: float
    degenerate: bool
    chol: tuple = field(repr=False)
    alpha: np.ndarray = field(repr=False)

    def predict(self, points) -> tuple:
        """Posterior mean and std in cost units; accepts one point or a batch."""
        q = np.atleast_2d(np.asarray(points, dtype=float))
        k = rbf(q, self.x, self.length_scale)
        mean = k @ self.alpha
        v = cho_solve(self.chol, k.T)
        var = np.maximum(1.0 - np.einsum("ij,ji->i", k, v), 0.0)
        mean = self.y_mean + self.y_scale * mean
        std = self.y_scale * np.sqrt(var)
        if np.ndim(points) == 1:
            return float(mean[0]), float(std[0])
        return mean, std


def _factor(kmat: np.ndarray, noise: float) -> tuple:
    jitter = noise
    n = len(kmat)
    for _ in range(8):
        try:
            return cho_factor(kmat + jitter * np.eye(n), lower=True), jitter
        except np.linalg.LinAlgError:
            jitter = max(jitter * 100.0, 1e-12)
    raise np.linalg.LinAlgError("kernel matrix is not positive definite")


def surrogate_fit(x, y, noise: float = DEFAULT_NOISE,
                  length_scales: Iterable[float] = LENGTH_SCALES) -> Surrogate:
    """Fit a unit-variance squared-exponential GP to standardized costs.

    The length scale is the grid value with the highest log marginal
    likelihood. Identical costs give a constant-mean model and a
    :class:`DegenerateFit` warning.
    """
    if noise <= 0:
        raise ValueError("noise variance must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) == 0 or len(x) != len(y):
        raise ValueError("need at least one observation with matching inputs")
    mean = float(y.mean())
    spread = float(y.std())
    degenerate = spread == 0.0
    if degenerate and len(y) > 1:
        warnings.warn("all observed costs are identical; using a constant-mean surrogate",
                      DegenerateFit, stacklevel=2)
    scale = 1.0 if degenerate else spread
    z = (y - mean) / scale
    best = None
    for ls in length_scales:
        kmat = rbf(x, x, ls)
        (chol, jitter) = _factor(kmat, noise)
        alpha = cho_solve(chol, z)
        logdet = 2.0 * np.log(np.diag(chol[0])).sum()
        lml = -0.5 * z @ alpha - 0.5 * logdet - 0.5 * len(z) * math.log(2 * math.pi)
        if best is None or lml > best[0] + 1e-12:
            best = (lml, ls, chol, alpha, jitter)
    _, ls, chol, alpha, jitter = best
    return Surrogate(x, y, ls, jitter, mean, scale, degenerate, chol, alpha)


def ei_closed_form(mu, sigma, best):
    """Expected improvement for minimization; vectorized, never negative."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    gain = best - mu
    safe = np.where(sigma > 0, sigma, 1.0)
    z = gain / safe
    # z*Phi(z) + phi(z); for z < 0 rewrite it as
    # exp(-z^2/2) * (z/2 * erfcx(-z/sqrt2) + 1/sqrt(2pi)) to stay accurate in the tail
    neg = np.minimum(z, 0.0)
    lower = np.exp(-0.5 * neg * neg) * (0.5 * neg * erfcx(-neg / math.sqrt(2.0))
                                        + 1.0 / math.sqrt(2.0 * math.pi))
    pos = np.maximum(z, 0.0)
    upper = pos * ndtr(pos) + np.exp(-0.5 * pos * pos) / math.sqrt(2.0 * math.pi)
    tail = np.where(z < 0, lower, upper)
    out = np.where(sigma > 0, safe * tail, np.maximum(gain, 0.0))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def expected_improvement(s: Surrogate, point, best: float):
    mean, std = s.predict(point)
    return ei_closed_form(mean, std, best)


def propose_next(s: Optional[Surrogate], space: SearchSpace, best: float,
                 rng: np.random.Generator, evaluated: set) -> PragmaConfig:
    """Highest-EI legal configuration not in ``evaluated`` (a set of settings tuples).

    Scores every legal config when there are at most 10,000, else 10,000
    uniform samples. Ties go to the lowest canonical option order.
    """
    total = space.legal_count
    if len(evaluated) >= total:
        raise SpaceExhausted(f"all {total} legal configurations evaluated")
    if total <= MAX_CANDIDATES:
        cands = space.all_legal()
        xs = space.all_legal_encoded()
        keep = [i for i, c in enumerate(cands) if c.settings not in evaluated]
        cands = [cands[i] for i in keep]
        xs = xs[keep]
    else:
        # work on option indices; configs are only built for the survivors
        done = {tuple(space.indices(PragmaConfig(space.sites, st))) for st in evaluated}
        seen = set()
        rows = []
        for _ in range(MAX_CANDIDATES):
            idx = space.sample_indices(rng)
            if idx in done or idx in seen:
                continue
            seen.add(idx)
            rows.append(idx)
        if not rows:
            return _fresh(space, rng, evaluated)
        cands = [space.from_indices(r) for r in rows]
        xs = np.array(rows, dtype=float) / space._scale
    if s is None:
        return cands[int(rng.integers(len(cands)))]
    mean, std = s.predict(xs)
    ei = np.atleast_1d(ei_closed_form(mean, std, best))
    top = ei.max()
    winners = [cands[i] for i in np.flatnonzero(ei >= top)]
    return min(winners, key=lambda c: c.order_key)


def _fresh(space: SearchSpace, rng, evaluated: set) -> PragmaConfig:
    for _ in range(100 * MAX_CANDIDATES):
        c = space.sample(rng)
        if c.settings not in evaluated:
            return c
    raise SpaceExhausted("could not draw an unevaluated configuration")


# ---- exploration loop ---------------------------------------------------------------

@dataclass(frozen=True)
class ExplorerBudget:
    n_opt: int = 1
    n_init: int = 20
    n_calls: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.n_opt < 1 or self.n_init < 1 or self.n_calls < 0:
            raise ValueError("n_opt and n_init must be >= 1 and n_calls >= 0")


@dataclass
class Observation:
    config: PragmaConfig
    x: np.ndarray
    cost: Optional[float]          # None means FAILED
    report: QoRReport
    restart: int
    iteration: int

    @property
    def failed(self) -> bool:
        return self.cost is None


@dataclass
class ExplorationResult:
    points: list                   # valid DesignPoints, first-evaluation order
    observations: list             # every evaluation, including FAILED ones

    @property
    def failures(self) -> int:
        return sum(1 for o in self.observations if o.failed)


class BayesianExplorer:
    def __init__(self, unit: SourceUnit, info: KernelInfo, evaluator, part: PartSpec,
                 budget: ExplorerBudget = ExplorerBudget(), tree: Optional[DesignTree] = None,
                 log_path=None, noise: float = DEFAULT_NOISE,
                 on_point: Optional[Callable[[DesignPoint], None]] = None):
        self.unit = unit
        self.info = info
        self.evaluator = evaluator
        self.part = part
        self.budget = budget
        self.space = SearchSpace(tree if tree is not None else build_design_tree(info))
        self.log_path = Path(log_path) if log_path is not None else None
        self.noise = noise
        self.on_point = on_point
        self._cache: dict = {}

    def prime(self, config: PragmaConfig, report: QoRReport) -> None:
        """Seed the evaluation cache with a result obtained elsewhere."""
        self._cache[config.settings] = report

    def _evaluate(self, config: PragmaConfig) -> tuple:
        hit = self._cache.get(config.settings)
        if hit is not None:
            return hit, True
        report = self.evaluator.evaluate(self.unit, self.info, config, self.part)
        self._cache[config.settings] = report
        return report, False

    def run(self) -> ExplorationResult:
        points: list = []
        seen: set = set()
        observations: list = []
        log = open(self.log_path, "a", encoding="utf-8") if self.log_path else None
        try:
            for r in range(self.budget.n_opt):
                self._restart(r, points, seen, observations, log)
        finally:
            if log is not None:
                log.close()
        return ExplorationResult(points, observations)

    def _record(self, r, it, config, points, seen, observations, log) -> Observation:
        t0 = time.perf_counter()
        report, _ = self._evaluate(config)
        wall = time.perf_counter() - t0
        c = cost(report, self.part) if report.ok else None
        obs = Observation(config, self.space.encode(config), c, report, r, it)
        observations.append(obs)
        if log is not None:
            log.write(json.dumps({"restart": r, "iteration": it, "config": config.canonical(),
                                  "cost": c if c is not None else "FAILED",
                                  "wall_time": round(wall, 6)}) + "\n")
            log.flush()
        if c is not None and config.settings not in seen:
            seen.add(config.settings)
            p = DesignPoint(config, report.worst_case_latency, compute_aru(report, self.part),
                            report)
            points.append(p)
            if self.on_point is not None:
                self.on_point(p)
        return obs

    def _restart(self, r, points, seen, observations, log) -> None:
        rng = np.random.default_rng(self.budget.seed + r)
        space = self.space
        evaluated: set = set()
        mine: list = []
        it = 0
        total = space.legal_count
        draws = 0
        while len(evaluated) < min(self.budget.n_init, total) and draws < 50 * self.budget.n_init:
            draws += 1
            c = space.sample(rng)
            if c.settings in evaluated:
                continue
            evaluated.add(c.settings)
            mine.append(self._record(r, it, c, points, seen, observations, log))
            it += 1
        for _ in range(self.budget.n_calls):
            valid = [o for o in mine if not o.failed]
            s = None
            best = math.inf
            if valid:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", DegenerateFit)
                    s = surrogate_fit(np.array([o.x for o in valid]),
                                      np.array([o.cost for o in valid]), self.noise)
                best = min(o.cost for o in valid)
            try:
                c = propose_next(s, space, best, rng, evaluated)
            except SpaceExhausted:
                break
            evaluated.add(c.settings)
            mine.append(self._record(r, it, c, points, seen, observations, log))
            it += 1


def explore_bayesian(unit: SourceUnit, info: KernelInfo, evaluator, part: PartSpec,
                     budget: ExplorerBudget = ExplorerBudget(), **kw) -> list:
    """Run the restart loop and return the valid, deduplicated design points.

    BackendUnavailable propagates after the run log has been flushed.
    """
    return BayesianExplorer(unit, info, evaluator, part, budget, **kw).run().points
