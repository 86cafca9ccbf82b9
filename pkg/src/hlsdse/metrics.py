"""Pareto fronts over (latency, ARU), ADRS, strategy tertiles and error metrics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence

from .errors import EmptyInput, EmptySet, LengthMismatch, ZeroActual, ZeroDenominator


@dataclass(eq=False)
class DesignPoint:
    config: Any                  # PragmaConfig, or None for bare points
    latency: float
    aru: float
    report: Any = None           # QoRReport
    source: Any = None           # annotated SourceUnit
    design_id: Optional[str] = None

    def __post_init__(self):
        if self.latency < 0 or self.aru < 0:
            raise ValueError("latency and aru must be nonnegative")

    @property
    def objectives(self) -> tuple:
        return (self.latency, self.aru)

    def __repr__(self) -> str:
        tag = f" {self.design_id}" if self.design_id is not None else ""
        return f"DesignPoint({self.latency}, {self.aru}{tag})"


def point(latency: float, aru: float, **kw) -> DesignPoint:
    return DesignPoint(None, latency, aru, **kw)


@dataclass
class ParetoSet:
    points: list
    kernel_id: str = ""

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]


class StrategyLabel(str, enum.Enum):
    HIGH_RESOURCE_LOW_LATENCY = "low-latency-high-resource"
    MEDIUM = "medium-latency-medium-resource"
    LOW_RESOURCE_HIGH_LATENCY = "high-latency-low-resource"

    @property
    def instruction(self) -> str:
        return INSTRUCTIONS[self]


INSTRUCTIONS = {
    StrategyLabel.LOW_RESOURCE_HIGH_LATENCY: "optimize for low resource usage and high latency.",
    StrategyLabel.MEDIUM: "optimize for balanced resource usage and latency.",
    StrategyLabel.HIGH_RESOURCE_LOW_LATENCY: "optimize for high resource usage and low latency.",
}


def dominates(a: DesignPoint, b: DesignPoint) -> bool:
    return (a.latency <= b.latency and a.aru <= b.aru
            and (a.latency < b.latency or a.aru < b.aru))


def pareto_front(designs: Iterable[DesignPoint], kernel_id: str = "") -> ParetoSet:
    """Non-dominated subset, ascending latency; coincident points all survive."""
    pts = list(designs)
    if not pts:
        raise EmptyInput("pareto_front needs at least one design")
    order = sorted(range(len(pts)), key=lambda i: (pts[i].latency, pts[i].aru, i))
    keep = []
    best_aru = math.inf          # lowest ARU among strictly smaller latencies
    i = 0
    while i < len(order):
        # handle one latency value at a time
        j = i
        lat = pts[order[i]].latency
        while j < len(order) and pts[order[j]].latency == lat:
            j += 1
        group_min = pts[order[i]].aru
        if group_min < best_aru:
            keep.extend(order[k] for k in range(i, j) if pts[order[k]].aru == group_min)
            best_aru = group_min
        i = j
    return ParetoSet([pts[k] for k in keep], kernel_id)


def delta(gamma: DesignPoint, omega: DesignPoint) -> float:
    """Normalized distance of ``gamma`` relative to ``omega``, in percent."""
    if omega.latency == 0 or omega.aru == 0:
        raise ZeroDenominator("reference point has zero latency or zero ARU")
    return max(0.0, (gamma.latency - omega.latency) / omega.latency,
               (gamma.aru - omega.aru) / omega.aru) * 100.0


def _classic_delta(gamma: DesignPoint, omega: DesignPoint) -> float:
    if gamma.latency == 0 or gamma.aru == 0:
        raise ZeroDenominator("reference point has zero latency or zero ARU")
    return max(0.0, (omega.latency - gamma.latency) / gamma.latency,
               (omega.aru - gamma.aru) / gamma.aru) * 100.0


def _check_sets(reference, predicted) -> tuple:
    ref = list(reference)
    pred = list(predicted)
    if not ref:
        raise EmptySet("reference set is empty")
    if not pred:
        raise EmptySet("predicted set is empty")
    return ref, pred


def adrs(reference, predicted, classic: bool = False) -> float:
    """Mean over reference points of the closest predicted point's distance.

    ``classic=True`` switches to the textbook orientation (ω−γ)/γ.
    """
    ref, pred = _check_sets(reference, predicted)
    d = _classic_delta if classic else delta
    return sum(min(d(g, w) for w in pred) for g in ref) / len(ref)


def adrs_classic(reference, predicted) -> float:
    return adrs(reference, predicted, classic=True)


def average_adrs(per_kernel: Sequence[float]) -> float:
    vals = list(per_kernel)
    if not vals:
        raise EmptyInput("no per-kernel ADRS values")
    return sum(vals) / len(vals)


def tertile_labels(front, order_key=None) -> dict:
    """Map each front member (by identity) to a :class:`StrategyLabel`.

    Sorted by ARU descending, ties by latency then ``order_key(point)``
    (defaults to the config's canonical order).
    """
    pts = list(front)
    if not pts:
        raise EmptyInput("empty front")
    if order_key is None:
        def order_key(p):
            return p.config.order_key if p.config is not None else ()
    n = len(pts)
    if n < 3:
        return {id(p): StrategyLabel.MEDIUM for p in pts}
    ranked = sorted(range(n), key=lambda i: (-pts[i].aru, pts[i].latency, order_key(pts[i]), i))
    hi, mid = n // 3, (2 * n) // 3
    out = {}
    for pos, i in enumerate(ranked):
        if pos < hi:
            out[id(pts[i])] = StrategyLabel.HIGH_RESOURCE_LOW_LATENCY
        elif pos < mid:
            out[id(pts[i])] = StrategyLabel.MEDIUM
        else:
            out[id(pts[i])] = StrategyLabel.LOW_RESOURCE_HIGH_LATENCY
    return out


def label_list(front) -> list:
    """Labels aligned with the front's order."""
    labels = tertile_labels(front)
    return [labels[id(p)] for p in front]


def _paired(predicted, actual) -> tuple:
    p = [float(x) for x in predicted]
    a = [float(x) for x in actual]
    if len(p) != len(a):
        raise LengthMismatch(f"{len(p)} predictions vs {len(a)} actuals")
    if not p:
        raise LengthMismatch("empty inputs")
    return p, a


def mape(predicted, actual) -> float:
    p, a = _paired(predicted, actual)
    if any(x == 0 for x in a):
        raise ZeroActual("actual value of zero makes MAPE undefined")
    return sum(abs(x - y) / abs(y) for x, y in zip(p, a)) / len(a)


def rmse(predicted, actual) -> float:
    p, a = _paired(predicted, actual)
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(p, a)) / len(a))


@dataclass
class KernelADRS:
    kernel_id: str
    reference_size: int
    predicted_size: int
    adrs_percent: float


def format_metrics_report(rows: Iterable[KernelADRS]) -> str:
    rows = list(rows)
    lines = [f"{r.kernel_id}, {r.reference_size}, {r.predicted_size}, {r.adrs_percent:.6f}"
             for r in rows]
    if rows:
        lines.append(f"average_adrs {average_adrs([r.adrs_percent for r in rows]):.6f}")
    return "".join(l + "\n" for l in lines)


def parse_metrics_report(text: str) -> tuple:
    rows, avg = [], None
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("average_adrs "):
            avg = float(line.split()[1])
            continue
        kid, g, o, v = [x.strip() for x in line.rsplit(",", 3)]
        rows.append(KernelADRS(kid, int(g), int(o), float(v)))
    return rows, avg
