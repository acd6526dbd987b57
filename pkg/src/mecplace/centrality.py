"""Closeness-centrality facility siting and a random-siting comparator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DisconnectedGraphError
from .topology import DelayMatrix


@dataclass(frozen=True)
class SiteSelection:
    sites: tuple[int, ...]
    max_delay: float
    avg_delay: float
    method: str = "cc"
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "sites": list(self.sites),
            "max_delay_ms": self.max_delay,
            "avg_delay_ms": self.avg_delay,
            "method": self.method,
            **({"meta": self.meta} if self.meta else {}),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SiteSelection":
        return cls(
            tuple(int(s) for s in data["sites"]),
            float(data.get("max_delay_ms", float("nan"))),
            float(data.get("avg_delay_ms", float("nan"))),
            data.get("method", "cc"),
            data.get("meta", {}),
        )


def _require_connected(d: DelayMatrix) -> None:
    bad = np.argwhere(~np.isfinite(d.delay))
    if len(bad):
        i, j = bad[0]
        raise DisconnectedGraphError(int(i), int(j))


def closeness_centrality(d: DelayMatrix) -> np.ndarray:
    """Reciprocal of each node's summed shortest-path delay to all others.

    A single-node graph gets ``inf``.
    """
    _require_connected(d)
    totals = d.delay.sum(axis=1)
    with np.errstate(divide="ignore"):
        return 1.0 / totals


def cc_ranking(d: DelayMatrix) -> list[int]:
    cc = closeness_centrality(d)
    # descending CC, ties by ascending node id
    return sorted(range(d.n), key=lambda i: (-cc[i], i))


def coverage_metrics(d: DelayMatrix, sites) -> tuple[float, float]:
    """(avg, max) over nodes of the delay to the nearest site."""
    sites = list(sites)
    if not sites:
        raise ValueError("site list is empty")
    nearest = d.delay[:, sites].min(axis=1)
    return float(nearest.mean()), float(nearest.max())


def select_sites_cc(d: DelayMatrix, d_max: float) -> SiteSelection:
    if d_max < 0:
        raise ValueError("d_max must be non-negative")
    order = cc_ranking(d)
    nearest = np.full(d.n, np.inf)
    chosen: list[int] = []
    for node in order:
        chosen.append(node)
        nearest = np.minimum(nearest, d.delay[:, node])
        if nearest.max() <= d_max:
            break
    return SiteSelection(tuple(chosen), float(nearest.max()), float(nearest.mean()), "cc", {"d_max_ms": d_max})


def select_sites_top_k(d: DelayMatrix, k: int) -> SiteSelection:
    """The k highest-CC nodes, regardless of any delay bound."""
    if not 1 <= k <= d.n:
        raise ValueError(f"k must be in [1, {d.n}], got {k}")
    sites = cc_ranking(d)[:k]
    avg, mx = coverage_metrics(d, sites)
    return SiteSelection(tuple(sites), mx, avg, "cc")


def select_sites_random(d: DelayMatrix, k: int, seed: int) -> SiteSelection:
    if not 1 <= k <= d.n:
        raise ValueError(f"k must be in [1, {d.n}], got {k}")
    rng = np.random.default_rng(seed)
    sites = [int(s) for s in rng.choice(d.n, size=k, replace=False)]
    avg, mx = coverage_metrics(d, sites)
    return SiteSelection(tuple(sites), mx, avg, "random", {"seed": seed, "sampling": "independent per k"})
