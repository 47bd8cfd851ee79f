"""
Algorithm result types, text export and order-independent checksums.

Per-vertex outputs are written as "vertex<TAB>value" lines and scalar
summaries as "key=value" lines. Floats are rendered with 9 significant
digits everywhere so checksums agree across engines whose float sums differ
only in the last bits.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, TextIO
import hashlib
import math

from ..graph.hashing import MASK64


def canonical(value: Any) -> str:
    """Stable text form of an output value."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.9g}"
    if value is None:
        return "none"
    return str(value)


def _line_hash(text: str) -> int:
    return int(hashlib.md5(text.encode()).hexdigest()[:16], 16)


def checksum(outputs: Dict[int, Any], scalars: Optional[Dict[str, Any]] = None) -> str:
    """Sum of per-line hashes mod 2**64, so line order does not matter."""
    total = 0
    for v, value in outputs.items():
        total = (total + _line_hash(f"{v}\t{canonical(value)}")) & MASK64
    for key, value in (scalars or {}).items():
        total = (total + _line_hash(f"{key}={canonical(value)}")) & MASK64
    return f"{total:016x}"


class AlgorithmResult:
    """Common export surface of the result types."""

    def outputs(self) -> Dict[int, Any]:
        """Per-vertex outputs keyed by dense vertex id."""
        raise NotImplementedError

    def summary(self) -> Dict[str, Any]:
        return {}

    def checksum_scalars(self) -> Dict[str, Any]:
        """Scalars that take part in the checksum besides the per-vertex outputs."""
        return {}

    def checksum(self) -> str:
        return checksum(self.outputs(), self.checksum_scalars())

    def write(self, sink: TextIO, labels: Optional[List[int]] = None) -> None:
        """Write per-vertex lines (original ids when labels are given) then the summary."""
        for v, value in sorted(self.outputs().items()):
            vertex = labels[v] if labels is not None else v
            sink.write(f"{vertex}\t{canonical(value)}\n")
        for key, value in self.summary().items():
            sink.write(f"{key}={canonical(value)}\n")


@dataclass
class ComponentLabeling(AlgorithmResult):
    """label(v) is the minimum vertex id of v's component."""
    labels: List[int]

    def outputs(self) -> Dict[int, Any]:
        return dict(enumerate(self.labels))

    def summary(self) -> Dict[str, Any]:
        return {"components": len(set(self.labels))}


@dataclass
class CommunityLabeling(AlgorithmResult):
    labels: List[int]
    converged: bool
    rounds: int = 0
    oscillation_period: Optional[int] = None

    def outputs(self) -> Dict[int, Any]:
        return dict(enumerate(self.labels))

    def summary(self) -> Dict[str, Any]:
        return {
            "communities": len(set(self.labels)),
            "converged": self.converged,
            "rounds": self.rounds,
            "oscillation_period": self.oscillation_period,
        }


@dataclass
class PageRankScores(AlgorithmResult):
    scores: List[float]
    alpha: float
    mode: str
    iterations: int
    tolerance: Optional[float] = None
    max_delta: float = 0.0

    def outputs(self) -> Dict[int, Any]:
        return dict(enumerate(self.scores))

    def summary(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "mode": self.mode,
            "iterations": self.iterations,
            "tolerance": self.tolerance,
            "max_delta": self.max_delta,
        }


@dataclass
class ClusteringResult(AlgorithmResult):
    """
    Exact results fill `local` (v in V' only), triangles and triplets.
    Approximate results fill samples, hits and estimate instead.
    """
    local: Dict[int, float] = field(default_factory=dict)
    average_local: float = 0.0
    global_coefficient: float = 0.0
    triangles: int = 0
    triplets: int = 0
    target: Optional[str] = None
    samples: int = 0
    hits: int = 0

    @property
    def approximate(self) -> bool:
        return self.target is not None

    @property
    def estimate(self) -> float:
        return self.hits / self.samples if self.samples else 0.0

    def outputs(self) -> Dict[int, Any]:
        return dict(self.local)

    def summary(self) -> Dict[str, Any]:
        if self.approximate:
            return {"target": self.target, "samples": self.samples, "hits": self.hits, "estimate": self.estimate}
        return {
            "average_local": self.average_local,
            "global": self.global_coefficient,
            "triangles": self.triangles,
            "triplets": self.triplets,
        }

    def checksum_scalars(self) -> Dict[str, Any]:
        if self.approximate:
            return {"estimate": self.estimate}
        return {"average_local": self.average_local, "global": self.global_coefficient}
