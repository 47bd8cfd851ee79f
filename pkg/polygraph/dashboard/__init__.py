"""
Benchmark summary views.

Collects benchmark records and condenses them per (algorithm, engine,
workers) cell for a quick look at scaling behaviour.
"""

from typing import Any, Dict, List, Optional
import logging

import pandas as pd

logger = logging.getLogger(__name__)

GROUP_KEYS = ["algorithm", "engine", "workers"]


class Dashboard:
    """Summary of benchmark records."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Initialize the dashboard.

        Args:
            config: Display options; "precision" rounds float columns
        """
        self.config = config or {}
        self.records: List[Dict[str, Any]] = []

    def add_records(self, records: List[Dict[str, Any]]) -> None:
        self.records.extend(records)
        logger.info(f"Added {len(records)} records to dashboard")

    def clear_records(self) -> None:
        self.records = []
        logger.info("Cleared dashboard records")

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records)

    def render_summary(self) -> pd.DataFrame:
        """
        Per-cell means over repetitions.

        Returns:
            One row per (algorithm, engine, workers) with mean wall time,
            supersteps and message volume, the remote message share and
            the number of distinct checksums seen (1 when runs agree)
        """
        if not self.records:
            return pd.DataFrame(columns=GROUP_KEYS + ["runs", "wall_time", "supersteps", "messages_sent",
                                                      "remote_share", "checksums"])
        frame = self.frame()
        summary = frame.groupby(GROUP_KEYS, sort=True).agg(
            runs=("repetition", "count"),
            wall_time=("wall_time", "mean"),
            supersteps=("supersteps", "mean"),
            messages_sent=("messages_sent", "mean"),
            messages_remote=("messages_remote", "sum"),
            messages_total=("messages_sent", "sum"),
            checksums=("checksum", "nunique"),
        ).reset_index()
        total = summary.pop("messages_total")
        remote = summary.pop("messages_remote")
        summary.insert(len(summary.columns) - 1, "remote_share", (remote / total.where(total > 0)).fillna(0.0))
        precision = self.config.get("precision")
        if precision is not None:
            summary = summary.round(precision)
        return summary

    def render_speedup(self) -> pd.DataFrame:
        """Mean wall time of each cell relative to the smallest worker count of its (algorithm, engine)."""
        summary = self.render_summary()
        if summary.empty:
            return summary.assign(speedup=pd.Series(dtype=float))
        baseline = summary.groupby(["algorithm", "engine"])["wall_time"].transform("first")
        return summary.assign(speedup=(baseline / summary["wall_time"].where(summary["wall_time"] > 0)).fillna(0.0))

    def render_text(self) -> str:
        summary = self.render_summary()
        if summary.empty:
            return "no records"
        return summary.to_string(index=False)


__all__ = ["Dashboard"]
