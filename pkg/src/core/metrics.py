"""Utilities for exporting run metrics (Prometheus exposition format)."""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Any, Dict, Iterator, Tuple

try:
    from pydantic import BaseModel
except Exception:  # pragma: no cover
    BaseModel = None  # type: ignore[assignment]

_INVALID = re.compile(r"[^a-zA-Z0-9_]")


def _flatten(payload: Dict[str, Any], prefix: str = "") -> Iterator[Tuple[str, float]]:
    """Yield ``(dotted_key, value)`` for every finite scalar number in a nested mapping."""
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, bool):
            yield name, float(value)
        elif isinstance(value, (int, float)):
            if math.isfinite(value):
                yield name, float(value)
        elif isinstance(value, dict):
            yield from _flatten(value, prefix=f"{name}_")


class PrometheusExporter:
    """Write execution metrics in the Prometheus text exposition format."""

    @staticmethod
    def write_metrics(path: Path, experiment: str, duration: float, result: Any) -> None:
        """
        Persist metrics for a single experiment run.

        Parameters
        ----------
        path:
            Output file path; parent directories will be created if missing.
        experiment:
            Experiment name (label value).
        duration:
            Total execution duration in seconds.
        result:
            Results mapping (dict/Pydantic supported); every scalar number becomes a
            ``spectralshape_result`` sample labelled with its key.
        """

        path.parent.mkdir(parents=True, exist_ok=True)

        payload: Dict[str, Any] = {}
        if isinstance(result, dict):
            payload = result
        elif BaseModel is not None and isinstance(result, BaseModel):  # type: ignore[arg-type]
            payload = result.model_dump()

        lines: list[str] = []
        lines.append("# HELP spectralshape_run_duration_seconds Experiment execution duration.")
        lines.append("# TYPE spectralshape_run_duration_seconds gauge")
        lines.append(f'spectralshape_run_duration_seconds{{experiment="{experiment}"}} {duration:.6f}')

        scalars = list(_flatten(payload))
        if scalars:
            lines.append("# HELP spectralshape_result Scalar results of the experiment.")
            lines.append("# TYPE spectralshape_result gauge")
            for key, value in scalars:
                label = _INVALID.sub("_", key)
                lines.append(f'spectralshape_result{{experiment="{experiment}",key="{label}"}} {value!r}')

        lines.append("")  # ensure trailing newline
        path.write_text("\n".join(lines), encoding="utf-8")
