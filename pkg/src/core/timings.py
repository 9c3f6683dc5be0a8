import time
from contextlib import contextmanager
from typing import Iterator, List, Optional

from pydantic import BaseModel


class StageTiming(BaseModel):
    """Wall-clock duration of one named stage; ``seconds`` is None when timings are off."""

    stage: str
    seconds: Optional[float] = None


class StageTimer:
    """
    Ordered record of experiment stages.
    """

    def __init__(self, enabled: bool = True) -> None:
        self.enabled = enabled
        self._stages: List[StageTiming] = []

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Time the enclosed block and append it under ``name``."""
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self._stages.append(StageTiming(stage=name, seconds=elapsed if self.enabled else None))

    def stages(self) -> List[StageTiming]:
        """Return a shallow copy of recorded stages."""
        return list(self._stages)

    def total(self) -> Optional[float]:
        if not self.enabled:
            return None
        return sum(s.seconds or 0.0 for s in self._stages)

    def to_dict(self) -> List[dict]:
        return [s.model_dump(mode="json") for s in self._stages]
