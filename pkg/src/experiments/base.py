# src/experiments/base.py

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.errors import ParseError
from core.mesh import LoadedMesh
from core.shapes import resolve_mesh
from core.timings import StageTimer, StageTiming


class ExperimentConfig(BaseModel):
    """
    Configuration of one experiment run.

    ``params`` is a free mapping validated by the experiment's own params model.
    """

    name: str
    description: str = ""
    mesh: Optional[str] = None
    output_dir: Path = Path("results")
    seed: int = 0
    threads: Optional[int] = Field(default=None, ge=1)
    timings: bool = True
    params: Dict[str, Any] = Field(default_factory=dict)


class ExperimentParams(BaseModel):
    """Base for per-experiment parameter models; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


class RunContext:
    """Per-run services handed to :meth:`Experiment.run`."""

    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.rng = np.random.default_rng(config.seed)
        self.threads = config.threads
        self.timer = StageTimer(enabled=config.timings)
        self.artifacts: List[str] = []

    def artifact(self, name: str) -> Path:
        """Reserve an output file inside the output directory and record it."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        if name not in self.artifacts:
            self.artifacts.append(name)
        return self.output_dir / name

    def load_mesh(self) -> LoadedMesh:
        if not self.config.mesh:
            raise ParseError("No mesh given (use --mesh or the 'mesh' config key)")
        with self.timer.stage("load_mesh"):
            return resolve_mesh(self.config.mesh)


class Experiment(ABC):
    """
    Abstract base class for all experiments (one per CLI subcommand).
    """

    name: ClassVar[str] = ""
    params_model: ClassVar[type[ExperimentParams]] = ExperimentParams

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.params = self.params_model.model_validate(config.params)

    @abstractmethod
    def run(self, ctx: RunContext) -> Dict[str, Any]:
        """
        Execute the experiment and return its JSON-friendly results.

        Concrete experiments must implement this method.
        """
        pass


class ErrorInfo(BaseModel):
    """Machine-readable failure carried by a report."""

    code: str
    type: str
    message: str
    exit_code: int


class RunReport(BaseModel):
    """
    The ``report.json`` written by every run.
    """

    tool: str = "spectralshape"
    version: str
    experiment: str
    status: Literal["ok", "error"]
    config: Dict[str, Any]
    results: Dict[str, Any] = Field(default_factory=dict)
    artifacts: List[str] = Field(default_factory=list)
    timings: List[StageTiming] = Field(default_factory=list)
    total_seconds: Optional[float] = None
    error: Optional[ErrorInfo] = None
