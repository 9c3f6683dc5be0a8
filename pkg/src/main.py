import inspect
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import typer
from pydantic import ValidationError

from core.errors import InputError, SpectralShapeError
from core.i18n import I18N, t
from core.metrics import PrometheusExporter
from experiments import EXPERIMENT_IMPORT_ERRORS, EXPERIMENT_REGISTRY  # dynamic experiment registry
from experiments.base import ErrorInfo, Experiment, ExperimentConfig, RunContext, RunReport

__version__ = "0.1.0"

ENV_PREFIX = "SPECTRALSHAPE_"
REPORT_NAME = "report.json"

app = typer.Typer(help="spectralshape - Laplace-Beltrami spectral geometry experiments")

# Global options captured by the root callback
_STATE: Dict[str, Any] = {}


@app.callback()
def _configure(
    log_level: str = typer.Option(
        "INFO",
        "--log-level",
        help="Logging level (CRITICAL, ERROR, WARNING, INFO, DEBUG)",
        show_default=True,
    ),
    lang: str = typer.Option(
        os.environ.get(f"{ENV_PREFIX}LANG", "en"),
        "--lang",
        help="CLI language (en or pl)",
        show_default=False,
    ),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", help="Directory for report and artifacts"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed (default 0)"),
    threads: Optional[int] = typer.Option(None, "--threads", min=1, help="Cap on internal parallelism"),
    timings: Optional[bool] = typer.Option(
        None, "--timings/--no-timings", help="Record stage durations (off: byte-identical reports)"
    ),
    metrics_path: Optional[Path] = typer.Option(
        None, "--metrics-path", help="Write Prometheus metrics to this file"
    ),
    config: Optional[Path] = typer.Option(None, "--config", help="Experiment config file (JSON or YAML)"),
    param: List[str] = typer.Option(None, "--param", help="Override config params key=value (repeatable)"),
):
    """Global CLI configuration (logging, language, run settings)."""
    level_name = str(log_level).upper()
    valid = {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "NOTSET"}
    if level_name not in valid:
        raise typer.BadParameter(f"Invalid log level: {log_level}")
    level = getattr(logging, level_name, logging.INFO)
    try:
        from rich.logging import RichHandler  # type: ignore

        logging.basicConfig(
            level=level,
            format="%(message)s",
            handlers=[RichHandler(rich_tracebacks=True, markup=False)],
            force=True,
        )
    except Exception:
        logging.basicConfig(
            level=level,
            format="%(levelname)s: %(message)s",
            handlers=[logging.StreamHandler(sys.stderr)],
            force=True,
        )
    I18N.set_language(lang)
    _STATE.clear()
    _STATE.update(
        {
            "output_dir": output_dir,
            "seed": seed,
            "threads": threads,
            "timings": timings,
            "metrics_path": metrics_path,
            "config": config,
            "param": list(param or []),
        }
    )
    logging.debug("spectralshape logger initialized (level=%s, lang=%s)", level_name, I18N.get_language())


# ---------------------
# Config layering
# ---------------------


def _deep_merge(a: dict[str, Any], b: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge mapping ``b`` into ``a`` without mutating inputs."""
    out: dict[str, Any] = dict(a)
    for k, v in (b or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_params(params: Optional[list[str]]) -> dict[str, Any]:
    """Parse CLI ``key=value`` overrides into JSON-compatible types."""
    result: dict[str, Any] = {}
    if not params:
        return result
    for item in params:
        if "=" not in item:
            raise InputError(f"--param expects key=value, got '{item}'")
        k, v = item.split("=", 1)
        try:
            result[k] = json.loads(v)
        except Exception:
            result[k] = v
    return result


def _load_config_file(config_path: Path) -> dict[str, Any]:
    suffix = config_path.suffix.lower()
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            if suffix in {".yml", ".yaml"}:
                import yaml

                data = yaml.safe_load(f) or {}
            else:
                data = json.load(f)
    except FileNotFoundError as e:
        raise InputError(f"Config file not found: {config_path}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"Invalid JSON in config file {config_path}: {e}") from e
    except Exception as e:
        raise InputError(f"Failed to load config file {config_path}: {type(e).__name__}: {e}") from e
    if not isinstance(data, dict):
        raise InputError(f"Config file {config_path} must hold a mapping, got {type(data).__name__}")
    logging.debug("[config] loaded config file %s (keys=%s)", config_path, list(data.keys()))
    return data


def _build_config(
    experiment: str,
    config_path: Optional[Path],
    cli_params: Optional[list[str]],
    flags: Optional[dict[str, Any]] = None,
    mesh: Optional[str] = None,
) -> ExperimentConfig:
    """Assemble an ExperimentConfig: file -> environment -> --param -> explicit flags."""
    data: dict[str, Any] = _load_config_file(config_path) if config_path is not None else {}
    data.setdefault("name", experiment)
    if data.get("params") is not None and not isinstance(data["params"], dict):
        raise InputError(f"Expected 'params' to be a mapping, got {type(data['params']).__name__}")

    params_env = os.environ.get(f"{ENV_PREFIX}PARAMS")
    if params_env:
        try:
            penv = json.loads(params_env)
        except json.JSONDecodeError as e:
            raise InputError(f"Environment variable {ENV_PREFIX}PARAMS must be valid JSON: {e}") from e
        data["params"] = _deep_merge(data.get("params") or {}, penv)
        logging.debug("[config] merged params from environment (keys=%s)", list(data["params"].keys()))
    for key in ("output_dir", "threads"):
        value = os.environ.get(f"{ENV_PREFIX}{key.upper()}")
        if value:
            data[key] = value

    pcli = _parse_params(cli_params)
    if pcli:
        data["params"] = _deep_merge(data.get("params") or {}, pcli)
        logging.debug("[config] merged params from CLI (keys=%s)", list(pcli.keys()))

    for key in ("output_dir", "seed", "threads", "timings"):
        if _STATE.get(key) is not None:
            data[key] = _STATE[key]
    explicit = {k: v for k, v in (flags or {}).items() if v is not None and v != []}
    if explicit:
        data["params"] = _deep_merge(data.get("params") or {}, explicit)
    if mesh is not None:
        data["mesh"] = mesh
    config_obj = ExperimentConfig(**data)
    logging.debug("[config] final ExperimentConfig(name=%s, mesh=%s)", config_obj.name, config_obj.mesh)
    return config_obj


# ---------------------
# Execution and reports
# ---------------------


def _jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def _error_info(exc: Exception) -> ErrorInfo:
    if isinstance(exc, SpectralShapeError):
        return ErrorInfo(**exc.to_dict())
    if isinstance(exc, ValidationError):
        return ErrorInfo(code="invalid_parameter", type="ValidationError", message=str(exc), exit_code=1)
    if isinstance(exc, np.linalg.LinAlgError):
        return ErrorInfo(code="linear_algebra_failure", type="LinAlgError", message=str(exc), exit_code=2)
    return ErrorInfo(code="input_error", type=type(exc).__name__, message=str(exc), exit_code=1)


def _write_report(report: RunReport, output_dir: Path) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / REPORT_NAME
    payload = _jsonable(report.model_dump(mode="python"))
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def _fallback_output_dir() -> Path:
    return Path(_STATE.get("output_dir") or os.environ.get(f"{ENV_PREFIX}OUTPUT_DIR") or "results")


def _execute(
    experiment: str,
    mesh: Optional[str] = None,
    flags: Optional[dict[str, Any]] = None,
    config_path: Optional[Path] = None,
    extra_params: Optional[list[str]] = None,
) -> None:
    logging.debug("[cli] %s invoked (mesh=%s, flags=%s)", experiment, mesh, sorted((flags or {}).keys()))
    if experiment not in EXPERIMENT_REGISTRY:
        typer.echo(
            t("experiment_not_found", experiment=experiment, available=sorted(EXPERIMENT_REGISTRY.keys())),
            err=True,
        )
        raise typer.Exit(code=1)
    experiment_cls = EXPERIMENT_REGISTRY[experiment]

    timings = _STATE.get("timings")
    report = RunReport(version=__version__, experiment=experiment, status="error", config={})
    output_dir = _fallback_output_dir()
    start_t = time.perf_counter()
    ctx: Optional[RunContext] = None
    error: Optional[ErrorInfo] = None
    try:
        config_obj = _build_config(
            experiment,
            config_path or _STATE.get("config"),
            list(_STATE.get("param") or []) + list(extra_params or []),
            flags,
            mesh,
        )
        output_dir = config_obj.output_dir
        timings = config_obj.timings
        instance: Experiment = experiment_cls(config_obj)
        report.config = {
            **config_obj.model_dump(mode="json", exclude={"params"}),
            "params": instance.params.model_dump(mode="json"),
        }
        ctx = RunContext(config_obj)
        results = instance.run(ctx)
        report.status = "ok"
        report.results = _jsonable(results)
    except (SpectralShapeError, ValidationError, np.linalg.LinAlgError) as exc:
        error = _error_info(exc)
        report.error = error
        key = "numerical_failure" if error.exit_code == 2 else "input_error"
        typer.echo(t(key, code=error.code, message=error.message), err=True)
    duration = time.perf_counter() - start_t
    if ctx is not None:
        report.artifacts = list(ctx.artifacts)
        report.timings = ctx.timer.stages()
    report.total_seconds = duration if timings is not False else None

    path = _write_report(report, output_dir)
    logging.debug("[cli] %s finished with status=%s", experiment, report.status)
    typer.echo(t("report_written", path=path))
    metrics_path = _STATE.get("metrics_path")
    if metrics_path is not None:
        PrometheusExporter.write_metrics(metrics_path, experiment, duration, report.results)
    if error is not None:
        raise typer.Exit(code=error.exit_code)


# ---------------------
# Subcommands
# ---------------------

MeshOption = typer.Option(None, "--mesh", help="OFF/OBJ file or fixture (icosphere:3, grid:64, tetrahedron, ...)")


@app.command()
def info(mesh: Optional[str] = MeshOption):
    """Mesh statistics (counts, Euler characteristic, boundary, area)."""
    _execute("info", mesh)


@app.command()
def curvature(
    mesh: Optional[str] = MeshOption,
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Metric interpolation in [0, 1]"),
    epsilon: Optional[float] = typer.Option(None, "--epsilon", help="Curvature floor"),
):
    """Per-vertex Gaussian curvature, area and metric weight (curvature.csv)."""
    _execute("curvature", mesh, {"alpha": alpha, "epsilon": epsilon})


@app.command()
def eigs(
    mesh: Optional[str] = MeshOption,
    k: Optional[int] = typer.Option(None, "--k", help="Number of eigenpairs"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Metric interpolation in [0, 1]"),
    epsilon: Optional[float] = typer.Option(None, "--epsilon", help="Curvature floor"),
    format: Optional[str] = typer.Option(None, "--format", help="Eigenvector file format: spmx|csv"),
    solver: Optional[str] = typer.Option(None, "--solver", help="Eigensolver: auto|sparse|dense"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Eigensolver tolerance"),
):
    """Smallest Laplace-Beltrami eigenpairs (eigenvalues.csv, eigenvectors file)."""
    _execute(
        "eigs",
        mesh,
        {"k": k, "alpha": alpha, "epsilon": epsilon, "format": format, "solver": solver, "tol": tol},
    )


@app.command("bound-check")
def bound_check(
    mesh: Optional[str] = MeshOption,
    n: List[int] = typer.Option(None, "--n", help="Truncation order (repeatable)"),
    k: Optional[int] = typer.Option(None, "--k", help="Eigenpairs to compute (default max n + 1)"),
    fields: Optional[int] = typer.Option(None, "--fields", help="Number of seeded random fields"),
    field: Optional[str] = typer.Option(None, "--field", help="Field file (.csv/.spmx) instead of random fields"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Metric interpolation in [0, 1]"),
    solver: Optional[str] = typer.Option(None, "--solver", help="Eigensolver: auto|sparse|dense"),
):
    """Representation-error bound against the Dirichlet energy."""
    _execute(
        "bound-check",
        mesh,
        {"n": list(n or []), "k": k, "fields": fields, "field": field, "alpha": alpha, "solver": solver},
    )


@app.command()
def audit(
    mesh: Optional[str] = MeshOption,
    n: Optional[int] = typer.Option(None, "--n", help="Rival frame size"),
    trials: Optional[int] = typer.Option(None, "--trials", help="Number of random rivals"),
    k: Optional[int] = typer.Option(None, "--k", help="Eigenpairs to compute (default n + 1)"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Metric interpolation in [0, 1]"),
    include_constant: Optional[bool] = typer.Option(
        None, "--include-constant/--no-include-constant", help="Put the constant field in every rival"
    ),
    solver: Optional[str] = typer.Option(None, "--solver", help="Eigensolver: auto|sparse|dense"),
):
    """Optimality audit of the eigenbasis against random rival frames."""
    _execute(
        "audit",
        mesh,
        {"n": n, "trials": trials, "k": k, "alpha": alpha, "include_constant": include_constant, "solver": solver},
    )


@app.command()
def geodesic(
    mesh: Optional[str] = MeshOption,
    samples: Optional[int] = typer.Option(None, "--samples", help="Farthest-point sample count"),
    source: List[int] = typer.Option(None, "--source", help="Explicit source vertex (repeatable)"),
    start: Optional[int] = typer.Option(None, "--start", help="First farthest-point sample"),
    refine: Optional[bool] = typer.Option(None, "--refine/--no-refine", help="Unfolding refinement"),
    format: Optional[str] = typer.Option(None, "--format", help="Distance file format: csv|spmx"),
):
    """Geodesic distance rows from sampled sources."""
    _execute(
        "geodesic",
        mesh,
        {"samples": samples, "sources": list(source or []), "start": start, "refine": refine, "format": format},
    )


@app.command()
def canonical(
    mesh: Optional[str] = MeshOption,
    samples: Optional[int] = typer.Option(None, "--samples", help="Farthest-point sample count p"),
    k: Optional[int] = typer.Option(None, "--k", help="Eigenbasis size"),
    m: Optional[int] = typer.Option(None, "--m", help="Embedding dimension"),
    eta: Optional[float] = typer.Option(None, "--eta", help="Biharmonic regularizer weight"),
    method: Optional[str] = typer.Option(None, "--method", help="classical|spectral"),
    weighting: Optional[str] = typer.Option(None, "--weighting", help="Spectral centering: euclidean|mass"),
    refine: Optional[bool] = typer.Option(None, "--refine/--no-refine", help="Unfolding refinement"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Metric interpolation in [0, 1]"),
):
    """Flat canonical form by classical or spectral scaling (embedding.off)."""
    _execute(
        "canonical",
        mesh,
        {
            "samples": samples,
            "k": k,
            "m": m,
            "eta": eta,
            "method": method,
            "weighting": weighting,
            "refine": refine,
            "alpha": alpha,
        },
    )


@app.command()
def rpca(
    mesh: Optional[str] = MeshOption,
    data: List[str] = typer.Option(None, "--data", help="Training field/coordinate file (repeatable)"),
    test: Optional[str] = typer.Option(None, "--test", help="Held-out field/coordinate file to compare bases"),
    mu: Optional[str] = typer.Option(None, "--mu", help="Value, list a,b,c or log sweep lo:hi:steps"),
    m: Optional[int] = typer.Option(None, "--m", help="Basis size"),
    calibrated: Optional[bool] = typer.Option(None, "--calibrated/--raw", help="Read --mu as calibrated mu-hat"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Metric interpolation in [0, 1]"),
):
    """Regularized PCA over a mu sweep (bases, objective terms, reconstructions)."""
    _execute(
        "rpca",
        mesh,
        {"data": list(data or []), "test": test, "mu": mu, "m": m, "calibrated": calibrated, "alpha": alpha},
    )


@app.command()
def project(
    mesh: Optional[str] = MeshOption,
    k: Optional[int] = typer.Option(None, "--k", help="Eigenbasis size"),
    n: List[int] = typer.Option(None, "--n", help="Truncation order (repeatable)"),
    alpha: List[float] = typer.Option(None, "--alpha", help="Metric interpolation (repeatable)"),
):
    """Reconstruct coordinates from the first n eigenfunctions per metric."""
    _execute("project", mesh, {"k": k, "n": list(n or []), "alphas": list(alpha or [])})


def complete_experiment(incomplete: str) -> list[str]:
    """Return experiment names that match the provided prefix (case-insensitive)."""
    text = (incomplete or "").lower()
    return [name for name in EXPERIMENT_REGISTRY.keys() if name.lower().startswith(text)]


@app.command()
def run(
    experiment: str = typer.Option(
        ..., "--experiment", help="Experiment name (e.g. eigs)", autocompletion=complete_experiment
    ),
    mesh: Optional[str] = MeshOption,
    config: Optional[Path] = typer.Option(None, "--config", help="Experiment config file (JSON or YAML)"),
    param: List[str] = typer.Option(None, "--param", help="Override config params key=value (repeatable)"),
):
    """
    Run any registered experiment from a config file and parameter overrides.
    """
    _execute(experiment, mesh, None, config, list(param or []))


@app.command("list-experiments")
def list_experiments(
    verbose: bool = typer.Option(False, "--verbose", help="Show docstring, module and parameters"),
    show_errors: bool = typer.Option(False, "--show-errors", help="Show experiment import errors"),
    format: str = typer.Option("text", "--format", help="Output format: text|json"),
):
    """Display the list of available experiments."""
    fmt = (format or "text").lower()
    if fmt not in {"text", "json"}:
        raise typer.BadParameter("--format must be 'text' or 'json'")
    names = sorted(EXPERIMENT_REGISTRY.keys())
    if fmt == "json":
        items = []
        for name in names:
            cls = EXPERIMENT_REGISTRY[name]
            item: dict[str, Any] = {"name": name}
            if verbose:
                item["module"] = cls.__module__
                item["class"] = cls.__name__
                doc = inspect.getdoc(cls) or ""
                if doc:
                    item["doc"] = doc
                item["params"] = sorted(cls.params_model.model_fields.keys())
            items.append(item)
        out: dict[str, Any] = {"experiments": items}
        if show_errors and EXPERIMENT_IMPORT_ERRORS:
            out["errors"] = {k: str(v) for k, v in EXPERIMENT_IMPORT_ERRORS.items()}
        typer.echo(json.dumps(out, ensure_ascii=False))
        return
    typer.echo("Available experiments:")
    for name in names:
        cls = EXPERIMENT_REGISTRY[name]
        if verbose:
            typer.echo(f" - {name} ({cls.__module__}.{cls.__name__})")
            doc = (inspect.getdoc(cls) or "").splitlines()
            if doc:
                typer.echo(f"   doc: {doc[0]}")
            typer.echo(f"   params: {', '.join(sorted(cls.params_model.model_fields.keys())) or '-'}")
        else:
            typer.echo(f" - {name}")
    if show_errors:
        if EXPERIMENT_IMPORT_ERRORS:
            typer.echo("Import errors:")
            for mod, err in EXPERIMENT_IMPORT_ERRORS.items():
                typer.echo(f" - {mod}: {err}")
        else:
            typer.echo("No import errors.")


@app.command()
def schema(
    output: Optional[Path] = typer.Option(None, "--output", help="Write the schema here instead of stdout"),
):
    """JSON schema of report.json."""
    text = json.dumps(RunReport.model_json_schema(), indent=2, ensure_ascii=False) + "\n"
    if output is None:
        typer.echo(text, nl=False)
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text, encoding="utf-8")
    typer.echo(t("schema_written", path=output))


if __name__ == "__main__":
    app()
