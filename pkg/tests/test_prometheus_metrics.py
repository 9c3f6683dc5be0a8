from typer.testing import CliRunner

from core.metrics import PrometheusExporter
from main import app


def test_metrics_export_from_run(tmp_path):
    metrics_file = tmp_path / "metrics.prom"
    runner = CliRunner()
    result = runner.invoke(
        app,
        [
            "--metrics-path",
            str(metrics_file),
            "--output-dir",
            str(tmp_path / "out"),
            "info",
            "--mesh",
            "tetrahedron",
        ],
    )
    assert result.exit_code == 0, result.output
    text = metrics_file.read_text(encoding="utf-8")
    assert 'spectralshape_run_duration_seconds{experiment="info"}' in text
    assert 'spectralshape_result{experiment="info",key="n_vertices"} 4.0' in text
    assert 'key="is_closed"} 1.0' in text


def test_nested_and_non_finite_results(tmp_path):
    path = tmp_path / "m.prom"
    PrometheusExporter.write_metrics(
        path,
        "audit",
        0.5,
        {"orders": {"5": {"max_ratio": 0.25}}, "worst": float("inf"), "label": "x", "ok": False},
    )
    text = path.read_text(encoding="utf-8")
    assert 'key="orders_5_max_ratio"} 0.25' in text
    assert "worst" not in text
    assert "label" not in text
    assert 'key="ok"} 0.0' in text
    assert text.endswith("\n")
