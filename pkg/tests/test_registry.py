import importlib
from pathlib import Path

EXPERIMENTS_DIR = Path(__file__).parent.parent / "src" / "experiments"


def test_builtin_experiments_are_registered():
    from experiments import EXPERIMENT_IMPORT_ERRORS, EXPERIMENT_REGISTRY

    expected = {"info", "curvature", "eigs", "bound-check", "audit", "geodesic", "canonical", "rpca", "project"}
    assert expected <= set(EXPERIMENT_REGISTRY)
    assert not EXPERIMENT_IMPORT_ERRORS
    for name, cls in EXPERIMENT_REGISTRY.items():
        assert cls.name == name


def test_import_errors_are_reported():
    broken_file = EXPERIMENTS_DIR / "tmp_broken_test.py"
    broken_file.write_text("raise ImportError('broken for test')\n", encoding="utf-8")
    import experiments as experiments_module

    try:
        importlib.reload(experiments_module)
        assert "experiments.tmp_broken_test" in experiments_module.EXPERIMENT_IMPORT_ERRORS
        assert "ImportError" in experiments_module.EXPERIMENT_IMPORT_ERRORS["experiments.tmp_broken_test"]
    finally:
        broken_file.unlink(missing_ok=True)
        importlib.reload(experiments_module)


def test_private_modules_are_skipped():
    from experiments import EXPERIMENT_REGISTRY

    assert all(not cls.__module__.rsplit(".", 1)[-1].startswith("_") for cls in EXPERIMENT_REGISTRY.values())
