"""
Experiment registry.

Built-in experiments are found by walking this package; third-party ones come from the
``spectralshape.experiments`` entry-point group. Failed imports are kept in
``EXPERIMENT_IMPORT_ERRORS`` for ``list-experiments --show-errors``.
"""

import importlib
import inspect
import logging
import pkgutil
from pathlib import Path
from typing import Dict, Iterable

from .base import Experiment

EXPERIMENT_REGISTRY: Dict[str, type[Experiment]] = {}
EXPERIMENT_IMPORT_ERRORS: Dict[str, str] = {}

ENTRY_POINT_GROUP = "spectralshape.experiments"


def _is_experiment(obj: object) -> bool:
    return inspect.isclass(obj) and issubclass(obj, Experiment) and obj is not Experiment and bool(obj.name)


def register(cls: type[Experiment]) -> None:
    """Add ``cls`` under its ``name``; a later registration replaces an earlier one."""
    previous = EXPERIMENT_REGISTRY.get(cls.name)
    if previous is not None and previous is not cls:
        logging.debug("[registry] %s replaces %s for '%s'", cls.__qualname__, previous.__qualname__, cls.name)
    EXPERIMENT_REGISTRY[cls.name] = cls


def _builtin_modules() -> Iterable[str]:
    root = Path(__file__).parent
    for _, modname, _ in pkgutil.walk_packages([str(root)], prefix=f"{__name__}."):
        leaf = modname.rsplit(".", 1)[-1]
        if leaf == "base" or leaf.startswith("_"):
            continue
        yield modname


def discover_builtin() -> None:
    for modname in _builtin_modules():
        try:
            module = importlib.import_module(modname)
        except Exception as e:
            EXPERIMENT_IMPORT_ERRORS[modname] = f"{type(e).__name__}: {e}"
            continue
        for _, obj in inspect.getmembers(module, _is_experiment):
            if obj.__module__ == module.__name__:
                register(obj)


def discover_entry_points() -> None:
    from importlib import metadata

    eps = metadata.entry_points()
    select = getattr(eps, "select", None)
    selected = select(group=ENTRY_POINT_GROUP) if callable(select) else eps.get(ENTRY_POINT_GROUP, [])  # type: ignore[attr-defined]
    for ep in selected:
        try:
            obj = ep.load()
        except Exception as e:
            EXPERIMENT_IMPORT_ERRORS[str(ep)] = f"{type(e).__name__}: {e}"
            continue
        if _is_experiment(obj):
            register(obj)
        else:
            EXPERIMENT_IMPORT_ERRORS[str(ep)] = "TypeError: not an Experiment subclass with a name"


discover_builtin()
discover_entry_points()

__all__ = [
    "ENTRY_POINT_GROUP",
    "EXPERIMENT_IMPORT_ERRORS",
    "EXPERIMENT_REGISTRY",
    "discover_builtin",
    "discover_entry_points",
    "register",
]
