"""Locating and caching compiled models.

Bundled models live in the package's models/ directory; a models dir on
disk (CLI flag or service configuration) takes precedence for name
clashes.  Compilation is cached per (path, config overrides).
"""

from __future__ import annotations

import importlib.resources
from pathlib import Path
from typing import Dict, Optional, Tuple

from .ir import load_model
from .semantics import CompiledModule, compile_module


def bundled_dir() -> Path:
    return Path(importlib.resources.files("csptree") / "models")


def scenarios_dir() -> Path:
    return Path(importlib.resources.files("csptree") / "scenarios")


def available_models(models_dir: Optional[Path] = None) -> Dict[str, Path]:
    out: Dict[str, Path] = {}
    for d in filter(None, [bundled_dir(), models_dir]):
        d = Path(d)
        if d.is_dir():
            for p in sorted(d.glob("*.json")):
                out[p.stem] = p
    return out


def resolve_model_path(name_or_path: str, models_dir: Optional[Path] = None) -> Path:
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        return p
    models = available_models(models_dir)
    if name_or_path in models:
        return models[name_or_path]
    raise FileNotFoundError(f"no model named {name_or_path!r}")


_cache: Dict[Tuple[str, Tuple[Tuple[str, int], ...]], CompiledModule] = {}


def load_compiled(
    name_or_path: str,
    overrides: Optional[Dict[str, int]] = None,
    models_dir: Optional[Path] = None,
) -> CompiledModule:
    path = resolve_model_path(name_or_path, models_dir)
    key = (str(path.resolve()), tuple(sorted((overrides or {}).items())))
    if key not in _cache:
        _cache[key] = compile_module(load_model(path, overrides))
    return _cache[key]


def resolve_scenario_path(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    cand = scenarios_dir() / f"{name_or_path}.scn"
    if cand.exists():
        return cand
    cand = scenarios_dir() / name_or_path
    if cand.exists():
        return cand
    raise FileNotFoundError(f"no scenario named {name_or_path!r}")
