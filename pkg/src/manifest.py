"""
manifest.py — Provenance record written next to every output.

Identical inputs give identical manifests apart from ``timestamp``.
"""

from __future__ import annotations

import datetime
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import config


def sha256_of_file(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as f:
        for block in iter(lambda: f.read(1024 * 1024), b""):
            h.update(block)
    return h.hexdigest()


def _utc_now() -> str:
    dt = datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0)
    return dt.isoformat().replace("+00:00", "Z")


def _plain(value: Any) -> Any:
    """Dataclasses, paths and tuples → JSON-ready values."""
    if hasattr(value, "__dataclass_fields__"):
        return {k: _plain(v) for k, v in asdict(value).items()}
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def numerical_defaults() -> dict[str, Any]:
    """Fixed tolerances and grid defaults, so a manifest is self-describing."""
    return {
        "geometry_form_default": config.GEOMETRY_FORM,
        "quad_rel_tol": config.QUAD_REL_TOL,
        "quad_alpha_max_factor": config.QUAD_ALPHA_MAX_FACTOR,
        "quad_max_panels": config.QUAD_MAX_PANELS,
        "quad_gauss_order": config.QUAD_GAUSS_ORDER,
        "alpha0_rel_tol": config.ALPHA0_REL_TOL,
        "f_min_hz": config.F_MIN_HZ,
        "f_max_hz": config.F_MAX_HZ,
        "points_per_decade": config.POINTS_PER_DECADE,
        "ln_ratio_clamp": config.LN_RATIO_CLAMP,
        "thin_regime_limit": config.THIN_REGIME_LIMIT,
        "full_mode_rel_tol": config.FULL_MODE_REL_TOL,
        "full_mode_max_iter": config.FULL_MODE_MAX_ITER,
    }


@dataclass
class RunManifest:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)   # path → sha256
    defaults: dict[str, Any] = field(default_factory=numerical_defaults)
    tool: str = config.TOOL_NAME
    version: str = config.TOOL_VERSION
    timestamp: str = field(default_factory=_utc_now)

    @classmethod
    def build(
        cls,
        command: str,
        params: Mapping[str, Any],
        input_paths: Optional[list[Path]] = None,
    ) -> "RunManifest":
        inputs = {str(p): sha256_of_file(p) for p in (input_paths or [])}
        return cls(command=command, params=_plain(params), inputs=inputs)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return path


def manifest_path_for(output: Path) -> Path:
    """``spectrum.csv`` → ``spectrum.csv.manifest.json``."""
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")
