"""File formats: velocity text files, manifests, run configs and result files."""

from __future__ import annotations

import json
import math
import os
import re
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, ManifestError, ParameterError, ParseError
from .estimate import Surface
from .grid import GridSpec, grid_location
from .kde import VelocityDataset

_SPLIT = re.compile(r"[,\s]+")


# -- velocity files ---------------------------------------------------------

def parse_velocity_file(path) -> VelocityDataset:
    """Read a two-column file of velocity pairs.

    Blank lines and lines starting with ``#`` are ignored; values may be
    separated by commas, whitespace or both.
    """
    path = Path(path)
    rows = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path) from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = [t for t in _SPLIT.split(line) if t]
        if len(tokens) != 2:
            raise ParseError(f"expected 2 values, found {len(tokens)}: {raw!r}", path, lineno)
        try:
            v1, v2 = float(tokens[0]), float(tokens[1])
        except ValueError:
            raise ParseError(f"non-numeric value in {raw!r}", path, lineno) from None
        if not (math.isfinite(v1) and math.isfinite(v2)):
            raise ParseError(f"non-finite value in {raw!r}", path, lineno)
        rows.append((v1, v2))
    if len(rows) < 2:
        raise DegenerateDataError(f"{path}: need at least 2 data rows, found {len(rows)}")
    return VelocityDataset(np.array(rows))


def write_velocity_file(path, data: VelocityDataset, header: str | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.extend(f"{a:.17g},{b:.17g}" for a, b in data.samples)
    path.write_text("\n".join(lines) + "\n")


# -- manifests --------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    k: int
    j: int
    path: Path


@dataclass(frozen=True)
class Manifest:
    grid: GridSpec
    observed_path: Path | None
    entries: tuple[ManifestEntry, ...]
    model_name: str = "model"

    def ordered_paths(self) -> list[Path]:
        """Entry paths sorted into flat-index order."""
        lookup = {(e.k, e.j): e.path for e in self.entries}
        return [lookup[cell] for cell in self.grid.cells()]

    def validate(self, check_files: bool = True) -> None:
        """Raise ManifestError unless every grid cell has exactly one entry."""
        seen = {}
        for e in self.entries:
            cell = (e.k, e.j)
            if not (1 <= e.k <= self.grid.n_r and 1 <= e.j <= self.grid.n_theta):
                raise ManifestError(f"entry for cell ({e.k},{e.j}) lies outside the grid")
            if cell in seen:
                raise ManifestError(f"duplicate entry for cell ({e.k},{e.j})")
            seen[cell] = e.path
        missing = [cell for cell in self.grid.cells() if cell not in seen]
        if missing:
            shown = ", ".join(f"({k},{j})" for k, j in missing[:5])
            more = f" and {len(missing) - 5} more" if len(missing) > 5 else ""
            raise ManifestError(f"missing entry for cell {shown}{more}")
        if check_files:
            paths = list(seen.values())
            if self.observed_path is not None:
                paths.append(self.observed_path)
            for p in paths:
                if not p.is_file():
                    raise ManifestError(f"referenced file does not exist: {p}")

    def load_observed(self) -> VelocityDataset:
        if self.observed_path is None:
            raise ManifestError("manifest has no observed dataset")
        return parse_velocity_file(self.observed_path)

    def load_sims(self) -> list[VelocityDataset]:
        return [parse_velocity_file(p) for p in self.ordered_paths()]

    def to_dict(self, base: Path | None = None) -> dict:
        def rel(p):
            if base is None:
                return str(p)
            return os.path.relpath(Path(p).resolve(), Path(base).resolve())

        return {
            "model_name": self.model_name,
            "grid": self.grid.to_dict(),
            "observed": None if self.observed_path is None else rel(self.observed_path),
            "entries": [{"k": e.k, "j": e.j, "path": rel(e.path)} for e in self.entries],
        }


def read_manifest(path, check_files: bool = True) -> Manifest:
    """Load and validate a JSON manifest; relative paths resolve against its directory."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    base = path.parent
    try:
        grid = GridSpec.from_dict(data.get("grid", {}))
        entries = tuple(
            ManifestEntry(int(e["k"]), int(e["j"]), base / e["path"]) for e in data["entries"]
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"manifest {path} is malformed: {exc!r}") from exc
    observed = data.get("observed")
    manifest = Manifest(
        grid=grid,
        observed_path=None if observed is None else base / observed,
        entries=entries,
        model_name=str(data.get("model_name", "model")),
    )
    manifest.validate(check_files)
    return manifest


def write_manifest(path, manifest: Manifest) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_dict(base=path.parent), indent=2) + "\n")


# -- surfaces and reports ---------------------------------------------------

def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # json writes floats with repr(), which round-trips bit-exactly.
    path.write_text(json.dumps(payload, indent=2, allow_nan=False) + "\n")


def write_surface(path, surface: Surface) -> None:
    write_json(path, surface.to_dict())


def read_surface(path) -> Surface:
    return Surface.from_dict(json.loads(Path(path).read_text()))


def surface_text(surface: Surface) -> str:
    """Three whitespace-separated columns ``r theta value``, flat-index order."""
    lines = [f"# r theta {surface.measure}"]
    for (k, j), value in zip(surface.spec.cells(), surface.values):
        loc = grid_location(k, j, surface.spec)
        lines.append(f"{loc.r!r} {loc.theta!r} {float(value)!r}")
    return "\n".join(lines) + "\n"


def write_surface_text(path, surface: Surface) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(surface_text(surface))


def read_surface_text(path, spec: GridSpec, measure: str) -> Surface:
    values = np.loadtxt(path, comments="#", ndmin=2)[:, 2]
    return Surface(spec, measure, values)


# -- run configuration ------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    r0: float = 1.7
    theta0: float = 0.0
    delta_r: float = 0.025
    delta_theta: float = 10.0
    n_r: int = 24
    n_theta: int = 9
    quad_resolution: int = 256
    bootstrap_b: int = 300
    level: float = 0.95
    alpha: float = 0.5
    seed: int = 20140818
    workers: int = 1
    refit_bandwidth: bool = True

    def __post_init__(self):
        if self.quad_resolution < 16:
            raise ParameterError(f"quad_resolution must be >= 16, got {self.quad_resolution}")
        if self.bootstrap_b < 2:
            raise ParameterError(f"bootstrap_b must be >= 2, got {self.bootstrap_b}")
        if not 0.0 < self.level < 1.0:
            raise ParameterError(f"level must lie in (0, 1), got {self.level}")
        if not 0.0 <= self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")
        self.grid  # validates the grid fields

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.r0, self.theta0, self.delta_r, self.delta_theta, self.n_r, self.n_theta)

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "RunConfig":
        data = self.to_dict()
        data.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig(**data)


_ALIASES = {"threads": "workers", "b": "bootstrap_b", "bootstrap": "bootstrap_b",
            "quadrature": "quad_resolution", "resolution": "quad_resolution"}


def _coerce(name: str, kind, raw: str):
    if kind is bool or kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ParameterError(f"config key {name!r}: expected a boolean, got {raw!r}")
    try:
        if kind is int or kind == "int":
            return int(raw)
        return float(raw)
    except ValueError:
        raise ParameterError(f"config key {name!r}: cannot parse {raw!r}") from None


def parse_config_text(text: str) -> RunConfig:
    """Parse ``key = value`` lines (``:`` also accepted, ``#`` starts a comment)."""
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"^([A-Za-z_][\w.-]*)\s*[=:]\s*(.+)$", line)
        if not m:
            raise ParameterError(f"config line {lineno}: expected key = value, got {raw!r}")
        key = m.group(1).lower().replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in types:
            raise ParameterError(f"config line {lineno}: unknown key {m.group(1)!r}")
        values[key] = _coerce(key, types[key], m.group(2).strip())
    return RunConfig(**values)


def read_config(path) -> RunConfig:
    try:
        return parse_config_text(Path(path).read_text())
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc.strerror}") from exc
