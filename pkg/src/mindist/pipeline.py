"""End-to-end run: load, fit, surfaces, extrema, bootstrap, cross-validation."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from . import divergence as dv
from . import io
from .crossval import CrossValReport, crossval_from_estimates
from .errors import MindistError, ParseError
from .estimate import Estimate, Surface, best_location, fit_suite, surface_from_estimates
from .grid import flat_index
from .kde import fit_kde
from .uncertainty import ConfidenceSet, bootstrap_confidence_set


@dataclass
class PipelineResult:
    surfaces: dict[str, Surface]
    estimates: dict[str, Estimate]
    confidence_set: ConfidenceSet | None = None
    crossval: CrossValReport | None = None
    metadata: dict = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)


def config_hash(config: io.RunConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


class _stage:
    """Re-raise package errors with the failing stage prefixed to the message."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None or not isinstance(exc, MindistError):
            return False
        msg = f"stage '{self.name}': {exc}"
        try:
            new = ParseError(msg) if isinstance(exc, ParseError) else type(exc)(msg)
        except TypeError:
            return False
        raise new from exc


def run_pipeline(
    manifest: io.Manifest,
    config: io.RunConfig | None = None,
    measures: Sequence[str] = (dv.AFFINITY,),
    bootstrap: bool = False,
    crossval: bool = False,
    out_dir: str | Path | None = None,
) -> PipelineResult:
    """Run the estimation workflow on a manifest and optionally write every artifact.

    Files written to ``out_dir``: ``surface_<measure>.json`` and ``.txt`` per
    measure, ``estimates.json``, ``confidence_set.json`` when bootstrapping,
    ``crossval.json`` and ``crossval.txt`` when cross-validating, and
    ``metadata.json``.
    """
    config = config or io.RunConfig()
    started = time.perf_counter()
    spec = manifest.grid
    with _stage("validate"):
        measures = list(dict.fromkeys(dv.normalize_measure(m) for m in measures))
        if not measures:
            measures = [dv.AFFINITY]
        if config.grid != spec:
            # the manifest owns the grid its files were generated on
            config = config.replace(**spec.to_dict())
        manifest.validate()
    with _stage("load"):
        observed = manifest.load_observed()
        sims = manifest.load_sims()
    with _stage("fit"):
        f_hat = fit_kde(observed)
        g_hats = fit_suite(sims, config.workers)

    surfaces: dict[str, Surface] = {}
    estimates: dict[str, Estimate] = {}
    need = list(measures)
    if bootstrap and dv.AFFINITY not in need:
        need.append(dv.AFFINITY)
    with _stage("surface"):
        for m in need:
            surfaces[m] = surface_from_estimates(
                f_hat, g_hats, spec, m, config.quad_resolution, config.alpha, config.workers
            )
    with _stage("estimate"):
        for m, s in surfaces.items():
            estimates[m] = best_location(s)

    result = PipelineResult(surfaces, estimates)
    if bootstrap:
        with _stage("bootstrap"):
            k, j = estimates[dv.AFFINITY].indices
            result.confidence_set = bootstrap_confidence_set(
                observed,
                sims[flat_index(k, j, spec) - 1],
                surfaces[dv.AFFINITY],
                B=config.bootstrap_b,
                level=config.level,
                seed=config.seed,
                quad_resolution=config.quad_resolution,
                refit_bandwidth=config.refit_bandwidth,
                workers=config.workers,
            )
    if crossval:
        with _stage("crossval"):
            result.crossval = crossval_from_estimates(
                g_hats, spec, dv.AFFINITY, config.quad_resolution,
                manifest.model_name, config.alpha, config.workers,
            )

    result.metadata = {
        "version": __version__,
        "model_name": manifest.model_name,
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "seed": config.seed,
        "grid": spec.to_dict(),
        "measures": list(surfaces),
        "observed_n": observed.n,
        "bootstrap": bootstrap,
        "crossval": crossval,
        "wall_time_s": time.perf_counter() - started,
    }
    if out_dir is not None:
        with _stage("write"):
            result.files = write_results(result, Path(out_dir))
    return result


def write_results(result: PipelineResult, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for m, s in result.surfaces.items():
        io.write_surface(out_dir / f"surface_{m}.json", s)
        io.write_surface_text(out_dir / f"surface_{m}.txt", s)
        written += [out_dir / f"surface_{m}.json", out_dir / f"surface_{m}.txt"]
    if result.estimates:
        io.write_json(out_dir / "estimates.json",
                      {m: e.to_dict() for m, e in result.estimates.items()})
        written.append(out_dir / "estimates.json")
    if result.confidence_set is not None:
        io.write_json(out_dir / "confidence_set.json", result.confidence_set.to_dict())
        written.append(out_dir / "confidence_set.json")
    if result.crossval is not None:
        io.write_json(out_dir / "crossval.json", result.crossval.to_dict())
        (out_dir / "crossval.txt").write_text(result.crossval.table())
        written += [out_dir / "crossval.json", out_dir / "crossval.txt"]
    io.write_json(out_dir / "metadata.json", result.metadata)
    written.append(out_dir / "metadata.json")
    return written
