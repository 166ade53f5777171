"""Command-line interface.

Subcommands: ``generate``, ``surface``, ``estimate``, ``bootstrap-ci``,
``crossval`` and ``divergence``.  Results go to an output directory as JSON
and three-column text; a tab-separated summary goes to stdout.

Exit status: 0 success, 1 usage or configuration error, 2 data error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import divergence as dv
from . import io
from .direct_ratio import direct_rpe, fit_relative_ratio
from .errors import MindistError
from .grid import grid_location
from .kde import fit_kde
from .pipeline import run_pipeline
from .synthgen import DEFAULT_N_PER_LOCATION, FieldParams, generate_suite, generate_velocity_dataset

log = logging.getLogger("mindist")

RPE_DIRECT = "rpe-direct"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value run configuration file")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--workers", type=int, help="worker threads")
    p.add_argument("--quad-resolution", type=int, help="quadrature nodes per axis")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mindist", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic suite, observed file and manifest")
    _common(g)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--n-per-location", type=int, default=DEFAULT_N_PER_LOCATION)
    g.add_argument("--observed-cell", type=int, nargs=2, metavar=("K", "J"), default=(10, 1))
    g.add_argument("--observed-n", type=int, default=1000)
    g.add_argument("--model-name", default="synthetic")
    defaults = FieldParams()
    for name in ("amplitude", "radial_gain", "angular_gain", "noise_scale", "mode_spread"):
        g.add_argument("--" + name.replace("_", "-"), type=float, default=getattr(defaults, name))
    g.add_argument("--mode-count", type=int, default=defaults.mode_count)

    for name, helptext in (
        ("surface", "divergence surfaces over the grid"),
        ("estimate", "surfaces plus point estimates, optional bootstrap and cross-validation"),
        ("bootstrap-ci", "bootstrap confidence set for the maximum-affinity cell"),
        ("crossval", "block cross-validation of the simulated suite"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("manifest", type=Path)
        p.add_argument("--out", type=Path, required=True)
        if name in ("surface", "estimate"):
            p.add_argument("--measure", action="append", default=None,
                           help=f"one of {', '.join(dv.PLUGIN_MEASURES)}; repeatable")
            p.add_argument("--alpha", type=float)
        if name == "estimate":
            p.add_argument("--bootstrap", action="store_true")
            p.add_argument("--crossval", action="store_true")
        if name in ("estimate", "bootstrap-ci"):
            p.add_argument("--level", type=float)
            p.add_argument("--B", dest="bootstrap_b", type=int)

    d = sub.add_parser("divergence", help="one divergence between two velocity files")
    _common(d)
    d.add_argument("sim", type=Path, help="simulated dataset (first argument g)")
    d.add_argument("observed", type=Path, help="observed dataset (second argument f)")
    d.add_argument("--measure", default=dv.AFFINITY,
                   help=f"one of {', '.join(dv.PLUGIN_MEASURES)} or {RPE_DIRECT}")
    d.add_argument("--alpha", type=float)
    d.add_argument("--basis", type=int, default=100, help="basis count for rpe-direct")
    return parser


def _config(args) -> io.RunConfig:
    config = io.read_config(args.config) if args.config else io.RunConfig()
    return config.replace(
        seed=args.seed,
        workers=args.workers,
        quad_resolution=args.quad_resolution,
        alpha=getattr(args, "alpha", None),
        level=getattr(args, "level", None),
        bootstrap_b=getattr(args, "bootstrap_b", None),
    )


def _emit(rows) -> None:
    for row in rows:
        print("\t".join(str(x) for x in row))


def _cmd_generate(args, config) -> None:
    params = FieldParams(args.amplitude, args.radial_gain, args.angular_gain,
                         args.noise_scale, args.mode_count, args.mode_spread)
    spec = config.grid
    out = args.out
    suite = generate_suite(spec, args.n_per_location, params, config.seed)
    entries = []
    for (k, j), data in zip(spec.cells(), suite):
        path = out / "cells" / f"k{k:02d}_j{j:02d}.txt"
        io.write_velocity_file(path, data)
        entries.append(io.ManifestEntry(k, j, path))
    loc = grid_location(*args.observed_cell, spec)
    obs_seed = np.random.SeedSequence([config.seed, loc.k, loc.j, 1])
    observed = generate_velocity_dataset(loc, args.observed_n, params, np.random.default_rng(obs_seed))
    io.write_velocity_file(out / "observed.txt", observed,
                           header=f"synthetic observed data drawn at cell ({loc.k},{loc.j})")
    manifest = io.Manifest(spec, out / "observed.txt", tuple(entries), args.model_name)
    io.write_manifest(out / "manifest.json", manifest)
    io.write_json(out / "generator.json", {
        "params": params.to_dict(),
        "seed": config.seed,
        "n_per_location": args.n_per_location,
        "observed_cell": {"k": loc.k, "j": loc.j},
        "observed_n": args.observed_n,
        "grid": spec.to_dict(),
    })
    _emit([("manifest", out / "manifest.json"), ("cells", len(entries)),
           ("observed_cell", f"{loc.k},{loc.j}")])


def _estimate_rows(result):
    rows = [("measure", "k", "j", "r", "theta", "value")]
    for m, e in result.estimates.items():
        rows.append((m, e.indices[0], e.indices[1], e.location.r, e.location.theta, repr(e.value)))
    return rows


def _cmd_pipeline(args, config) -> None:
    manifest = io.read_manifest(args.manifest)
    cmd = args.command
    measures = [dv.AFFINITY]
    if cmd in ("surface", "estimate") and args.measure:
        measures = args.measure
    result = run_pipeline(
        manifest,
        config,
        measures=measures,
        bootstrap=(cmd == "bootstrap-ci") or (cmd == "estimate" and args.bootstrap),
        crossval=(cmd == "crossval") or (cmd == "estimate" and args.crossval),
        out_dir=args.out,
    )
    if cmd == "surface":
        _emit([("measure", "file")] + [(m, args.out / f"surface_{m}.json") for m in result.surfaces])
    elif cmd in ("estimate", "bootstrap-ci"):
        _emit(_estimate_rows(result))
    if result.confidence_set is not None:
        cs = result.confidence_set
        _emit([("level", cs.level), ("cutoff", repr(cs.cutoff)), ("members", len(cs.members))])
    if result.crossval is not None:
        cv = result.crossval
        _emit([("model", "ring1", "ring2", "beyond"), (cv.model_name, cv.ring1, cv.ring2, cv.beyond)])


def _cmd_divergence(args, config) -> None:
    g_data = io.parse_velocity_file(args.sim)
    f_data = io.parse_velocity_file(args.observed)
    measure = args.measure.strip().lower().replace("_", "-")
    if measure in (RPE_DIRECT, "rped"):
        model = fit_relative_ratio(f_data, g_data, config.alpha, b=args.basis,
                                   rng=np.random.default_rng(config.seed))
        value = direct_rpe(model, f_data, g_data)
        _emit([("measure", "value", "alpha"), (RPE_DIRECT, repr(value), config.alpha)])
        return
    measure = dv.normalize_measure(args.measure)
    res = dv.divergence(fit_kde(g_data), fit_kde(f_data), measure,
                        alpha=config.alpha, resolution=config.quad_resolution)
    _emit([("measure", "value", "alpha"),
           (res.measure, repr(res.value), "" if res.alpha is None else res.alpha)])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _config(args)
        if args.command == "generate":
            _cmd_generate(args, config)
        elif args.command == "divergence":
            _cmd_divergence(args, config)
        else:
            _cmd_pipeline(args, config)
    except MindistError as exc:
        print(f"mindist: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
