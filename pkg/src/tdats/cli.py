"""Command-line front-end.

Subcommands mirror the pipeline stages so that each intermediate can be
produced and inspected on its own::

    tdats simulate  --preset 3-cyclic --c 0.5 --seed 7 -o panel.csv
    tdats coherence panel.csv --band alpha=8,12 -o coh/
    tdats persist   coh/alpha_distance.csv -o diagram.json
    tdats landscape diagram.json --dim 1 -o landscape.json
    tdats test      --group1 a/*.json --group2 b/*.json -o report.json
    tdats pipeline  config.yaml -o out/

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
guard tripped.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .errors import ConfigError, DataError, TdaError
from .homology import PersistenceDiagram, betti_curve, rips_persistence
from .inference import GroupSample, permutation_test
from .landscape import DEFAULT_MAX_LEVELS, PersistenceLandscape, landscape_from_diagram
from .pipeline import load_config, run_pipeline
from .sim import PRESET_IDS, RNG_ALGORITHM, preset_example
from .spectral import (DEFAULT_BANDS, KERNELS, TRANSFORMS, DistanceMatrix, band_coherence,
                       coherence_to_distance, smoothed_cross_spectrum)

log = logging.getLogger("tdats")


def _parse_band(text: str) -> tuple[str, tuple[float, float]]:
    try:
        name, lims = text.split("=")
        lo, hi = (float(x) for x in lims.split(","))
    except ValueError:
        raise ConfigError(f"band must look like name=low,high, got {text!r}") from None
    return name, (lo, hi)


def cmd_simulate(args):
    panel, model = preset_example(args.preset, c=args.c, seed=args.seed, T=args.T, SR=args.SR)
    side = {"seed": args.seed, "c": args.c, "rng": RNG_ALGORITHM, "model": model.to_dict()}
    io.write_panel_csv(panel, args.output, sidecar=side)
    print(args.output)


def cmd_coherence(args):
    panel = io.read_panel_csv(args.panel, SR=args.SR)
    bands = dict(_parse_band(b) for b in args.band) if args.band else DEFAULT_BANDS
    spec = smoothed_cross_spectrum(panel, kernel=args.kernel, bandwidth=args.bandwidth, demean=args.demean)
    out = Path(args.output)
    for name, lims in bands.items():
        C = band_coherence(spec, lims)
        D = coherence_to_distance(C, args.transform)
        io.write_matrix_csv(C.values, C.labels, out / f"{name}_coherence.csv")
        io.write_json({"labels": C.labels, "band": list(C.band), "SR": C.SR, **C.meta}, out / f"{name}_coherence.json")
        io.write_matrix_csv(D.values, D.labels, out / f"{name}_distance.csv")
        io.write_json({"labels": D.labels, **D.meta}, out / f"{name}_distance.json")
        print(out / f"{name}_distance.csv")


def cmd_persist(args):
    M, labels = io.read_matrix_csv(args.distance)
    try:
        D = DistanceMatrix(M, labels)
    except DataError as e:
        raise DataError(f"{args.distance}: {e}") from None
    pd = rips_persistence(D, args.max_dim)
    io.write_json(pd.to_dict(), args.output)
    if args.betti:
        io.write_rows_csv(betti_curve(pd).to_csv_rows(), args.betti)
    print(args.output)


def cmd_landscape(args):
    pd = PersistenceDiagram.from_dict(io.read_json(args.diagram))
    l = landscape_from_diagram(pd, args.dim, max_levels=args.levels)
    io.write_json(l.to_dict(), args.output)
    print(args.output)


def _load_landscapes(paths):
    if not paths:
        raise ConfigError("each group needs at least one landscape file")
    return [PersistenceLandscape.from_dict(io.read_json(p)) for p in paths]


def cmd_test(args):
    g1 = GroupSample(_load_landscapes(args.group1), "group1", args.band)
    g2 = GroupSample(_load_landscapes(args.group2), "group2", args.band)
    rep = permutation_test(g1, g2, B=args.B, alpha=args.alpha, seed=args.seed, levels=args.levels)
    io.write_json(rep.to_dict(include_null=False), args.output)
    if args.null_csv:
        io.write_rows_csv([["null_statistic"]] + [[io.fmt(x)] for x in rep.null_sample], args.null_csv)
    print(f"T={rep.observed:.6g} p={rep.p_value:.4g} tau={rep.threshold:.6g}")


def cmd_pipeline(args):
    cfg = load_config(args.config, output=args.output, seed=args.seed, max_dim=args.max_dim)
    if args.B is not None:
        cfg.B = args.B
    if args.alpha is not None:
        cfg.alpha = args.alpha
    manifest = run_pipeline(cfg.validate())
    for band, per_dim in manifest["reports"].items():
        for k, rep in per_dim.items():
            print(f"{band:>8s} H{k}: T={rep['observed']:.6g} p={rep['p_value']:.4g}")
    print(Path(cfg.output) / "manifest.json")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdats", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a preset example panel")
    s.add_argument("--preset", choices=PRESET_IDS, required=True)
    s.add_argument("--c", type=float, default=1.0, help="noise scale")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--T", type=int, default=4096)
    s.add_argument("--SR", type=float, default=100.0)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("coherence", help="band coherence and distance matrices of a panel CSV")
    s.add_argument("panel")
    s.add_argument("--SR", type=float, default=None, help="sampling rate (default: sidecar JSON)")
    s.add_argument("--band", action="append", help="name=low,high in Hz (repeatable; default five EEG bands)")
    s.add_argument("--kernel", choices=KERNELS, default="rectangular")
    s.add_argument("--bandwidth", type=float, default=None, help="cycles/sample (default 4/sqrt(T))")
    s.add_argument("--demean", action="store_true")
    s.add_argument("--transform", choices=TRANSFORMS, default="one_minus")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.set_defaults(func=cmd_coherence)

    s = sub.add_parser("persist", help="Rips persistence diagram of a distance CSV")
    s.add_argument("distance")
    s.add_argument("--max-dim", type=int, default=2)
    s.add_argument("--betti", help="also write Betti step functions to this CSV")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_persist)

    s = sub.add_parser("landscape", help="persistence landscape of a diagram JSON")
    s.add_argument("diagram")
    s.add_argument("--dim", type=int, default=1)
    s.add_argument("--levels", type=int, default=DEFAULT_MAX_LEVELS)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_landscape)

    s = sub.add_parser("test", help="two-sample permutation test on landscape JSON files")
    s.add_argument("--group1", nargs="+", required=True)
    s.add_argument("--group2", nargs="+", required=True)
    s.add_argument("--B", type=int, default=999)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--levels", type=int, default=DEFAULT_MAX_LEVELS)
    s.add_argument("--band", default=None)
    s.add_argument("--null-csv", default=None)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_test)

    s = sub.add_parser("pipeline", help="run all stages from a YAML/JSON config")
    s.add_argument("config")
    s.add_argument("-o", "--output", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--max-dim", type=int, default=None)
    s.add_argument("--B", type=int, default=None)
    s.add_argument("--alpha", type=float, default=None)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except TdaError as e:
        print(f"tdats {args.command}: error: {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
