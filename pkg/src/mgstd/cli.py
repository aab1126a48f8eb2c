"""Command-line driver: simulate, select, morse, vectorfield.

Exit codes: 0 success, 2 usage, 3 data error, 4 numeric or selection failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import sde
from .dataset import (load_dataset, pca_project, reindex_interleave, save_binary,
                      standardize, write_csv)
from .errors import (DataError, DomainError, IntegrationError, ParameterError,
                     SelectionError)
from .grid import DEFAULT_MAX_HALF_WIDTH, build_grid
from .graph import (combinatorial_attractors, export_dot, morse_decomposition,
                    morse_graph)
from .selection import (grid_coverage, recommend_h, select_mu_star,
                        select_mu_star_averaged)
from .transitions import build_multivalued_map, count_transitions
from .vectorfield import SOURCE_MAJOR, TARGET_MAJOR, run_mgstd

log = logging.getLogger("mgstd")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _mu_star(text):
    if str(text) == "auto":
        return "auto"
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("threshold must be >= 1")
    return value


def _common(p):
    p.add_argument("--config", help="JSON file whose keys provide flag defaults")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes for shift sweeps (default: all cores)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")


def _input(p):
    g = p.add_argument_group("input (exactly one of --input / --model)")
    g.add_argument("--input", help="dataset CSV, or binary file with .json sidecar")
    g.add_argument("--model", choices=sorted(sde.MODELS), help="builtin SDE model")
    g.add_argument("--preset", choices=["D1", "D2"], default="D2")
    g.add_argument("--n-series", type=int, default=None,
                   help="override the preset's number of series")
    g.add_argument("--standardize", action="store_true",
                   help="normalize coordinates to zero mean and unit variance")
    g.add_argument("--pca", type=int, default=None, metavar="M",
                   help="project the input onto its leading M principal components")
    g.add_argument("--interleave", type=int, default=1, metavar="S",
                   help="split every series into S interleaved subseries")
    p.add_argument("--max-half-width", type=float, default=DEFAULT_MAX_HALF_WIDTH,
                   help="enclosing half-width cap for grids (default 4)")


# Parameter menus of the two reanalysis settings; explicit flags and
# --config still win.
PARAM_MENUS = {
    "tropo": {"h": 0.25, "rho": 1.1, "A": 5.0, "h_candidates": (1 / 3, 0.25, 0.2)},
    "strato": {"h": 0.3, "rho": 1.1, "A": 5.0, "h_candidates": (1 / 3, 0.3, 0.25, 0.2)},
}


def _params(p, delta=True):
    p.add_argument("--params", choices=sorted(PARAM_MENUS),
                   help="parameter menu providing defaults for h, rho, A")
    p.add_argument("--h", type=float, default=0.25, help="cell size")
    p.add_argument("--rho", type=float, default=1.1, help="superiority parameter")
    p.add_argument("--A", type=float, default=5.0, help="size-ratio bound for auto threshold")
    p.add_argument("--mu-max", type=int, default=100)
    if delta:
        p.add_argument("--delta", type=_floats, default=None,
                       help="grid shift, comma separated (default all zeros)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgstd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices

    p = sub.add_parser("simulate", help="generate an SDE benchmark dataset")
    _common(p)
    p.add_argument("--model", choices=sorted(sde.MODELS))
    p.add_argument("--preset", choices=["D1", "D2"], default="D2")
    p.add_argument("--n-series", type=int, default=None)
    p.add_argument("--format", choices=["csv", "bin"], default="csv")

    p = sub.add_parser("select", help="threshold scan, coverage curves, grid size")
    _common(p)
    _input(p)
    _params(p)
    p.add_argument("--sweep-delta", action="store_true",
                   help="average the selected threshold over all shifts")
    p.add_argument("--increment", type=float, default=0.01)
    p.add_argument("--h-candidates", type=_floats, default=None,
                   help="comma separated cell sizes to compare by coverage")
    p.add_argument("--band", type=_floats, default=(10, 20))

    p = sub.add_parser("morse", help="Morse decomposition for one parameter set")
    _common(p)
    _input(p)
    _params(p)
    p.add_argument("--mu-star", type=_mu_star, default=None, help="threshold or 'auto'")

    p = sub.add_parser("vectorfield", help="shift-averaged vector field")
    _common(p)
    _input(p)
    _params(p, delta=False)
    p.add_argument("--mu-star", type=_mu_star, default=None)
    p.add_argument("--auto", action="store_true",
                   help="choose the threshold by averaging over all shifts")
    p.add_argument("--increment", type=float, default=0.01)
    p.add_argument("--interp", choices=[SOURCE_MAJOR, TARGET_MAJOR], default=SOURCE_MAJOR)
    p.add_argument("--full-order", action="store_true",
                   help="draw arrows for every order relation, not only the reduction")
    p.add_argument("--archive", action="store_true",
                   help="also write per-shift decompositions as JSON")
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser.commands[args.command]
    menu = getattr(args, "params", None)
    if menu:
        defaults = dict(PARAM_MENUS[menu])
        if "h_candidates" not in {a.dest for a in sub._actions}:
            defaults.pop("h_candidates")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        for action in sub._actions:
            if action.dest in cfg and action.type is not None and cfg[action.dest] is not None \
                    and not isinstance(cfg[action.dest], (int, float, str)):
                cfg[action.dest] = action.type(",".join(map(str, cfg[action.dest])))
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return parser, args


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_input(args):
    if bool(args.input) == bool(args.model):
        raise UsageError("give exactly one of --input or --model")
    if args.input:
        d = load_dataset(args.input)
    else:
        d = sde.generate_preset(args.model, args.preset, args.seed, args.n_series)
    if d.n_points == 0:
        raise DataError("dataset is empty")
    if args.pca is not None:
        d = pca_project(d, args.pca)
    elif args.standardize:
        d = standardize(d)
    if args.interleave != 1:
        d = reindex_interleave(d, args.interleave)
    return d


def _delta(args, m):
    delta = args.delta if args.delta is not None else (0.0,) * m
    if len(delta) != m:
        raise UsageError(f"--delta needs {m} values")
    return tuple(delta)


def _write(path: Path, text: str):
    path.write_text(text)
    log.info("wrote %s", path)


def cmd_simulate(args):
    if not args.model:
        raise UsageError("simulate needs --model")
    model, cfg, stride = sde.preset_config(args.model, args.preset, args.seed, args.n_series)
    d = reindex_interleave(sde.simulate(model, cfg), stride)
    out = _out_dir(args)
    if args.format == "csv":
        write_csv(d, out / "dataset.csv")
    else:
        save_binary(d, out / "dataset.bin")
    meta = cfg.to_dict(args.model)
    meta.update(preset=args.preset, interleave=stride)
    _write(out / "simulate.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"{d.n_series} series, {d.n_points} points -> {out}")


def cmd_select(args):
    d = _load_input(args)
    out = _out_dir(args)
    report = {"h": args.h, "rho": args.rho, "A": args.A, "mu_max": args.mu_max}
    failure = None
    if args.sweep_delta:
        try:
            av = select_mu_star_averaged(d, args.h, args.rho, args.A, args.increment,
                                         args.mu_max, args.jobs, args.max_half_width)
        except SelectionError as exc:
            failure = exc
        else:
            report.update(mu_star=av.value, mu_star_mean=av.mean,
                          per_shift=[[list(dl), v] for dl, v in av.per_shift])
            _write(out / "mu_star_per_shift.tsv", "".join(
                ["\t".join([f"delta{k + 1}" for k in range(d.m)] + ["mu_star"]) + "\n"]
                + ["\t".join([repr(x) for x in dl] + [str(v)]) + "\n"
                   for dl, v in av.per_shift]))
    else:
        delta = _delta(args, d.m)
        grid = build_grid(d.m, args.h, delta, d.bound(), args.max_half_width)
        sel = select_mu_star(d, grid, args.rho, args.A, args.mu_max)
        _write(out / "ratio_curve.tsv", sel.to_tsv())
        report.update(delta=list(delta), mu_star=sel.mu_star)
        if not sel.found:
            failure = SelectionError(f"no threshold up to {args.mu_max} gives ratio < {args.A}")
    if args.h_candidates:
        lo, hi = (int(v) for v in args.band)
        best, table = recommend_h(d, args.h_candidates, (lo, hi))
        rows = ["n\t" + "\t".join(repr(h) for h in table) + "\n"]
        for n in range(len(next(iter(table.values())))):
            rows.append(f"{n + 1}\t" + "\t".join(repr(float(c[n])) for c in table.values())
                        + "\n")
        _write(out / "coverage.tsv", "".join(rows))
        report["recommended_h"] = best
    else:
        curve = grid_coverage(d, args.h)
        _write(out / "coverage.tsv", "n\tportion\n" + "".join(
            f"{n + 1}\t{float(v)!r}\n" for n, v in enumerate(curve)))
    _write(out / "select.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    if failure is not None:
        raise failure
    print(f"mu_star = {report['mu_star']}" + (
        f"  (mean {report['mu_star_mean']:.2f})" if "mu_star_mean" in report else "")
        + (f"  recommended h = {report['recommended_h']}" if "recommended_h" in report else ""))


def cmd_morse(args):
    if args.mu_star is None:
        raise UsageError("morse needs --mu-star N or --mu-star auto")
    d = _load_input(args)
    delta = _delta(args, d.m)
    grid = build_grid(d.m, args.h, delta, d.bound(), args.max_half_width)
    mu = args.mu_star
    if mu == "auto":
        sel = select_mu_star(d, grid, args.rho, args.A, args.mu_max, full_curve=False)
        if not sel.found:
            raise SelectionError(f"no threshold up to {args.mu_max} gives ratio < {args.A}")
        mu = sel.mu_star
    tc = count_transitions(d, grid)
    fmap = build_multivalued_map(tc, args.rho, mu)
    md = morse_decomposition(fmap)
    mg = morse_graph(md, grid)
    out = _out_dir(args)
    _write(out / "morse.dot", export_dot(mg))
    doc = md.to_dict()
    doc.update(grid=grid.to_dict(), mu_star=mu, rho=args.rho, names=md.names,
               sizes=md.sizes, barycenters=[list(n.barycenter) for n in mg.nodes],
               attractors=combinatorial_attractors(md))
    _write(out / "morse.json", json.dumps(doc, sort_keys=True) + "\n")
    _write(out / "map.tsv", fmap.to_tsv())
    print(f"mu_star = {mu}: {len(md)} Morse sets, {len(md.reduced)} connections, "
          f"attractors {', '.join(combinatorial_attractors(md)) or '-'}")


def cmd_vectorfield(args):
    if args.mu_star is None and not args.auto:
        raise UsageError("vectorfield needs --mu-star N or --auto")
    d = _load_input(args)
    mu = args.mu_star
    if args.auto or mu == "auto":
        av = select_mu_star_averaged(d, args.h, args.rho, args.A, args.increment,
                                     args.mu_max, args.jobs, args.max_half_width)
        mu = av.value
        log.info("threshold %d (mean %.3f over shifts)", av.value, av.mean)
    res = run_mgstd(d, args.h, args.rho, mu, args.increment, args.interp,
                    args.full_order, args.jobs, args.max_half_width)
    out = _out_dir(args)
    _write(out / "vectorfield.tsv", res.field.to_tsv())
    if args.archive:
        shifts = [{"delta": list(s.delta), "grid": s.grid.to_dict(),
                   "decomposition": s.decomposition.to_dict(),
                   "vectors": [{"center": v.center.tolist(), "vector": v.vector.tolist(),
                                "source": v.source, "target": v.target}
                               for v in s.vectors]} for s in res.shifts]
        _write(out / "shifts.json", json.dumps(
            {"h": args.h, "rho": args.rho, "mu_star": mu, "shifts": shifts},
            sort_keys=True) + "\n")
    print(f"mu_star = {mu}: {len(res.field)} supported cells over "
          f"{len(res.shifts)} shifts -> {out / 'vectorfield.tsv'}")


COMMANDS = {"simulate": cmd_simulate, "select": cmd_select, "morse": cmd_morse,
            "vectorfield": cmd_vectorfield}


def main(argv=None) -> int:
    parser, args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, ParameterError) as exc:
        print(f"mgstd {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DomainError, OSError) as exc:
        print(f"mgstd {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SelectionError, IntegrationError, FloatingPointError) as exc:
        print(f"mgstd {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
