"""``enersim`` command line.

Exit codes: 0 success, 1 runtime/numerical failure, 2 configuration or
validation failure, 3 finished without convergence (outputs still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from enersim import __version__, io, mfg, morph_mc, morph_pde, syndata
from enersim.errors import EnersimError, NumericalError, StabilityError
from enersim.numerics import make_rng

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_NOT_CONVERGED = 0, 1, 2, 3

log = logging.getLogger("enersim")


class ConfigError(EnersimError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _out(prefix: str, name: str) -> Path:
    path = Path(prefix + name)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _read_config(path, overrides) -> dict:
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            doc[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            doc[key.strip()] = raw
    return doc


# ---------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    if args.bins < 1:
        raise ConfigError(f"--bins must be >= 1, got {args.bins}")
    if args.depth not in (1, 2, 3):
        raise ConfigError(f"--depth must be 1, 2 or 3, got {args.depth}")
    if args.rows < 1:
        raise ConfigError(f"--rows must be >= 1, got {args.rows}")
    if not Path(args.input).is_file():
        raise ConfigError(f"--input not found: {args.input}")
    table = syndata.load_table(args.input)
    scheme = syndata.build_bins(table, args.bins)
    tables = syndata.fit_tables(table, scheme, args.depth)
    synth = syndata.sample_synthetic(tables, scheme, args.rows, args.order, make_rng(args.seed), table.column_names)

    p_orig = syndata.pearson_matrix(table)
    p_syn = syndata.pearson_matrix(synth)
    diff = np.abs(p_orig - p_syn)
    names = table.column_names

    out_csv = _out(args.out_prefix, "synthetic.csv")
    syndata.save_table(synth, out_csv)
    out_tables = _out(args.out_prefix, "tables.json")
    syndata.save_tables(tables, scheme, out_tables)
    out_corr = io.write_csv(
        _out(args.out_prefix, "corr_report.csv"),
        ["matrix", "feature", *names],
        [[label, row_name, *row]
         for label, mat in (("original", p_orig), ("synthetic", p_syn), ("abs_diff", diff))
         for row_name, row in zip(names, mat)],
    )
    config = {"input": str(args.input), "bins": args.bins, "depth": args.depth, "rows": args.rows,
              "seed": args.seed, "order": args.order}
    summary = {"max_abs_pearson_diff": float(diff.max())}
    io.write_manifest(_out(args.out_prefix, "run.json"), "synth", config, args.seed, __version__,
                      [out_csv, out_tables, out_corr], summary)
    print(f"max |delta pearson| = {diff.max():.4f}")
    return EXIT_OK


def cmd_make_benchmark(args) -> int:
    if args.rows < 2:
        raise ConfigError(f"--rows must be >= 2, got {args.rows}")
    table = syndata.make_benchmark_table(args.rows, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    syndata.save_table(table, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- mfg


def cmd_mfg(args) -> int:
    try:
        cfg = mfg.MfgConfig.from_dict(_read_config(args.config, args.set))
        params = cfg.params()
        params.check_cfl()
    except TypeError as exc:
        raise ConfigError(f"invalid mfg config: {exc}") from None
    params, state, report = mfg.solve_config(cfg)
    x = params.grid.centers
    outputs = [
        io.write_time_series(_out(args.out_prefix, "m.csv"), state.times, state.m, x),
        io.write_time_series(_out(args.out_prefix, "v.csv"), state.times, state.v, x),
        io.write_time_series(_out(args.out_prefix, "u.csv"), state.times, state.u, x),
        io.write_csv(_out(args.out_prefix, "mbar.csv"), ["time", "mbar"], zip(state.times, state.mbar)),
        io.write_json(_out(args.out_prefix, "report.json"), report.to_json()),
    ]
    io.write_manifest(_out(args.out_prefix, "run.json"), "mfg", cfg.to_dict(), None, __version__, outputs,
                      {"converged": report.converged, "iterations": report.iterations})
    status = "converged" if report.converged else "did not converge"
    print(f"picard {status} after {report.iterations} iterations, residual {report.residuals[-1]:.3e}")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------- morph-mc


def cmd_morph_mc(args) -> int:
    if args.size < 2:
        raise ConfigError(f"--size must be >= 2, got {args.size}")
    if not 0 <= args.solvent <= 1:
        raise ConfigError(f"--solvent must lie in [0, 1], got {args.solvent}")
    if not args.beta >= 0:
        raise ConfigError(f"--beta must be >= 0, got {args.beta}")
    if args.sweeps < 0:
        raise ConfigError(f"--sweeps must be >= 0, got {args.sweeps}")
    if args.snapshot_every < 1:
        raise ConfigError(f"--snapshot-every must be >= 1, got {args.snapshot_every}")
    config = morph_mc.init_lattice(args.size, args.solvent, args.seed, args.beta)
    # lattice placement and the chain use separate streams derived from the seed
    result = morph_mc.run_mc(config, None, args.sweeps, args.snapshot_every, make_rng(args.seed + 1))
    outputs = [io.write_csv(
        _out(args.out_prefix, "energy.csv"), ["sweep", "H", "acceptance_rate"],
        ([s + 1, h, a] for s, (h, a) in enumerate(zip(result.energies, result.acceptance))),
    )]
    for sweep, spins in result.snapshots:
        outputs.append(io.write_ppm(_out(args.out_prefix, f"snap_{sweep:06d}.ppm"), morph_mc.render(spins)))
    resolved = {"size": args.size, "solvent": args.solvent, "beta": args.beta, "sweeps": args.sweeps,
                "snapshot_every": args.snapshot_every, "seed": args.seed}
    tail = result.energies[-50:]
    summary = {
        "initial_energy": result.initial_energy,
        "final_energy": float(result.energies[-1]) if args.sweeps else result.initial_energy,
        "mean_energy_last_50": float(tail.mean()) if tail.size else result.initial_energy,
        "composition": list(config.composition()),
    }
    io.write_manifest(_out(args.out_prefix, "run.json"), "morph-mc", resolved, args.seed, __version__,
                      outputs, summary)
    return EXIT_OK


# ---------------------------------------------------------------- morph-pde


def cmd_morph_pde(args) -> int:
    try:
        cfg = morph_pde.PdeConfig.from_dict(_read_config(args.config, args.set))
        grid = cfg.grid()
        kernel = morph_pde.make_kernel(grid, cfg.resolved_epsilon())
        fields = morph_pde.init_random_mixture(grid, cfg.solvent_fraction, cfg.amplitude, cfg.seed)
        params = cfg.params()
    except TypeError as exc:
        raise ConfigError(f"invalid morph-pde config: {exc}") from None
    run = morph_pde.run_pde(fields, kernel, params)
    cols = morph_pde.DIAGNOSTIC_COLUMNS
    outputs = [io.write_csv(_out(args.out_prefix, "diagnostics.csv"), cols,
                            ([d[c] for c in cols] for d in run.diagnostics))]
    for step, _, f in run.snapshots:
        outputs.append(io.write_ppm(_out(args.out_prefix, f"snap_{step:06d}.ppm"), morph_pde.render(f)))
        if cfg.dump_fields:
            for name, arr in (("m", f.m), ("phi", f.phi)):
                path = _out(args.out_prefix, f"{name}_{step:06d}.csv")
                np.savetxt(path, arr, fmt="%.17g", delimiter=",")
                outputs.append(path)
    summary = {"steps": run.steps, "time": run.time,
               "max_bound_violation": max(d["max_bound_violation"] for d in run.diagnostics)}
    io.write_manifest(_out(args.out_prefix, "run.json"), "morph-pde", cfg.to_dict(), cfg.seed, __version__,
                      outputs, summary)
    return EXIT_OK


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="enersim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"enersim {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="fit binned conditionals and sample a synthetic table")
    p.add_argument("--input", required=True)
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--rows", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--order", choices=syndata.ORDER_POLICIES, default="fixed")
    p.add_argument("--out-prefix", default="")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("make-benchmark", help="write the five-feature constructed dataset as CSV")
    p.add_argument("--rows", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_benchmark)

    p = sub.add_parser("mfg", help="solve the cooling mean-field game")
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    p.add_argument("--out-prefix", default="")
    p.set_defaults(func=cmd_mfg)

    p = sub.add_parser("morph-mc", help="Kawasaki Monte Carlo of the ternary lattice mixture")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--solvent", type=float, default=0.8)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--sweeps", type=int, default=500)
    p.add_argument("--snapshot-every", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", default="")
    p.set_defaults(func=cmd_morph_mc)

    p = sub.add_parser("morph-pde", help="integrate the nonlocal continuum mixture model")
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    p.add_argument("--out-prefix", default="")
    p.set_defaults(func=cmd_morph_pde)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StabilityError as exc:
        print(f"enersim {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"enersim {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except EnersimError as exc:
        print(f"enersim {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - exit-code discipline
        print(f"enersim {args.command}: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
