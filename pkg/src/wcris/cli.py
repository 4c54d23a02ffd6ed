"""Command-line entry point.

One binary, six subcommands covering the whole pipeline:

    gen-dataset   draw amplitude samples and simulate their patterns
    train         fit one network architecture on a dataset
    ga-search     evolve an architecture with the halving GA
    optimize      synthesize amplitudes for a beam/null objective
    eval          re-simulate a solution and emit CSV/SVG artifacts
    simulate      print the pattern for an amplitude file as CSV

Progress and errors go to stderr (plain or JSON lines); stdout carries
only data.  Exit codes: 0 success, 1 runtime failure, 2 usage.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import physics
from .config import ENV_CONFIG, ConfigError, load_config
from .dataset import export_csv, generate_dataset, load_dataset, normalize, save_dataset
from .ga import evolve
from .nn import init_mlp, load_architecture, save_architecture, save_model, train
from .optimize import (
    ExactBackend,
    GridSpec,
    LookupTable,
    Objective,
    SurrogateBackend,
    adaptive_optimize,
    bias_guard,
    sa_optimize,
)
from .svgplot import pattern_svg, write_svg

W_FILE_TAG = "wcris-w"


class Log:
    def __init__(self, quiet=False, as_json=False):
        self.quiet = quiet
        self.as_json = as_json

    def _emit(self, level, msg):
        if self.as_json:
            line = json.dumps({"level": level, "msg": msg})
        else:
            prefix = "wcris: error: " if level == "error" else ""
            line = prefix + msg
        print(line, file=sys.stderr, flush=True)

    def info(self, msg):
        if not self.quiet:
            self._emit("info", msg)

    def error(self, msg):
        self._emit("error", " ".join(str(msg).split()))


def save_w_file(path, w, offset, **meta):
    doc = {"tag": W_FILE_TAG, "w": [float(v) for v in w], "offset": float(offset)}
    doc.update(meta)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_w_file(path):
    """Amplitude files are plain JSON so solutions can be written by hand;
    only "w" is mandatory."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "w" not in doc:
        raise ValueError(f"{path}: amplitude file needs a 'w' array")
    try:
        w = np.asarray([float(v) for v in doc["w"]], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: bad 'w' array: {exc}") from exc
    doc["w"] = w
    doc.setdefault("offset", physics.BIAS_LO_V)
    return doc


def _parse_angles(text, what):
    if text is None or text.strip() == "":
        return ()
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ValueError(f"bad {what} list {text!r}: {exc}") from exc


def _pattern_csv(angles, pattern_db):
    lines = ["angle_deg,power_db"]
    lines += [f"{a:.10g},{p:.10g}" for a, p in zip(angles, pattern_db)]
    return "\n".join(lines) + "\n"


def _path_default(args, cfg, key, flag_value):
    """Flag wins; a [paths] entry fills in when the flag is absent."""
    return flag_value if flag_value is not None else cfg.paths.get(key)


def _require(value, name):
    if value is None:
        raise ValueError(f"missing required {name}")
    return value


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_gen_dataset(args, log):
    cfg = load_config(args.config)
    count = args.count if args.count is not None else cfg.dataset.count
    seed = args.seed if args.seed is not None else cfg.dataset.seed
    out = _require(_path_default(args, cfg, "dataset", args.out), "--out")

    def progress(done, total):
        log.info(f"sampled {done}/{total}")

    ds = generate_dataset(
        cfg.geom,
        cfg.cell,
        cfg.setup,
        count,
        seed,
        sigma_floor=cfg.dataset.sigma_floor,
        sigma_boost=cfg.dataset.sigma_boost,
        offset=cfg.offset,
        bias_lo=cfg.bias_lo,
        bias_hi=cfg.bias_hi,
        progress=progress,
    )
    save_dataset(ds, out)
    log.info(
        f"wrote {ds.count} samples to {out} "
        f"({ds.rejections} rejected, fingerprint {ds.fingerprint})"
    )
    if args.csv:
        export_csv(ds, args.csv)
        log.info(f"wrote CSV export to {args.csv}")
    return 0


def _cmd_train(args, log):
    cfg = load_config(args.config)
    ds_path = _require(_path_default(args, cfg, "dataset", args.dataset), "--dataset")
    arch_path = _require(_path_default(args, cfg, "architecture", args.arch), "--arch")
    out = _require(_path_default(args, cfg, "model", args.out), "--out")
    ds = load_dataset(ds_path)
    arch = load_architecture(arch_path)
    seed = args.seed if args.seed is not None else cfg.training.seed

    x, y, spec = normalize(ds)
    mlp = init_mlp(ds.num_modes, ds.n_angles, arch.layers, seed=[seed, 0])
    tc = replace(cfg.training, seed=[seed, 1])

    def progress(epoch, tr, va, lr):
        log.info(f"epoch {epoch}: train {tr:.6e} val {va:.6e} lr {lr:.3e}")

    report = train(mlp, x, y, arch.epochs, arch.batch_size, cfg=tc, progress=progress)
    save_model(mlp, out, scaling=spec, fingerprint=ds.fingerprint, arch=arch)
    log.info(
        f"wrote model to {out} (best val {report.best_val:.6e} "
        f"at epoch {report.best_epoch}, {report.epochs_run} epochs run)"
    )
    return 0


def _cmd_ga_search(args, log):
    cfg = load_config(args.config)
    ds_path = _require(_path_default(args, cfg, "dataset", args.dataset), "--dataset")
    ds = load_dataset(ds_path)
    params = cfg.ga
    if args.pop is not None:
        params = replace(params, population=args.pop)
    if args.seed is not None:
        params = replace(params, seed=args.seed)
    epoch_cap = args.epoch_cap if args.epoch_cap is not None else cfg.ga_epoch_cap

    x, y, _ = normalize(ds)
    n_in, n_out = ds.num_modes, ds.n_angles

    def trainer(arch, lineage, seed):
        mlp = init_mlp(n_in, n_out, arch.layers, seed=list(seed) + [0])
        tc = replace(cfg.training, seed=list(seed) + [1], max_epochs=epoch_cap)
        report = train(mlp, x, y, arch.epochs, arch.batch_size, cfg=tc)
        return report.best_val

    winner, report = evolve(params, trainer, progress=log.info)
    save_architecture(winner.arch, args.out)
    report_path = args.report or args.out + ".report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    log.info(
        f"winner lineage {winner.lineage} fitness {winner.fitness:.6e}; "
        f"architecture written to {args.out}, report to {report_path}"
    )
    return 0


def _cmd_optimize(args, log):
    cfg = load_config(args.config)
    if args.backend == "nn":
        model_path = _require(_path_default(args, cfg, "model", args.model), "--model")
        guard = bias_guard(cfg.geom, cfg.offset, cfg.bias_lo, cfg.bias_hi)
        backend = SurrogateBackend.from_file(
            model_path, grid=GridSpec.from_setup(cfg.setup), guard=guard
        )
        backend_name = "nn"
    else:
        backend = ExactBackend(
            cfg.geom,
            cfg.cell,
            cfg.setup,
            offset=cfg.offset,
            bias_lo=cfg.bias_lo,
            bias_hi=cfg.bias_hi,
        )
        backend_name = "sim"

    beams = _parse_angles(args.beams, "beam")
    nulls = _parse_angles(args.nulls, "null")
    objective = Objective(beams=beams, nulls=nulls, noise_var=cfg.setup.noise_var)
    params = cfg.sa
    if args.seed is not None:
        params = replace(params, seed=args.seed)
    if backend.requires_nonnegative and params.sign_mode != "non-negative":
        params = replace(params, sign_mode="non-negative")
        log.info("surrogate backend: forcing non-negative amplitudes")

    table_path = _path_default(args, cfg, "table", args.table)
    if table_path is not None:
        if os.path.exists(table_path):
            table, skipped = LookupTable.load(
                table_path, expect_fingerprint=backend.fingerprint
            )
            if skipped:
                log.info(f"skipped {skipped} table entries with foreign fingerprints")
        else:
            table = LookupTable()
        ds = load_dataset(args.dataset) if args.dataset else None
        result = adaptive_optimize(
            table, backend, objective, params, ds=ds, progress=log.info
        )
        w, slnr = result.w, result.slnr_db
        table.save(table_path)
        log.info(
            f"table now holds {len(table)} entries "
            f"({result.entries_added} added, path {result.path})"
        )
    else:
        res = sa_optimize(backend, objective, params)
        w, slnr = res.w_best, res.slnr_best
        log.info(f"annealing from zeros: {res.rejected} rejected proposals")

    save_w_file(
        args.out,
        w,
        cfg.offset,
        slnr_db=float(slnr),
        beams=list(beams),
        nulls=list(nulls),
        backend=backend_name,
        fingerprint=backend.fingerprint,
    )
    log.info(f"SLNR {slnr:.4f} dB; amplitudes written to {args.out}")
    return 0


def _pattern_from_w_file(cfg, doc):
    bsw = physics.BswConfig(float(doc["offset"]), doc["w"])
    return physics.radiation_pattern(
        cfg.geom, cfg.cell, bsw, cfg.setup, cfg.bias_lo, cfg.bias_hi
    )


def _cmd_eval(args, log):
    if args.csv is None and args.svg is None:
        raise ValueError("eval needs --csv and/or --svg")
    cfg = load_config(args.config)
    doc = load_w_file(args.weights)
    pattern = _pattern_from_w_file(cfg, doc)
    angles = cfg.setup.angles
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_pattern_csv(angles, pattern))
        log.info(f"wrote pattern CSV to {args.csv}")
    if args.svg:
        svg = pattern_svg(
            angles,
            pattern,
            beams=doc.get("beams", ()),
            nulls=doc.get("nulls", ()),
            title="radiation pattern",
        )
        write_svg(args.svg, svg)
        log.info(f"wrote pattern SVG to {args.svg}")
    peak = int(np.argmax(pattern))
    log.info(f"peak {pattern[peak]:.2f} dB at {angles[peak]:g} deg")
    return 0


def _cmd_simulate(args, log):
    cfg = load_config(args.config)
    doc = load_w_file(args.w)
    pattern = _pattern_from_w_file(cfg, doc)
    sys.stdout.write(_pattern_csv(cfg.setup.angles, pattern))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wcris",
        description="wave-controlled RIS pipeline: simulate, learn, optimize",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser.add_argument(
        "--json-log", action="store_true", help="progress/errors as JSON lines"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    # the toggles also parse after the subcommand; SUPPRESS keeps the
    # subparser from clobbering a value set before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--json-log", action="store_true", default=argparse.SUPPRESS)

    def add_config(p):
        p.add_argument(
            "--config",
            default=None,
            help=f"run configuration INI ('default' or ${ENV_CONFIG} when omitted)",
        )

    p = sub.add_parser("gen-dataset", parents=[common], help="sample amplitudes and simulate patterns")
    add_config(p)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="dataset output path")
    p.add_argument("--csv", default=None, help="also export rows as CSV")
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("train", parents=[common], help="train one architecture on a dataset")
    add_config(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--arch", default=None, help="architecture JSON file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="model output path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("ga-search", parents=[common], help="evolve an architecture")
    add_config(p)
    p.add_argument("--dataset", default=None)
    p.add_argument("--pop", type=int, default=None, help="population size (power of 2)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epoch-cap", type=int, default=None, help="cap epochs per model")
    p.add_argument("--out", required=True, help="winning architecture output path")
    p.add_argument("--report", default=None, help="report path (default <out>.report.json)")
    p.set_defaults(func=_cmd_ga_search)

    p = sub.add_parser("optimize", parents=[common], help="synthesize amplitudes for beams/nulls")
    add_config(p)
    p.add_argument("--backend", choices=("nn", "sim"), required=True)
    p.add_argument("--model", default=None, help="trained model (nn backend)")
    p.add_argument("--beams", required=True, help="comma-separated degrees")
    p.add_argument("--nulls", default=None, help="comma-separated degrees")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--table", default=None, help="lookup table to use and update")
    p.add_argument("--dataset", default=None, help="dataset for cold-start seeding")
    p.add_argument("--out", required=True, help="amplitude JSON output path")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("eval", parents=[common], help="re-simulate an amplitude file, emit CSV/SVG")
    add_config(p)
    p.add_argument("--weights", required=True, help="amplitude JSON file")
    p.add_argument("--csv", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("simulate", parents=[common], help="print the pattern for an amplitude file")
    add_config(p)
    p.add_argument("--w", required=True, help="amplitude JSON file")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    log = Log(quiet=args.quiet, as_json=args.json_log)
    try:
        return args.func(args, log)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        log.error(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
