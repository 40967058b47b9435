"""Command-line front end.

Every subcommand resolves its settings as flags > ``--config`` file
(``key=value`` lines) > defaults, runs, and writes its CSV together with a
JSON manifest and a gnuplot script. Exit status is 0 on success, 2 for an
invalid configuration and 3 for a runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import numpy as np

from . import _io
from .coding import (
    DecodeInput,
    decode,
    encode_points,
    encode_shares,
    make_encoder,
    read_shares,
    shares_to_bytes,
    worker_points,
)
from .diagnostics import (
    StragglerPattern,
    derivative_norms,
    error_bound,
    lebesgue_constant,
    lebesgue_function,
    lebesgue_grid,
    survivor_nodes,
    theoretical_lebesgue_bound,
    worst_case_pattern,
)
from .exceptions import BACCError
from .functions import parse_function
from .gradcode import TrainConfig, read_idx, train
from .simulator import (
    ExperimentConfig,
    case2_inputs,
    compare_nodesets,
    execute_workers,
    run_nonpoly_experiment,
    run_poly_experiment,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
STATS_HEADER = ["s", "mean_rel_err", "min_rel_err", "max_rel_err", "n_trials"]


class ConfigError(Exception):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _int_list(text: str) -> list[int]:
    text = str(text).strip()
    return [int(t) for t in text.split(",") if t.strip()] if text else []


def _flag(text: str) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Opt:
    name: str
    type: object = str
    default: object = None
    required: bool = False
    help: str = ""
    switch: bool = False

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


_SWEEP = [
    Opt("N", int, required=True, help="workers are 0..N"),
    Opt("K", int, required=True, help="number of inputs"),
    Opt("s-min", int, 0),
    Opt("s-max", int, required=True, help="largest straggler count"),
    Opt("s-step", int, 50),
    Opt("trials-f", int, 20, help="function trials"),
    Opt("trials-s", int, 100, help="straggler draws per function and s"),
    Opt("paper-scale", _flag, False, switch=True, help="100 functions x 1000 draws"),
    Opt("straggler-model", str, "uniform"),
    Opt("seed", int, 0),
    Opt("out", str, required=True),
]

OPTIONS: dict[str, list[Opt]] = {
    "lebesgue": [
        Opt("N", int, required=True), Opt("s", int, 0), Opt("kbar", int, 0),
        Opt("samples", int, 64, help="grid samples per gap"), Opt("out", str, required=True),
    ],
    "poly-exp": [Opt("deg", int, required=True)] + _SWEEP,
    "nonpoly-exp": [
        Opt("f", str, "xsinx"), Opt("inputs", str, "uniform", help="uniform or grid"),
        Opt("curve-out", str),
    ] + _SWEEP,
    "nodes-compare": [Opt("deg", int, required=True)] + _SWEEP,
    "bound": [
        Opt("N", int, required=True), Opt("s", int, required=True), Opt("g", str, "xsinx"),
        Opt("fd", _flag, False, switch=True, help="finite-difference norms"),
        Opt("out", str),
    ],
    "train-toy": [
        Opt("scheme", str, "bacc"), Opt("N", int, 5), Opt("K", int, 4), Opt("s", int, 0),
        Opt("epochs", int, 50), Opt("eta", float, 0.1), Opt("seed", int, 0),
        Opt("hidden", int, 16), Opt("activation", str, "sigmoid"),
        Opt("idx-images", str), Opt("idx-labels", str), Opt("out", str, required=True),
    ],
    "encode": [
        Opt("data", str, required=True, help=".npy stack or text file, one item per row"),
        Opt("N", int, required=True), Opt("family", str, "chebyshev"),
        Opt("out", str, required=True),
    ],
    "decode": [
        Opt("shares", str, required=True), Opt("K", int, required=True),
        Opt("family", str, "chebyshev"), Opt("apply", str, help="apply f to payloads first"),
        Opt("stragglers", _int_list, "", help="comma-separated worker indices"),
        Opt("out", str, required=True),
    ],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bacc", description="Berrut approximated coded computing experiments")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for cmd, opts in OPTIONS.items():
        p = sub.add_parser(cmd, help=HANDLERS[cmd].__doc__.splitlines()[0])
        p.add_argument("--config", default=argparse.SUPPRESS, help="key=value settings file")
        for o in opts:
            if o.switch:
                p.add_argument(f"--{o.name}", dest=o.dest, action="store_true",
                               default=argparse.SUPPRESS, help=o.help)
            else:
                p.add_argument(f"--{o.name}", dest=o.dest, type=o.type,
                               default=argparse.SUPPRESS, help=o.help + (" (required)" if o.required else ""))
    return parser


def read_config(path) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def resolve(cmd: str, ns: argparse.Namespace) -> dict:
    given = vars(ns).copy()
    given.pop("command", None)
    file_cfg = read_config(given.pop("config")) if "config" in given else {}
    opts = {o.dest: o for o in OPTIONS[cmd]}
    unknown = set(file_cfg) - set(opts)
    if unknown:
        raise ConfigError(f"unknown config keys for {cmd}: {sorted(unknown)}")
    cfg = {}
    for dest, o in opts.items():
        if dest in given:
            cfg[dest] = given[dest]
        elif dest in file_cfg:
            try:
                cfg[dest] = o.type(file_cfg[dest])
            except ValueError as exc:
                raise ConfigError(f"bad value for {o.name}: {exc}") from None
        elif o.required:
            raise ConfigError(f"{cmd}: missing required option --{o.name}")
        else:
            cfg[dest] = o.type(o.default) if o.type is _int_list else o.default
    return cfg


def _manifest(cmd: str, cfg: dict, seed=None, started: float | None = None) -> dict:
    return {
        "command": cmd,
        "config": cfg,
        "master_seed": seed,
        "version": _version(),
        "wall_time_s": None if started is None else round(time.perf_counter() - started, 6),
    }


def _s_values(cfg) -> tuple[int, ...]:
    if cfg["s_step"] < 1:
        raise ConfigError("--s-step must be positive")
    if cfg["s_min"] > cfg["s_max"]:
        raise ConfigError("--s-min exceeds --s-max")
    return tuple(range(cfg["s_min"], cfg["s_max"] + 1, cfg["s_step"]))


def _experiment(cfg, **extra) -> ExperimentConfig:
    tf, ts = (100, 1000) if cfg["paper_scale"] else (cfg["trials_f"], cfg["trials_s"])
    return ExperimentConfig(
        N=cfg["N"], K=cfg["K"], s_values=_s_values(cfg), trials_functions=tf,
        trials_stragglers=ts, master_seed=cfg["seed"], straggler_model=cfg["straggler_model"],
        **extra,
    )


def _stats_rows(stats, *suffix):
    return [[st.s, st.mean, st.min, st.max, st.n_trials, *suffix] for st in stats]


def cmd_lebesgue(cfg, started):
    """Lebesgue function of Berrut's interpolant on a worst-case survivor set."""
    pattern = worst_case_pattern(cfg["N"], cfg["s"], cfg["kbar"])
    nodes = survivor_nodes(pattern)
    grid = lebesgue_grid(nodes, cfg["samples"], (-1.0, 1.0))
    values = lebesgue_function("berrut", nodes, grid)
    report = lebesgue_constant("berrut", nodes, cfg["samples"], interval=(-1.0, 1.0))
    header = ["x", "lebesgue_value"]
    plot = _io.gnuplot_script(cfg["out"], "x", ["lebesgue_value"], header)
    _io.write_outputs(cfg["out"], header, zip(grid, values), _manifest("lebesgue", cfg, None, started), plot)
    line = f"lebesgue_constant={_io.fmt(report.constant_estimate)} argmax={_io.fmt(report.argmax_x)}"
    if cfg["s"] < cfg["N"] - 2:
        line += f" bound={_io.fmt(theoretical_lebesgue_bound(cfg['N'], cfg['s']))}"
    print(line)


def cmd_poly_exp(cfg, started):
    """Random-polynomial accuracy sweep over straggler counts."""
    stats = run_poly_experiment(_experiment(cfg, deg=cfg["deg"]))
    plot = _io.gnuplot_script(cfg["out"], "s", ["mean_rel_err", "min_rel_err", "max_rel_err"],
                              STATS_HEADER, logy=True)
    _io.write_outputs(cfg["out"], STATS_HEADER, _stats_rows(stats),
                      _manifest("poly-exp", cfg, cfg["seed"], started), plot)


def cmd_nonpoly_exp(cfg, started):
    """Accuracy sweep for a fixed non-polynomial worker function."""
    f = parse_function(cfg["f"])
    if cfg["inputs"] == "grid":
        inputs = case2_inputs(cfg["K"])
    elif cfg["inputs"] == "uniform":
        inputs = None
    else:
        raise ConfigError("--inputs must be 'uniform' or 'grid'")
    stats, curve = run_nonpoly_experiment(_experiment(cfg, function=f, inputs=inputs))
    plot = _io.gnuplot_script(cfg["out"], "s", ["mean_rel_err"], STATS_HEADER, logy=True)
    _io.write_outputs(cfg["out"], STATS_HEADER, _stats_rows(stats),
                      _manifest("nonpoly-exp", cfg, cfg["seed"], started), plot)
    if cfg["curve_out"]:
        header = ["alpha", "input", "exact", "approx"]
        rows = zip(curve.alphas, curve.inputs, np.ravel(curve.exact), np.ravel(curve.approx))
        plot = _io.gnuplot_script(cfg["curve_out"], "input", ["exact", "approx"], header)
        _io.write_outputs(cfg["curve_out"], header, rows,
                          _manifest("nonpoly-exp", cfg, cfg["seed"], started), plot)


def cmd_nodes_compare(cfg, started):
    """Same trials with Chebyshev and with equidistant node sets."""
    paired = compare_nodesets(_experiment(cfg, deg=cfg["deg"]))
    header = STATS_HEADER + ["node_family"]
    rows = [row for fam, stats in paired.items() for row in _stats_rows(stats, fam)]
    plot = _io.gnuplot_script(cfg["out"], "s", ["mean_rel_err"], header, logy=True,
                              group="node_family", groups=list(paired))
    _io.write_outputs(cfg["out"], header, rows, _manifest("nodes-compare", cfg, cfg["seed"], started), plot)


def cmd_bound(cfg, started):
    """Decoding error bound for a function g on [-1, 1]."""
    g = parse_function(cfg["g"])
    if cfg["fd"]:
        n1, n2 = derivative_norms(g.scalar)
    else:
        n1, n2 = derivative_norms(g.scalar, dg=g.derivative(1), d2g=g.derivative(2))
    value = error_bound(cfg["N"], cfg["s"], n1, n2)
    print(_io.fmt(value))
    if cfg["out"]:
        header = ["N", "s", "norm_g1", "norm_g2", "bound"]
        _io.write_outputs(cfg["out"], header, [[cfg["N"], cfg["s"], n1, n2, value]],
                          _manifest("bound", cfg, None, started))


def _idx_dataset(cfg):
    X = read_idx(cfg["idx_images"]).astype(float)
    X = X.reshape(X.shape[0], -1) / 255.0
    labels = read_idx(cfg["idx_labels"]).astype(int)
    if labels.shape[0] != X.shape[0]:
        raise ConfigError("image and label files differ in length")
    Y = np.eye(labels.max() + 1)[labels]
    n = X.shape[0] - X.shape[0] % cfg["K"]
    return X[:n], Y[:n]


def cmd_train_toy(cfg, started):
    """Train the toy network with coded, replicated or uncoded gradients."""
    if bool(cfg["idx_images"]) != bool(cfg["idx_labels"]):
        raise ConfigError("--idx-images and --idx-labels go together")
    kwargs = {}
    X = Y = None
    if cfg["idx_images"]:
        X, Y = _idx_dataset(cfg)
        kwargs = {"loss": "sigmoid-cross-entropy", "label_mode": "classification"}
    tc = TrainConfig(cfg["scheme"], cfg["N"], cfg["K"], cfg["s"], cfg["epochs"], cfg["eta"],
                     cfg["seed"], cfg["hidden"], cfg["activation"], **kwargs)
    result = train(tc, X, Y)
    header = ["epoch", "scheme", "train_loss"]
    rows = [[e, tc.scheme, v] for e, v in enumerate(result.losses)]
    plot = _io.gnuplot_script(cfg["out"], "epoch", ["train_loss"], header, logy=True)
    _io.write_outputs(cfg["out"], header, rows, _manifest("train-toy", cfg, cfg["seed"], started), plot)


def _load_data(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path, allow_pickle=False)
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return data.reshape(data.shape[0], 1, data.shape[1])


def cmd_encode(cfg, started):
    """Encode a data stack into binary worker shares."""
    data = _load_data(cfg["data"])
    encoder = make_encoder(list(data), cfg["family"])
    shares = encode_shares(encoder, cfg["N"], worker_points(cfg["N"], cfg["family"]))
    blob = shares_to_bytes(shares)
    manifest = _manifest("encode", cfg, None, started)
    manifest["outputs"] = {"shares": cfg["out"]}
    _io.atomic_write(cfg["out"], blob)
    _io.atomic_write(_io.manifest_path(cfg["out"]), json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_decode(cfg, started):
    """Decode worker results (binary shares) into K approximations."""
    shares = sorted(read_shares(cfg["shares"]), key=lambda sh: sh.worker)
    N = len(shares) - 1
    if [sh.worker for sh in shares] != list(range(N + 1)):
        raise ConfigError("share file must hold workers 0..N exactly once")
    pattern = StragglerPattern(N, tuple(cfg["stragglers"]))
    if cfg["apply"]:
        inp = execute_workers(shares, parse_function(cfg["apply"]), pattern)
    else:
        keep = [int(i) for i in pattern.survivors]
        inp = DecodeInput(tuple(keep), np.stack([shares[i].payload for i in keep]), N,
                          np.array([sh.z for sh in shares]))
    alphas = encode_points(cfg["K"], cfg["family"])
    out = decode(inp, alphas)
    flat = out.reshape(out.shape[0], -1)
    header = ["k", "alpha"] + [f"v{i}" for i in range(flat.shape[1])]
    rows = [[k, alphas.points[k], *flat[k]] for k in range(flat.shape[0])]
    _io.write_outputs(cfg["out"], header, rows, _manifest("decode", cfg, None, started))


HANDLERS = {
    "lebesgue": cmd_lebesgue,
    "poly-exp": cmd_poly_exp,
    "nonpoly-exp": cmd_nonpoly_exp,
    "nodes-compare": cmd_nodes_compare,
    "bound": cmd_bound,
    "train-toy": cmd_train_toy,
    "encode": cmd_encode,
    "decode": cmd_decode,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise ConfigError("a command is required")
        cfg = resolve(ns.command, ns)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    started = time.perf_counter()
    try:
        HANDLERS[ns.command](cfg, started)
    except (ConfigError, BACCError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
