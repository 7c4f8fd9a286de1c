"""Command-line interface.

Every command writes into a run directory (``--out``, default
``runs/<command>``): ``config.json`` holds the fully resolved settings,
``metrics.json`` the results and ``*.csv`` files the per-step traces and
tables. ``asnn <command> --config runs/<command>/config.json`` repeats a run.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .ann import ShapeError, TrainConfig, TrainingError, accuracy, train_ffnn
from .config import ConfigError, PRESETS, RunConfig, resolve_config
from .datasets import Dataset, DatasetParseError, IdxError, load_iris, load_mnist, load_sonar
from .experiments import (
    REFERENCE_RESULTS,
    XOR_INPUTS,
    XOR_TARGETS,
    cost_report,
    encode_step_bench,
    mf_sweep,
    rate_precision_curve,
    switching_bench,
    tau_kappa_sweep,
    train_xor,
    xor_schedule,
    xor_stream_bench,
)
from .network import from_ann, run_classification
from .neuron import NeuronFault
from .weights import WeightFileError, load_weights, save_weights

log = logging.getLogger("asnn")

COMMANDS = (
    "train",
    "convert",
    "classify",
    "bench-encode",
    "bench-rate",
    "bench-tau",
    "bench-xor",
    "bench-switch",
    "cost",
    "all-tables",
)


# -- output helpers -----------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_plain(obj), f, indent=2, sort_keys=True)
        f.write("\n")


def write_table(path, rows: Sequence[Dict[str, Any]]) -> None:
    if not rows:
        open(path, "w").close()
        return
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(v) for k, v in row.items()})


def write_columns(path, columns: Dict[str, np.ndarray]) -> None:
    names = list(columns)
    n = len(next(iter(columns.values())))
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(names)
        for i in range(n):
            w.writerow([_cell(columns[k][i]) for k in names])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# -- data ---------------------------------------------------------------------


def _dataset(cfg: RunConfig, train: bool = False) -> Dataset:
    name = (cfg.dataset or "").lower()
    if name in ("iris", "sonar"):
        if cfg.data is None:
            raise ConfigError(f"--data is required for the {name} dataset")
        if name == "iris":
            return load_iris(cfg.data, seed=cfg.seed)
        split = None
        if cfg.split is not None:
            with open(cfg.split, encoding="utf-8") as f:
                doc = json.load(f)
            split = (doc["train"], doc["validation"])
        return load_sonar(cfg.data, seed=cfg.seed, split=split)
    if name == "mnist":
        images, labels = (cfg.train_images, cfg.train_labels) if train else (cfg.images, cfg.labels)
        if images is None or labels is None:
            which = "--train-images/--train-labels" if train else "--images/--labels"
            raise ConfigError(f"{which} are required for IDX datasets")
        ds = load_mnist(images, labels)
        if cfg.limit is not None and not train:
            keep = ds.val_idx[: cfg.limit]
            ds.val_idx = keep
        return ds
    raise ConfigError("choose --dataset iris, sonar or mnist")


def _eval_set(cfg: RunConfig):
    ds = _dataset(cfg)
    return ds.validation


def _weights(cfg: RunConfig):
    if cfg.weights is None:
        raise ConfigError("--weights is required")
    return load_weights(cfg.weights)


# -- commands -----------------------------------------------------------------


def cmd_train(cfg: RunConfig, out: str) -> Dict[str, Any]:
    if (cfg.dataset or "").lower() == "mnist":
        train_ds = _dataset(cfg, train=True)
        x_tr, y_tr = train_ds.features, train_ds.labels
        x_va, y_va = _eval_set(cfg) if cfg.images else (None, None)
        n_classes = train_ds.n_classes
    else:
        ds = _dataset(cfg)
        (x_tr, y_tr), (x_va, y_va) = ds.train, ds.validation
        n_classes = ds.n_classes
    sizes = [x_tr.shape[1]] + list(cfg.hidden) + [n_classes]
    tc = TrainConfig(
        lr=cfg.lr,
        dropout=cfg.dropout,
        epochs=cfg.epochs,
        batch=cfg.batch,
        seed=cfg.seed,
        momentum=cfg.momentum,
        use_bias=cfg.bias,
    )
    res = train_ffnn(sizes, x_tr, y_tr, tc, x_va, y_va)
    save_weights(res.net, os.path.join(out, "weights.json"))
    write_table(os.path.join(out, "loss.csv"), [{"epoch": i + 1, "loss": v} for i, v in enumerate(res.losses)])
    return {
        "sizes": sizes,
        "train_accuracy": res.train_accuracy,
        "validation_accuracy": res.val_accuracy,
        "final_loss": res.losses[-1] if res.losses else None,
    }


def cmd_convert(cfg: RunConfig, out: str) -> Dict[str, Any]:
    spec = _weights(cfg)
    net = from_ann(spec, cfg.params(), readout_tau=cfg.readout_tau)
    save_weights(spec, os.path.join(out, "weights.json"))
    rows = [
        {"population": i, "neurons": size, "connections_out": int(fan.sum()), "theta0": p.theta0, "mf": p.mf,
         "tau_kappa": p.tau_kappa}
        for i, (size, fan, p) in enumerate(zip(net.layer_sizes, net.fanouts, net.layer_params))
    ]
    write_table(os.path.join(out, "network.csv"), rows)
    return {
        "architecture": spec.describe(),
        "spiking_neurons": net.n_spiking,
        "output_units": spec.n_classes,
        "connections": net.n_connections,
        "populations": rows,
    }


def _sweep_metrics(cfg: RunConfig, sweep) -> Dict[str, Any]:
    def point(p):
        if p is None:
            return None
        return {"mf_ratio": p.mf_ratio, "mf": p.mf, "firing_rate_hz": p.report.firing_rate,
                "matching_time_ms": p.report.matching_time, "variance": p.report.variance}

    metrics = {
        "theta0": cfg.theta0,
        "ann_accuracy": sweep.ann_accuracy,
        "points": [dict(r, **{"stable": p.report.stable, "variance": p.report.variance})
                   for r, p in zip(sweep.rows(), sweep.points)],
        "criterion_met": bool(sweep.matched),
        "lowest_fr": point(sweep.lowest_fr),
        "lowest_mt": point(sweep.lowest_mt),
    }
    if cfg.preset in REFERENCE_RESULTS:
        metrics["reference"] = REFERENCE_RESULTS[cfg.preset]
    return metrics


def cmd_classify(cfg: RunConfig, out: str) -> Dict[str, Any]:
    spec = _weights(cfg)
    x, y = _eval_set(cfg)
    ratios = [m / cfg.theta0 for m in cfg.mf_values()]
    sweep = mf_sweep(spec, x, y, cfg.theta0, ratios, cfg.duration, cfg.params(), cfg.readout_tau,
                     keep_traces=True)
    write_table(os.path.join(out, "sweep.csv"), sweep.rows())
    steps = len(sweep.points[0].report.perf_curve)
    cols = {"t_ms": cfg.dt * np.arange(1, steps + 1)}
    for i, p in enumerate(sweep.points):
        cols[f"accuracy_mf{i}"] = p.report.perf_curve
    write_columns(os.path.join(out, "performance.csv"), cols)
    best = sweep.lowest_fr or sweep.points[0]
    best.trace.write_csv(os.path.join(out, "trace.csv"))
    return _sweep_metrics(cfg, sweep)


def cmd_bench_encode(cfg: RunConfig, out: str) -> Dict[str, Any]:
    results = []
    for i, p in enumerate(cfg.all_params()):
        trace = encode_step_bench(p, cfg.amplitude, cfg.duration, cfg.onset, cfg.offset)
        write_columns(os.path.join(out, f"encode_{i}.csv"), trace.columns())
        half = len(trace) // 2
        tail = trace.s_hat_smooth[half:]
        results.append({
            "mf": p.mf,
            "mf_ratio": p.mf_ratio,
            "spikes": int(trace.spikes.sum()),
            "mean_s_hat_smooth": float(tail.mean()),
            "std_s_hat_smooth": float(tail.std()),
            "relative_error": abs(float(tail.mean()) - cfg.amplitude) / cfg.amplitude if cfg.amplitude else None,
        })
    write_table(os.path.join(out, "encode.csv"), results)
    return {"amplitude": cfg.amplitude, "duration_ms": cfg.duration, "runs": results}


def cmd_bench_rate(cfg: RunConfig, out: str) -> Dict[str, Any]:
    grid = np.linspace(0.0, cfg.s_max, cfg.s_steps)
    curves = rate_precision_curve(cfg.all_params(), grid, warmup_ms=cfg.warmup, window_ms=1000.0)
    rows = []
    for c in curves:
        for s, r, m, sd in zip(c.s, c.rate, c.mean, c.std):
            rows.append({"mf": c.params.mf, "mf_ratio": c.params.mf_ratio, "s": s, "rate_hz": r,
                         "mean_s_hat": m, "std_s_hat": sd})
    write_table(os.path.join(out, "rate.csv"), rows)
    return {
        "curves": len(curves),
        "mf": [c.params.mf for c in curves],
        "max_rate_hz": [float(c.rate.max()) for c in curves],
        "mean_std": [float(c.std.mean()) for c in curves],
    }


def cmd_bench_tau(cfg: RunConfig, out: str) -> Dict[str, Any]:
    points = tau_kappa_sweep(cfg.taus, cfg.target_rate, cfg.theta0, cfg.amplitude, base=cfg.params())
    rows = [vars(p).copy() for p in points]
    write_table(os.path.join(out, "tau.csv"), rows)
    sse = [p.sse for p in points]
    resp = [p.responsiveness for p in points]
    return {
        "points": rows,
        "sse_decreasing": all(a > b for a, b in zip(sse, sse[1:])),
        "responsiveness_increasing": None not in resp and all(a < b for a, b in zip(resp, resp[1:])),
    }


def _xor_net(cfg: RunConfig):
    if cfg.weights is not None:
        return load_weights(cfg.weights)
    hidden = cfg.hidden[0] if len(cfg.hidden) == 1 else 5
    return train_xor(seed=cfg.seed, hidden=hidden)


def cmd_bench_xor(cfg: RunConfig, out: str) -> Dict[str, Any]:
    spec = _xor_net(cfg)
    save_weights(spec, os.path.join(out, "weights.json"))
    trace = xor_stream_bench(spec, xor_schedule(cfg.patterns, cfg.segment_ms), cfg.params(), cfg.readout_tau)
    write_columns(os.path.join(out, "xor.csv"), {
        "t_ms": cfg.dt * np.arange(1, len(trace.output) + 1),
        "x1": trace.inputs[:, 0],
        "x2": trace.inputs[:, 1],
        "target": trace.targets,
        "output": trace.output,
        "decision": trace.decision,
    })
    return {
        "firing_rate_hz": trace.firing_rate,
        "decision_threshold": trace.threshold,
        "steady_state_correct": trace.steady_correct,
        "latencies_ms": trace.latencies,
        "max_latency_ms": trace.max_latency,
        "overall_correct": float(trace.correct.mean()),
    }


def cmd_bench_switch(cfg: RunConfig, out: str) -> Dict[str, Any]:
    spec = _weights(cfg)
    x, y = _eval_set(cfg)
    n = min(cfg.trials, len(y))
    results = {}
    for i, p in enumerate(cfg.all_params()):
        res = switching_bench(spec, x[:n], y[:n], p, cfg.noise_ms, cfg.digit_a_ms, cfg.digit_b_ms,
                              threshold=cfg.decision_threshold, readout_tau=cfg.readout_tau, seed=cfg.seed)
        cols = {"t_ms": cfg.dt * np.arange(1, len(res.readout) + 1)}
        for l in range(res.layer_rates.shape[1]):
            cols[f"rate_l{l}"] = res.layer_rates[:, l]
        cols.update({"readout_mean": res.readout, "readout_max": res.readout_max, "performance": res.perf,
                     "strict_performance": res.strict_perf})
        write_columns(os.path.join(out, f"switch_{i}.csv"), cols)
        a, b = res.phases["noise"]
        results[f"mf{i}"] = {
            "mf": p.mf,
            "mf_ratio": p.mf_ratio,
            "noise_rates_hz": res.phase_rates("noise"),
            "digit_a_rates_hz": res.phase_rates("a"),
            "digit_b_rates_hz": res.phase_rates("b"),
            "noise_readout_max": float(res.readout_max[a:b].max()) if b > a else None,
            "onset_matching_time_ms": res.onset_report.matching_time if res.onset_report else None,
            "switching_time_ms": res.switching_time,
        }
    return {"trials": n, "runs": results}


def cmd_cost(cfg: RunConfig, out: str) -> Dict[str, Any]:
    if cfg.weights is None and cfg.dataset is None:
        spec, x = train_xor(seed=cfg.seed), XOR_INPUTS
    else:
        spec = _weights(cfg)
        x, _ = _eval_set(cfg)
    net = from_ann(spec, cfg.params(), readout_tau=cfg.readout_tau)
    run_classification(net, x, cfg.duration)
    report = cost_report(net.counters, net, cfg.duration, cfg.pulse_bits, cfg.overhead_bits, cfg.ann_rate)
    write_table(os.path.join(out, "cost.csv"), report.table())
    return {
        "connections": report.connections,
        "pulse_bits": report.pulse_bits,
        "overhead_bits": report.overhead_bits,
        "ann_rate_hz": report.ann_rate,
        "asnn_fp_hz": report.asnn_fp,
        "firing_rate_hz": report.firing_rate,
        "network_multiplications": report.network_multiplications,
        "table": report.table(),
    }


def cmd_all_tables(cfg: RunConfig, out: str) -> Dict[str, Any]:
    """Run every single-neuron and streaming bench with its own defaults,
    plus classify/cost when weights and data are configured."""
    summary = {}
    plan = ["bench-encode", "bench-rate", "bench-tau", "bench-xor", "cost"]
    if cfg.weights is not None and cfg.dataset is not None:
        plan.append("classify")
    for command in plan:
        flags = {"out": os.path.join(out, command)}
        if command in ("classify", "cost"):
            flags.update({k: v for k, v in cfg.to_dict().items() if k not in ("command", "out")})
        sub = resolve_config(command, flags)
        summary[command] = _execute(sub)
    return summary


HANDLERS: Dict[str, Callable[[RunConfig, str], Dict[str, Any]]] = {
    "train": cmd_train,
    "convert": cmd_convert,
    "classify": cmd_classify,
    "bench-encode": cmd_bench_encode,
    "bench-rate": cmd_bench_rate,
    "bench-tau": cmd_bench_tau,
    "bench-xor": cmd_bench_xor,
    "bench-switch": cmd_bench_switch,
    "cost": cmd_cost,
    "all-tables": cmd_all_tables,
}


def _execute(cfg: RunConfig) -> Dict[str, Any]:
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "config.json"), "w", encoding="utf-8") as f:
        f.write(cfg.dumps())
    metrics = HANDLERS[cfg.command](cfg, cfg.out)
    write_json(os.path.join(cfg.out, "metrics.json"), metrics)
    return metrics


# -- argument parsing ---------------------------------------------------------


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run")
    g.add_argument("--config", help="JSON config file; flags override its values")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--out", help="run directory (default runs/<command>)")
    g.add_argument("--seed", type=int)
    g.add_argument("-v", "--verbose", action="store_true")

    g = p.add_argument_group("neuron")
    g.add_argument("--theta0", type=float)
    g.add_argument("--mf-ratio", type=_floats, help="mf as multiples of theta0, comma-separated")
    g.add_argument("--mf", type=_floats, help="absolute mf values, comma-separated (overrides --mf-ratio)")
    g.add_argument("--tau-kappa", type=float)
    g.add_argument("--tau-gamma", type=float)
    g.add_argument("--tau-smooth", type=float)
    g.add_argument("--readout-tau", type=float)
    g.add_argument("--dt", type=float)
    g.add_argument("--duration", type=float, help="ms")

    g = p.add_argument_group("data")
    g.add_argument("--dataset", choices=["iris", "sonar", "mnist"])
    g.add_argument("--data", help="delimited text file (iris, sonar)")
    g.add_argument("--split", help="JSON file with 'train' and 'validation' row indices")
    g.add_argument("--images", help="IDX image file used for evaluation")
    g.add_argument("--labels", help="IDX label file used for evaluation")
    g.add_argument("--train-images")
    g.add_argument("--train-labels")
    g.add_argument("--limit", type=int, help="evaluate only the first N IDX samples")
    g.add_argument("--full", action="store_true", help="evaluate every IDX sample")
    g.add_argument("--weights", help="weight file")

    g = p.add_argument_group("training")
    g.add_argument("--hidden", type=_ints, help="hidden layer sizes, comma-separated")
    g.add_argument("--lr", type=float)
    g.add_argument("--dropout", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch", type=int)
    g.add_argument("--momentum", type=float)
    g.add_argument("--bias", action=argparse.BooleanOptionalAction, default=None)

    g = p.add_argument_group("benches")
    g.add_argument("--amplitude", type=float)
    g.add_argument("--onset", type=float)
    g.add_argument("--offset", type=float)
    g.add_argument("--s-max", type=float)
    g.add_argument("--s-steps", type=int)
    g.add_argument("--warmup", type=float)
    g.add_argument("--taus", type=_floats)
    g.add_argument("--target-rate", type=float)
    g.add_argument("--segment-ms", type=float)
    g.add_argument("--patterns", type=_ints, help="XOR pattern indices 0..3")
    g.add_argument("--noise-ms", type=float)
    g.add_argument("--digit-a-ms", type=float)
    g.add_argument("--digit-b-ms", type=float)
    g.add_argument("--trials", type=int)
    g.add_argument("--decision-threshold", type=float)
    g.add_argument("--pulse-bits", type=float)
    g.add_argument("--overhead-bits", type=float)
    g.add_argument("--ann-rate", type=float, help="ANN frame rate H_a in Hz")
    return p


HELP = {
    "train": "train a ReLU feed-forward network and save its weights",
    "convert": "convert a weight file into a spiking network and describe it",
    "classify": "classify a dataset with the spiking network over an mf sweep",
    "bench-encode": "encode a step input with single neurons",
    "bench-rate": "firing rate and precision versus constant input",
    "bench-tau": "reconstruction error and responsiveness versus tau_kappa",
    "bench-xor": "streaming XOR through a 2-5-1 spiking network",
    "bench-switch": "noise, then digit A, then digit B without reset",
    "cost": "ANN cost formulas next to measured spiking counts",
    "all-tables": "run every bench into subdirectories",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asnn", description="Adaptive spiking neural networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    common = _common()
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    flags = vars(args).copy()
    for key in ("command", "config", "verbose", "full"):
        flags.pop(key)
    if args.full:
        flags["limit"] = None
    try:
        cfg = resolve_config(args.command, flags, args.config)
        if args.full:
            cfg.limit = None
        metrics = _execute(cfg)
    except (ConfigError, DatasetParseError, IdxError, WeightFileError, ShapeError) as exc:
        print(f"asnn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NeuronFault, TrainingError) as exc:
        print(f"asnn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(_plain(_headline(args.command, metrics)), sort_keys=True))
    print(f"wrote {cfg.out}", file=sys.stderr)
    return 0


def _headline(command: str, metrics: Dict[str, Any]) -> Dict[str, Any]:
    keep = {
        "classify": ("ann_accuracy", "criterion_met", "lowest_fr", "lowest_mt"),
        "bench-tau": ("sse_decreasing", "responsiveness_increasing"),
        "bench-xor": ("firing_rate_hz", "steady_state_correct", "max_latency_ms"),
        "cost": ("connections", "asnn_fp_hz", "firing_rate_hz"),
    }.get(command)
    if command == "all-tables":
        return {k: _headline(k, v) for k, v in metrics.items()}
    if keep is None:
        return {k: v for k, v in metrics.items() if not isinstance(v, (list, dict))}
    return {k: metrics.get(k) for k in keep}


if __name__ == "__main__":
    sys.exit(main())
