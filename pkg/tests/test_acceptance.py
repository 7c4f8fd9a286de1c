"""Acceptance suite: one PASS/FAIL line per criterion.

Each test prints its verdict with the measured values (visible under
``pytest -v``) and then asserts it, so a failing criterion shows up both in the
printed line and as a failed test.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from asnn.ann import Dense, NetworkSpec, Output, ann_forward
from asnn.cli import main
from asnn.datasets import load_mnist
from asnn.experiments import (
    cost_report,
    rate_precision_curve,
    switching_bench,
    tau_kappa_sweep,
    train_xor,
    xor_schedule,
    xor_stream_bench,
)
from asnn.network import AsnnNetwork, StepCounters, from_ann, run_classification
from asnn.neuron import AsnParams, AsnState, neuron_step, nu_factor
from asnn.weights import load_weights

DATA = Path(__file__).parent / "data"
MF_RATIOS = [0.1, 0.25, 0.5, 0.75, 1.0]


def verdict(capsys, number, checks, elapsed, limit, detail):
    """Print the one-line verdict and return whether every check held."""
    checks = dict(checks)
    checks["runtime"] = elapsed < limit
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"CRITERION {number:>2} {'PASS' if ok else 'FAIL'} | {detail} | {elapsed:.2f}s (limit {limit:g}s)"
    if failed:
        line += f" | failed: {', '.join(failed)}"
    with capsys.disabled():
        print("\n" + line)
    return ok, failed


def cli(args):
    code = main([str(a) for a in args])
    assert code == 0, f"command failed: {args}"


def metrics(out):
    return json.loads((Path(out) / "metrics.json").read_text())


# -- 1 --------------------------------------------------------------------------------


def test_criterion_01_nu(capsys):
    t0 = time.perf_counter()
    p = AsnParams()
    grid = np.geomspace(0.1, 500.0, 60)
    worst = 0.0
    for isi in grid:
        area, _ = integrate.quad(lambda t: math.exp(-t / p.tau_kappa), 0.0, isi, epsabs=0, epsrel=1e-13)
        ref = isi / (2.0 * area)
        worst = max(worst, abs(nu_factor(isi, p) - ref) / ref)
    small = nu_factor(1e-3 * p.tau_kappa, p)
    elapsed = time.perf_counter() - t0
    ok, failed = verdict(
        capsys, 1,
        {"quadrature": worst < 1e-6, "limit at 1e-3 tau": abs(small - 0.5) <= 1e-6},
        elapsed, 1.0,
        f"max rel err vs quadrature {worst:.2e} (< 1e-6); nu(1e-3 tau) - 0.5 = {small - 0.5:.3e} (|.| <= 1e-6)",
    )
    assert ok, failed


# -- 2 --------------------------------------------------------------------------------


def test_criterion_02_rectification(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    theta0 = 10.0 ** rng.uniform(-4, 1, 100)
    frac = rng.uniform(0, 1, 100)
    frac[:10] = 1.0  # inputs exactly at the threshold
    total = 0
    for th, f in zip(theta0, frac):
        p = AsnParams(theta0=float(th), mf=0.1 * float(th))
        state = AsnState()
        current = float(f * th)
        for _ in range(10_000):
            if neuron_step(state, current, p) is not None:
                total += 1
    elapsed = time.perf_counter() - t0
    ok, failed = verdict(capsys, 2, {"zero spikes": total == 0}, elapsed, 5.0,
                         f"100 pairs x 10 s, input <= theta0: {total} spikes")
    assert ok, failed


# -- 3 and 10 (encoding rerun) ----------------------------------------------------


def test_criterion_03_reconstruction(capsys, tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "encode"
    cli(["bench-encode", "--theta0", "0.1", "--mf-ratio", "0.1,1.0", "--amplitude", "1.0",
         "--duration", "1000", "--out", out])
    runs = metrics(out)["runs"]
    err = runs[0]["relative_error"]
    std_low, std_high = runs[0]["std_s_hat_smooth"], runs[1]["std_s_hat_smooth"]
    elapsed = time.perf_counter() - t0
    ok, failed = verdict(
        capsys, 3,
        {"mean within 5%": err <= 0.05, "std decreases": std_low < std_high},
        elapsed, 5.0,
        f"mean smoothed S_hat {runs[0]['mean_s_hat_smooth']:.4f} vs S=1 -> rel err {err:.2%} (<= 5%); "
        f"std {std_high:.4f} at mf=1.0 theta0 -> {std_low:.4f} at mf=0.1 theta0",
    )
    assert ok, failed


# -- 4 --------------------------------------------------------------------------------


def test_criterion_04_trends(capsys):
    t0 = time.perf_counter()
    curves = rate_precision_curve([AsnParams.from_ratio(0.1, q) for q in MF_RATIOS], np.linspace(0, 2, 21))
    non_decreasing = all(np.all(np.diff(c.rate) >= 0) for c in curves)
    saturating = True
    for c in curves:
        steps = np.diff(c.rate[c.s > 0.1])
        saturating &= bool(steps[-1] < steps[0])
    active = curves[0].s > 0.1
    stds = np.array([c.std[active] for c in curves])
    std_ordered = bool(np.all(np.diff(stds, axis=0) > 0))
    points = tau_kappa_sweep([10.0, 25.0, 50.0, 100.0, 200.0], target_rate=35.0)
    sse = [p.sse for p in points]
    resp = [p.responsiveness for p in points]
    rates_ok = all(abs(p.rate - 35.0) <= 3.5 for p in points)
    elapsed = time.perf_counter() - t0
    ok, failed = verdict(
        capsys, 4,
        {
            "rate non-decreasing": non_decreasing,
            "rate saturating": saturating,
            "std ordered by mf": std_ordered,
            "rate near 35 Hz": rates_ok,
            "SSE decreasing": all(a > b for a, b in zip(sse, sse[1:])),
            "responsiveness increasing": all(a < b for a, b in zip(resp, resp[1:])),
        },
        elapsed, 120.0,
        f"tau {[p.tau_kappa for p in points]} rate {[round(p.rate, 1) for p in points]} "
        f"SSE {[round(v, 1) for v in sse]} resp {[round(v, 1) for v in resp]} ms",
    )
    assert ok, failed


# -- 5 --------------------------------------------------------------------------------


def _random_net(rng):
    depth = int(rng.integers(1, 3))
    sizes = [int(rng.integers(2, 17)) for _ in range(depth + 1)] + [int(rng.integers(2, 6))]
    layers = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        cls = Output if i == len(sizes) - 2 else Dense
        layers.append(cls(rng.uniform(-1, 1, (b, a)), np.zeros(b)))
    return NetworkSpec((sizes[0],), layers)


def test_criterion_05_ann_equivalence(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    params = AsnParams.from_ratio(1e-3, 0.1)
    agree = compared = 0
    worst = 0.0
    for _ in range(20):
        spec = _random_net(rng)
        x = rng.uniform(0, 1, (30,) + spec.input_shape)
        ann = ann_forward(spec, x).output
        r = run_classification(from_ann(spec, params), x, 400).scores[-50:].mean(axis=0)
        c = np.sum(r * ann) / np.sum(ann * ann)
        scale = abs(c) * np.abs(ann).max()
        worst = max(worst, float(np.max(np.abs(r - c * ann)) / scale))
        top = np.sort(ann, axis=1)
        gap = top[:, -1] - top[:, -2]
        sep = gap >= 0.05 * np.maximum(np.abs(top[:, -1]), 1e-12)
        agree += int(np.sum(np.argmax(r[sep], 1) == np.argmax(ann[sep], 1)))
        compared += int(sep.sum())
    rate = agree / compared
    elapsed = time.perf_counter() - t0
    ok, failed = verdict(
        capsys, 5,
        {"argmax agreement": rate >= 0.95, "relative error": worst <= 0.10},
        elapsed, 120.0,
        f"argmax agreement {rate:.1%} over {compared} separated inputs (>= 95%); "
        f"max per-class rel err {worst:.2%} (<= 10%)",
    )
    assert ok, failed


# -- 6 and 10 (IRIS rerun) --------------------------------------------------------


@pytest.fixture(scope="module")
def iris_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("iris")
    t0 = time.perf_counter()
    cli(["train", "--preset", "iris", "--data", DATA / "iris.data", "--out", base / "train"])
    cli(["classify", "--preset", "iris", "--data", DATA / "iris.data", "--weights", base / "train" / "weights.json",
         "--out", base / "classify"])
    return base, time.perf_counter() - t0


def test_criterion_06_iris(capsys, iris_run):
    base, elapsed = iris_run
    train = metrics(base / "train")
    m = metrics(base / "classify")
    met = [p for p in m["points"] if p["matching_time_ms"] is not None]
    in_band = [p for p in met if 15.0 <= p["firing_rate_hz"] <= 90.0]
    lo, mt = m["lowest_fr"], m["lowest_mt"]
    detail = f"ANN val acc {train['validation_accuracy']:.3f}; met at {len(met)}/{len(m['points'])} mf values"
    if lo is not None:
        detail += (f"; lowest FR {lo['firing_rate_hz']:.1f} Hz @ MT {lo['matching_time_ms']:.0f} ms"
                   f" (mf {lo['mf_ratio']:.2f} theta0); lowest MT {mt['matching_time_ms']:.0f} ms"
                   f" @ FR {mt['firing_rate_hz']:.1f} Hz; reference FR 36 Hz / MT 107 ms")
    ok, failed = verdict(
        capsys, 6,
        {"ANN >= 95%": train["validation_accuracy"] >= 0.95, "criterion met with FR in [15, 90] Hz": bool(in_band)},
        elapsed, 600.0, detail,
    )
    assert ok, failed


# -- 7 --------------------------------------------------------------------------------


def test_criterion_07_xor(capsys):
    t0 = time.perf_counter()
    net = train_xor()
    assert [l.weights.shape for l in net.layers] == [(5, 2), (1, 5)]
    params = AsnParams.from_ratio(0.1, 1.0, tau_kappa=25.0)
    schedule = xor_schedule([0, 1, 3, 2, 0, 2, 1, 3, 0, 1, 2, 3, 1], 200.0)
    trace = xor_stream_bench(net, schedule, params)
    latency = trace.max_latency
    elapsed = time.perf_counter() - t0
    ok, failed = verdict(
        capsys, 7,
        {"100% steady state": trace.steady_correct == 1.0, "latency <= 50 ms": latency is not None and latency <= 50},
        elapsed, 60.0,
        f"steady-state correct {trace.steady_correct:.0%}; max switch latency {latency} ms; "
        f"firing rate {trace.firing_rate:.1f} Hz",
    )
    assert ok, failed


# -- 8 --------------------------------------------------------------------------------


def test_criterion_08_switching(capsys, tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "digits"
    cli(["train", "--preset", "digits", "--dataset", "mnist",
         "--train-images", DATA / "digits-train-images.idx", "--train-labels", DATA / "digits-train-labels.idx",
         "--images", DATA / "digits-test-images.idx", "--labels", DATA / "digits-test-labels.idx", "--out", out])
    spec = load_weights(out / "weights.json")
    test = load_mnist(DATA / "digits-test-images.idx", DATA / "digits-test-labels.idx")
    theta0 = 3.9e-3
    res = switching_bench(spec, test.features[:300], test.labels[:300], AsnParams.from_ratio(theta0, 3.0))
    noise = res.phase_rates("noise")[-1]
    digit = res.phase_rates("a")[-1]
    a, b = res.phases["noise"]
    readout = float(res.readout_max[a:b].max())
    elapsed = time.perf_counter() - t0
    ok, failed = verdict(
        capsys, 8,
        {"noise rate < 10% of digit rate": noise < 0.1 * digit, "readout below 0.3": readout < 0.3},
        elapsed, 600.0,
        f"ANN val acc {metrics(out)['validation_accuracy']:.3f}; deepest layer {noise:.3f} Hz (noise) vs "
        f"{digit:.1f} Hz (digit); max readout during noise {readout:.3f}; onset MT "
        f"{res.onset_report.matching_time if res.onset_report else None} ms; ST {res.switching_time} ms",
    )
    assert ok, failed


# -- 9 --------------------------------------------------------------------------------


def test_criterion_09_cost(capsys):
    t0 = time.perf_counter()
    spec = NetworkSpec((2,), [Dense(np.ones((4, 2)), np.zeros(4)), Output(np.ones((1, 4)), np.zeros(1))])
    net = AsnnNetwork(spec, AsnParams())
    counters = StepCounters.zeros(2)
    # three scripted input spikes, each fanning out to 4 hidden units
    for values in ([0.5, 0.0], [0.0, 0.2], [0.1, 0.0]):
        counters += net.route_spikes(0, np.array([values]))
    hand_count = 3 * 4
    pulse, overhead = 32.0, 16.0
    rep = cost_report(counters, net, 1000.0, pulse_bits=pulse, overhead_bits=overhead)
    formula = rep.connections * (pulse + overhead) * rep.asnn_fp
    elapsed = time.perf_counter() - t0
    ok, failed = verdict(
        capsys, 9,
        {"multiplications": rep.network_multiplications == hand_count,
         "bandwidth": math.isclose(rep.asnn_bandwidth, formula, rel_tol=1e-12)},
        elapsed, 1.0,
        f"multiplications {rep.network_multiplications:g} (hand {hand_count}); bandwidth "
        f"{rep.asnn_bandwidth:g} bit/s vs C(P+O)F_p = {formula:g}",
    )
    assert ok, failed


# -- 10 -------------------------------------------------------------------------------


def test_criterion_10_determinism(capsys, tmp_path, iris_run):
    t0 = time.perf_counter()
    base, _ = iris_run
    cli(["bench-encode", "--theta0", "0.1", "--mf-ratio", "0.1,1.0", "--duration", "1000", "--out", tmp_path / "e1"])
    cli(["bench-encode", "--config", tmp_path / "e1" / "config.json", "--out", tmp_path / "e2"])
    cli(["classify", "--config", base / "classify" / "config.json", "--out", tmp_path / "c2"])
    same_encode = (tmp_path / "e1" / "metrics.json").read_bytes() == (tmp_path / "e2" / "metrics.json").read_bytes()
    same_iris = (base / "classify" / "metrics.json").read_bytes() == (tmp_path / "c2" / "metrics.json").read_bytes()
    elapsed = time.perf_counter() - t0
    ok, failed = verdict(
        capsys, 10,
        {"encoding rerun identical": same_encode, "IRIS rerun identical": same_iris},
        elapsed, 600.0,
        "metrics.json reruns from stored config.json compared byte for byte",
    )
    assert ok, failed
