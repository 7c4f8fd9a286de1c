import numpy as np
import pytest

from asnn.ann import AvgPool, Conv, Dense, NetworkSpec, Output, ann_forward
from asnn.network import AsnnNetwork, from_ann, run_classification, run_frames
from asnn.neuron import AsnParams, NeuronFault


def chain(weight=1.0):
    """input neuron -> one hidden neuron -> one output."""
    return NetworkSpec((1,), [Dense(np.array([[weight]]), np.zeros(1)), Output(np.array([[1.0]]), np.zeros(1))])


def random_dense(rng, sizes):
    layers = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        cls = Output if i == len(sizes) - 2 else Dense
        layers.append(cls(rng.uniform(-1, 1, (b, a)), np.zeros(b)))
    return NetworkSpec((sizes[0],), layers)


def test_receiver_current_reproduces_sender_s_hat():
    net = from_ann(chain(), AsnParams())
    for t in range(600):
        net.tick(np.array([1.0 if t < 400 else 0.0]))
        assert net.populations[1].i_in[0, 0] == pytest.approx(net.populations[0].s_hat[0, 0], abs=1e-15)


def test_zero_input_zero_spikes():
    rng = np.random.default_rng(0)
    net = from_ann(random_dense(rng, [4, 6, 3]), AsnParams(theta0=0.01, mf=0.001))
    trace = run_classification(net, np.zeros((5, 4)), 200)
    assert trace.spikes.sum() == 0
    assert trace.network_multiplications.sum() == 0
    assert np.all(trace.scores == 0)


def test_scripted_spikes_hand_count():
    # two input neurons, each fanning out to 4 hidden units
    spec = NetworkSpec((2,), [Dense(np.ones((4, 2)), np.zeros(4)), Output(np.ones((1, 4)), np.zeros(1))])
    net = AsnnNetwork(spec, AsnParams())
    total = 0
    for values in ([0.5, 0.0], [0.0, 0.2], [0.1, 0.0]):
        total += net.route_spikes(0, np.array([values])).network_multiplications
    assert total == 12
    assert np.allclose(net.populations[1].i_in, 0.8)


def test_fanouts_for_conv_and_pool():
    rng = np.random.default_rng(1)
    spec = NetworkSpec(
        (6, 6, 1),
        [Conv(rng.normal(size=(2, 1, 3, 3)), np.zeros(2)), AvgPool(2), Output(rng.normal(size=(3, 8)), np.zeros(3))],
    )
    net = AsnnNetwork(spec, AsnParams())
    # a corner pixel feeds one window per kernel, the centre feeds 9
    assert net.fanouts[0][0, 0, 0] == 2
    assert net.fanouts[0][2, 2, 0] == 18
    assert np.all(net.fanouts[1] == 1)
    assert np.all(net.fanouts[2] == 3)
    assert net.n_connections == net.fanouts[0].sum() + 4 * 4 * 2 + 2 * 2 * 2 * 3


def test_batch_rows_are_independent():
    rng = np.random.default_rng(2)
    spec = random_dense(rng, [3, 5, 2])
    x = rng.uniform(size=(4, 3))
    p = AsnParams(theta0=0.01, mf=0.005)
    together = run_classification(from_ann(spec, p), x, 150)
    for i in range(4):
        alone = run_classification(from_ann(spec, p), x[i], 150)
        assert np.array_equal(alone.scores[:, 0], together.scores[:, i])


def test_determinism():
    rng = np.random.default_rng(3)
    spec = random_dense(rng, [3, 5, 2])
    x = rng.uniform(size=(4, 3))
    p = AsnParams(theta0=0.01, mf=0.005)
    a = run_classification(from_ann(spec, p), x, 100)
    b = run_classification(from_ann(spec, p), x, 100)
    assert np.array_equal(a.scores, b.scores)
    assert np.array_equal(a.spikes, b.spikes)


def test_steady_state_proportional_to_ann():
    rng = np.random.default_rng(4)
    spec = random_dense(rng, [4, 8, 8, 3])
    x = rng.uniform(size=(20, 4))
    ann = ann_forward(spec, x).output
    net = from_ann(spec, AsnParams.from_ratio(1e-3, 0.1))
    r = run_classification(net, x, 400).scores[-50:].mean(axis=0)
    c = np.sum(r * ann) / np.sum(ann * ann)
    assert 0.5 < c < 1.0
    assert np.max(np.abs(r - c * ann)) / (c * np.abs(ann).max()) < 0.1


def test_avgpool_conversion_runs_and_pools():
    spec = NetworkSpec((2, 2, 1), [AvgPool(2), Output(np.ones((1, 1)), np.zeros(1))])
    net = from_ann(spec, AsnParams(theta0=0.01, mf=0.001))
    trace = run_classification(net, np.full((2, 2, 1), 0.5), 300)
    assert trace.spikes[:, 1].sum() > 0
    assert trace.scores[-1, 0, 0] > 0


def test_layer_params_override():
    spec = chain()
    fast = AsnParams(tau_kappa=10.0)
    net = from_ann(spec, AsnParams(), layer_params={0: fast})
    assert net.populations[0].params is fast
    assert net.populations[1].input_decay == fast.kappa_decay
    with pytest.raises(ValueError):
        from_ann(spec, AsnParams(), layer_params={7: fast})


def test_spiking_readout_counts():
    net = from_ann(chain(), AsnParams(), spiking_readout=True)
    trace = run_classification(net, np.array([1.0]), 300)
    assert trace.readout_spikes.sum() > 0


def test_non_finite_input_fault_names_neuron():
    net = from_ann(chain(), AsnParams())
    with pytest.raises(NeuronFault) as info:
        net.tick(np.array([np.nan]))
    assert info.value.neuron[0] == 0


def test_frame_shape_checked():
    net = from_ann(chain(), AsnParams())
    with pytest.raises(ValueError):
        net.tick(np.zeros(3))


def test_counters_and_firing_rate_definition():
    rng = np.random.default_rng(5)
    spec = random_dense(rng, [3, 4, 2])
    net = from_ann(spec, AsnParams(theta0=0.01, mf=0.01))
    trace = run_classification(net, rng.uniform(size=(2, 3)), 300)
    assert np.all(trace.neuron_updates == 2 * net.n_units)
    expected = trace.spikes[-100:].sum() / (sum(trace.layer_sizes) * 2 * 0.1)
    assert trace.firing_rate(100) == pytest.approx(expected)
    assert net.counters.network_multiplications == trace.network_multiplications.sum()


def test_write_csv(tmp_path):
    net = from_ann(chain(), AsnParams())
    trace = run_classification(net, np.array([1.0]), 20, labels=np.array([0]))
    path = tmp_path / "t.csv"
    trace.write_csv(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 21
    assert lines[0].startswith("t_ms,accuracy,spikes_l0")


def test_run_frames_streaming_without_reset():
    net = from_ann(chain(), AsnParams())
    run_frames(net, [np.array([1.0])] * 100)
    before = net.populations[0].spike_count.sum()
    run_frames(net, [np.array([1.0])] * 100, reset=False)
    assert net.populations[0].spike_count.sum() > before


def test_conv_network_proportional_to_ann():
    rng = np.random.default_rng(6)
    spec = NetworkSpec(
        (8, 8, 1),
        [
            Conv(rng.uniform(-1, 1, (3, 1, 3, 3)), np.zeros(3)),
            AvgPool(2),
            Output(rng.uniform(-1, 1, (4, 27)), np.zeros(4)),
        ],
    )
    x = rng.uniform(size=(6, 8, 8, 1))
    ann = ann_forward(spec, x).output
    net = from_ann(spec, AsnParams.from_ratio(1e-3, 0.1))
    trace = run_classification(net, x, 300)
    r = trace.scores[-50:].mean(axis=0)
    c = np.sum(r * ann) / np.sum(ann * ann)
    assert np.max(np.abs(r - c * ann)) / (c * np.abs(ann).max()) < 0.1
