import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from asnn.neuron import (
    AsnParams,
    AsnPopulation,
    AsnState,
    NeuronFault,
    SpikeEvent,
    deliver_spike,
    fit_nu_linear,
    neuron_step,
    nu_factor,
)


def nu_quadrature(isi, tau):
    area, _ = integrate.quad(lambda t: math.exp(-t / tau), 0.0, isi, epsabs=0, epsrel=1e-13)
    return isi / (2.0 * area)


def run_scalar(params, current, steps):
    state = AsnState()
    spikes = []
    for _ in range(steps):
        ev = neuron_step(state, current, params)
        if ev is not None:
            spikes.append(ev)
    return state, spikes


# -- nu -----------------------------------------------------------------------


@pytest.mark.parametrize("isi", [0.1, 0.5, 1.0, 7.3, 25.0, 50.0, 123.4, 250.0, 500.0])
def test_nu_matches_quadrature(isi):
    p = AsnParams()
    assert nu_factor(isi, p) == pytest.approx(nu_quadrature(isi, p.tau_kappa), rel=1e-9)


def test_nu_small_isi_limit():
    p = AsnParams()
    # series: nu = 1/2 + x/4 + x**2/24 + O(x**4), x = isi / tau
    d = 1e-3 * p.tau_kappa
    x = d / p.tau_kappa
    assert nu_factor(d, p) == pytest.approx(0.5 + x / 4 + x**2 / 24, abs=1e-12)
    assert abs(nu_factor(1e-7 * p.tau_kappa, p) - 0.5) < 1e-6


def test_nu_at_tau():
    p = AsnParams(tau_kappa=50.0)
    assert nu_factor(50.0, p) == pytest.approx(0.7910, abs=5e-5)


def test_nu_asymptote():
    p = AsnParams(tau_kappa=50.0)
    assert nu_factor(500.0, p) == pytest.approx(5.0, rel=1e-4)


def test_nu_array_input():
    p = AsnParams()
    isi = np.array([1.0, 10.0, 100.0])
    out = nu_factor(isi, p)
    assert out.shape == (3,)
    assert out[1] == nu_factor(10.0, p)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_nu_rejects_non_positive(bad):
    with pytest.raises(ValueError):
        nu_factor(bad, AsnParams())


def test_nu_linear_mode_clamped():
    p = AsnParams(nu_linear=(0.2, 0.01))
    assert nu_factor(100.0, p) == pytest.approx(1.2)
    assert nu_factor(1.0, p) == 0.5


@given(st.floats(min_value=1e-3, max_value=2000.0), st.floats(min_value=1.0, max_value=200.0))
def test_nu_bounds_and_monotone(isi, tau):
    p = AsnParams(tau_kappa=tau)
    v = nu_factor(isi, p)
    assert v >= 0.5 - 1e-12
    assert nu_factor(isi * 1.5, p) >= v


def test_fit_nu_linear_matches_normal_equations():
    tau = 50.0
    grid = np.linspace(5.0, 200.0, 40)
    a, b, rms = fit_nu_linear(tau, grid)
    # independent oracle: closed-form simple regression on quadrature values
    y = np.array([nu_quadrature(g, tau) for g in grid])
    xm, ym = grid.mean(), y.mean()
    b_ref = np.sum((grid - xm) * (y - ym)) / np.sum((grid - xm) ** 2)
    a_ref = ym - b_ref * xm
    assert a == pytest.approx(a_ref, rel=1e-8)
    assert b == pytest.approx(b_ref, rel=1e-8)
    assert rms == pytest.approx(np.sqrt(np.mean((a_ref + b_ref * grid - y) ** 2)), rel=1e-6)


def test_fit_nu_linear_degenerate_grid():
    with pytest.raises(ValueError):
        fit_nu_linear(50.0, [10.0, 10.0, 10.0])
    with pytest.raises(ValueError):
        fit_nu_linear(50.0, [5.0])


# -- params ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs", [{"theta0": 0.0}, {"theta0": -1.0}, {"mf": -0.1}, {"tau_kappa": 0.0}, {"dt": -1.0}]
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        AsnParams(**kwargs)


def test_params_coarse_dt_warns():
    with pytest.warns(RuntimeWarning):
        AsnParams(dt=5.0)


def test_from_ratio():
    p = AsnParams.from_ratio(0.0128, 0.5)
    assert p.mf == pytest.approx(0.0064)
    assert p.mf_ratio == pytest.approx(0.5)


# -- neuron dynamics ------------------------------------------------------------


def test_zero_input_no_spikes():
    state, spikes = run_scalar(AsnParams(), 0.0, 1000)
    assert spikes == []
    assert state.s == 0.0 and state.s_hat == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1e-4, max_value=10.0), st.floats(min_value=0.0, max_value=1.0))
def test_rectification_below_threshold(theta0, frac):
    p = AsnParams(theta0=theta0, mf=0.1 * theta0)
    _, spikes = run_scalar(p, frac * theta0, 2000)
    assert spikes == []


def test_negative_input_silent():
    _, spikes = run_scalar(AsnParams(), -5.0, 500)
    assert spikes == []


def test_first_spike_uses_cap_and_height_is_threshold():
    p = AsnParams()
    state = AsnState()
    ev = None
    while ev is None:
        ev = neuron_step(state, 1.0, p)
    assert ev.height == pytest.approx(p.theta0)
    assert ev.value == pytest.approx(p.theta0 * nu_factor(p.isi_cap, p))
    assert state.theta_adapt == pytest.approx(p.adapt_gain * p.theta0)
    assert state.last_spike_time == ev.time


def test_second_spike_uses_isi():
    p = AsnParams()
    state = AsnState()
    events = []
    while len(events) < 2:
        ev = neuron_step(state, 1.0, p)
        if ev is not None:
            events.append(ev)
    isi = events[1].time - events[0].time
    assert events[1].value == pytest.approx(events[1].height * nu_factor(isi, p))


def test_strong_input_at_most_one_spike_per_step():
    p = AsnParams(theta0=1e-3, mf=0.0)
    state = AsnState()
    for _ in range(200):
        ev = neuron_step(state, 100.0, p)
        assert ev is None or isinstance(ev, SpikeEvent)


def test_rate_non_increasing_in_mf():
    rates = []
    for mf in [0.01, 0.025, 0.05, 0.075, 0.1]:
        _, spikes = run_scalar(AsnParams(theta0=0.1, mf=mf), 1.0, 1500)
        rates.append(len(spikes))
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_non_finite_input_raises_with_id():
    state = AsnState(neuron_id=(2, 5))
    with pytest.raises(NeuronFault) as info:
        neuron_step(state, float("nan"), AsnParams())
    assert info.value.neuron == (2, 5)


def test_deliver_spike_adds_weighted_value():
    state = AsnState()
    ev = SpikeEvent(time=3.0, source=0, height=0.1, value=0.25)
    deliver_spike(state, -2.0, ev)
    assert state.i_in == -0.5
    with pytest.raises(ValueError):
        deliver_spike(state, 1.0, SpikeEvent(3.0, 0, 0.0, 0.0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=-1.0, max_value=3.0), min_size=1, max_size=60))
def test_state_invariants(currents):
    p = AsnParams()
    state = AsnState()
    for c in currents * 5:
        neuron_step(state, c, p)
        assert state.s_hat >= 0.0
        assert state.theta_adapt >= 0.0
        assert state.threshold(p) >= p.theta0


# -- population matches scalar ------------------------------------------------


def test_population_bit_identical_to_scalar():
    p = AsnParams(theta0=0.05, mf=0.02)
    rng = np.random.default_rng(3)
    currents = rng.uniform(-0.2, 1.5, size=(400, 6))
    pop = AsnPopulation((6,), p)
    states = [AsnState() for _ in range(6)]
    for t in range(400):
        mask, values = pop.step(currents[t])
        for i, st_ in enumerate(states):
            ev = neuron_step(st_, currents[t, i], p)
            assert bool(mask[i]) == (ev is not None)
            assert values[i] == (0.0 if ev is None else ev.value)
    assert np.array_equal(pop.s_hat, [s.s_hat for s in states])
    assert np.array_equal(pop.theta_adapt, [s.theta_adapt for s in states])


def test_population_adapt_gain_override():
    p = AsnParams(theta0=0.1, mf=0.01)
    pop = AsnPopulation((2,), p, adapt_gain=np.array([0.1, 1.0]))
    for _ in range(1000):
        pop.step(np.array([1.0, 1.0]))
    assert pop.spike_count[0] > pop.spike_count[1]


def test_population_fault_index():
    pop = AsnPopulation((2, 3), AsnParams())
    cur = np.zeros((2, 3))
    cur[1, 2] = np.inf
    with pytest.raises(NeuronFault) as info:
        pop.step(cur)
    assert tuple(int(v) for v in info.value.neuron) == (1, 2)


def test_determinism():
    p = AsnParams()
    a, sa = run_scalar(p, 0.7, 800)
    b, sb = run_scalar(p, 0.7, 800)
    assert [e.time for e in sa] == [e.time for e in sb]
    assert a.s_hat == b.s_hat
