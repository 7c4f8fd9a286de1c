"""Adaptive spiking neuron (ASN).

The neuron tracks four exponentially decaying accumulators and encodes its
smoothed input ``S`` as a train of variable-height pulses whose summed
refractory kernels ``S_hat`` approximate ``S``:

    S       exponential smoothing of the input current (tau_smooth)
    S_hat   sum of refractory kernels, decays with tau_kappa
    theta   theta0 + adaptive part, the adaptive part decays with tau_gamma
    I       sum of weighted incoming kernels, decays with tau_kappa

A spike is emitted when ``u = S - S_hat`` exceeds ``theta``. The pulse carries
``height * nu(ISI)`` so a receiver can add it straight into its current
accumulator without knowing the sender's history.

Two interfaces share the same arithmetic: scalar :class:`AsnState` with
:func:`neuron_step` / :func:`deliver_spike`, and the array-valued
:class:`AsnPopulation` used by the network simulator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "AsnParams",
    "AsnState",
    "AsnPopulation",
    "NeuronFault",
    "SpikeEvent",
    "deliver_spike",
    "decay_state",
    "fire_state",
    "fit_nu_linear",
    "neuron_step",
    "nu_factor",
]


class NeuronFault(ArithmeticError):
    """Raised when a neuron state or its input stops being finite."""

    def __init__(self, message: str, neuron: object = None):
        super().__init__(message if neuron is None else f"{message} (neuron {neuron})")
        self.neuron = neuron


@dataclass(frozen=True)
class AsnParams:
    """Coding parameters of an adaptive spiking neuron.

    ``mf`` is given in signal units, like ``theta0`` (a setting written as
    ``mf = 0.1 * theta0`` means ``mf=0.01`` when ``theta0=0.1``). Each spike
    raises the threshold by ``(mf / theta0) * theta(t_i)``, so the ratio of the
    two sets the saturating firing rate. Times are in ms.
    """

    theta0: float = 0.1
    mf: float = 0.01
    tau_kappa: float = 50.0
    tau_gamma: float = 15.0
    tau_smooth: float = 2.5
    dt: float = 1.0
    # None selects the closed form of nu; (a, b) selects nu = a + b * isi.
    nu_linear: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not self.theta0 > 0:
            raise ValueError(f"theta0 must be positive, got {self.theta0}")
        if not self.mf >= 0:
            raise ValueError(f"mf must be non-negative, got {self.mf}")
        for name in ("tau_kappa", "tau_gamma", "tau_smooth", "dt"):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.nu_linear is not None:
            a, b = self.nu_linear
            object.__setattr__(self, "nu_linear", (float(a), float(b)))
        if self.dt > min(self.tau_kappa, self.tau_gamma, self.tau_smooth):
            warnings.warn(
                f"dt={self.dt} exceeds the smallest time constant; dynamics will be coarse",
                RuntimeWarning,
                stacklevel=3,
            )

    @classmethod
    def from_ratio(cls, theta0: float, mf_ratio: float, **kwargs) -> "AsnParams":
        return cls(theta0=theta0, mf=mf_ratio * theta0, **kwargs)

    @property
    def mf_ratio(self) -> float:
        return self.mf / self.theta0

    @property
    def adapt_gain(self) -> float:
        """Fraction of the current threshold added to it by each spike."""
        return self.mf / self.theta0

    @cached_property
    def kappa_decay(self) -> float:
        return math.exp(-self.dt / self.tau_kappa)

    @cached_property
    def gamma_decay(self) -> float:
        return math.exp(-self.dt / self.tau_gamma)

    @cached_property
    def smooth_alpha(self) -> float:
        return -math.expm1(-self.dt / self.tau_smooth)

    @property
    def isi_cap(self) -> float:
        """Surrogate ISI used for a neuron's first spike."""
        return 10.0 * self.tau_kappa

    def with_(self, **changes) -> "AsnParams":
        return replace(self, **changes)


def nu_factor(isi, params: AsnParams):
    """Kernel height correction for an inter-spike interval ``isi`` (ms).

    Closed form: ``isi / (2 * tau * (1 - exp(-isi / tau)))``, which tends to
    0.5 as ``isi -> 0`` and to ``isi / (2 * tau)`` for long intervals. With
    ``params.nu_linear = (a, b)`` it returns ``max(a + b * isi, 0.5)``.
    Accepts scalars or arrays.
    """
    arr = np.asarray(isi, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("nu is only defined for positive inter-spike intervals")
    if params.nu_linear is not None:
        a, b = params.nu_linear
        out = np.maximum(a + b * arr, 0.5)
    else:
        tau = params.tau_kappa
        out = arr / (-2.0 * tau * np.expm1(-arr / tau))
    if out.ndim == 0:
        return float(out)
    return out


def fit_nu_linear(tau_kappa: float, isi_grid: Sequence[float]):
    """Least-squares line ``a + b * isi`` through the exact nu on ``isi_grid``.

    Returns ``(a, b, rms_residual)``.
    """
    grid = np.asarray(isi_grid, dtype=float).ravel()
    if grid.size < 2 or np.unique(grid).size < 2:
        raise ValueError("need at least two distinct ISI values to fit a line")
    if np.any(~(grid > 0)):
        raise ValueError("ISI grid must be strictly positive")
    target = nu_factor(grid, AsnParams(tau_kappa=tau_kappa))
    design = np.column_stack([np.ones_like(grid), grid])
    (a, b), *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.sqrt(np.mean((design @ np.array([a, b]) - target) ** 2)))
    return float(a), float(b), residual


@dataclass(frozen=True)
class SpikeEvent:
    """A pulse. ``value`` is ``height * nu(ISI)``, the kernel amplitude."""

    time: float
    source: object
    height: float
    value: float


@dataclass
class AsnState:
    s: float = 0.0
    s_hat: float = 0.0
    theta_adapt: float = 0.0
    i_in: float = 0.0
    last_spike_time: Optional[float] = None
    time: float = 0.0
    neuron_id: object = None

    def threshold(self, params: AsnParams) -> float:
        return params.theta0 + self.theta_adapt

    def membrane(self) -> float:
        return self.s - self.s_hat


def decay_state(state: AsnState, params: AsnParams) -> None:
    """Advance the clock one step and decay the kernel accumulators."""
    state.time += params.dt
    state.i_in *= params.kappa_decay
    state.s_hat *= params.kappa_decay
    state.theta_adapt *= params.gamma_decay


def fire_state(state: AsnState, external_current: float, params: AsnParams) -> Optional[SpikeEvent]:
    """Smooth the input current into ``s`` and test the threshold."""
    current = state.i_in + external_current
    if not (math.isfinite(current) and math.isfinite(state.s) and math.isfinite(state.s_hat)):
        raise NeuronFault("non-finite neuron state or input", state.neuron_id)
    state.s += params.smooth_alpha * (current - state.s)
    theta = params.theta0 + state.theta_adapt
    if state.s - state.s_hat <= theta:
        return None
    if state.last_spike_time is None:
        isi = params.isi_cap
    else:
        isi = state.time - state.last_spike_time
    value = theta * nu_factor(isi, params)
    state.s_hat += value
    state.theta_adapt += params.adapt_gain * theta
    state.last_spike_time = state.time
    return SpikeEvent(time=state.time, source=state.neuron_id, height=theta, value=value)


def neuron_step(state: AsnState, external_current: float, params: AsnParams) -> Optional[SpikeEvent]:
    """One simulation step: decay, accumulate input, smooth, threshold.

    Mutates ``state`` and returns the emitted spike, if any.
    """
    decay_state(state, params)
    return fire_state(state, external_current, params)


def deliver_spike(state: AsnState, weight: float, spike: SpikeEvent, params: AsnParams = None) -> AsnState:
    if not spike.height > 0:
        raise ValueError("spike height must be positive")
    state.i_in += weight * spike.value
    return state


@dataclass
class AsnPopulation:
    """Array-valued ASN state for ``shape`` neurons (leading axes may be a batch).

    Uses the same update order as :func:`neuron_step`; the network simulator
    calls :meth:`decay` for every layer before any layer fires so that a spike
    delivered during a step is not decayed within that step.
    """

    shape: Tuple[int, ...]
    params: AsnParams
    s: np.ndarray = field(init=False)
    s_hat: np.ndarray = field(init=False)
    theta_adapt: np.ndarray = field(init=False)
    i_in: np.ndarray = field(init=False)
    last_spike: np.ndarray = field(init=False)
    spike_count: np.ndarray = field(init=False)
    time: float = field(init=False, default=0.0)
    input_decay: Optional[float] = None
    # per-neuron override of params.adapt_gain, broadcast against shape
    adapt_gain: Optional[np.ndarray] = None

    def __post_init__(self):
        self.shape = tuple(int(n) for n in self.shape)
        self.reset()

    def reset(self) -> None:
        self.s = np.zeros(self.shape)
        self.s_hat = np.zeros(self.shape)
        self.theta_adapt = np.zeros(self.shape)
        self.i_in = np.zeros(self.shape)
        self.last_spike = np.full(self.shape, np.nan)
        self.spike_count = np.zeros(self.shape, dtype=np.int64)
        self.time = 0.0

    @property
    def threshold(self) -> np.ndarray:
        return self.params.theta0 + self.theta_adapt

    def decay(self) -> None:
        p = self.params
        self.time += p.dt
        self.i_in *= p.kappa_decay if self.input_decay is None else self.input_decay
        self.s_hat *= p.kappa_decay
        self.theta_adapt *= p.gamma_decay

    def fire(self, external=None):
        """Smooth input and emit spikes.

        Returns ``(mask, values)``: a boolean spike mask and the per-neuron
        kernel amplitude (zero where no spike was emitted).
        """
        p = self.params
        current = self.i_in if external is None else self.i_in + external
        self.s += p.smooth_alpha * (current - self.s)
        if not np.all(np.isfinite(self.s)):
            bad = np.unravel_index(np.argmax(~np.isfinite(self.s)), self.shape)
            raise NeuronFault("non-finite neuron state or input", bad)
        theta = p.theta0 + self.theta_adapt
        mask = (self.s - self.s_hat) > theta
        values = np.zeros(self.shape)
        if mask.any():
            last = self.last_spike[mask]
            isi = np.where(np.isnan(last), p.isi_cap, self.time - last)
            heights = theta[mask]
            v = heights * nu_factor(isi, p)
            values[mask] = v
            self.s_hat[mask] += v
            if self.adapt_gain is None:
                self.theta_adapt[mask] += p.adapt_gain * heights
            else:
                gain = np.broadcast_to(self.adapt_gain, self.shape)[mask]
                self.theta_adapt[mask] += gain * heights
            self.last_spike[mask] = self.time
            self.spike_count[mask] += 1
        return mask, values

    def step(self, external=None):
        self.decay()
        return self.fire(external)
