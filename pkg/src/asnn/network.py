"""Adaptive spiking networks built from trained ReLU networks.

Every ReLU unit, including one unit per input feature, becomes an adaptive
spiking neuron; average pooling becomes a fixed ``1/j**2`` connection into a
layer of spiking neurons; the output layer becomes non-spiking integrators
whose current is smoothed with ``readout_tau`` for classification.

The simulator steps in fixed ``dt`` increments. Within a step all
accumulators decay first, then layers fire in feed-forward order and a spike
reaches the next layer in the same step. Every array carries a leading
batch axis so a whole dataset can be simulated at once; samples never
interact.
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .ann import AvgPool, Conv, Dense, NetworkSpec, avg_pool, conv_valid
from .neuron import AsnParams, AsnPopulation, NeuronFault

__all__ = ["AsnnNetwork", "RunTrace", "StepCounters", "from_ann", "run_classification", "run_frames"]


@dataclass
class StepCounters:
    spikes_per_layer: np.ndarray
    network_multiplications: int = 0
    neuron_updates: int = 0
    readout_spikes: int = 0

    @classmethod
    def zeros(cls, n_layers: int) -> "StepCounters":
        return cls(np.zeros(n_layers, dtype=np.int64))

    @property
    def total_spikes(self) -> int:
        return int(self.spikes_per_layer.sum())

    def __iadd__(self, other: "StepCounters") -> "StepCounters":
        self.spikes_per_layer = self.spikes_per_layer + other.spikes_per_layer
        self.network_multiplications += other.network_multiplications
        self.neuron_updates += other.neuron_updates
        self.readout_spikes += other.readout_spikes
        return self


def _conv_fanout(in_shape, layer: Conv) -> np.ndarray:
    h, w, _ = in_shape
    k = layer.size
    rows = np.zeros(h, dtype=np.int64)
    cols = np.zeros(w, dtype=np.int64)
    for i in range(h - k + 1):
        rows[i : i + k] += 1
    for j in range(w - k + 1):
        cols[j : j + k] += 1
    per_pixel = np.outer(rows, cols) * layer.kernels.shape[0]
    return np.ascontiguousarray(np.broadcast_to(per_pixel[:, :, None], in_shape))


def _fanout(in_shape, layer) -> np.ndarray:
    if isinstance(layer, Conv):
        return _conv_fanout(in_shape, layer)
    if isinstance(layer, AvgPool):
        return np.ones(in_shape, dtype=np.int64)
    return np.full(in_shape, layer.weights.shape[0], dtype=np.int64)


class AsnnNetwork:
    """Spiking counterpart of a :class:`NetworkSpec`.

    ``populations[0]`` holds the input neurons and ``populations[l]`` the
    units of ``spec.layers[l - 1]``; the connection leaving population ``l``
    is ``spec.layers[l]``. ``layer_params`` overrides the default parameters
    per population index; index ``len(populations)`` addresses the readout.
    """

    def __init__(
        self,
        spec: NetworkSpec,
        params: AsnParams,
        readout_tau: float = 10.0,
        layer_params: Optional[Dict[int, AsnParams]] = None,
        spiking_readout: bool = False,
        batch: int = 1,
    ):
        shapes = spec.shapes()
        self.spec = copy.deepcopy(spec)
        self.readout_tau = float(readout_tau)
        if not self.readout_tau > 0:
            raise ValueError("readout_tau must be positive")
        self.spiking_readout = spiking_readout
        self.shapes = [tuple(spec.input_shape)] + [tuple(s) for s in shapes[:-1]]
        n_pops = len(self.shapes)
        layer_params = dict(layer_params or {})
        for key in layer_params:
            if not 0 <= key <= n_pops:
                raise ValueError(f"no layer {key}: spiking layers are 0..{n_pops - 1}, readout is {n_pops}")
        self.params = params
        self.layer_params = [layer_params.get(i, params) for i in range(n_pops)]
        self.readout_params = layer_params.get(n_pops, params)
        self.fanouts = [_fanout(s, layer) for s, layer in zip(self.shapes, self.spec.layers)]
        self.n_connections = int(sum(f.sum() for f in self.fanouts))
        self.reset(batch)

    # -- state ------------------------------------------------------------

    def reset(self, batch: Optional[int] = None) -> None:
        """Cold start: zero every accumulator and counter."""
        if batch is not None:
            self.batch = int(batch)
        b = self.batch
        self.populations = [AsnPopulation((b,) + s, p) for s, p in zip(self.shapes, self.layer_params)]
        # incoming kernels decay with the sender's tau_kappa
        for pop, sender in zip(self.populations[1:], self.layer_params[:-1]):
            pop.input_decay = sender.kappa_decay
        n_out = self.spec.n_classes
        self.out_i = np.zeros((b, n_out))
        self.out_current = np.zeros((b, n_out))
        self.scores = np.zeros((b, n_out))
        self.out_pop = AsnPopulation((b, n_out), self.readout_params)
        self.time = 0.0
        self.ticks = 0
        self.counters = StepCounters.zeros(len(self.populations))

    @property
    def n_spiking(self) -> int:
        return int(sum(np.prod(s) for s in self.shapes))

    @property
    def n_units(self) -> int:
        return self.n_spiking + self.spec.n_classes

    @property
    def layer_sizes(self) -> List[int]:
        return [int(np.prod(s)) for s in self.shapes]

    @property
    def dt(self) -> float:
        return self.readout_params.dt

    def to_spec(self) -> NetworkSpec:
        return copy.deepcopy(self.spec)

    # -- routing ----------------------------------------------------------

    def _route(self, layer: int, values: np.ndarray) -> np.ndarray:
        conn = self.spec.layers[layer]
        if isinstance(conn, Dense):
            return values.reshape(values.shape[0], -1) @ conn.weights.T
        if isinstance(conn, Conv):
            return conv_valid(values, conn.kernels)
        return avg_pool(values, int(conn.window))

    def _target(self, layer: int) -> np.ndarray:
        if layer + 1 < len(self.populations):
            return self.populations[layer + 1].i_in
        return self.out_i

    def route_spikes(self, layer: int, values) -> StepCounters:
        """Deliver kernel amplitudes emitted by population ``layer``.

        ``values`` has the population's (batched) shape and is zero where no
        spike was emitted. Also usable to script spikes by hand; the returned
        counters are not added to ``self.counters``.
        """
        values = np.asarray(values, dtype=float).reshape((self.batch,) + self.shapes[layer])
        counters = StepCounters.zeros(len(self.populations))
        mask = values != 0
        n = int(mask.sum())
        counters.spikes_per_layer[layer] = n
        if n:
            counters.network_multiplications = int((mask * self.fanouts[layer]).sum())
            self._target(layer)[...] += self._route(layer, values)
        return counters

    # -- simulation -------------------------------------------------------

    def _frame(self, frame) -> np.ndarray:
        x = np.asarray(frame, dtype=float)
        shape = self.shapes[0]
        if x.shape == shape:
            x = np.broadcast_to(x, (self.batch,) + shape)
        elif x.shape != (self.batch,) + shape:
            raise ValueError(f"frame shape {x.shape} does not match input layer {shape} (batch {self.batch})")
        if not np.all(np.isfinite(x)):
            bad = np.argwhere(~np.isfinite(x))[0]
            raise NeuronFault("non-finite input frame", (0,) + tuple(int(v) for v in bad))
        return x

    def tick(self, frame):
        """Advance one step with ``frame`` as the input current.

        Returns ``(spike_masks, counters)`` for this step; the counters are
        also accumulated on ``self.counters``.
        """
        x = self._frame(frame)
        for pop in self.populations:
            pop.decay()
        self.out_i *= self.layer_params[-1].kappa_decay
        counters = StepCounters.zeros(len(self.populations))
        masks = []
        for l, pop in enumerate(self.populations):
            external = x if l == 0 else getattr(self.spec.layers[l - 1], "bias", None)
            try:
                mask, values = pop.fire(external)
            except NeuronFault as exc:
                raise NeuronFault("non-finite neuron state", (l,) + tuple(int(v) for v in exc.neuron)) from None
            masks.append(mask)
            counters += self.route_spikes(l, values)
        bias = self.spec.layers[-1].bias
        self.out_current = self.out_i + bias
        alpha = -math.expm1(-self.dt / self.readout_tau)
        self.scores += alpha * (self.out_current - self.scores)
        if self.spiking_readout:
            self.out_pop.decay()
            self.out_pop.i_in = self.out_i.copy()
            out_mask, _ = self.out_pop.fire(bias)
            counters.readout_spikes = int(out_mask.sum())
        counters.neuron_updates = self.batch * self.n_units
        self.counters += counters
        self.time += self.dt
        self.ticks += 1
        return masks, counters

    def readout(self) -> np.ndarray:
        """Smoothed output currents, shape ``(batch, n_classes)``."""
        return self.scores.copy()

    def predict(self) -> np.ndarray:
        # argmax picks the lowest index on ties
        return np.argmax(self.scores, axis=-1)


def from_ann(
    net: NetworkSpec,
    params: AsnParams,
    readout_tau: float = 10.0,
    layer_params: Optional[Dict[int, AsnParams]] = None,
    spiking_readout: bool = False,
    batch: int = 1,
) -> AsnnNetwork:
    """Replace every ReLU unit of ``net`` with an adaptive spiking neuron."""
    for i, layer in enumerate(net.layers):
        if not isinstance(layer, (Dense, Conv, AvgPool)):
            raise TypeError(f"layer {i}: cannot convert {type(layer).__name__}")
    return AsnnNetwork(net, params, readout_tau, layer_params, spiking_readout, batch)


@dataclass
class RunTrace:
    """Per-step record of a simulation run.

    ``scores`` is ``(T, batch, n_classes)``; ``spikes`` is ``(T, n_layers)``
    summed over the batch.
    """

    dt: float
    scores: np.ndarray
    predictions: np.ndarray
    spikes: np.ndarray
    network_multiplications: np.ndarray
    neuron_updates: np.ndarray
    readout_spikes: np.ndarray
    layer_sizes: List[int]
    batch: int
    labels: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.predictions)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(1, len(self) + 1)

    def accuracy_curve(self, labels=None) -> np.ndarray:
        labels = self.labels if labels is None else np.asarray(labels)
        if labels is None:
            raise ValueError("labels are required for an accuracy curve")
        return np.mean(self.predictions == labels[None, :], axis=1)

    def firing_rate(self, window_ms: float = 100.0, layers: Optional[Sequence[int]] = None) -> float:
        """Average rate in Hz per spiking neuron over the final ``window_ms``."""
        steps = max(1, min(len(self), int(round(window_ms / self.dt))))
        sel = list(range(len(self.layer_sizes))) if layers is None else list(layers)
        spikes = float(self.spikes[-steps:, sel].sum())
        neurons = sum(self.layer_sizes[i] for i in sel) * self.batch
        return spikes / (neurons * steps * self.dt / 1000.0)

    def layer_rates(self, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        """Per-layer rate in Hz over steps ``[start, stop)``."""
        seg = self.spikes[start:stop]
        dur = len(seg) * self.dt / 1000.0
        return seg.sum(axis=0) / (np.asarray(self.layer_sizes) * self.batch * dur)

    def write_csv(self, path, sample: Optional[int] = 0) -> None:
        """One row per step: time, accuracy (if labelled), per-layer spike
        counts, counters and the readout scores of ``sample``."""
        n_classes = self.scores.shape[-1]
        acc = self.accuracy_curve() if self.labels is not None else None
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            header = ["t_ms"]
            if acc is not None:
                header.append("accuracy")
            header += [f"spikes_l{i}" for i in range(len(self.layer_sizes))]
            header += ["readout_spikes", "network_multiplications", "neuron_updates"]
            if sample is not None:
                header += [f"score_{k}" for k in range(n_classes)] + ["prediction"]
            w.writerow(header)
            times = self.times
            for t in range(len(self)):
                row = [repr(float(times[t]))]
                if acc is not None:
                    row.append(repr(float(acc[t])))
                row += [int(v) for v in self.spikes[t]]
                row += [int(self.readout_spikes[t]), int(self.network_multiplications[t]), int(self.neuron_updates[t])]
                if sample is not None:
                    row += [repr(float(v)) for v in self.scores[t, sample]] + [int(self.predictions[t, sample])]
                w.writerow(row)


def run_frames(net: AsnnNetwork, frames: Iterable, labels=None, reset: bool = True) -> RunTrace:
    """Drive ``net`` with one frame per step and record everything."""
    if reset:
        net.reset()
    scores, spikes, mults, updates, rspikes = [], [], [], [], []
    for frame in frames:
        _, c = net.tick(frame)
        scores.append(net.scores.copy())
        spikes.append(c.spikes_per_layer)
        mults.append(c.network_multiplications)
        updates.append(c.neuron_updates)
        rspikes.append(c.readout_spikes)
    scores = np.array(scores).reshape(-1, net.batch, net.spec.n_classes)
    return RunTrace(
        dt=net.dt,
        scores=scores,
        predictions=np.argmax(scores, axis=-1),
        spikes=np.array(spikes, dtype=np.int64).reshape(-1, len(net.populations)),
        network_multiplications=np.array(mults, dtype=np.int64),
        neuron_updates=np.array(updates, dtype=np.int64),
        readout_spikes=np.array(rspikes, dtype=np.int64),
        layer_sizes=net.layer_sizes,
        batch=net.batch,
        labels=None if labels is None else np.asarray(labels),
    )


def run_classification(net: AsnnNetwork, samples, duration_ms: float, labels=None) -> RunTrace:
    """Present ``samples`` as constant input for ``duration_ms`` from a cold start.

    ``samples`` is a single input or a batch; the network is resized to it.
    """
    x = np.asarray(samples, dtype=float)
    if x.shape == net.shapes[0]:
        x = x[None]
    if duration_ms < net.dt:
        raise ValueError("duration must cover at least one step")
    net.reset(batch=x.shape[0])
    steps = int(round(duration_ms / net.dt))
    return run_frames(net, (x for _ in range(steps)), labels=labels, reset=False)
