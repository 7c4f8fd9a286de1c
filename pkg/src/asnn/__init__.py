"""Adaptive spiking neural networks: ASN neurons, ReLU network conversion,
simulation and benchmarks."""

__version__ = "0.1.0"

from .ann import AvgPool, Conv, Dense, NetworkSpec, Output, ShapeError, TrainConfig, ann_forward, train_ffnn
from .neuron import AsnParams, AsnPopulation, AsnState, NeuronFault, SpikeEvent, deliver_spike, neuron_step, nu_factor
from .network import AsnnNetwork, RunTrace, from_ann, run_classification, run_frames
from .weights import load_weights, save_weights

__all__ = [
    "AsnParams",
    "AsnPopulation",
    "AsnState",
    "AsnnNetwork",
    "AvgPool",
    "Conv",
    "Dense",
    "NetworkSpec",
    "NeuronFault",
    "Output",
    "RunTrace",
    "ShapeError",
    "SpikeEvent",
    "TrainConfig",
    "ann_forward",
    "deliver_spike",
    "from_ann",
    "load_weights",
    "neuron_step",
    "nu_factor",
    "run_classification",
    "run_frames",
    "save_weights",
    "train_ffnn",
]
