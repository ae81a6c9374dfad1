"""Transposition-invariant interval representations with a gated autoencoder.

Modules: ``numerics`` (small linear-algebra helpers), ``symbolic`` and
``audio`` (input front ends), ``gae`` (model, losses, gradients), ``trainer``
(SGD with random transposition), ``analysis`` (k-NN, cluster distances,
sensitivity), ``discovery`` (self-similarity and repeated sections),
``formats`` (on-disk formats) and ``cli``.
"""

from .gae import GaeParams, ModelConfig, infer_mapping, init_params, mappings, shift
from .trainer import TrainConfig, train

__all__ = ["GaeParams", "ModelConfig", "TrainConfig", "infer_mapping", "init_params",
           "mappings", "shift", "train"]
__version__ = "0.1.0"
