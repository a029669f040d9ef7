# Copyright 2026 The s2sw Authors
# SPDX-License-Identifier: Apache-2.0
"""Language models and encoder-decoder translation."""

from ._s2sw import (
    MODEL_FORMAT_VERSION,
    ConfigError,
    DataError,
    DivergenceError,
    Model,
    ShapeError,
    bleu,
    run_cli,
    split_tokens,
    train_ngram,
)

__all__ = [
    "MODEL_FORMAT_VERSION",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "Model",
    "ShapeError",
    "bleu",
    "run_cli",
    "split_tokens",
    "train_ngram",
]
