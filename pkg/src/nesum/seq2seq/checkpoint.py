"""Checkpoint container: an ``.npz`` archive with a JSON header.

The header (``__meta__``) stores the format version, model config and
vocabulary; every tensor is stored under its parameter name in row-major
order. Loading checks every shape against the config.
"""

from __future__ import annotations

import json

import numpy as np

from .model import ModelConfig, ModelParams, param_shapes
from .vocab import Vocab

FORMAT_VERSION = 1


def save_checkpoint(path, params: ModelParams, vocab: Vocab) -> None:
    meta = {
        "format_version": FORMAT_VERSION,
        "config": params.config.to_dict(),
        "vocab": vocab.id_to_token,
        "vocab_max_size": vocab.max_size,
    }
    arrays = {name: np.ascontiguousarray(t) for name, t in params.items()}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta, ensure_ascii=False)), **arrays)


def load_checkpoint(path) -> tuple[ModelParams, Vocab]:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('format_version')}")
        config = ModelConfig.from_dict(meta["config"])
        vocab = Vocab(meta["vocab"], meta["vocab_max_size"])
        shapes = param_shapes(config, len(vocab))
        tensors = {}
        for name, shape in shapes.items():
            if name not in data:
                raise ValueError(f"checkpoint lacks tensor {name}")
            arr = data[name]
            if arr.shape != shape:
                raise ValueError(f"{name}: stored shape {arr.shape}, config implies {shape}")
            tensors[name] = arr.astype(config.dtype)
    return ModelParams(config, len(vocab), tensors), vocab
