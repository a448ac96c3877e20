from __future__ import annotations

from typing import Dict, Iterator, List, Tuple

import numpy as np

from app.diffcore import init
from app.diffcore.ops import weight_norm
from app.diffcore.tensor import Tensor
from app.model.config import ModelConfig

# fan-in axis of each weight layout: linear weights are (in, out), conv weights (out, k*in)
LINEAR_AXIS = 0
CONV_AXIS = 1


def layer_shapes(config: ModelConfig) -> List[Tuple[str, str, int, int]]:
    """(name, kind, fan_in, fan_out) of every weight-bearing layer, in checkpoint order."""
    E, E_dec, d, k = config.embed_width, config.decoder_embed_width, config.d, config.k
    layers = [("encoder.in_proj", "linear", E, d)]
    layers += [(f"encoder.conv{l}", "conv", k * d, 2 * d) for l in range(config.enc_layers)]
    layers += [("encoder.out_proj", "linear", d, E), ("decoder.in_proj", "linear", E_dec, d)]
    for l in range(config.dec_layers):
        layers += [
            (f"decoder.conv{l}", "conv", k * d, 2 * d),
            (f"decoder.attn{l}.query", "linear", d, E),
            (f"decoder.attn{l}.out", "linear", E, d),
        ]
    layers.append(("decoder.out", "linear", d, config.vocab_size))
    return layers


class ModelParams:
    """Named learnable tensors of the convolutional seq2seq model."""

    def __init__(self, config: ModelConfig, tensors: Dict[str, Tensor]):
        self.config = config
        self.tensors = tensors
        self._kinds = {name: kind for name, kind, _, _ in layer_shapes(config)}

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def __iter__(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self.tensors.items())

    def __len__(self) -> int:
        return len(self.tensors)

    def weight(self, name: str) -> Tensor:
        """Effective weight of a linear/conv layer (weight-normalized when enabled)."""
        if self.config.weight_norm:
            axis = CONV_AXIS if self._kinds[name] == "conv" else LINEAR_AXIS
            return weight_norm(self.tensors[f"{name}.v"], self.tensors[f"{name}.g"], axis)
        return self.tensors[f"{name}.w"]

    def bias(self, name: str) -> Tensor:
        return self.tensors[f"{name}.b"]

    def zero_grad(self) -> None:
        for tensor in self.tensors.values():
            tensor.zero_grad()

    def num_parameters(self) -> int:
        return sum(t.size for t in self.tensors.values())

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0) -> "ModelParams":
        rng = np.random.default_rng(seed)
        values: Dict[str, np.ndarray] = {
            "embed.tokens": init.embedding_table(rng, config.vocab_size, config.f),
            "embed.src_positions": init.embedding_table(rng, config.max_source_positions, config.f),
            "embed.tgt_positions": init.embedding_table(rng, config.max_target_positions, config.f),
        }
        for name, kind, fan_in, fan_out in layer_shapes(config):
            if kind == "conv":
                weight = init.conv_weight(rng, fan_out, fan_in, config.dropout)
                axis = CONV_AXIS
            else:
                weight = init.linear_weight(rng, fan_in, fan_out)
                axis = LINEAR_AXIS
            if config.weight_norm:
                values[f"{name}.v"] = weight
                values[f"{name}.g"] = np.sqrt((weight ** 2).sum(axis=axis))
            else:
                values[f"{name}.w"] = weight
            values[f"{name}.b"] = np.zeros(fan_out)

        if config.layer_norm:
            for side, count in (("encoder", config.enc_layers), ("decoder", config.dec_layers)):
                for l in range(count):
                    values[f"{side}.ln{l}.gain"] = np.ones(config.d)
                    values[f"{side}.ln{l}.bias"] = np.zeros(config.d)

        return cls(config, {n: Tensor(v, requires_grad=True, name=n) for n, v in values.items()})
