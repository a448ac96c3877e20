import math

import numpy as np


def conv_weight(rng: np.random.Generator, out_channels: int, fan_in: int, dropout: float) -> np.ndarray:
    """Gaussian with std sqrt(4 (1 - dropout) / fan_in), variance-preserving under GLU."""
    std = math.sqrt(4.0 * (1.0 - dropout) / fan_in)
    return rng.normal(0.0, std, size=(out_channels, fan_in))


def linear_weight(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    return rng.normal(0.0, math.sqrt(1.0 / fan_in), size=(fan_in, fan_out))


def embedding_table(rng: np.random.Generator, rows: int, width: int) -> np.ndarray:
    return rng.normal(0.0, 0.1, size=(rows, width))
