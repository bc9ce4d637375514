"""
Neural Force Model
Fully connected ReLU network whose outputs drive selected state components
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from phsysid.autodiff import ops
from phsysid.core.errors import ConfigError, DimensionError

DEFAULT_HIDDEN = (100, 100, 100)


@dataclass(frozen=True)
class MlpForce:
    """
    Architecture of the force network

    Attributes:
        layer_sizes: Input width, hidden widths, output width
        components: State indices receiving the outputs (one per output)
        input_components: State indices fed to the network (None = whole state)
    """

    layer_sizes: Tuple[int, ...]
    components: Tuple[int, ...]
    input_components: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if len(self.layer_sizes) < 2 or any(n < 1 for n in self.layer_sizes):
            raise ConfigError(f"invalid layer sizes {self.layer_sizes}")
        if len(self.components) != self.layer_sizes[-1]:
            raise ConfigError(
                f"{len(self.components)} forced components for an output layer of width {self.layer_sizes[-1]}"
            )

    @property
    def n_params(self) -> int:
        return sum((n_in + 1) * n_out for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    def layer_slices(self) -> List[Tuple[slice, slice, int, int]]:
        """(weight slice, bias slice, fan_in, fan_out) per layer; weights stored (fan_in, fan_out) row-major"""
        out, position = [], 0
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            weights = slice(position, position + n_in * n_out)
            position += n_in * n_out
            bias = slice(position, position + n_out)
            position += n_out
            out.append((weights, bias, n_in, n_out))
        return out

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform weights and biases with half-width 1/sqrt(fan_in)"""
        params = np.empty(self.n_params)
        for weights, bias, n_in, n_out in self.layer_slices():
            bound = 1.0 / np.sqrt(n_in)
            params[weights] = rng.uniform(-bound, bound, size=n_in * n_out)
            params[bias] = rng.uniform(-bound, bound, size=n_out)
        return params

    def to_spec(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "components": list(self.components),
            "input_components": list(self.input_components) if self.input_components is not None else None,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "MlpForce":
        inputs = spec.get("input_components")
        return cls(
            layer_sizes=tuple(spec["layer_sizes"]),
            components=tuple(spec["components"]),
            input_components=tuple(inputs) if inputs is not None else None,
        )


def build_mlp_force(
    d: int,
    components: Sequence[int],
    hidden: Sequence[int] = DEFAULT_HIDDEN,
    input_components: Optional[Sequence[int]] = None,
) -> MlpForce:
    n_in = len(input_components) if input_components is not None else d
    return MlpForce(
        layer_sizes=(n_in,) + tuple(hidden) + (len(components),),
        components=tuple(components),
        input_components=tuple(input_components) if input_components is not None else None,
    )


def mlp_forward(net: MlpForce, x, params):
    """
    Affine + ReLU layers with an affine output layer

    Args:
        net: Architecture
        x: Network inputs (..., layer_sizes[0]); selection of input_components is the caller's job
        params: Flat weights (numpy or tape variable)

    Returns:
        Outputs (..., layer_sizes[-1])
    """
    x = ops.asarray(x)
    params = ops.asarray(params)
    if params.shape[0] != net.n_params:
        raise DimensionError(f"network expects {net.n_params} parameters, got {params.shape[0]}")
    if x.shape[-1] != net.layer_sizes[0]:
        raise DimensionError(f"network input width {net.layer_sizes[0]}, got {x.shape[-1]}")
    h = x
    layers = net.layer_slices()
    for i, (weights, bias, n_in, n_out) in enumerate(layers):
        h = ops.matmul(h, ops.reshape(params[weights], (n_in, n_out))) + params[bias]
        if i < len(layers) - 1:
            h = ops.relu(h)
    return h


def network_input(net: MlpForce, x):
    if net.input_components is None:
        return x
    return x[..., list(net.input_components)]
