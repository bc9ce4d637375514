"""
Model Persistence
JSON documents holding library specs, parameters, masks and structure
"""

import json
import os
from typing import Union

import numpy as np
from loguru import logger

from phsysid.basis import BasisLibrary
from phsysid.core.errors import ConfigError

from .baseline import BaselineModel
from .mlp import MlpForce
from .phsi import PseudoHamiltonianModel

Model = Union[PseudoHamiltonianModel, BaselineModel]

FORMAT_VERSION = 1


def model_to_dict(model: Model) -> dict:
    common = {
        "format_version": FORMAT_VERSION,
        "params": [float(v) for v in model.params],
        "active": [bool(v) for v in model.active],
        "variable_names": list(model.variable_names),
        "separable_split": model.separable_split,
    }
    if isinstance(model, PseudoHamiltonianModel):
        return {
            "kind": "phsi",
            "structure": model.structure.tolist(),
            "h_library": model.h_library.to_spec(),
            "damping_support": list(model.damping_support),
            "force_kind": model.force_kind,
            "force_library": model.force_library.to_spec() if model.force_library is not None else None,
            "force_components": list(model.force_components),
            "mlp": model.mlp.to_spec() if model.mlp is not None else None,
            **common,
        }
    if isinstance(model, BaselineModel):
        return {
            "kind": "baseline",
            "library": model.library.to_spec(),
            "dimension": model.dimension,
            "time_augmented": model.time_augmented,
            **common,
        }
    raise ConfigError(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: dict) -> Model:
    kind = doc.get("kind")
    split = doc.get("separable_split")
    if kind == "phsi":
        return PseudoHamiltonianModel(
            structure=np.array(doc["structure"], dtype=float),
            h_library=BasisLibrary.from_spec(doc["h_library"]),
            damping_support=tuple(doc["damping_support"]),
            force_kind=doc["force_kind"],
            force_library=BasisLibrary.from_spec(doc["force_library"]) if doc.get("force_library") else None,
            force_components=tuple(doc["force_components"]),
            mlp=MlpForce.from_spec(doc["mlp"]) if doc.get("mlp") else None,
            params=np.array(doc["params"], dtype=float),
            active=np.array(doc["active"], dtype=bool),
            separable_split=split,
            variable_names=tuple(doc["variable_names"]),
        )
    if kind == "baseline":
        return BaselineModel(
            library=BasisLibrary.from_spec(doc["library"]),
            dimension=int(doc["dimension"]),
            time_augmented=bool(doc["time_augmented"]),
            params=np.array(doc["params"], dtype=float),
            active=np.array(doc["active"], dtype=bool),
            variable_names=tuple(doc["variable_names"]),
            separable_split=split,
        )
    raise ConfigError(f"unknown model kind {kind!r}")


def save_model(model: Model, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, indent=2)
    logger.info(f"Saved model to {path}")


def load_model(path: str) -> Model:
    if not os.path.exists(path):
        raise ConfigError(f"model file not found: {path}")
    with open(path) as f:
        return model_from_dict(json.load(f))
