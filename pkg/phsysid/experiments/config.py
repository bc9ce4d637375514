"""
Experiment Configuration
Pydantic config tree, benchmark presets and CLI overrides
"""

import json
from typing import Any, Callable, Dict, List, Literal, Optional

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from phsysid.core.errors import ConfigError
from phsysid.dynamics.systems import BENCHMARKS
from phsysid.training.hyperparams import Hyperparams

MODEL_KINDS = ("phsi", "bsi", "sindy", "phsi_hybrid")
BUDGETS = ("paper", "desk")
DESK_DIVISOR = 5


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemSpec(_Spec):
    name: str = "henon_heiles"
    params: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("name")
    @classmethod
    def _known_system(cls, value: str) -> str:
        key = value.replace("-", "_").lower()
        if key not in BENCHMARKS:
            raise ValueError(f"unknown benchmark '{value}', expected one of {sorted(BENCHMARKS)}")
        return key


class DataSpec(_Spec):
    n_traj: int = Field(3000, ge=1)
    t_end: float = Field(0.1, gt=0)
    dt: float = Field(0.1, gt=0)
    sigma: float = Field(0.02, ge=0)
    seed: int = 0
    init_low: float = -1.0
    init_high: float = 1.0
    substeps: int = Field(100, ge=1)

    @model_validator(mode="after")
    def _ordered_bounds(self) -> "DataSpec":
        if self.init_low >= self.init_high:
            raise ValueError(f"init_low {self.init_low} must be below init_high {self.init_high}")
        return self


class TrigSpec(_Spec):
    sin: bool = False
    cos: bool = False


class LibrarySpec(_Spec):
    degree: int = Field(3, ge=0)
    include_constant: bool = False
    trig: TrigSpec = Field(default_factory=TrigSpec)


class ForceSpec(_Spec):
    kind: Literal["none", "symbolic", "mlp"] = "none"
    # forced state indices; None means the benchmark's own
    components: Optional[List[int]] = None
    library: LibrarySpec = Field(default_factory=lambda: LibrarySpec(degree=0, trig=TrigSpec(sin=True)))
    hidden: List[int] = Field(default_factory=lambda: [100, 100, 100])


class BaselineSpec(_Spec):
    """Library and fitting options shared by the BSI and sparse-regression baselines"""

    library: LibrarySpec = Field(default_factory=lambda: LibrarySpec(degree=2, include_constant=True))
    time_augmented: bool = False
    threshold: float = Field(0.05, ge=0)
    sweeps: int = Field(10, ge=0)


class EvalSpec(_Spec):
    n_inits: int = Field(10, ge=1)
    t_end: float = Field(10.0, gt=0)
    dt_out: Optional[float] = Field(None, gt=0)
    seed: int = 1
    init_low: float = -1.0
    init_high: float = 1.0
    substeps: int = Field(10, ge=1)
    example_init: Optional[List[float]] = None
    extrapolation_init: Optional[List[float]] = None
    extrapolation_t_end: float = Field(1.0, gt=0)
    force_tracking_init: Optional[List[float]] = None


class ExperimentConfig(_Spec):
    """One data -> train -> evaluate run"""

    name: str = "custom"
    system: SystemSpec = Field(default_factory=SystemSpec)
    data: DataSpec = Field(default_factory=DataSpec)
    model: Literal["phsi", "bsi", "sindy", "phsi_hybrid"] = "phsi"
    hamiltonian: LibrarySpec = Field(default_factory=LibrarySpec)
    learn_damping: bool = True
    force: ForceSpec = Field(default_factory=ForceSpec)
    baseline: BaselineSpec = Field(default_factory=BaselineSpec)
    hyper: Hyperparams = Field(default_factory=Hyperparams)
    evaluation: EvalSpec = Field(default_factory=EvalSpec)
    budget: Literal["paper", "desk"] = "paper"

    @property
    def eval_dt(self) -> float:
        return self.evaluation.dt_out if self.evaluation.dt_out is not None else self.data.dt


def format_validation_error(exc: ValidationError) -> List[str]:
    """One 'field.path: message' line per pydantic error"""
    problems = []
    for err in exc.errors():
        path = ".".join(str(part) for part in err["loc"]) or "<root>"
        problems.append(f"{path}: {err['msg']}")
    return problems


def parse_config(doc: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError("invalid experiment config: " + "; ".join(format_validation_error(exc))) from exc


def _read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            doc = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return doc


def load_config(path: str) -> ExperimentConfig:
    """
    Load an experiment config from a JSON file

    Args:
        path: Config file

    Returns:
        Validated ExperimentConfig
    """
    config = parse_config(_read_json(path))
    logger.info(f"Loaded experiment config '{config.name}' from {path}")
    return config


def save_config(config: ExperimentConfig, path: str) -> None:
    with open(path, "w") as f:
        json.dump(config.model_dump(mode="json"), f, indent=2, sort_keys=True)


# Presets -------------------------------------------------------------------


def _henon_heiles() -> ExperimentConfig:
    return ExperimentConfig(
        name="henon-heiles",
        system=SystemSpec(name="henon_heiles"),
        data=DataSpec(n_traj=3000, t_end=0.1, dt=0.1, sigma=0.02),
        model="phsi",
        hamiltonian=LibrarySpec(degree=3),
        learn_damping=False,
        baseline=BaselineSpec(library=LibrarySpec(degree=2, include_constant=True)),
        hyper=Hyperparams(epochs=60, learning_rate=3e-3, batch_size=32, prune_interval=5),
        evaluation=EvalSpec(n_inits=10, t_end=10.0, example_init=[0.1, -0.2, 0.4, 0.5]),
    )


def _nls() -> ExperimentConfig:
    return ExperimentConfig(
        name="nls",
        system=SystemSpec(name="nls"),
        data=DataSpec(n_traj=30, t_end=0.99, dt=0.01, sigma=5e-5),
        model="phsi",
        hamiltonian=LibrarySpec(degree=4),
        learn_damping=False,
        baseline=BaselineSpec(library=LibrarySpec(degree=3, include_constant=True)),
        hyper=Hyperparams(epochs=100, learning_rate=1e-2, batch_size=32, prune_interval=20),
        evaluation=EvalSpec(n_inits=10, t_end=1.0, example_init=[-0.3, 0.5, -0.2, -0.4]),
    )


def _mass_spring() -> ExperimentConfig:
    return ExperimentConfig(
        name="mass-spring",
        system=SystemSpec(name="mass_spring"),
        data=DataSpec(n_traj=50, t_end=10.0, dt=0.1, sigma=0.2),
        model="phsi",
        hamiltonian=LibrarySpec(degree=3),
        # the drive is a function of time only, so the force library has no state monomials
        force=ForceSpec(
            kind="symbolic",
            components=[1],
            library=LibrarySpec(degree=0, include_constant=True, trig=TrigSpec(sin=True, cos=True)),
        ),
        baseline=BaselineSpec(
            library=LibrarySpec(degree=3, include_constant=True, trig=TrigSpec(sin=True, cos=True)),
            time_augmented=True,
        ),
        hyper=Hyperparams(
            epochs=150, learning_rate=5e-3, batch_size=32, prune_interval=20, lam_h=0.1, lam_f=0.01
        ),
        evaluation=EvalSpec(n_inits=10, t_end=10.0, example_init=[-3.4, -1.9]),
    )


TANK_EXTRAPOLATION_INIT = [10.0, 19.0, 4.0, 19.0, 7.0, 9.0, 17.0, 9.0, 11.0]
TANK_TRACKING_INIT = [-0.4, 0.0, 0.5, 0.0, 0.2, 0.0, -0.6, -0.5, 0.5]


def _tanks() -> ExperimentConfig:
    return ExperimentConfig(
        name="tanks",
        system=SystemSpec(name="tanks"),
        data=DataSpec(n_traj=60, t_end=0.5, dt=0.01, sigma=0.005),
        model="phsi_hybrid",
        hamiltonian=LibrarySpec(degree=2),
        force=ForceSpec(kind="mlp", components=[8]),
        baseline=BaselineSpec(library=LibrarySpec(degree=1, include_constant=True)),
        hyper=Hyperparams(
            epochs=100, learning_rate=3e-2, batch_size=32, prune_interval=10, lam_h=0.5, lam_f=0.001
        ),
        evaluation=EvalSpec(
            n_inits=30,
            t_end=0.5,
            example_init=TANK_TRACKING_INIT,
            extrapolation_init=TANK_EXTRAPOLATION_INIT,
            extrapolation_t_end=1.0,
            force_tracking_init=TANK_TRACKING_INIT,
        ),
    )


def _oscillator() -> ExperimentConfig:
    return ExperimentConfig(
        name="oscillator",
        system=SystemSpec(name="oscillator"),
        data=DataSpec(n_traj=50, t_end=10.0, dt=0.1, sigma=0.0),
        model="phsi",
        hamiltonian=LibrarySpec(degree=2),
        learn_damping=False,
        force=ForceSpec(kind="symbolic", components=[1], library=LibrarySpec(degree=1)),
        hyper=Hyperparams(
            epochs=100, learning_rate=5e-3, batch_size=32, prune_interval=20, lam_h=0.1, lam_f=0.1
        ),
        evaluation=EvalSpec(n_inits=10, t_end=10.0, example_init=[1.0, 0.0]),
    )


PRESETS: Dict[str, Callable[[], ExperimentConfig]] = {
    "henon-heiles": _henon_heiles,
    "nls": _nls,
    "mass-spring": _mass_spring,
    "tanks": _tanks,
    "oscillator": _oscillator,
}


def preset(name: str) -> ExperimentConfig:
    """Fresh copy of a named preset at the full budget"""
    key = name.replace("_", "-").lower()
    if key not in PRESETS:
        raise ConfigError(f"unknown preset '{name}', expected one of {sorted(PRESETS)}")
    return PRESETS[key]()


def apply_budget(config: ExperimentConfig) -> ExperimentConfig:
    """
    Resolve the budget switch into concrete data and epoch counts

    The desk budget divides n_traj, epochs and the pruning interval by 5 (at least 1 each).
    """
    if config.budget == "paper":
        return config
    epochs = max(1, config.hyper.epochs // DESK_DIVISOR)
    interval = config.hyper.prune_interval
    if interval:
        interval = min(epochs, max(1, interval // DESK_DIVISOR))
    hyper = config.hyper.model_copy(update={"epochs": epochs, "prune_interval": interval})
    data = config.data.model_copy(update={"n_traj": max(1, config.data.n_traj // DESK_DIVISOR)})
    return config.model_copy(update={"data": data, "hyper": hyper})


def apply_overrides(
    config: ExperimentConfig,
    integrator: Optional[str] = None,
    seed: Optional[int] = None,
    budget: Optional[str] = None,
    sigma: Optional[float] = None,
    model: Optional[str] = None,
) -> ExperimentConfig:
    """
    Command-line overrides on top of a preset or loaded config

    A seed override applies to both data generation and training. Setting the model to
    phsi_hybrid switches the force to an MLP. The result is revalidated.
    """
    doc = config.model_dump()
    if integrator is not None:
        doc["hyper"]["integrator"] = integrator
    if seed is not None:
        doc["data"]["seed"] = seed
        doc["hyper"]["seed"] = seed
    if budget is not None:
        doc["budget"] = budget
    if sigma is not None:
        doc["data"]["sigma"] = sigma
    if model is not None:
        doc["model"] = model
        if model == "phsi_hybrid":
            doc["force"]["kind"] = "mlp"
    return parse_config(doc)
