"""
Training Hyperparameters
"""

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from phsysid.integrators import get_scheme


class Hyperparams(BaseModel):
    """Optimizer, regularization and pruning settings of one training run"""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(100, ge=1)
    learning_rate: float = Field(1e-3, gt=0)
    batch_size: int = Field(32, ge=1)
    weight_decay: float = Field(1e-4, ge=0)

    # L1 weights on H coefficients, force coefficients and damping
    lam_h: float = Field(0.0, ge=0)
    lam_f: float = Field(0.0, ge=0)
    lam_r: float = Field(0.0, ge=0)
    reg_drop_at_half: bool = True

    # Pruning every prune_interval epochs (0 disables)
    prune_interval: int = Field(0, ge=0)
    prune_history: int = Field(1, ge=1)
    prune_threshold: float = Field(0.05, ge=0)
    prune_damping: bool = False

    integrator: str = "srk4"
    seed: int = 0

    @field_validator("integrator")
    @classmethod
    def _known_integrator(cls, value: str) -> str:
        return get_scheme(value).name

    @model_validator(mode="after")
    def _prune_within_epochs(self) -> "Hyperparams":
        if self.prune_interval > self.epochs:
            raise ValueError(f"prune_interval {self.prune_interval} exceeds epochs {self.epochs}")
        return self
