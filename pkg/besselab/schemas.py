# besselab/schemas.py
# Purpose: Pydantic v2 models validating one experiment configuration per CLI subcommand.
# Notes:
# - Flags and `--config` key=value files merge into one flat dict before validation.
# - Every key is checked before any computation starts; unknown keys are rejected.

from __future__ import annotations

from typing import Any, Dict, List, Optional, Tuple, Type

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationError, field_validator


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    # output directory; the working directory unless --out says otherwise
    out: str = Field(".", min_length=1)

    @field_validator("out", mode="before")
    @classmethod
    def _strip_out(cls, v: Any) -> Any:
        return v.strip() if isinstance(v, str) else v

    @field_validator("radii", "m", mode="before", check_fields=False)
    @classmethod
    def _split_list(cls, v: Any) -> Any:
        # "4,8,16" from a flag or a config file
        if isinstance(v, str):
            return [x.strip() for x in v.split(",") if x.strip()]
        return v


class FtCheckConfig(ExperimentConfig):
    n: int = Field(..., ge=1, le=3)
    alpha: float = Field(..., gt=0)
    L: float = Field(16.0, gt=0)
    N: int = 4096
    xi_max: float = Field(6.0, gt=0)
    near_field: int = Field(2, ge=0)


class DecaySweepConfig(ExperimentConfig):
    n: int = Field(..., ge=1, le=3)
    alpha: float = Field(..., gt=0)
    L: float = Field(16.0, gt=0)
    N: int = 1024
    radii: List[float] = Field(default_factory=lambda: [0.0, 2.0, 4.0, 8.0, 16.0])
    directions: int = Field(1, ge=1)


class UnifNormConfig(ExperimentConfig):
    n: int = Field(..., ge=1, le=3)
    alpha: float = Field(..., gt=0)
    gamma: float = 0.0
    p: float = Field(2.0, gt=1)
    L: float = Field(8.0, ge=4)
    N: int = 1024
    radii: List[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0, 4.0])
    directions: Optional[int] = Field(None, ge=1)


class MembershipConfig(ExperimentConfig):
    n: int = Field(..., ge=1, le=3)
    t: float
    alpha: float = Field(..., gt=0)
    analytic_only: bool = False
    base_N: Optional[int] = None
    L: float = Field(8.0, ge=4)


class GrowthConfig(ExperimentConfig):
    n: int = Field(..., ge=1)
    s: float = Field(..., ge=0)
    t: float = Field(..., ge=0)
    alpha: float = Field(..., gt=0)
    m: List[float] = Field(
        default_factory=lambda: [4.0, 8.0, 16.0, 32.0, 64.0],
        validation_alias=AliasChoices("m", "m_list"),
    )
    quad_points: int = Field(16, ge=2)


class OpnormConfig(ExperimentConfig):
    n: int = Field(..., ge=1, le=3)
    s: float = Field(..., ge=0)
    t: float = Field(..., ge=0)
    alpha: Optional[float] = Field(None, gt=0)
    c: float = 1.0
    L: float = Field(16.0, gt=0)
    N: int = 512
    seed: int
    tol: float = Field(1e-8, gt=0)
    max_iters: int = Field(500, ge=1)


class CounterexampleConfig(ExperimentConfig):
    n: int = Field(..., ge=1, le=3)
    s: float = Field(..., ge=0)
    t: float = Field(..., ge=0)
    eps: float = Field(..., gt=0)
    L: float = Field(4.0, ge=4)
    N: int = 256
    m: List[float] = Field(
        default_factory=lambda: [4.0, 8.0, 16.0, 32.0],
        validation_alias=AliasChoices("m", "m_list"),
    )


SCHEMAS: Dict[str, Type[ExperimentConfig]] = {
    "ft-check": FtCheckConfig,
    "decay-sweep": DecaySweepConfig,
    "unif-norm": UnifNormConfig,
    "membership": MembershipConfig,
    "growth": GrowthConfig,
    "opnorm": OpnormConfig,
    "counterexample": CounterexampleConfig,
}


def describe_validation_error(err: ValidationError) -> Tuple[str, str]:
    """First error as (key, message): 'missing key: n' or 'invalid key: n: ...'."""
    first = err.errors()[0]
    loc = first.get("loc") or ("?",)
    key = str(loc[0])
    if first.get("type") == "missing":
        return key, f"missing key: {key}"
    return key, f"invalid key: {key}: {first.get('msg', 'invalid value')}"
