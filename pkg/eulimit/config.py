"""
Run configuration.

A JSON document validated by pydantic; unknown keys and non-finite numbers
are rejected and the schema version ``spec: 1`` is required. Densities may
be given as the string "vacuum". The output directory comes from ``--out``,
then the file's ``output_dir``, then ``EULIMIT_OUT`` (environment or
``.env``), then ``./out``.
"""

import json
import logging
import os
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from eulimit.errors import ConfigError
from eulimit.gas_model import THETA0
from eulimit.godunov import Boundary, Grid1D
from eulimit.limit_harness import DEFAULT_THETAS, SweepConfig
from eulimit.riemann import RiemannData

logger = logging.getLogger(__name__)

OUTPUT_ENV = "EULIMIT_OUT"
DEFAULT_OUTPUT = "out"

Density = Union[Literal["vacuum"], Annotated[float, Field(ge=0.0)]]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


class RiemannSection(_Section):
    rho_l: Density
    u_l: float
    rho_r: Density
    u_r: float

    def to_data(self, theta: float) -> RiemannData:
        return RiemannData.from_values(theta, self.rho_l, self.u_l, self.rho_r, self.u_r)


class GridSection(_Section):
    x_min: float
    x_max: float
    n_cells: int = Field(ge=4)
    boundary: Literal["outflow", "periodic"] = "outflow"

    @model_validator(mode="after")
    def _ordered(self) -> "GridSection":
        if self.x_min >= self.x_max:
            raise ValueError(f"x_min must be below x_max, got {self.x_min} >= {self.x_max}")
        return self

    def to_grid(self) -> Grid1D:
        return Grid1D(self.x_min, self.x_max, self.n_cells, Boundary(self.boundary))


class SimSection(_Section):
    cfl: float = Field(default=0.5, gt=0.0, le=0.9)
    t_end: float = Field(gt=0.0)
    snapshots: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _snapshots_inside(self) -> "SimSection":
        if self.snapshots != sorted(self.snapshots) or any(t < 0.0 or t > self.t_end for t in self.snapshots):
            raise ValueError("snapshots must be sorted and lie in [0, t_end]")
        return self


class SweepSection(_Section):
    thetas: List[float] = Field(default_factory=lambda: list(DEFAULT_THETAS))
    samples: int = Field(default=400, ge=1)
    seed: int = 0
    w0: float = Field(default=2.0, gt=0.0)
    xi_grid: List[float] = Field(default_factory=lambda: [-0.3, -0.1, 0.1, 0.3])

    @field_validator("thetas")
    @classmethod
    def _decreasing(cls, value: List[float]) -> List[float]:
        if any(a <= b for a, b in zip(value, value[1:])):
            raise ValueError("thetas must be strictly decreasing")
        if any(not 0.0 < t <= THETA0 for t in value):
            raise ValueError(f"thetas must lie in (0, {THETA0}]")
        return value

    def to_sweep_config(self, workers: int = 1) -> SweepConfig:
        return SweepConfig(
            thetas=tuple(self.thetas),
            sample_count=self.samples,
            seed=self.seed,
            w0=self.w0,
            xi_grid=tuple(self.xi_grid),
            workers=workers,
        )


class RunConfigFile(_Section):
    spec: Literal[1]
    theta: Optional[float] = Field(default=None, ge=0.0, le=THETA0)
    riemann: Optional[RiemannSection] = None
    grid: Optional[GridSection] = None
    sim: Optional[SimSection] = None
    sweep: Optional[SweepSection] = None
    output_dir: Optional[str] = None


def _one_line(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"]) or "<root>"
    return f"{location}: {first['msg']}"


def parse_run_config(payload: dict) -> RunConfigFile:
    try:
        return RunConfigFile.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"invalid run config ({_one_line(e)})") from e


def load_run_config(path: Union[str, Path]) -> RunConfigFile:
    """Read and validate a run-config file; every failure is a ConfigError."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e.msg} at line {e.lineno}") from e
    if not isinstance(payload, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    config = parse_run_config(payload)
    logger.debug("loaded run config from %s", path)
    return config


def config_echo(config: Optional[RunConfigFile]) -> dict:
    """JSON-ready echo of a config; re-parses to an identical config."""
    return {} if config is None else config.model_dump(mode="json", exclude_none=True)


def resolve_output_dir(cli_out: Optional[str], config: Optional[RunConfigFile] = None) -> Path:
    if cli_out:
        return Path(cli_out)
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
