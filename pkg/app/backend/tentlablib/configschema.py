"""
Pydantic models for experiment configs.

Configs are validated in full before any computation. Measure and function payloads keep the JSON layout of the
library's to_json methods and are checked by building the object once.
"""

import json
import re
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ContractViolation
from .functions import HoloFunction, function_from_json
from .lattice import Lattice, build_lattice
from .measures import DEFAULT_BUDGET, MIN_BUDGET, Measure, measure_from_json
from .params import DEFAULT_APERTURE, DEFAULT_RADIUS, TentParams
from .strategy import ExperimentAction

GRID_NAMES = ("p", "q", "alpha", "t", "s", "beta")
AXIS_PATTERN = re.compile(r"^\s*(\w+)\s*:\s*([-+0-9.eE]+)\s*\.\.\s*([-+0-9.eE]+)\s*:\s*(\d+)\s*$")


class TentParamsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: Optional[float] = Field(None, gt=0)
    q: Optional[float] = Field(None, gt=0)
    s: Optional[float] = Field(None, gt=0)
    t: Optional[float] = Field(None, gt=0)
    alpha: float = 0.0
    beta: float = 0.0
    n: int = Field(1, ge=1)
    gamma: float = Field(DEFAULT_APERTURE, gt=1)
    r: float = Field(DEFAULT_RADIUS, gt=0, lt=1)

    def require(self, *names: str) -> None:
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ContractViolation(f"Missing exponents: {', '.join(missing)}")

    def to_params(self) -> TentParams:
        self.require("p", "q", "s", "t")
        return TentParams(**self.model_dump())


class MeasureModel(BaseModel):
    model_config = ConfigDict(extra="allow")

    variant: str

    @model_validator(mode="after")
    def check_buildable(self) -> "MeasureModel":
        self.build()
        return self

    def build(self) -> Measure:
        try:
            return measure_from_json(self.model_dump())
        except (KeyError, TypeError) as error:
            raise ValueError(f"Malformed {self.variant} measure: {error}") from error


class FunctionModel(BaseModel):
    model_config = ConfigDict(extra="allow")

    variant: str

    @model_validator(mode="after")
    def check_buildable(self) -> "FunctionModel":
        self.build()
        return self

    def build(self) -> HoloFunction:
        try:
            return function_from_json(self.model_dump())
        except (KeyError, TypeError) as error:
            raise ValueError(f"Malformed {self.variant} function: {error}") from error


class LatticeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(1, ge=1)
    # None couples the lattice to the functional radius: delta = r / 2
    delta: Optional[float] = Field(None, gt=0, lt=1)
    r_max: float = Field(..., gt=0)
    samples: int = Field(10000, ge=100)

    def build(self, seed: int, r: float = DEFAULT_RADIUS) -> Lattice:
        delta = self.delta if self.delta is not None else r / 2
        return build_lattice(self.n, delta, self.r_max, seed, self.samples)


class GridAxis(BaseModel):
    """One swept parameter of a region grid, written name:lo..hi:count on the command line."""

    model_config = ConfigDict(extra="forbid")

    name: str
    lo: float
    hi: float
    count: int = Field(..., ge=1)

    @field_validator("name")
    @classmethod
    def known_name(cls, value: str) -> str:
        if value not in GRID_NAMES:
            raise ValueError(f"Grid parameter must be one of {', '.join(GRID_NAMES)}, got {value!r}")
        return value

    @classmethod
    def parse(cls, text: str) -> "GridAxis":
        match = AXIS_PATTERN.match(text)
        if match is None:
            raise ContractViolation(f"Grid axis must look like name:lo..hi:count, got {text!r}")
        name, lo, hi, count = match.groups()
        return cls(name=name, lo=float(lo), hi=float(hi), count=int(count))

    def values(self) -> List[float]:
        if self.count == 1:
            return [self.lo]
        return [float(v) for v in np.linspace(self.lo, self.hi, self.count)]


class ExperimentConfig(BaseModel):
    """
    Class representing one experiment run.
    Attributes:
        subcommand: The experiment to run
        seed: Root seed of every random stream in the run
        budget: Integrand evaluations per integral
        out: Path of the RunReport JSON (the grid CSV goes next to it)
    """

    model_config = ConfigDict(extra="forbid")

    subcommand: ExperimentAction
    seed: int = Field(..., ge=0, lt=2**64)
    budget: int = Field(DEFAULT_BUDGET, ge=MIN_BUDGET)
    out: Optional[str] = None
    params: TentParamsModel = Field(default_factory=TentParamsModel)
    measure: Optional[MeasureModel] = None
    function: Optional[FunctionModel] = None
    lattice: Optional[LatticeModel] = None
    sphere_samples: int = Field(32, ge=2)
    xi_count: int = Field(8, ge=1)
    radii: Optional[List[float]] = None
    theta: float = Field(1.0, gt=0)
    vary: List[GridAxis] = Field(default_factory=list)
    fixed: Dict[str, float] = Field(default_factory=dict)
    bergman: bool = False
    witness: bool = False

    @field_validator("radii")
    @classmethod
    def radii_in_ball(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and (not value or not all(0 < rho < 1 for rho in value)):
            raise ValueError(f"Radii must be a nonempty list inside (0, 1), got {value}")
        return value

    @model_validator(mode="after")
    def check_grid(self) -> "ExperimentConfig":
        if self.subcommand is ExperimentAction.Region:
            if len(self.vary) != 2:
                raise ValueError(f"region needs exactly two --vary axes, got {len(self.vary)}")
            if self.vary[0].name == self.vary[1].name:
                raise ValueError(f"region needs two different axes, got {self.vary[0].name} twice")
            unknown = [name for name in self.fixed if name not in GRID_NAMES + ("n",)]
            if unknown:
                raise ValueError(f"Unknown fixed parameters: {', '.join(unknown)}")
        return self

    def echo(self) -> Dict[str, Any]:
        """The config as plain JSON; validating it again reproduces the run."""
        return self.model_dump(mode="json", exclude_none=True)


def parse_fixed(text: str) -> Dict[str, float]:
    """p=2,q=2,n=1 -> {"p": 2.0, "q": 2.0, "n": 1.0}."""
    fixed: Dict[str, float] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        name, sep, value = item.partition("=")
        if not sep:
            raise ContractViolation(f"Fixed parameters must look like name=value, got {item!r}")
        try:
            fixed[name.strip()] = float(value)
        except ValueError as error:
            raise ContractViolation(f"Fixed parameter {name.strip()} is not a number: {value!r}") from error
    return fixed


def merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: Optional[str], overrides: Dict[str, Any]) -> ExperimentConfig:
    """Read the JSON config at path (if any), apply the inline overrides and validate the result."""
    data: Dict[str, Any] = {}
    if path:
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except json.JSONDecodeError as error:
            raise ContractViolation(f"Config {path} is not valid JSON: {error}") from error
        if not isinstance(data, dict):
            raise ContractViolation(f"Config {path} must hold a JSON object")
    return ExperimentConfig.model_validate(merge(data, overrides))
