"""Experiment configuration: an INI file with one section per pipeline part.

Example::

    [pipeline]
    stages = simulate, train, hillclimb
    seed = 7
    jobs = 1
    out_dir = results

    [simulate]
    study = 2

    [train]
    models = 200

Unknown sections or keys are errors. Paths are resolved relative to the
config file's directory.
"""
from __future__ import annotations

import configparser
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

STAGES = ("simulate", "encode", "correlate", "train", "hillclimb")


class ConfigError(ValueError):
    pass


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PipelineSection(_Section):
    stages: tuple[Literal["simulate", "encode", "correlate", "train", "hillclimb"], ...] = ("simulate", "train")
    seed: int = Field(0, ge=0, lt=2**64)
    jobs: int = Field(1, ge=1)
    out_dir: Path = Path("out")

    @field_validator("stages", mode="before")
    @classmethod
    def _split_list(cls, v):
        if isinstance(v, str):
            v = [s.strip() for s in v.split(",") if s.strip()]
        return v

    @field_validator("stages")
    @classmethod
    def _check_stages(cls, v):
        if not v:
            raise ValueError("at least one stage is required")
        if len(set(v)) != len(v):
            raise ValueError("stages listed twice")
        if "simulate" in v and ("encode" in v or "correlate" in v):
            raise ValueError("simulate replaces encode/correlate; do not combine them")
        return tuple(sorted(v, key=STAGES.index))


class SimulateSection(_Section):
    study: Literal[1, 2, 3] = 2
    pairs_mz: int = Field(50, ge=1)
    pairs_dz: int = Field(50, ge=1)
    sharing: Literal["independent", "shared"] = "independent"

    @field_validator("study", mode="before")
    @classmethod
    def _study_number(cls, v):
        # INI values arrive as strings; Literal[int] does not coerce them
        return int(v) if isinstance(v, str) and v.strip().isdigit() else v


class BasisSection(_Section):
    degree: int = Field(119, ge=0)
    placement: Literal["midpoint", "endpoints"] = "midpoint"
    block_size: int = Field(4096, ge=1)


class CorrelateSection(_Section):
    manifest: Optional[Path] = None
    parcellation: Optional[Path] = None


class TrainSection(_Section):
    input: Optional[Path] = None
    hidden: int = Field(200, ge=1)
    lam: float = Field(0.01, ge=0, alias="lambda")
    models: int = Field(200, ge=1)
    split: tuple[float, float, float] = (0.70, 0.15, 0.15)
    max_iterations: int = Field(1000, ge=1)
    patience: int = Field(6, ge=1)
    input_scaling: Literal["minmax", "none"] = "minmax"

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("split", mode="before")
    @classmethod
    def _split_ratios(cls, v):
        if isinstance(v, str):
            v = [float(s) for s in v.split(",")]
        return v

    @field_validator("split")
    @classmethod
    def _check_ratios(cls, v):
        if any(r <= 0 for r in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError("split ratios must be positive and sum to 1")
        return v


class HillclimbSection(_Section):
    input: Optional[Path] = None
    runs: int = Field(100, ge=1)
    hidden: int = Field(20, ge=1)
    final_hidden: int = Field(200, ge=1)
    candidate_repeats: int = Field(3, ge=1)


class ExperimentConfig(_Section):
    pipeline: PipelineSection = PipelineSection()
    simulate: SimulateSection = SimulateSection()
    basis: BasisSection = BasisSection()
    correlate: CorrelateSection = CorrelateSection()
    train: TrainSection = TrainSection()
    hillclimb: HillclimbSection = HillclimbSection()

    @model_validator(mode="after")
    def _check_inputs(self):
        stages = self.pipeline.stages
        if ("encode" in stages or "correlate" in stages) and self.correlate.manifest is None:
            raise ValueError("encode/correlate stages need [correlate] manifest")
        if "correlate" in stages and self.correlate.parcellation is None:
            raise ValueError("correlate stage needs [correlate] parcellation")
        produces = "simulate" in stages or "correlate" in stages
        if "train" in stages and not produces and self.train.input is None:
            raise ValueError("train stage needs [train] input when no simulate/correlate stage runs")
        if "hillclimb" in stages and not produces and self.hillclimb.input is None and self.train.input is None:
            raise ValueError("hillclimb stage needs an input features file")
        for path in self.referenced_files():
            if not path.exists():
                raise ValueError(f"referenced file does not exist: {path}")
        return self

    def referenced_files(self) -> list[Path]:
        stages = self.pipeline.stages
        files = []
        if "encode" in stages or "correlate" in stages:
            files.append(self.correlate.manifest)
        if "correlate" in stages:
            files.append(self.correlate.parcellation)
        produces = "simulate" in stages or "correlate" in stages
        if not produces:
            if "train" in stages:
                files.append(self.train.input)
            if "hillclimb" in stages:
                files.append(self.hillclimb.input or self.train.input)
        return [f for f in files if f is not None]

    def echo(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


PATH_KEYS = {("pipeline", "out_dir"), ("correlate", "manifest"), ("correlate", "parcellation"),
             ("train", "input"), ("hillclimb", "input")}


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None


def read_config_dict(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent
    data: dict = {}
    for section in parser.sections():
        values = {}
        for key, value in parser.items(section):
            if (section, key) in PATH_KEYS:
                value = str((base / value) if not Path(value).is_absolute() else Path(value))
            values[key] = value
        data[section] = values
    # the default output directory also lives next to the config file
    data.setdefault("pipeline", {}).setdefault("out_dir", str(base / "out"))
    return data


def merge(data: dict, overrides: dict) -> dict:
    """Overlay ``{section: {key: value}}`` onto ``data``; ``None`` values are skipped."""
    out = {k: dict(v) for k, v in data.items()}
    for section, values in overrides.items():
        for key, value in values.items():
            if value is not None:
                out.setdefault(section, {})[key] = value
    return out


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    data = read_config_dict(path) if path is not None else {}
    return parse_config(merge(data, overrides or {}))
