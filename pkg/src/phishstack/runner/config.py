"""Experiment configuration files.

Recognised keys (plain ``key = value`` text, ``#`` comments)::

    dataset           CSV path, relative to the config file
    schema            schema path, or the name of a bundled schema (dataset1..dataset4)
    seed              integer, default 0
    outer_k           outer folds, default 10
    inner_k           inner folds (RFECV, OOF stacking, MLP grid), default 10
    candidates        learner kinds, default all nine
    mlp_candidates    topologies separated by ';', e.g. 6-12-32-12-6; 32-16
    mlp_max_epochs, mlp_batch_size, mlp_learning_rate, mlp_patience
    output            output directory, relative to the config file
    skip_rfecv        true to train every learner on all features
    fixed_bases       learner kinds to stack directly, bypassing greedy selection
    save_models       write one model file per outer fold (default true)
"""

import hashlib
import json
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .. import kvfile
from ..dataset import load_schema
from ..errors import ConfigError
from ..learners import KINDS
from ..meta_mlp import DEFAULT_GRID, MlpConfig, parse_topology


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str
    schema_path: str
    seed: int = 0
    outer_k: int = 10
    inner_k: int = 10
    candidates: tuple = KINDS
    mlp_candidates: tuple = DEFAULT_GRID
    mlp_max_epochs: int = 500
    mlp_batch_size: int = 32
    mlp_learning_rate: float = 1e-3
    mlp_patience: int = 20
    output_dir: Optional[str] = None
    skip_rfecv: bool = False
    fixed_bases: tuple = ()
    save_models: bool = True
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "mlp_candidates", tuple(tuple(int(w) for w in t) for t in self.mlp_candidates))
        object.__setattr__(self, "fixed_bases", tuple(self.fixed_bases))

    def validate(self, check_paths=True):
        if self.outer_k < 2 or self.inner_k < 2:
            raise ConfigError(f"outer_k and inner_k must be >= 2 (got {self.outer_k}, {self.inner_k})")
        if not self.candidates:
            raise ConfigError("candidate learner list is empty")
        bad = [k for k in self.candidates + self.fixed_bases if k not in KINDS]
        if bad:
            raise ConfigError(f"unknown learner kinds {bad}; expected {KINDS}")
        if len(set(self.candidates)) != len(self.candidates):
            raise ConfigError("duplicate candidate kinds")
        if not self.mlp_candidates:
            raise ConfigError("no MLP topologies")
        try:
            self.mlp_configs(0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if check_paths:
            if not Path(self.dataset_path).is_file():
                raise ConfigError(f"dataset not found: {self.dataset_path}")
            if not Path(self.schema_path).is_file():
                raise ConfigError(f"schema not found: {self.schema_path}")
        return self

    def mlp_configs(self, seed):
        return [MlpConfig(hidden_layers=t, max_epochs=self.mlp_max_epochs, batch_size=self.mlp_batch_size,
                          learning_rate=self.mlp_learning_rate, seed=seed,
                          early_stop_patience=self.mlp_patience)
                for t in self.mlp_candidates]

    def to_dict(self):
        d = asdict(self)
        d["candidates"] = list(self.candidates)
        d["mlp_candidates"] = [list(t) for t in self.mlp_candidates]
        d["fixed_bases"] = list(self.fixed_bases)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["candidates"] = tuple(d["candidates"])
        d["mlp_candidates"] = tuple(tuple(t) for t in d["mlp_candidates"])
        d["fixed_bases"] = tuple(d.get("fixed_bases", ()))
        return cls(**d)

    def config_hash(self):
        """Hash of everything that affects results (paths and output location excluded)."""
        d = self.to_dict()
        for key in ("dataset_path", "schema_path", "output_dir", "name", "save_models"):
            d.pop(key)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def bundled_schema(name):
    path = resources.files("phishstack") / "schemas" / f"{name}.schema"
    return Path(str(path)) if path.is_file() else None


def _resolve_schema(value, base):
    p = (base / value)
    if p.is_file():
        return str(p)
    found = bundled_schema(value)
    if found is not None:
        return str(found)
    return str(p)


def parse_config(text, base_dir=".", source="<string>"):
    kv = kvfile.parse_kv(text, source)
    base = Path(base_dir)
    known = {"dataset", "schema", "seed", "outer_k", "inner_k", "candidates", "mlp_candidates",
             "mlp_max_epochs", "mlp_batch_size", "mlp_learning_rate", "mlp_patience", "output",
             "skip_rfecv", "fixed_bases", "save_models", "name"}
    unknown = set(kv) - known
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
    if "dataset" not in kv or "schema" not in kv:
        raise ConfigError(f"{source}: 'dataset' and 'schema' are required")
    args = {
        "dataset_path": str(base / kv["dataset"]),
        "schema_path": _resolve_schema(kv["schema"], base),
        "name": kv.get("name", ""),
    }
    try:
        for key in ("seed", "outer_k", "inner_k", "mlp_max_epochs", "mlp_batch_size", "mlp_patience"):
            if key in kv:
                args[key] = int(kv[key])
        if "mlp_learning_rate" in kv:
            args["mlp_learning_rate"] = float(kv["mlp_learning_rate"])
        if "candidates" in kv:
            args["candidates"] = tuple(k.upper() for k in kvfile.split_list(kv["candidates"]))
        if "fixed_bases" in kv:
            args["fixed_bases"] = tuple(k.upper() for k in kvfile.split_list(kv["fixed_bases"]))
        if "mlp_candidates" in kv:
            args["mlp_candidates"] = tuple(parse_topology(t) for t in kvfile.split_list(kv["mlp_candidates"], ";"))
        for key in ("skip_rfecv", "save_models"):
            if key in kv:
                args[key] = kvfile.parse_bool(kv[key])
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if kv.get("output"):
        args["output_dir"] = str(base / kv["output"])
    return ExperimentConfig(**args)


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent, source=path)


def load_experiment_schema(cfg):
    return load_schema(cfg.schema_path)
