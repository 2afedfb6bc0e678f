"""Experiment configuration: one JSON document with explicit defaults.

Loading materializes every default so the frozen copy written into the
output directory is a complete audit record of the run.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..genmodel.params import DEFAULT_HYPER


class ConfigError(ValueError):
    pass


_MODEL_DEFAULTS = {
    "backbone": "attention",
    "d_model": DEFAULT_HYPER["d_model"],
    "n_blocks": DEFAULT_HYPER["n_blocks"],
    "n_heads": DEFAULT_HYPER["n_heads"],
    "state_size": DEFAULT_HYPER["state_size"],
    "gcn_depth": DEFAULT_HYPER["gcn_depth"],
    "gcn_hidden": DEFAULT_HYPER["gcn_hidden"],
}

_TRAIN_DEFAULTS = {
    "learning_rate": 1e-3,
    "batch_size": 256,
    "max_epochs": 50,
    "adam_betas": [0.9, 0.999],
    "grad_clip": 1.0,
    "early_stop_patience": 10,
}

DEFAULTS = {
    "family": "heis1d",
    "mode": "kqd",
    "n_qubits": 5,
    "side": 4,
    "j1": 1.0,
    "periodic": True,
    "n_instances": 50,
    "n_train": 30,
    "seed": 1234,
    "shots": 1000,
    "gen_shots": None,      # defaults to `shots`
    "d_train": 5,
    "d_eval": 15,
    "sz_filter": False,
    "trotter": {"steps": 6, "order": 2},
    "threshold": {"eps_cut_exact": 1e-12, "eps_cut_sampled": 0.1},
    "model": _MODEL_DEFAULTS,
    "train": _TRAIN_DEFAULTS,
    "out_dir": "runs/default",
}


@dataclass
class ExperimentConfig:
    raw: dict = field(repr=False)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def out_dir(self) -> Path:
        return Path(self.raw["out_dir"])

    @property
    def n_test(self) -> int:
        return self.raw["n_instances"] - self.raw["n_train"]

    @property
    def n_system_qubits(self) -> int:
        if self.raw["family"] == "j1j2_2d":
            return self.raw["side"] ** 2
        return self.raw["n_qubits"]

    @property
    def record_width(self) -> int:
        """Measured qubits per shot: system plus the ancilla in kqd mode."""
        return self.n_system_qubits + (1 if self.raw["mode"] == "kqd" else 0)

    @property
    def token_scheme_name(self) -> str:
        return "pauli6" if self.raw["mode"] == "kqd" else "computational"

    def train_ids(self) -> list[int]:
        return list(range(self.raw["n_train"]))

    def test_ids(self) -> list[int]:
        return list(range(self.raw["n_train"], self.raw["n_instances"]))


def _merge(defaults: dict, given: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(defaults[key], dict) and defaults[key]:
            if not isinstance(value, dict):
                raise ConfigError(f"{path + key!r} must be an object")
            out[key] = _merge(defaults[key], value, path + key + ".")
        else:
            out[key] = value
    return out


def _validate(cfg: dict) -> None:
    if cfg["family"] not in ("heis1d", "j1j2_2d", "xxz_chain"):
        raise ConfigError(f"unknown family {cfg['family']!r}")
    if cfg["mode"] not in ("kqd", "skqd"):
        raise ConfigError(f"mode must be kqd or skqd, got {cfg['mode']!r}")
    if not (1 <= cfg["d_train"] <= cfg["d_eval"]):
        raise ConfigError("need d_eval >= d_train >= 1")
    if not (1 <= cfg["n_train"] < cfg["n_instances"]):
        raise ConfigError("need 1 <= n_train < n_instances")
    if cfg["shots"] < 1:
        raise ConfigError("shots must be >= 1")
    if cfg["trotter"]["order"] not in (1, 2) or cfg["trotter"]["steps"] < 1:
        raise ConfigError("bad trotter settings")
    if cfg["model"]["backbone"] not in ("attention", "ssm"):
        raise ConfigError("model.backbone must be attention or ssm")
    for key in ("eps_cut_exact", "eps_cut_sampled"):
        if not 0 <= cfg["threshold"][key] < 1:
            raise ConfigError(f"threshold.{key} must be in [0, 1)")


def load_config(source, overrides: dict | None = None) -> ExperimentConfig:
    """Merge a config document (path or dict) over the defaults and validate.

    `overrides` wins over the document (used for --seed/--out/--mode flags).
    """
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {source}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    else:
        doc = dict(source)
    merged = _merge(DEFAULTS, doc)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in merged:
            raise ConfigError(f"unknown override {key!r}")
        merged[key] = value
    if merged["gen_shots"] is None:
        merged["gen_shots"] = merged["shots"]
    _validate(merged)
    return ExperimentConfig(merged)


def freeze_config(cfg: ExperimentConfig, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "config.frozen.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(cfg.raw, fh, indent=2)
        fh.write("\n")
    return path
