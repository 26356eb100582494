"""Experiment configuration: one JSON document, validated against the
schema shipped with the package (unknown keys are rejected), then filled
with explicit defaults. The hash of the normalized document identifies a
run in its manifest."""

import copy
import hashlib
import json
from importlib import resources

import jsonschema

from .errors import ParameterError

_DEFAULTS = {
    "dataset": {
        "pendulum": {"n_trajectories": 40, "steps": 300, "dt": 0.02,
                     "omega0": 3.13, "f0": 1.0, "omega": 1.0,
                     "split": [0.7, 0.15, 0.15], "standardize": True},
        "linear": {"n_trajectories": 12, "steps": 200,
                   "split": [0.7, 0.15, 0.15], "standardize": False},
    },
    "model": {"hidden": [64, 32], "identity_codec": False},
    "train": {"epochs": 30, "batch_size": 128, "horizon": 4, "lr": 1e-3,
              "betas": [0.9, 0.999], "eps": 1e-8, "weight_decay": 0.0},
    "eval": {"max_horizon": 8},
}

_SCHEMES_WITH_INIT = ("eigeninit", "both")
_SCHEMES_WITH_LOSS = ("eigenloss", "both")


def _schema():
    with resources.files("eigenkae").joinpath("config_schema.json").open("rb") as fh:
        return json.load(fh)


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config is not valid JSON: {exc}") from None


def validate_config(raw):
    """Schema-check ``raw`` and return a defaults-filled copy."""
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParameterError(f"config invalid at {path}: {exc.message}") from None

    cfg = copy.deepcopy(raw)
    ds = cfg["dataset"]
    if "generator" in ds:
        base = dict(_DEFAULTS["dataset"][ds["generator"]])
        base.update(ds)
        cfg["dataset"] = base
        if abs(sum(base["split"]) - 1.0) > 1e-9 or min(base["split"]) <= 0:
            raise ParameterError(f"dataset split must be positive and sum to 1, got {base['split']}")
        if base["generator"] == "linear" and len(base["spectrum"]) != base["dim"]:
            raise ParameterError(
                f"linear spectrum has {len(base['spectrum'])} values for dim {base['dim']}")
    for section in ("model", "train", "eval"):
        base = dict(_DEFAULTS[section])
        base.update(cfg.get(section, {}))
        cfg[section] = base

    scheme = cfg["scheme"]
    if scheme in _SCHEMES_WITH_INIT:
        if "eigeninit" not in cfg:
            raise ParameterError(f"scheme {scheme!r} requires an 'eigeninit' section (theta)")
        cfg["eigeninit"] = {"slab": [0.0, 1.0], **cfg["eigeninit"]}
        a, b = cfg["eigeninit"]["slab"]
        if not 0.0 <= a < b <= 1.0:
            raise ParameterError(f"slab interval must satisfy 0 <= a < b <= 1, got {(a, b)}")
    elif "eigeninit" in cfg:
        raise ParameterError(f"'eigeninit' section is not used by scheme {scheme!r}")
    if scheme in _SCHEMES_WITH_LOSS:
        if "eigenloss" not in cfg:
            raise ParameterError(f"scheme {scheme!r} requires an 'eigenloss' section (weight)")
    elif "eigenloss" in cfg:
        raise ParameterError(f"'eigenloss' section is not used by scheme {scheme!r}")
    return cfg


def config_hash(cfg):
    """SHA-256 of the canonical JSON encoding of a normalized config."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
