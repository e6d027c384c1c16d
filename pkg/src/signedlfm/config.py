"""Flat `key = value` run configuration.

Every tunable in the package is settable through one of the keys below.
Unknown keys are rejected, and every value is parsed and range-checked
before any command starts working.  A single master ``seed`` fans out to
per-stage seeds by fixed-label hashing (see :mod:`signedlfm.seeding`), so
one knob reproduces a whole pipeline while stages stay independently
rerunnable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import ConfigError


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_int(raw: str) -> int:
    return int(raw.strip())


def _parse_float(raw: str) -> float:
    return float(raw.strip())


def _parse_str(raw: str) -> str:
    return raw.strip()


def _parse_iterations(raw: str) -> int | None:
    if raw.strip().lower() == "auto":
        return None
    return int(raw.strip())


def _parse_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(p) for p in raw.split(",") if p.strip())


def _parse_ints(raw: str) -> tuple[int, ...]:
    return tuple(int(p) for p in raw.split(",") if p.strip())


def _parse_strs(raw: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in raw.split(",") if p.strip())


def _choice(*options: str) -> Callable[[str], str]:
    def parse(raw: str) -> str:
        value = raw.strip().lower()
        if value not in options:
            raise ValueError(f"must be one of {options}, got {raw!r}")
        return value
    return parse


@dataclass(frozen=True)
class KeySpec:
    parse: Callable[[str], object]
    default: object
    check: Callable[[object], bool] = lambda _: True
    help: str = ""


_unit = lambda v: 0.0 <= v <= 1.0
_open_unit = lambda v: 0.0 < v < 1.0
_nonneg = lambda v: v >= 0
_pos = lambda v: v > 0
_all_nonneg = lambda vs: all(v >= 0 for v in vs)
_all_unit = lambda vs: all(0.0 <= v <= 1.0 for v in vs)

# Every tunable named anywhere in the package. The CLI rejects keys not
# listed here and refuses out-of-range values up front.
CONFIG_KEYS: dict[str, KeySpec] = {
    # shared
    "seed": KeySpec(_parse_int, 0, _nonneg, "master seed for the whole pipeline"),
    "p0": KeySpec(_parse_float, 0.01, _open_unit, "activation prior in (0,1)"),
    "d_pos": KeySpec(_parse_int, 30, _pos, "normal-side factor dimension"),
    "d_neg": KeySpec(_parse_int, 30, _pos, "spam-side factor dimension"),
    "init_scale": KeySpec(_parse_float, 0.1, _pos, "uniform init half-width"),
    # pointwise trainer
    "n": KeySpec(_parse_int, 20, _nonneg, "non-linked samples per entity per epoch"),
    "learning_rate": KeySpec(_parse_float, 0.005, _nonneg, "pointwise step size"),
    "epochs": KeySpec(_parse_int, 2000, _nonneg, "pointwise training epochs"),
    "use_non": KeySpec(_parse_bool, True, help="False drops null relations"),
    "au_fraction": KeySpec(
        _parse_float, 0.01, _unit, "held-out share promoted to spam by +au"
    ),
    "au_model_path": KeySpec(
        _parse_str, "", help="ranking model enabling the +au variant"
    ),
    # pairwise trainer
    "alpha": KeySpec(_parse_float, 0.005, _nonneg, "pairwise SGD step size"),
    "lambda_pos": KeySpec(_parse_float, 0.01, _nonneg, "normal-side regularization"),
    "lambda_neg": KeySpec(_parse_float, 0.01, _nonneg, "spam-side regularization"),
    "xi": KeySpec(_parse_int, 2, _nonneg, "evidence threshold for ? entries"),
    "iterations": KeySpec(
        _parse_iterations, None, lambda v: v is None or v >= 0,
        "pairwise SGD steps; auto = 200 x visible edges",
    ),
    # classifier / decisions
    "clf_l2": KeySpec(_parse_float, 1e-4, _nonneg, "classifier L2 strength"),
    "clf_learning_rate": KeySpec(_parse_float, 0.1, _nonneg, "classifier step size"),
    "clf_epochs": KeySpec(_parse_int, 500, _nonneg, "classifier epochs"),
    "operator": KeySpec(
        _choice("avg", "con", "sub", "ipneg", "ippos"), "con",
        help="factor combination operator",
    ),
    "policy": KeySpec(
        _choice("threshold", "top_k", "default"), "default",
        help="decision rule for F-measure",
    ),
    "threshold": KeySpec(_parse_float, 0.5, help="spam cutoff for threshold policy"),
    "top_k": KeySpec(_parse_int, 0, _nonneg, "spam count for top_k policy"),
    # splitting
    "label_fraction": KeySpec(
        _parse_float, 0.5, lambda v: 0.0 < v <= 1.0, "visible share of spam labels"
    ),
    "balance": KeySpec(_parse_bool, True, help="match normal count to spam count"),
    # synthetic generator
    "num_benign_users": KeySpec(_parse_int, 100, _nonneg),
    "num_spammers": KeySpec(_parse_int, 20, _nonneg),
    "num_legit_targets": KeySpec(_parse_int, 80, _nonneg),
    "num_malicious_targets": KeySpec(_parse_int, 20, _nonneg),
    "edges_per_user": KeySpec(_parse_int, 10, _nonneg),
    "disguise_rate": KeySpec(_parse_float, 0.1, _unit),
    "camouflage_rate": KeySpec(_parse_float, 0.05, _unit),
    # experiments
    "protocol": KeySpec(
        _choice("label_sweep", "imbalance", "incompleteness"), "label_sweep"
    ),
    "fractions": KeySpec(
        _parse_floats, (0.2, 0.25, 0.3, 0.4, 0.5),
        lambda vs: all(0.0 < v <= 1.0 for v in vs),
    ),
    "degrees": KeySpec(_parse_floats, (0.0, 0.03, 0.05, 0.07, 0.10), _all_unit),
    "metrics": KeySpec(
        _parse_strs, ("auc",),
        lambda vs: all(m in ("auc", "f_measure") for m in vs),
    ),
    "precision_ks": KeySpec(_parse_ints, (), _all_nonneg),
    "methods": KeySpec(_parse_strs, ("mrle_con", "spr_con")),
    "seeds": KeySpec(_parse_ints, (0,), _all_nonneg, "per-repeat master seeds"),
    # file paths
    "edges_path": KeySpec(_parse_str, ""),
    "roles_path": KeySpec(_parse_str, ""),
    "split_path": KeySpec(_parse_str, "", help="explicit 4-field split file"),
    "model_path": KeySpec(_parse_str, ""),
    "second_model_path": KeySpec(
        _parse_str, "", help="second model for concatenated features"
    ),
    "out_path": KeySpec(_parse_str, ""),
    "log_path": KeySpec(_parse_str, "", help="training log destination"),
}


class RunConfig:
    """Parsed, validated run configuration with defaults filled in."""

    def __init__(self, values: dict[str, object]):
        self._values = values

    def __getitem__(self, key: str):
        return self._values[key]

    def require_paths(self, *keys: str) -> None:
        missing = [k for k in keys if not self._values[k]]
        if missing:
            raise ConfigError(f"missing required config key(s): {', '.join(missing)}")

    @classmethod
    def from_sources(
        cls, config_path: str | None, overrides: list[str] = ()
    ) -> "RunConfig":
        raw: dict[str, str] = {}
        if config_path:
            raw.update(read_config_file(config_path))
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, value = item.split("=", 1)
            raw[key.strip()] = value.strip()
        return cls.validate(raw)

    @classmethod
    def validate(cls, raw: dict[str, str]) -> "RunConfig":
        values: dict[str, object] = {k: spec.default for k, spec in CONFIG_KEYS.items()}
        for key, raw_value in raw.items():
            spec = CONFIG_KEYS.get(key)
            if spec is None:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                value = spec.parse(raw_value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
            if not spec.check(value):
                raise ConfigError(f"value for {key!r} out of range: {raw_value!r}")
            values[key] = value
        return cls(values)


def read_config_file(path: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{line_no}: expected `key = value`")
            key, value = stripped.split("=", 1)
            raw[key.strip()] = value.strip()
    return raw


def config_help() -> str:
    """One line per key: name, default, help."""
    lines = []
    for name, spec in CONFIG_KEYS.items():
        default = "auto" if spec.default is None else spec.default
        lines.append(f"  {name:<24} default={default!r:<28} {spec.help}")
    return "\n".join(lines)
