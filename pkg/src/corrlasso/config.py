"""Experiment configuration: parsing, validation and serialization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
import yaml

from .correlation import CorrelationModel
from .priors import SparsePrior, round_half_up

MODES = ("theory", "empirical", "both")

_TOP_LEVEL = {"n", "delta", "kappa", "rho", "correlation", "sigma2", "snr_db", "prior",
              "lambda", "xi", "trials", "base_seed", "mode", "output_path"}
_CORRELATION_KEYS = {"type", "rho", "matrix", "path"}
_PRIOR_KEYS = {"type", "kappa", "atoms"}
_GRID_KEYS = {"start", "stop", "count", "spacing"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LambdaGrid:
    start: float
    stop: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("lambda.count: must be at least 1")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"lambda.spacing: expected 'linear' or 'log', got {self.spacing!r}")
        if not (self.start > 0 and self.stop > 0):
            raise ConfigError("lambda.start/stop: must be positive")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def to_dict(self) -> dict:
        return {"start": self.start, "stop": self.stop, "count": self.count,
                "spacing": self.spacing}


@dataclass(frozen=True)
class ProblemConfig:
    n: int
    delta: float
    kappa: float
    correlation: dict  # {"type": ..., "rho"/"matrix"/"path": ...}
    lam: Any  # float or LambdaGrid
    sigma2: Optional[float] = None
    snr_db: Optional[float] = None
    prior: dict = field(default_factory=lambda: {"type": "sparse_bernoulli"})
    xi: float = 0.001
    trials: int = 500
    base_seed: int = 0
    mode: str = "both"
    output_path: Optional[str] = None

    def __post_init__(self):
        _validate(self)

    # ---- derived quantities ---------------------------------------------

    @property
    def m(self) -> int:
        return round_half_up(self.delta * self.n)

    @property
    def k(self) -> int:
        return round_half_up(self.kappa * self.n)

    @property
    def noise_variance(self) -> float:
        """Noise variance; an SNR in dB converts through SNR = kappa / sigma2."""
        if self.sigma2 is not None:
            return float(self.sigma2)
        return self.kappa / 10.0 ** (self.snr_db / 10.0)

    @property
    def lambdas(self) -> np.ndarray:
        if isinstance(self.lam, LambdaGrid):
            return self.lam.values()
        return np.array([float(self.lam)])

    def prior_model(self) -> SparsePrior:
        if self.prior["type"] == "sparse_bernoulli":
            return SparsePrior.bernoulli(self.kappa)
        return SparsePrior.generic(self.kappa, [tuple(a) for a in self.prior["atoms"]])

    def correlation_model(self) -> CorrelationModel:
        kind = self.correlation["type"]
        if kind == "exponential":
            return CorrelationModel("exponential", self.m, rho=float(self.correlation["rho"]))
        if kind == "identity":
            return CorrelationModel("identity", self.m)
        if "matrix" in self.correlation:
            mat = np.asarray(self.correlation["matrix"], dtype=float)
        else:
            mat = _load_matrix(self.correlation["path"])
        return CorrelationModel("explicit", self.m, matrix=mat)

    def with_overrides(self, **kw) -> "ProblemConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"n": self.n, "delta": self.delta, "kappa": self.kappa,
                             "correlation": dict(self.correlation)}
        if self.sigma2 is not None:
            d["sigma2"] = self.sigma2
        else:
            d["snr_db"] = self.snr_db
        d["prior"] = dict(self.prior)
        d["lambda"] = self.lam.to_dict() if isinstance(self.lam, LambdaGrid) else self.lam
        d.update(xi=self.xi, trials=self.trials, base_seed=self.base_seed, mode=self.mode)
        if self.output_path is not None:
            d["output_path"] = self.output_path
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=None)


def _load_matrix(path) -> np.ndarray:
    p = Path(path)
    if p.suffix == ".npy":
        return np.load(p)
    return np.loadtxt(p, delimiter="," if p.suffix == ".csv" else None)


def _positive(name, value, integer=False):
    if integer:
        if isinstance(value, bool) or int(value) != value or value < 1:
            raise ConfigError(f"{name}: must be a positive integer, got {value!r}")
    elif not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigError(f"{name}: must be a positive number, got {value!r}")


def _validate(cfg: ProblemConfig) -> None:
    _positive("n", cfg.n, integer=True)
    _positive("delta", cfg.delta)
    if not 0 < cfg.kappa < 1:
        raise ConfigError(f"kappa: must lie in (0, 1), got {cfg.kappa!r}")
    if (cfg.sigma2 is None) == (cfg.snr_db is None):
        raise ConfigError("sigma2/snr_db: exactly one of the two must be given")
    if cfg.sigma2 is not None:
        _positive("sigma2", cfg.sigma2)
    elif not math.isfinite(cfg.snr_db):
        raise ConfigError(f"snr_db: must be finite, got {cfg.snr_db!r}")
    _positive("xi", cfg.xi)
    _positive("trials", cfg.trials, integer=True)
    if cfg.mode not in MODES:
        raise ConfigError(f"mode: expected one of {MODES}, got {cfg.mode!r}")
    if isinstance(cfg.base_seed, bool) or int(cfg.base_seed) != cfg.base_seed or cfg.base_seed < 0:
        raise ConfigError(f"base_seed: must be a nonnegative integer, got {cfg.base_seed!r}")
    if not isinstance(cfg.lam, LambdaGrid):
        _positive("lambda", cfg.lam)
    m, k = cfg.m, cfg.k
    if m < 1:
        raise ConfigError(f"delta: delta*n rounds to m={m}")
    if not 1 <= k < cfg.n:
        raise ConfigError(f"kappa: kappa*n rounds to k={k}; need 1 <= k < n")

    corr = cfg.correlation
    kind = corr.get("type")
    if kind == "exponential":
        rho = corr.get("rho")
        if not isinstance(rho, (int, float)) or not 0 <= rho < 1:
            raise ConfigError(f"correlation.rho: must lie in [0, 1), got {rho!r}")
    elif kind == "explicit":
        if ("matrix" in corr) == ("path" in corr):
            raise ConfigError("correlation: explicit type needs exactly one of matrix/path")
    elif kind != "identity":
        raise ConfigError(f"correlation.type: unknown kind {kind!r}")

    ptype = cfg.prior.get("type")
    if ptype == "sparse_generic":
        atoms = cfg.prior.get("atoms")
        if not atoms:
            raise ConfigError("prior.atoms: sparse_generic needs a non-empty atom list")
    elif ptype != "sparse_bernoulli":
        raise ConfigError(f"prior.type: unknown prior {ptype!r}")
    try:
        cfg.prior_model()
    except ValueError as exc:
        raise ConfigError(f"prior: {exc}") from None


def _unknown(keys, allowed, where):
    extra = sorted(set(keys) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(extra)}")


def _require(raw, key):
    if key not in raw:
        raise ConfigError(f"{key}: required field missing")
    return raw[key]


def _parse_lambda(raw) -> Any:
    if isinstance(raw, Mapping):
        _unknown(raw, _GRID_KEYS, "lambda")
        for key in ("start", "stop", "count"):
            if key not in raw:
                raise ConfigError(f"lambda.{key}: required field missing")
        return LambdaGrid(float(raw["start"]), float(raw["stop"]), int(raw["count"]),
                          raw.get("spacing", "linear"))
    if isinstance(raw, (list, tuple)):
        raise ConfigError("lambda: give a number or a {start, stop, count, spacing} grid")
    return float(raw)


def config_from_mapping(raw: Mapping) -> ProblemConfig:
    """Validate a parsed config mapping and fill defaults."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config: top level must be a mapping")
    _unknown(raw, _TOP_LEVEL, "config")

    if "rho" in raw and "correlation" in raw:
        raise ConfigError("rho/correlation: give either the rho shorthand or a correlation block")
    if "correlation" in raw:
        corr = raw["correlation"]
        if not isinstance(corr, Mapping):
            raise ConfigError("correlation: must be a mapping")
        _unknown(corr, _CORRELATION_KEYS, "correlation")
        corr = dict(corr)
        corr.setdefault("type", "exponential")
    elif "rho" in raw:
        corr = {"type": "exponential", "rho": raw["rho"]}
    else:
        corr = {"type": "identity"}

    kappa = raw.get("kappa")
    prior = dict(raw.get("prior") or {"type": "sparse_bernoulli"})
    _unknown(prior, _PRIOR_KEYS, "prior")
    prior.setdefault("type", "sparse_bernoulli")
    if "kappa" in prior:
        if kappa is not None and prior["kappa"] != kappa:
            raise ConfigError(f"prior.kappa: {prior['kappa']} conflicts with kappa: {kappa}")
        kappa = prior.pop("kappa")
    if kappa is None:
        raise ConfigError("kappa: required field missing")
    if "atoms" in prior:
        prior["atoms"] = [[float(v), float(w)] for v, w in prior["atoms"]]

    try:
        return ProblemConfig(
            n=int(_require(raw, "n")),
            delta=float(_require(raw, "delta")),
            kappa=float(kappa),
            correlation=corr,
            lam=_parse_lambda(_require(raw, "lambda")),
            sigma2=None if raw.get("sigma2") is None else float(raw["sigma2"]),
            snr_db=None if raw.get("snr_db") is None else float(raw["snr_db"]),
            prior=prior,
            xi=float(raw.get("xi", 0.001)),
            trials=raw.get("trials", 500),
            base_seed=raw.get("base_seed", 0),
            mode=raw.get("mode", "both"),
            output_path=raw.get("output_path"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def parse_config(source) -> ProblemConfig:
    """Parse a YAML/JSON config file path, a YAML string, or a mapping."""
    if isinstance(source, Mapping):
        return config_from_mapping(source)
    text = None
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and Path(source).exists()):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if path.suffix == ".csv":
            text = config_text_from_csv(text)
    else:
        text = source
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML/JSON: {exc}") from None
    return config_from_mapping(raw or {})


CONFIG_MARKER = "# config:"


def config_text_from_csv(text: str) -> str:
    """Recover the YAML config block from a results CSV header comment."""
    lines = []
    inside = False
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        if line.strip() == CONFIG_MARKER:
            inside = True
            continue
        if inside:
            lines.append(line[2:] if line.startswith("# ") else line[1:])
    if not lines:
        raise ConfigError("CSV file carries no config header")
    return "\n".join(lines)
