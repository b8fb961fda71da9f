"""Experiment configuration files.

Flat ``key = value`` lines grouped under optional ``[problem]``,
``[scaling]``, ``[integrator]`` and ``[sweep]`` headers. Inside
``[scaling]`` the ``scaling.`` prefix may be dropped. ``#`` starts a comment.

    [problem]
    problem = fused_lasso
    seed = 0
    n = 40
    mu = 1

    [scaling]
    variant = fixed
    eta1 = 10

    [sweep]
    magnitudes = 1, 100, 1e4
"""
from __future__ import annotations

import hashlib
from pathlib import Path

from .experiments import ExperimentConfig
from .integrate import IntegrateOptions
from .scaling import ScalingParams

SECTIONS = ("problem", "scaling", "integrator", "sweep")
INT_KEYS = ("seed", "n", "d")
STR_KEYS = ("problem", "scaling.variant")
FLOAT_KEYS = ("mu", "scaling.eta", "scaling.lambda", "scaling.eta1", "scaling.eta2",
              "scaling.lambda1", "scaling.lambda2", "t_max", "rel_tol", "abs_tol",
              "stop_field_norm", "settle_delta")
KEYS = STR_KEYS + INT_KEYS + FLOAT_KEYS + ("magnitudes",)
REQUIRED = ("problem", "mu")


class ConfigError(ValueError):
    def __init__(self, message, line=None, source="<config>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


def _convert(key, raw, line, source):
    try:
        if key in INT_KEYS:
            return int(raw)
        if key in FLOAT_KEYS:
            return float(raw)
        if key == "magnitudes":
            return tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}", line, source) from None
    return raw


def parse_text(text: str, source: str = "<config>") -> dict:
    """Return ``{key: (value, line)}`` after syntax and type checks."""
    section = None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or line[1:-1].strip() not in SECTIONS:
                raise ConfigError(f"unknown section header {line!r}", lineno, source)
            section = line[1:-1].strip()
            continue
        sep = min((i for i in (line.find("="), line.find(":")) if i > 0), default=-1)
        if sep < 0:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno, source)
        key, value = line[:sep].strip(), line[sep + 1:].strip()
        if section == "scaling" and not key.startswith("scaling."):
            key = "scaling." + key
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        if key in out:
            raise ConfigError(f"duplicate key {key!r} (first set on line {out[key][1]})",
                              lineno, source)
        if not value:
            raise ConfigError(f"empty value for {key}", lineno, source)
        out[key] = (_convert(key, value, lineno, source), lineno)
    return out


def build_config(entries: dict, source: str = "<config>") -> ExperimentConfig:
    for key in REQUIRED:
        if key not in entries:
            raise ConfigError(f"missing required key {key!r}", None, source)
    v = {k: val for k, (val, _) in entries.items()}

    def line_of(*keys):
        return next((entries[k][1] for k in keys if k in entries), None)

    variant = v.get("scaling.variant", "fixed")
    try:
        if variant == "finite":
            scaling = ScalingParams("finite", eta=v.get("scaling.eta", 1.0),
                                    lam=v.get("scaling.lambda", 0.5))
        elif variant == "fixed":
            scaling = ScalingParams("fixed", eta1=v.get("scaling.eta1", 10.0),
                                    eta2=v.get("scaling.eta2", 1.0),
                                    lambda1=v.get("scaling.lambda1", 0.5),
                                    lambda2=v.get("scaling.lambda2", 3.0))
        else:
            scaling = ScalingParams(variant)
    except ValueError as exc:
        raise ConfigError(str(exc), line_of(*[k for k in KEYS if k.startswith("scaling.")]),
                          source) from None
    try:
        integ = IntegrateOptions(t_max=v.get("t_max", 200.0), rel_tol=v.get("rel_tol", 1e-8),
                                 abs_tol=v.get("abs_tol", 1e-10),
                                 stop_field_norm=v.get("stop_field_norm", 1e-10))
    except ValueError as exc:
        raise ConfigError(str(exc), line_of("t_max", "rel_tol", "abs_tol", "stop_field_norm"),
                          source) from None
    kw = {k: v[k] for k in ("seed", "n", "d", "magnitudes", "settle_delta") if k in v}
    for key in ("n", "d"):
        if key in kw and kw[key] < 1:
            raise ConfigError(f"{key} must be positive", line_of(key), source)
    try:
        return ExperimentConfig(problem=v["problem"], mu=v["mu"], scaling=scaling,
                                integrator=integ, **kw)
    except ValueError as exc:
        msg = str(exc)
        culprit = next((k for k in ("problem", "seed", "mu", "magnitudes", "settle_delta")
                        if k in msg), None)
        raise ConfigError(msg, line_of(culprit) if culprit else None, source) from None


def load_config(path) -> tuple[ExperimentConfig, str]:
    """Parse ``path``; returns the config and the sha256 digest of the file."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise ConfigError("config is not valid UTF-8", None, str(path)) from None
    cfg = build_config(parse_text(text, str(path)), str(path))
    return cfg, hashlib.sha256(data).hexdigest()
