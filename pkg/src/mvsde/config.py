"""Experiment configuration: flat key-value text with dotted section keys.

Format: one ``key = value`` per line, ``#`` comments, arrays as comma lists.
Unknown keys are rejected up front so a typo cannot silently fall back to a
default mid-experiment.  ``model.<param>`` keys are forwarded verbatim to
the model builder, which performs its own signature validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "load_config", "KNOWN_KEYS"]


class ConfigError(ValueError):
    pass


def _as_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _as_float_list(raw: str):
    return tuple(float(v.strip()) for v in raw.split(",") if v.strip())


def _as_str_list(raw: str):
    return tuple(v.strip() for v in raw.split(",") if v.strip())


# key -> (attribute, parser)
KNOWN_KEYS = {
    "model": ("model", str.strip),
    "seed": ("seed", int),
    "out": ("out", str.strip),
    "threads": ("threads", int),
    "emit_svg": ("emit_svg", _as_bool),
    "checks": ("checks", _as_str_list),
    "grid.t0": ("t0", float),
    "grid.t1": ("t1", float),
    "grid.n_steps": ("n_steps", int),
    "ensemble.n": ("n_particles", int),
    "histogram.resolution": ("resolution", int),
    "trunc.radius": ("trunc_radius", float),
    "jump.cap": ("jump_cap", float),
    "picard.lambda": ("picard_lambda", float),
    "picard.tol": ("picard_tol", float),
    "picard.max_iter": ("picard_max_iter", int),
    "coupling.runs": ("coupling_runs", int),
    "coupling.delta": ("coupling_delta", float),
    "coupling.dt_list": ("coupling_dt_list", _as_float_list),
    "harnack.n": ("harnack_n", int),
    "harnack.p_grid": ("harnack_p_grid", _as_float_list),
    "metrics.k": ("metrics_k", float),
    "moment.n_rep": ("moment_n_rep", int),
    "stability.n": ("stability_n", int),
}


@dataclass
class ExperimentConfig:
    """Validated experiment settings; every field has a runnable default."""

    model: str = "ou"
    model_params: dict = field(default_factory=dict)
    seed: int = 12345
    out: str = "results"
    threads: int = 0  # 0 = all cores
    emit_svg: bool = False
    checks: tuple = ()
    t0: float = 0.0
    t1: float = 1.0
    n_steps: int = 1000
    n_particles: int = 10000
    resolution: int = 128
    trunc_radius: float = 1e6
    jump_cap: float = 1.0
    picard_lambda: float = 20.0
    picard_tol: float = 1e-3
    picard_max_iter: int = 12
    coupling_runs: int = 3000
    coupling_delta: float = 1e-2
    coupling_dt_list: tuple = (1e-2, 1e-3, 1e-4)
    harnack_n: int = 12000
    harnack_p_grid: tuple = (2.0, 4.0)
    metrics_k: float = 2.0
    moment_n_rep: int = 2000
    stability_n: int = 10000

    def __post_init__(self):
        if self.n_steps < 1 or self.n_particles < 1:
            raise ConfigError("grid.n_steps and ensemble.n must be positive")
        if not self.t1 > self.t0:
            raise ConfigError("grid.t1 must exceed grid.t0")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0")
        if not 1 <= self.resolution <= 4096:
            raise ConfigError("histogram.resolution out of range [1, 4096]")
        for p in self.harnack_p_grid:
            if not 1.0 < p:
                raise ConfigError("harnack.p_grid entries must exceed 1")
        if not 1.0 <= self.metrics_k <= 4.0:
            # higher moments are noise-dominated at desk-scale sample sizes
            raise ConfigError("metrics.k must lie in [1, 4]")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.n_steps


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate the flat key-value format; unknown keys raise."""
    values = {}
    model_params = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key in KNOWN_KEYS:
            attr, parser = KNOWN_KEYS[key]
            try:
                values[attr] = parser(val)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"key {key!r}: cannot parse {val!r} ({exc})") from None
        elif key.startswith("model.") and key.count(".") == 1:
            pname = key.split(".", 1)[1]
            try:
                model_params[pname] = float(val)
            except ValueError:
                model_params[pname] = val
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    try:
        return ExperimentConfig(model_params=model_params, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
