"""Run configuration: the `key = value` config-file dialect plus defaults
and validation shared by the command-line front end."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import UsageError

_MODEL_KEYS = ("n", "f", "g", "sigma_bar", "sigma_tilde", "c", "gamma")


def parse_config_file(path: str) -> dict:
    """Read a UTF-8 `key = value` file with `#` comments into a dict of
    strings."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            key = key.strip()
            value = value.strip()
            if not key:
                raise UsageError(f"{path}:{lineno}: empty key")
            out[key] = value
    return out


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"cannot read boolean from {value!r}")


def _as_float_list(value):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(",") if v.strip()]


def _as_int_list(value):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(v) for v in str(value).split(",") if v.strip()]


@dataclass
class RunConfig:
    """Everything a subcommand needs: model keys, numeric controls,
    selectors, and output options."""

    # model
    n: int = 3
    f: str | None = None
    g: str | None = None
    sigma_bar: float | None = None
    sigma_tilde: float | None = None
    c: float = 1e-3
    gamma: float = 1.0
    # numeric controls
    grid_n: int = 2048
    k_max: int = 64
    tol: float = 1e-10
    dt: float | None = None
    t_end: float = 50.0
    r_max: float = 32.0
    n_steps: int = 4096
    window: float = 0.4
    method: str = "backward_euler"
    strict: bool = False
    seed: int = 12345
    threads: int | None = None
    # selectors
    k: int | None = None
    k_list: list[int] | None = None
    c_list: list[float] | None = None
    gamma_list: list[float] | None = None
    R0: float | None = None
    sim_grid_n: int = 256
    # output
    out_dir: str = "."
    write_csv: bool = True
    write_json: bool = True

    def __post_init__(self):
        for name in ("tol",):
            if getattr(self, name) is not None and getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive")
        if self.dt is not None and self.dt <= 0:
            raise UsageError("dt must be positive")
        if not (64 <= self.grid_n <= 8192 and (self.grid_n & (self.grid_n - 1)) == 0):
            raise UsageError("grid_n must be a power of two between 64 and 8192")
        if self.threads is None:
            env = os.environ.get("FBSTAB_THREADS")
            self.threads = max(1, int(env)) if env else 1

    def model_mapping(self) -> dict:
        missing = [k for k in ("f", "g", "sigma_bar") if getattr(self, k) is None]
        if missing:
            raise UsageError(f"config missing model keys: {', '.join(missing)}")
        return {k: getattr(self, k) for k in _MODEL_KEYS}


_CASTS = {
    int: int,
    float: float,
    str: str,
    bool: _as_bool,
}


def config_from_sources(file_map: dict | None, overrides: dict) -> RunConfig:
    """Merge a parsed config file with CLI overrides (overrides win)."""
    merged: dict = {}
    known = {f.name: f for f in fields(RunConfig)}
    for source in (file_map or {}), overrides:
        for key, value in source.items():
            if value is None:
                continue
            if key not in known:
                raise UsageError(f"unknown config key {key!r}")
            merged[key] = value
    coerced = {}
    for key, value in merged.items():
        ftype = known[key].type
        try:
            if key in ("k_list",):
                coerced[key] = _as_int_list(value)
            elif key in ("c_list", "gamma_list"):
                coerced[key] = _as_float_list(value)
            elif ftype.startswith("int"):
                coerced[key] = int(value)
            elif ftype.startswith("float"):
                coerced[key] = float(value)
            elif ftype.startswith("bool"):
                coerced[key] = _as_bool(value)
            else:
                coerced[key] = value
        except ValueError as exc:
            raise UsageError(f"bad value for {key!r}: {value!r}") from exc
    return RunConfig(**coerced)
