"""Experiment configuration: a flat INI file plus CLI/env overrides.

Layout:

    [experiment]
    kind = dimred3d          ; one of KINDS
    out = out/dimred
    seed = 7
    emit_plots = false
    threads = 1

    [params]                 ; numeric parameters of the chosen kind
    omega_list = 4,16,64
    t_final = 0.5

    [sweep]                  ; optional; `sweep` runs the Cartesian product
    coupling = 0.0, 6.2831853071795862

Precedence: CLI flags > BECLAB_* environment variables > file values.
Configs round-trip through ``to_text``/``parse_text`` bit-exactly.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "parse_text", "parse_file"]


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


def _float_list(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


# per-kind parameter schema: name -> (parser, default)
_COMMON_GRID = {
    "n": (int, 64),
    "L": (float, 8.0),
    "dt": (float, 1e-3),
}
SCHEMAS: dict[str, dict] = {
    "scaling-table": {
        "beta_min": (float, 0.004),
        "beta_max": (float, 0.396),
        "points": (int, 1000),
        "eps": (float, 0.1),
        "N": (int, 0),
        "omega": (float, 0.0),
    },
    "nls2d": {
        **_COMMON_GRID,
        "t_final": (float, 0.5),
        "coupling": (float, 6.283185307179586),
        "profile_width": (float, 1.0),
        "sample_every": (int, 50),
        "snapshot": (lambda s: s.lower() in ("1", "true", "yes"), False),
    },
    "dimred3d": {
        **_COMMON_GRID,
        "omega_list": (_float_list, (4.0, 16.0, 64.0)),
        "t_final": (float, 0.5),
        "coupling": (float, 6.283185307179586),
        "modes": (int, 8),
    },
    "manybody": {
        "n": (int, 8),
        "L": (float, 4.0),
        "dt": (float, 1e-3),
        "N": (int, 2),
        "modes": (int, 4),
        "omega": (float, 4.0),
        "beta": (float, 0.2),
        "g": (float, 1.0),
        "sigma": (float, 1.0),
        "t_final": (float, 0.25),
        "sample_every": (int, 50),
        "initial": (str, "product"),
        "snapshot": (lambda s: s.lower() in ("1", "true", "yes"), False),
    },
    "sobolev-sharpness": {
        "omega_list": (_float_list, (4.0, 16.0, 64.0, 256.0)),
        "bump_width": (float, 2.0),
        "n": (int, 64),
        "L": (float, 8.0),
    },
    "mollifier-rate": {
        "kappa": (float, 0.4),
        "alphas": (_float_list, (0.5, 0.7, 1.0, 1.4, 2.0)),
        "n_xy": (int, 48),
        "n_z": (int, 48),
    },
    "hierarchy-residual": {
        "family": (str, "bbgky"),
        "n": (int, 8),
        "L": (float, 4.0),
        "dt": (float, 1e-3),
        "N": (int, 2),
        "modes": (int, 4),
        "omega": (float, 4.0),
        "beta": (float, 0.2),
        "g": (float, 1.0),
        "sigma": (float, 1.0),
        "coupling": (float, 6.283185307179586),
        "t_center": (float, 0.05),
        "orders": (lambda s: tuple(int(t) for t in s.split(",")), (1, 2)),
        "refine": (lambda s: s.lower() in ("1", "true", "yes"), True),
    },
}
KINDS = tuple(SCHEMAS)

_VALID_INITIAL = ("product", "saturating")


@dataclass
class ExperimentConfig:
    kind: str
    out_dir: str = "out"
    seed: int = 0
    emit_plots: bool = False
    threads: int = 1
    params: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise ConfigError(f"experiment.kind: unknown kind {self.kind!r}; choose from {KINDS}")
        schema = SCHEMAS[self.kind]
        merged = {}
        for name, (parse, default) in schema.items():
            raw = self.params.get(name, default)
            if isinstance(raw, str):
                try:
                    raw = parse(raw)
                except Exception as exc:
                    raise ConfigError(f"params.{name}: cannot parse {raw!r} ({exc})") from exc
            merged[name] = raw
        unknown = set(self.params) - set(schema)
        if unknown:
            raise ConfigError(f"params: unknown fields for kind {self.kind!r}: {sorted(unknown)}")
        self.params = merged
        self._validate()
        for key in self.sweep:
            if key not in schema:
                raise ConfigError(f"sweep.{key}: not a parameter of kind {self.kind!r}")
        if self.threads < 1:
            raise ConfigError("experiment.threads: must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("experiment.seed: must fit in an unsigned 64-bit integer")

    def _validate(self):
        p = self.params
        kind = self.kind

        def positive(*names):
            for name in names:
                if name in p and not p[name] > 0:
                    raise ConfigError(f"params.{name}: must be positive, got {p[name]}")

        positive("dt", "t_final", "L", "sigma", "bump_width", "kappa", "t_center")
        if "n" in p and p["n"] < 4:
            raise ConfigError("params.n: grid must have at least 4 points per axis")
        if "modes" in p and p["modes"] < 1:
            raise ConfigError("params.modes: need at least one Hermite mode")
        if "coupling" in p and p["coupling"] < 0:
            raise ConfigError("params.coupling: defocusing regime requires coupling >= 0")
        if "beta" in p and not 0 < p["beta"] < 0.4:
            raise ConfigError(f"params.beta: must lie in (0, 2/5), got {p['beta']}")
        if "omega" in p and kind != "scaling-table" and p["omega"] < 1:
            raise ConfigError("params.omega: must be >= 1")
        if "omega_list" in p:
            ol = p["omega_list"]
            if not ol or any(b <= a for a, b in zip(ol, ol[1:])):
                raise ConfigError("params.omega_list: must be nonempty and strictly increasing")
        if kind == "scaling-table":
            if not 0 < p["beta_min"] < p["beta_max"] < 0.4:
                raise ConfigError("params.beta_min/beta_max: need 0 < beta_min < beta_max < 2/5")
            if p["points"] < 2:
                raise ConfigError("params.points: need at least 2 grid points")
        if kind == "manybody":
            if not 1 <= p["N"] <= 3:
                raise ConfigError("params.N: particle number must be 1, 2 or 3")
            if p["N"] == 3 and (p["n"] > 6 or p["modes"] > 3):
                raise ConfigError(
                    "params.N: three-body runs are gated behind n <= 6 and modes <= 3 "
                    "(the state grows like (n^2 modes)^N)"
                )
            if p["initial"] not in _VALID_INITIAL:
                raise ConfigError(f"params.initial: choose from {_VALID_INITIAL}")
        if kind == "mollifier-rate":
            if not 0 < p["kappa"] < 0.5:
                raise ConfigError("params.kappa: comparison rate requires kappa in (0, 1/2)")
            if len(p["alphas"]) < 2:
                raise ConfigError("params.alphas: need at least two widths")
        if kind == "hierarchy-residual":
            if p["family"] not in ("bbgky", "gp2d"):
                raise ConfigError("params.family: choose bbgky or gp2d")
            if any(k < 1 for k in p["orders"]):
                raise ConfigError("params.orders: hierarchy orders must be >= 1")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        params = dict(self.params)
        top = {}
        for key, value in kw.items():
            if value is None:
                continue
            if key in ("kind", "out_dir", "seed", "emit_plots", "threads"):
                top[key] = value
            else:
                params[key] = value
        return ExperimentConfig(
            kind=top.get("kind", self.kind),
            out_dir=top.get("out_dir", self.out_dir),
            seed=top.get("seed", self.seed),
            emit_plots=top.get("emit_plots", self.emit_plots),
            threads=top.get("threads", self.threads),
            params=params,
            sweep=dict(self.sweep),
        )

    def to_text(self) -> str:
        def fmt(v):
            if isinstance(v, bool):
                return str(v).lower()
            if isinstance(v, float):
                return repr(v)
            if isinstance(v, tuple):
                return ",".join(fmt(x) for x in v)
            return str(v)

        out = io.StringIO()
        out.write("[experiment]\n")
        out.write(f"kind = {self.kind}\n")
        out.write(f"out = {self.out_dir}\n")
        out.write(f"seed = {self.seed}\n")
        out.write(f"emit_plots = {fmt(self.emit_plots)}\n")
        out.write(f"threads = {self.threads}\n\n[params]\n")
        for key in sorted(self.params):
            out.write(f"{key} = {fmt(self.params[key])}\n")
        if self.sweep:
            out.write("\n[sweep]\n")
            for key in sorted(self.sweep):
                out.write(f"{key} = {fmt(tuple(self.sweep[key]))}\n")
        return out.getvalue()


def parse_text(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # parameter names are case-sensitive (L vs l)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    if "experiment" not in cp:
        raise ConfigError("config: missing [experiment] section")
    exp = cp["experiment"]
    kind = exp.get("kind")
    if not kind:
        raise ConfigError("experiment.kind: required")
    try:
        seed = int(exp.get("seed", "0"))
        threads = int(exp.get("threads", "1"))
        emit = exp.get("emit_plots", "false").lower() in ("1", "true", "yes")
    except ValueError as exc:
        raise ConfigError(f"experiment section: {exc}") from exc
    params = dict(cp["params"]) if "params" in cp else {}
    sweep = {}
    if "sweep" in cp:
        for key, val in cp["sweep"].items():
            sweep[key] = tuple(t.strip() for t in val.split(",") if t.strip())
    return ExperimentConfig(
        kind=kind,
        out_dir=exp.get("out", "out"),
        seed=seed,
        emit_plots=emit,
        threads=threads,
        params=params,
        sweep=sweep,
    )


def parse_file(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_text(fh.read())
