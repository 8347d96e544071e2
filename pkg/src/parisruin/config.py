"""Run configuration: one JSON document with five blocks.

.. code-block:: json

    {
      "model":   {"preset": "cl-default"},
      "numeric": {"lambda_tol": 1e-8, "talbot_nodes": 24, "dt": null},
      "query":   {"x": [1.0], "b": [3.0], "q": [0.1], "lam": [0.5], "r": [1.0]},
      "sim":     {"n_paths": 100000, "seed": 42, "horizon": 400.0},
      "output":  {"format": "csv", "path": null}
    }

A model is either ``{"preset": name}`` or ``{"mu": .., "sigma": .., "jumps":
{..}}``. In the query block ``b`` accepts ``"inf"`` and ``lam`` accepts
``"phi"`` (the right inverse ``Phi(q)`` of the row). Unknown keys are errors.
Command-line flags override values read from a file.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .lambda_kernel import QuadratureConfig
from .levy_model import LevyModel, preset

__all__ = ["ModelBlock", "NumericBlock", "QueryBlock", "SimBlock", "OutputBlock",
           "RunConfig", "load_config"]


def _reject_unknown(name: str, data: dict, cls) -> None:
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown keys in {name} block: {sorted(unknown)}")


@dataclass(frozen=True)
class ModelBlock:
    preset: str | None = "cl-default"
    mu: float | None = None
    sigma: float | None = None
    jumps: dict | None = None

    @classmethod
    def from_dict(cls, d: dict) -> ModelBlock:
        _reject_unknown("model", d, cls)
        if "preset" in d and len(d) > 1:
            raise ValueError("model block: give either a preset or explicit parameters")
        if "preset" in d:
            blk = cls(preset=d["preset"])
        else:
            blk = cls(preset=None, mu=float(d["mu"]), sigma=float(d.get("sigma", 0.0)),
                      jumps=dict(d.get("jumps", {"kind": "none"})))
        blk.build()
        return blk

    def build(self) -> LevyModel:
        if self.preset is not None:
            return preset(self.preset)
        return LevyModel.from_dict({"mu": self.mu, "sigma": self.sigma, "jumps": self.jumps})

    def to_dict(self) -> dict:
        if self.preset is not None:
            return {"preset": self.preset}
        return self.build().to_dict()


@dataclass(frozen=True)
class NumericBlock:
    lambda_tol: float = 1e-8
    z_max: float = 1e4
    safety: float = 10.0
    z_order: int = 32
    z_panels: int = 4
    s_order: int = 16
    s_panels: int = 4
    talbot_nodes: int = 24
    euler_nodes: int = 18
    root_tol: float = 1e-12
    dt: float | None = None

    @classmethod
    def from_dict(cls, d: dict) -> NumericBlock:
        _reject_unknown("numeric", d, cls)
        blk = cls(**d)
        blk.quadrature()
        return blk

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(lambda_tol=self.lambda_tol, safety=self.safety, z_max=self.z_max,
                                z_order=self.z_order, z_panels=self.z_panels,
                                s_order=self.s_order, s_panels=self.s_panels)

    def to_dict(self) -> dict:
        return asdict(self)


def _float_or_inf(v) -> float:
    if isinstance(v, str):
        if v.lower() in ("inf", "infinity"):
            return math.inf
        raise ValueError(f"expected a number or 'inf', got {v!r}")
    return float(v)


def _lam_value(v):
    if isinstance(v, str):
        if v.lower() == "phi":
            return "phi"
        raise ValueError(f"expected a number or 'phi', got {v!r}")
    return float(v)


@dataclass(frozen=True)
class QueryBlock:
    x: tuple = (1.0,)
    b: tuple = (3.0,)
    q: tuple = (0.1,)
    lam: tuple = (0.0,)
    r: tuple = (1.0,)
    y: tuple = ()

    @classmethod
    def from_dict(cls, d: dict) -> QueryBlock:
        _reject_unknown("query", d, cls)

        def seq(key, conv, default):
            v = d.get(key, default)
            v = v if isinstance(v, (list, tuple)) else [v]
            return tuple(conv(e) for e in v)

        dflt = cls()
        return cls(x=seq("x", float, dflt.x), b=seq("b", _float_or_inf, dflt.b),
                   q=seq("q", float, dflt.q), lam=seq("lam", _lam_value, dflt.lam),
                   r=seq("r", float, dflt.r), y=seq("y", float, dflt.y))

    def to_dict(self) -> dict:
        def enc(v):
            return "inf" if isinstance(v, float) and math.isinf(v) else v
        return {"x": list(self.x), "b": [enc(v) for v in self.b], "q": list(self.q),
                "lam": list(self.lam), "r": list(self.r), "y": list(self.y)}


@dataclass(frozen=True)
class SimBlock:
    n_paths: int = 100_000
    seed: int = 42
    horizon: float = 400.0
    block_size: int = 8192

    @classmethod
    def from_dict(cls, d: dict) -> SimBlock:
        _reject_unknown("sim", d, cls)
        d = dict(d)
        if "n_paths" in d:
            d["n_paths"] = int(float(d["n_paths"]))
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OutputBlock:
    format: str = "csv"
    path: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> OutputBlock:
        _reject_unknown("output", d, cls)
        blk = cls(**d)
        if blk.format not in ("csv", "json"):
            raise ValueError("output format must be 'csv' or 'json'")
        return blk

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RunConfig:
    model: ModelBlock = field(default_factory=ModelBlock)
    numeric: NumericBlock = field(default_factory=NumericBlock)
    query: QueryBlock = field(default_factory=QueryBlock)
    sim: SimBlock = field(default_factory=SimBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        _reject_unknown("top-level", d, cls)
        parts = {"model": ModelBlock, "numeric": NumericBlock, "query": QueryBlock,
                 "sim": SimBlock, "output": OutputBlock}
        return cls(**{k: parts[k].from_dict(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "numeric": self.numeric.to_dict(),
                "query": self.query.to_dict(), "sim": self.sim.to_dict(),
                "output": self.output.to_dict()}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> RunConfig:
        return cls.from_dict(json.loads(text))


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        return RunConfig.loads(fh.read())
