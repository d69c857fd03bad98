"""Run configuration: one JSON document describing a single evaluation or a scan.

Example::

    {
      "model": {"variant": "scalar3d", "L": 3.14159},
      "state": {"xi": 8.0, "ell": 1.0},
      "scheme": {"kind": "sign", "reference": "zero"},
      "query": {"s1": -1, "s2": 1, "t1": 0.0, "t2": 2.0},
      "time_unit": "inv_ell",
      "scan": {"x": {"parameter": "ellL", "min": 0.5, "max": 5, "n": 60},
               "y": {"parameter": "ellT2", "min": 0, "max": 10, "n": 100}}
    }

Omitted sections take their defaults.  Unknown keys are rejected.  Query
times are read in ``time_unit`` (``natural``, ``inv_ell`` = units of 1/ell,
or ``L``); everything else is in natural units.
"""

import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Optional, Tuple

from .errors import ConfigError
from .kernels import FieldModel, StateSpec
from .quasiprob import QuadratureConfig, QuasiProbQuery, SignThreshold, WindowBand

__all__ = ["AxisSpec", "OutputSpec", "RunConfig", "load_config", "parse_config"]

TIME_UNITS = ("natural", "inv_ell", "L")
AXIS_PARAMETERS = ("ellL", "ellT2", "xi", "r", "wL", "t2_over_L", "theta")


@dataclass(frozen=True)
class AxisSpec:
    parameter: str
    min: float
    max: float
    n: int
    scale: str = "linear"

    def __post_init__(self):
        if self.parameter not in AXIS_PARAMETERS:
            raise ValueError(f"unknown axis parameter {self.parameter!r}")
        if not (math.isfinite(self.min) and math.isfinite(self.max) and self.min < self.max):
            raise ValueError("need finite min < max")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        object.__setattr__(self, "n", int(self.n))
        if self.scale != "linear":
            raise ValueError("only linear axes are supported")

    def values(self):
        step = (self.max - self.min) / (self.n - 1)
        return [self.min + i * step for i in range(self.n - 1)] + [float(self.max)]


@dataclass(frozen=True)
class OutputSpec:
    format: str = "json"
    path: Optional[str] = None

    def __post_init__(self):
        if self.format not in ("json", "csv"):
            raise ValueError("format must be 'json' or 'csv'")


@dataclass(frozen=True)
class RunConfig:
    model: FieldModel
    state: StateSpec = StateSpec()
    scheme: object = SignThreshold()
    query: QuasiProbQuery = QuasiProbQuery(1, 1, 0.0, 1.0)
    time_unit: str = "natural"
    quadrature: QuadratureConfig = QuadratureConfig()
    output: OutputSpec = OutputSpec()
    scan: Optional[Tuple[AxisSpec, AxisSpec]] = None

    @property
    def time_scale(self):
        """Natural time corresponding to one configured time unit."""
        if self.time_unit == "inv_ell":
            return 1.0 / self.state.ell
        if self.time_unit == "L":
            return self.model.L
        return 1.0

    def physical_query(self):
        s = self.time_scale
        q = self.query
        return QuasiProbQuery(q.s1, q.s2, q.t1 * s, q.t2 * s)

    def with_natural_t2(self, t2):
        return replace(self, query=replace(self.query, t2=t2 / self.time_scale))

    def to_dict(self):
        if isinstance(self.scheme, WindowBand):
            scheme = {"kind": "window", "w": self.scheme.w}
        else:
            ref = self.scheme.reference
            scheme = {"kind": "sign", "reference": ref if isinstance(ref, str) else list(ref)}
        quad = asdict(self.quadrature)
        quad["engine"] = self.quadrature.engine.value
        out = {
            "model": {"variant": self.model.variant.value, "L": self.model.L},
            "state": asdict(self.state),
            "scheme": scheme,
            "query": asdict(self.query),
            "time_unit": self.time_unit,
            "quadrature": quad,
            "output": asdict(self.output),
        }
        if self.scan is not None:
            out["scan"] = {"x": asdict(self.scan[0]), "y": asdict(self.scan[1])}
        return out


def _section(doc, name, allowed, required=()):
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be an object")
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown key")
    for key in required:
        if key not in sec:
            raise ConfigError(f"{name}.{key}", "required")
    return sec


def _build(path, ctor, kwargs):
    try:
        return ctor(**kwargs)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        # validators lead with the field name when one field is at fault
        head = msg.split(" ", 1)[0]
        raise ConfigError(f"{path}.{head}" if head in kwargs else path, msg) from None


def _axis(path, spec):
    if not isinstance(spec, dict):
        raise ConfigError(path, "must be an object")
    for key in spec:
        if key not in ("parameter", "min", "max", "n", "scale"):
            raise ConfigError(f"{path}.{key}", "unknown key")
    for key in ("parameter", "min", "max", "n"):
        if key not in spec:
            raise ConfigError(f"{path}.{key}", "required")
    return _build(path, AxisSpec, dict(spec))


def parse_config(doc):
    """Validate a decoded JSON document and build a :class:`RunConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    top = ("model", "state", "scheme", "query", "time_unit", "quadrature", "output", "scan")
    for key in doc:
        if key not in top:
            raise ConfigError(key, "unknown key")

    m = _section(doc, "model", ("variant", "L"), required=("variant", "L"))
    model = _build("model", FieldModel, dict(m))

    st = _section(doc, "state", ("xi", "ell", "alpha", "r", "theta"))
    state = _build("state", StateSpec, dict(st))

    sc = _section(doc, "scheme", ("kind", "reference", "w"))
    kind = sc.get("kind", "sign")
    if kind == "sign":
        if "w" in sc:
            raise ConfigError("scheme.w", "only valid for kind 'window'")
        ref = sc.get("reference", "zero")
        if isinstance(ref, list):
            ref = tuple(ref)
        try:
            scheme = SignThreshold(ref)
        except (TypeError, ValueError) as exc:
            raise ConfigError("scheme.reference", str(exc)) from None
    elif kind == "window":
        if "reference" in sc:
            raise ConfigError("scheme.reference", "only valid for kind 'sign'")
        if "w" not in sc:
            raise ConfigError("scheme.w", "required")
        try:
            scheme = WindowBand(sc["w"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("scheme.w", str(exc)) from None
    else:
        raise ConfigError("scheme.kind", "must be 'sign' or 'window'")

    qd = _section(doc, "query", ("s1", "s2", "t1", "t2"))
    qargs = {"s1": 1, "s2": 1, "t1": 0.0, "t2": 1.0, **qd}
    for key in ("t1", "t2"):
        v = qargs[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise ConfigError(f"query.{key}", "must be a finite real >= 0")
    query = _build("query", QuasiProbQuery, qargs)

    time_unit = doc.get("time_unit", "natural")
    if time_unit not in TIME_UNITS:
        raise ConfigError("time_unit", f"must be one of {', '.join(TIME_UNITS)}")

    qc = _section(doc, "quadrature", tuple(QuadratureConfig.__dataclass_fields__))
    quadrature = _build("quadrature", QuadratureConfig, dict(qc))

    oc = _section(doc, "output", ("format", "path"))
    output = _build("output", OutputSpec, dict(oc))

    scan = None
    if "scan" in doc:
        sd = _section(doc, "scan", ("x", "y"), required=("x", "y"))
        scan = (_axis("scan.x", sd["x"]), _axis("scan.y", sd["y"]))
        if scan[0].parameter == scan[1].parameter:
            raise ConfigError("scan.y.parameter", "axes must bind distinct parameters")

    return RunConfig(model, state, scheme, query, time_unit, quadrature, output, scan)


def load_config(source):
    """Read a config from a path, or from an open text stream."""
    try:
        if hasattr(source, "read"):
            doc = json.load(source)
        else:
            with open(source) as fh:
                doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", str(exc)) from None
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    return parse_config(doc)
