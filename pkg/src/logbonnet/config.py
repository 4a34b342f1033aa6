"""JSON run configuration: parsing, validation and serialization.

Layout::

    {
      "surface": {"kind": "sphere" | "torus", "tau": [re, im], "base_metric": "round" | "flat",
                  "punctures": [{"location": "0" | "inf" | [x, y],
                                 "profile": {"alpha": .., "betas": [..], "smooth": {..}}
                                   or "sks": {"variant": "A" | "B", "c": .., "n": .., ...},
                                 "blend": {"r0": .., "r1": ..} | "none",
                                 "chart_radius": ..}]},
      "quadrature": {"rel_tol": .., "abs_tol": .., "max_evaluations": .., "ladder_eps0": ..,
                     "ladder_count": .., "split_factor": .., "refinement": ..},
      "output": {"report_path": .., "csv_dir": .., "precision_digits": ..}
    }

Omitting ``blend`` selects the default bump ``(0.4 rho, 0.9 rho)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from importlib import resources

import jsonschema

from . import quad
from .errors import ValidationError
from .metric import SingularProfile
from .sks import SKModel, sks_profile
from .surface import PunctureSpec, SurfaceSpec
from .terms import Bump


def load_schema():
    text = resources.files("logbonnet").joinpath("schema/run_config.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = quad.DEFAULT_REL_TOL
    abs_tol: float = quad.DEFAULT_ABS_TOL
    max_evaluations: int = quad.DEFAULT_MAX_EVALUATIONS
    ladder_eps0: float = 0.05
    ladder_count: int = 12
    split_factor: float = 1.0
    refinement: int = 0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValidationError("tolerances must be positive")
        if self.max_evaluations < 15:
            raise ValidationError("max_evaluations must allow at least one panel")
        if self.ladder_count < 3:
            raise ValidationError("ladder_count must be at least 3")
        if not 0 < self.ladder_eps0 < 1:
            raise ValidationError("ladder_eps0 must lie in (0, 1)")
        if not self.split_factor > 0:
            raise ValidationError("split_factor must be positive")
        if self.refinement < 0:
            raise ValidationError("refinement must be non-negative")


@dataclass(frozen=True)
class OutputConfig:
    report_path: str | None = None
    csv_dir: str | None = None
    precision_digits: int = 12

    def __post_init__(self):
        if not 1 <= self.precision_digits <= 17:
            raise ValidationError("precision_digits must lie in [1, 17]")


@dataclass(frozen=True)
class RunConfig:
    surface: SurfaceSpec
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, d):
        try:
            jsonschema.validate(d, load_schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ValidationError(f"config invalid at {where}: {exc.message}") from None
        surface = d["surface"]
        kind = surface.get("kind", "sphere")
        spec = SurfaceSpec(
            kind=kind,
            tau=tuple(surface.get("tau", (0.0, 1.0))),
            base_metric=surface.get("base_metric", "round" if kind == "sphere" else "flat"),
            punctures=tuple(_puncture_from_dict(p) for p in surface.get("punctures", ())),
        )
        return cls(
            spec,
            _section(QuadratureConfig, d.get("quadrature", {})),
            _section(OutputConfig, d.get("output", {})),
        )

    def to_dict(self):
        s = self.surface
        surface = {"kind": s.kind}
        if s.kind == "torus":
            surface["tau"] = list(s.tau)
        surface["base_metric"] = s.base_metric
        surface["punctures"] = [_puncture_to_dict(p) for p in s.punctures]
        return {"surface": surface, "quadrature": asdict(self.quadrature), "output": asdict(self.output)}

    def with_overrides(self, **quadrature):
        """Copy with selected quadrature fields replaced (``None`` values ignored)."""
        values = asdict(self.quadrature)
        values.update({k: v for k, v in quadrature.items() if v is not None})
        return RunConfig(self.surface, QuadratureConfig(**values), self.output)

    def with_output(self, **output):
        values = asdict(self.output)
        values.update({k: v for k, v in output.items() if v is not None})
        return RunConfig(self.surface, self.quadrature, OutputConfig(**values))


def _section(cls, d):
    names = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in d.items() if k in names})


def _puncture_from_dict(d):
    location = d["location"]
    if isinstance(location, list):
        location = tuple(float(x) for x in location)
    model = None
    if "sks" in d:
        model = SKModel.from_dict(d["sks"])
        profile = sks_profile(model)
    else:
        profile = SingularProfile.from_dict(d["profile"])
    blend = d.get("blend")
    if isinstance(blend, dict):
        blend = Bump(float(blend["r0"]), float(blend["r1"]))
    return PunctureSpec(location, profile, blend, d.get("chart_radius"), model)


def _puncture_to_dict(p):
    location = list(p.location) if isinstance(p.location, tuple) else p.location
    d = {"location": location}
    if p.sks is not None:
        d["sks"] = p.sks.to_dict()
    else:
        d["profile"] = p.profile.to_dict()
    if isinstance(p.blend, Bump):
        d["blend"] = {"r0": p.blend.r0, "r1": p.blend.r1}
    elif p.blend == "none":
        d["blend"] = "none"
    if p.chart_radius is not None:
        d["chart_radius"] = p.chart_radius
    return d


def load_config(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    return RunConfig.from_dict(data)


def round_floats(obj, digits):
    """Round every float in a JSON-like structure to ``digits`` significant digits."""
    if isinstance(obj, float):
        if not math.isfinite(obj) or obj == 0.0:
            return obj
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    return obj
