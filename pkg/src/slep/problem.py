"""Problem statement: coefficients, boundary angle, potential and numerical settings.

The problem is

    -y'' + q(x) y = lam y  on [0, 1],
    y(0) cos(beta) = y'(0) sin(beta),
    (a lam + b) y(1) = (c lam + d) y'(1),

with ad - bc < 0 and ac != 0.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import NoData, ValidationError
from .qparser import PotentialSpec, parse_potential, read_table_csv


@dataclass(frozen=True)
class ToleranceSet:
    """Numerical thresholds.  ``mult_tol`` and ``zero_tol`` are relative."""

    ode_tol: float = 1e-12
    root_tol: float = 1e-11
    mult_tol: float = 1e-6
    zero_tol: float = 1e-8
    ip_tol: float = 1e-8

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError([("ToleranceRange", f"{name} must be a positive finite number, got {value!r}")])


class Criticality(str, enum.Enum):
    """Whether an eigenvalue sits at the pole -d/c of the boundary coefficient ratio."""

    REGULAR = "regular"
    CRITICAL = "critical"


@dataclass(frozen=True)
class ProblemSpec:
    a: float
    b: float
    c: float
    d: float
    beta: float
    potential: PotentialSpec
    scale: float = 1.0
    grid_points: int = 1025
    tolerances: ToleranceSet = field(default_factory=ToleranceSet)

    @property
    def det(self):
        """The determinant ad - bc (negative for a valid problem)."""
        return self.a * self.d - self.b * self.c

    @property
    def critical_value(self):
        """The value -d/c at which c lam + d vanishes."""
        return -self.d / self.c

    @property
    def initial_data(self):
        """(y(0), y'(0)) of the shooting solution."""
        return self.scale * math.sin(self.beta), self.scale * math.cos(self.beta)

    def with_scale(self, scale):
        return validate_problem(replace(self, scale=scale))


def validate_problem(raw):
    """Return a validated :class:`ProblemSpec`.

    ``raw`` may be a ProblemSpec or a mapping with keys ``a b c d beta q``
    and optionally ``scale grid_points tolerances``.  Every violated
    invariant is reported in one :class:`ValidationError`.
    """
    if isinstance(raw, ProblemSpec):
        fields = asdict_shallow(raw)
    else:
        fields = _from_mapping(raw)

    problems = []
    coeffs = {}
    for name in ("a", "b", "c", "d", "beta", "scale"):
        value = fields.get(name)
        try:
            value = float(value)
        except (TypeError, ValueError):
            problems.append(("MissingField" if value is None else "NotANumber", f"{name} = {value!r}"))
            continue
        if not math.isfinite(value):
            problems.append(("NotANumber", f"{name} must be finite"))
            continue
        coeffs[name] = value

    if {"a", "b", "c", "d"} <= coeffs.keys():
        a, b, c, d = (coeffs[k] for k in "abcd")
        if a * d - b * c >= 0:
            problems.append(("DeterminantSign", f"ad - bc = {a * d - b * c!r} must be negative"))
        if a * c == 0:
            problems.append(("DegenerateCoefficient", "a*c must be nonzero"))
    if "beta" in coeffs and not (0.0 <= coeffs["beta"] < math.pi):
        problems.append(("BetaRange", f"beta = {coeffs['beta']!r} must lie in [0, pi)"))
    if "scale" in coeffs and coeffs["scale"] <= 0:
        problems.append(("ScaleRange", f"scale = {coeffs['scale']!r} must be positive"))

    grid = fields.get("grid_points", 1025)
    if isinstance(grid, float) and grid.is_integer():
        grid = int(grid)
    if not isinstance(grid, int) or isinstance(grid, bool) or grid < 257 or grid % 2 == 0:
        problems.append(("GridTooCoarse", f"grid_points = {grid!r} must be an odd integer >= 257"))

    potential = fields.get("potential")
    if not isinstance(potential, PotentialSpec):
        problems.append(("MissingField", "potential"))

    tolerances = fields.get("tolerances")
    if not isinstance(tolerances, ToleranceSet):
        problems.append(("MissingField", "tolerances"))

    if problems:
        raise ValidationError(problems)
    return ProblemSpec(
        a=coeffs["a"],
        b=coeffs["b"],
        c=coeffs["c"],
        d=coeffs["d"],
        beta=coeffs["beta"],
        potential=potential,
        scale=coeffs["scale"],
        grid_points=grid,
        tolerances=tolerances,
    )


def asdict_shallow(spec):
    return {name: getattr(spec, name) for name in spec.__dataclass_fields__}


def _from_mapping(raw):
    fields = dict(raw)
    fields.setdefault("scale", 1.0)
    q = fields.pop("q", fields.get("potential", "0"))
    if isinstance(q, str):
        fields["potential"] = parse_potential(q)
    elif isinstance(q, dict) and "table" in q:
        fields["potential"] = read_table_csv(q["table"])
    elif isinstance(q, PotentialSpec):
        fields["potential"] = q
    tol = fields.get("tolerances", {})
    if isinstance(tol, dict):
        unknown = set(tol) - set(ToleranceSet.__dataclass_fields__)
        if unknown:
            raise ValidationError([("UnknownTolerance", ", ".join(sorted(unknown)))])
        fields["tolerances"] = ToleranceSet(**tol)
    return fields


def make_problem(a, b, c, d, beta=math.pi / 2, q="0", scale=1.0, grid_points=1025, **tolerances):
    """Convenience constructor that validates immediately."""
    return validate_problem(
        dict(a=a, b=b, c=c, d=d, beta=beta, q=q, scale=scale, grid_points=grid_points, tolerances=tolerances)
    )


def load_problem(path):
    """Read a JSON problem file.  A ``q`` of the form ``{"table": "file.csv"}``
    is resolved relative to the JSON file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise NoData(f"config file not found: {path}") from exc
    if isinstance(raw.get("q"), dict) and "table" in raw["q"]:
        raw["q"] = {"table": str(path.parent / raw["q"]["table"])}
    return validate_problem(raw)


def problem_to_dict(spec):
    """JSON-ready description of ``spec`` (potential given as text)."""
    return {
        "a": spec.a,
        "b": spec.b,
        "c": spec.c,
        "d": spec.d,
        "beta": spec.beta,
        "q": spec.potential.text() if not spec.potential.is_table else spec.potential.text(),
        "scale": spec.scale,
        "grid_points": spec.grid_points,
        "tolerances": asdict(spec.tolerances),
    }


def classify_criticality(lam, spec):
    """Tag ``lam`` as critical when ``|c lam + d| <= zero_tol (|c||lam| + |d| + 1)``."""
    c, d = spec.c, spec.d
    bound = spec.tolerances.zero_tol * (abs(c) * abs(lam) + abs(d) + 1.0)
    return Criticality.CRITICAL if abs(c * lam + d) <= bound else Criticality.REGULAR
