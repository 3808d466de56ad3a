"""Eigenfunctions, associated functions and the full system of root functions.

The canonical chain at an eigenvalue of multiplicity m is

    y_k = y,   y_{k+1} = dy/dlam,   y_{k+2} = (1/2) d2y/dlam2,

evaluated at the eigenvalue.  Chain shifts reproduce the general associated
functions: ``y_{k+1} + C y_k`` and ``y_{k+2} + C y_{k+1} + D y_k`` (where the
middle term uses the canonical first associated function).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ResidualTooLarge
from .integrator import SampledFunction, integrate_variational
from .problem import Criticality


@dataclass(frozen=True)
class RootFunction:
    """A root function together with the chain members below it.

    ``lower`` lists the members the boundary functional needs, nearest
    first: empty for an eigenfunction, ``(y_k,)`` for a first associated
    function and ``(y_{k+1}-like, y_k)`` for a second one.
    """

    fn: SampledFunction
    lam: float | complex
    criticality: Criticality
    lower: tuple = ()
    label: str = ""

    @property
    def level(self):
        return len(self.lower)

    def combine(self, other, factor, label=""):
        """``self + factor * other`` keeping this function's chain context."""
        return RootFunction(self.fn.plus(other.fn, factor), self.lam, self.criticality, self.lower, label)

    def conj(self, label=""):
        return RootFunction(
            self.fn.conj(), np.conj(self.lam), self.criticality, tuple(f.conj() for f in self.lower), label
        )


def boundary_data(fn):
    """``(f(0), f'(0), f(1), f'(1))`` read from the end nodes of the grid."""
    if isinstance(fn, RootFunction):
        fn = fn.fn
    return fn.values[0], fn.derivs[0], fn.values[-1], fn.derivs[-1]


@dataclass(frozen=True)
class RootChain:
    lam: float | complex
    multiplicity: int
    criticality: Criticality
    members: tuple
    canonical: tuple
    shift_C: float = 0.0
    shift_D: float = 0.0
    residuals: dict = field(default_factory=dict)

    @property
    def y_k(self):
        return self.members[0]

    @property
    def y_k1(self):
        return self.members[1] if self.multiplicity >= 2 else None

    @property
    def y_k2(self):
        return self.members[2] if self.multiplicity >= 3 else None

    def root_function(self, level):
        """Member ``level`` as a :class:`RootFunction` with its chain context."""
        lower = tuple(self.members[level - 1 :: -1]) if level else ()
        return RootFunction(self.members[level], self.lam, self.criticality, lower, f"y_k+{level}" if level else "y_k")


def _bc_residual(spec, lam, top, below):
    """Residual of the right boundary relation of a chain member."""
    left = spec.a * lam + spec.b
    right = spec.c * lam + spec.d
    res = left * top.values[-1] - right * top.derivs[-1]
    if below is not None:
        res += spec.a * below.values[-1] - spec.c * below.derivs[-1]
    return abs(res)


RELATION_NAMES = ("eigenfunction boundary relation", "first associated boundary relation", "second associated boundary relation")


def build_chain(spec, record, shift_C=0.0, shift_D=0.0, check=True):
    """Canonical chain at ``record.lam`` with the requested shifts applied.

    A record in the lower half-plane is built as the conjugate of the chain
    at the conjugate eigenvalue, so the two members of a pair are exact
    conjugates.
    """
    lam = record.lam
    m = record.multiplicity
    flip = isinstance(lam, complex) and lam.imag < 0
    bundle = integrate_variational(spec, lam.conjugate() if flip else lam, m - 1)
    levels = [f.conj() for f in bundle.levels] if flip else list(bundle.levels)
    canonical = [levels[0]]
    if m >= 2:
        canonical.append(levels[1])
    if m >= 3:
        canonical.append(levels[2].scaled(0.5))
    members = list(canonical)
    if m >= 2:
        members[1] = canonical[1].plus(canonical[0], shift_C)
    if m >= 3:
        members[2] = canonical[2].plus(canonical[1], shift_C).plus(canonical[0], shift_D)

    bound = spec.tolerances.ip_tol * spec.scale * (1.0 + abs(lam)) ** 2
    residuals = {}
    for j, fn in enumerate(members):
        res = _bc_residual(spec, lam, fn, members[j - 1] if j else None)
        residuals[RELATION_NAMES[j]] = float(res)
        if check and res > bound:
            raise ResidualTooLarge(RELATION_NAMES[j], float(res), bound)
    return RootChain(
        lam=lam,
        multiplicity=m,
        criticality=record.criticality,
        members=tuple(members),
        canonical=tuple(canonical),
        shift_C=shift_C,
        shift_D=shift_D,
        residuals=residuals,
    )


@dataclass(frozen=True)
class RootSystem:
    """All root functions ``y_0 .. y_{N-1}`` of a computed spectrum.

    ``chains`` maps the first index of each distinct eigenvalue to its chain.
    """

    spectrum: object
    chains: dict
    functions: tuple

    @property
    def case(self):
        return self.spectrum.case

    @property
    def count(self):
        return len(self.functions)

    def distinguished_chain(self):
        case = self.spectrum.case
        if case.k is not None:
            return self.chains[case.k]
        if case.r is not None:
            return self.chains[case.r]
        return None

    def eigenfunction_indices(self):
        """Indices of eigenfunctions that are not part of a multiple chain or the pair."""
        case = self.spectrum.case
        skip = set()
        if case.k is not None:
            skip |= set(range(case.k, case.k + self.chains[case.k].multiplicity))
        if case.r is not None:
            skip |= {case.r, case.s}
        return [n for n in range(self.count) if n not in skip]


def build_system(spec, spectrum, shift_C=0.0, shift_D=0.0):
    """Chains for every record of ``spectrum``; shifts apply to the multiple chain."""
    chains = {}
    functions = [None] * spectrum.count
    for rec in spectrum.records:
        if rec.multiplicity >= 2:
            chain = build_chain(spec, rec, shift_C, shift_D)
        else:
            chain = build_chain(spec, rec)
        chains[rec.index] = chain
        for level in range(chain.multiplicity):
            n = rec.index + level
            if n < spectrum.count:
                rf = chain.root_function(level)
                functions[n] = RootFunction(rf.fn, rf.lam, rf.criticality, rf.lower, f"y_{n}")
    return RootSystem(spectrum=spectrum, chains=chains, functions=tuple(functions))


def _fmt(value):
    return f"{value:.15g}"


def write_chain(chain, directory, stem="chain"):
    """One CSV per member (x, f, f') plus a JSON sidecar; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    complex_valued = np.iscomplexobj(chain.y_k.values)
    for j, fn in enumerate(chain.members):
        path = directory / f"{stem}_member{j}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if complex_valued:
                writer.writerow(["x", "re_f", "im_f", "re_df", "im_df"])
                for x, f, df in zip(fn.grid, fn.values, fn.derivs):
                    writer.writerow([_fmt(x), _fmt(f.real), _fmt(f.imag), _fmt(df.real), _fmt(df.imag)])
            else:
                writer.writerow(["x", "f", "df"])
                for x, f, df in zip(fn.grid, fn.values, fn.derivs):
                    writer.writerow([_fmt(x), _fmt(f), _fmt(df)])
        paths.append(path)
    lam = complex(chain.lam)
    side = {
        "lambda": [_fmt(lam.real), _fmt(lam.imag)],
        "multiplicity": chain.multiplicity,
        "criticality": chain.criticality.value,
        "shift_C": _fmt(chain.shift_C),
        "shift_D": _fmt(chain.shift_D),
        "boundary_data": [
            {k: _json_num(v) for k, v in zip(("f(0)", "df(0)", "f(1)", "df(1)"), boundary_data(fn))}
            for fn in chain.members
        ],
        "residuals": {k: _fmt(v) for k, v in chain.residuals.items()},
    }
    sidecar = directory / f"{stem}.json"
    sidecar.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    paths.append(sidecar)
    return paths


def _json_num(value):
    value = complex(value)
    if value.imag == 0:
        return _fmt(value.real)
    return [_fmt(value.real), _fmt(value.imag)]
