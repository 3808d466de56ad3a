"""Quadrature, the boundary functional, chain constants and the identity verifier.

Every relation between root functions used here has the same shape.  With the
boundary functional ``A`` (a telescoping combination of endpoint values, see
:func:`A_functional`) define the indefinite form

    <f, g> = (f, g) + (ad - bc) A(f) conj(A(g)),     (f, g) = int_0^1 f conj(g) dx.

Then distinct eigenfunctions are orthogonal in this form, its diagonal on an
eigenfunction is the defect that vanishes exactly at multiple or non-real
eigenvalues, and the chain constants are values of the form on chain members.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .chains import RootFunction
from .errors import BranchUndefined, GridMismatch, MissingConstant
from .problem import Criticality


# -- quadrature -----------------------------------------------------------------


@lru_cache(maxsize=16)
def simpson_weights(n):
    """Composite Simpson weights for ``n`` (odd) uniform nodes on [0, 1]."""
    if n < 3 or n % 2 == 0:
        raise GridMismatch(f"Simpson's rule needs an odd number of nodes, got {n}")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= 1.0 / (3.0 * (n - 1))
    w.setflags(write=False)
    return w


def _fn(f):
    return f.fn if isinstance(f, RootFunction) else f


def inner_product(f, g):
    """``int_0^1 f conj(g) dx`` by composite Simpson on the shared grid."""
    f, g = _fn(f), _fn(g)
    if f.values.shape != g.values.shape:
        raise GridMismatch(f"grid sizes {f.values.size} and {g.values.size} differ")
    value = np.dot(simpson_weights(f.values.size), f.values * np.conj(g.values))
    return value.item()


def norm(f):
    return float(np.sqrt(abs(inner_product(f, f))))


# -- boundary functional ----------------------------------------------------------


@dataclass(frozen=True)
class AValue:
    value: complex | float
    member: str
    branch: Criticality
    terms: tuple

    @property
    def magnitude(self):
        """Sum of the absolute values of the telescoping terms (cancellation scale)."""
        return float(sum(abs(t) for t in self.terms))


def _denominator(spec, lam, branch):
    tol = spec.tolerances.zero_tol
    if branch is Criticality.REGULAR:
        den = spec.c * lam + spec.d
        if abs(den) <= tol * (abs(spec.c) * abs(lam) + abs(spec.d) + 1.0):
            raise BranchUndefined(f"regular branch at lam={lam!r} where c lam + d vanishes")
        return den, spec.c
    den = spec.a * lam + spec.b
    if abs(den) <= tol * (abs(spec.a) * abs(lam) + abs(spec.b) + 1.0):
        raise BranchUndefined(f"critical branch at lam={lam!r} where a lam + b vanishes")
    return den, spec.a


def A_functional(member, spec):
    """Boundary functional of a root function.

    Regular branch (``c lam + d != 0``)::

        A(f) = f(1)/(c lam + d) - c g(1)/(c lam + d)^2 + c^2 h(1)/(c lam + d)^3

    with ``g, h`` the chain members below ``f`` (terms present only as deep
    as the chain).  At ``lam = -d/c`` the same with derivatives at 1 and
    ``a, a lam + b`` in place of ``c, c lam + d``.
    """
    branch = member.criticality
    den, coef = _denominator(spec, member.lam, branch)
    chain = (member.fn,) + tuple(member.lower)
    terms = []
    for i, fn in enumerate(chain):
        end = fn.values[-1] if branch is Criticality.REGULAR else fn.derivs[-1]
        terms.append(((-coef) ** i) * end / den ** (i + 1))
    value = sum(terms)
    return AValue(value=value.item() if hasattr(value, "item") else value, member=member.label, branch=branch, terms=tuple(terms))


def augmented_form(f, g, spec):
    """``(f, g) + (ad - bc) A(f) conj(A(g))``."""
    af = A_functional(f, spec).value
    ag = A_functional(g, spec).value
    return inner_product(f, g) + spec.det * af * np.conj(ag)


def _form_scale(f, g, spec):
    af = A_functional(f, spec).value
    ag = A_functional(g, spec).value
    return norm(f) * norm(g) + abs(spec.det) * abs(af) * abs(ag)


# -- constants ------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainConstants:
    """Constants attached to one chain.

    ``pairing_first``  = <y_{k+1}, y_k>            (regular T_k / critical S_k)
    ``pairing_second`` = <y_{k+1}, y_{k+1}>        (Q_k / P_k)
    ``pairing_cross``  = <y_{k+1}, y_{k+2}>        (L_k / M_k)
    ``pairing_top``    = <y*_{k+2}, y_{k+2}>       (J_k / H_k)
    ``shift_star``  = -pairing_second / pairing_first   (double only)
    ``shift_sharp`` = -pairing_cross / pairing_second   (triple only)
    ``shift_sharp_top`` = -pairing_top / pairing_second (triple only)
    ``pair_pairing`` = <y_r, y_s> for a non-real pair and ``pair_pairing_conj``
    its counterpart <y_s, y_r>.
    ``scales`` holds, for each constant, the magnitude against which it is
    tested for zero.
    """

    lam: float | complex
    multiplicity: int
    branch: Criticality
    defect: complex | float
    pairing_first: float | None = None
    pairing_second: float | None = None
    pairing_cross: float | None = None
    pairing_top: float | None = None
    shift_star: float | None = None
    shift_sharp: float | None = None
    shift_sharp_top: float | None = None
    pair_pairing: complex | None = None
    pair_pairing_conj: complex | None = None
    scales: dict = field(default_factory=dict)

    def require(self, name):
        value = getattr(self, name)
        if value is None:
            raise MissingConstant(f"{name} is not defined for a chain of multiplicity {self.multiplicity}")
        return value

    def is_zero(self, name, zero_tol):
        return abs(self.require(name)) <= zero_tol * self.scales[name]


def defect(f, spec):
    """``<y_n, y_n>``: nonzero exactly for real simple eigenvalues."""
    return augmented_form(f, f, spec)


def _real(value):
    value = complex(value)
    return value.real


def compute_constants(spec, chain, partner=None):
    """Constants of ``chain``; ``partner`` is the conjugate chain of a pair."""
    y0 = chain.root_function(0)
    out = dict(lam=chain.lam, multiplicity=chain.multiplicity, branch=chain.criticality)
    scales = {}
    out["defect"] = defect(y0, spec)
    scales["defect"] = _form_scale(y0, y0, spec)
    m = chain.multiplicity
    if m >= 2:
        y1 = chain.root_function(1)
        out["pairing_first"] = _real(augmented_form(y1, y0, spec))
        scales["pairing_first"] = _form_scale(y1, y0, spec)
        out["pairing_second"] = _real(augmented_form(y1, y1, spec))
        scales["pairing_second"] = _form_scale(y1, y1, spec)
        if m == 2:
            out["shift_star"] = -out["pairing_second"] / out["pairing_first"]
    if m >= 3:
        y2 = chain.root_function(2)
        out["pairing_cross"] = _real(augmented_form(y1, y2, spec))
        scales["pairing_cross"] = _form_scale(y1, y2, spec)
        c2 = -out["pairing_cross"] / out["pairing_second"]
        out["shift_sharp"] = c2
        sharp1 = y1.combine(y0, c2)
        star2 = RootFunction(y2.fn.plus(y1.fn, c2), y2.lam, y2.criticality, (sharp1.fn, y0.fn), "y*_k+2")
        out["pairing_top"] = _real(augmented_form(star2, y2, spec))
        scales["pairing_top"] = _form_scale(star2, y2, spec)
        out["shift_sharp_top"] = -out["pairing_top"] / out["pairing_second"]
    if partner is not None:
        ys = partner.root_function(0)
        out["pair_pairing"] = complex(augmented_form(y0, ys, spec))
        out["pair_pairing_conj"] = complex(augmented_form(ys, y0, spec))
        scales["pair_pairing"] = scales["pair_pairing_conj"] = _form_scale(y0, ys, spec)
    return ChainConstants(scales=scales, **out)


# -- special associated functions ---------------------------------------------------


@dataclass(frozen=True)
class SpecialChain:
    star_first: RootFunction | None = None
    sharp_first: RootFunction | None = None
    star_second: RootFunction | None = None
    sharp_second: RootFunction | None = None


def build_special_chain(spec, chain, constants):
    """``y*_{k+1} = y_{k+1} + C1 y_k`` for a double eigenvalue; for a triple
    ``y#_{k+1} = y_{k+1} + C2 y_k``, ``y*_{k+2} = y_{k+2} + C2 y_{k+1}`` and
    ``y#_{k+2} = y*_{k+2} + D1 y_k``."""
    m = chain.multiplicity
    if m < 2:
        raise MissingConstant("special associated functions need a multiple eigenvalue")
    y0 = chain.root_function(0)
    y1 = chain.root_function(1)
    if m == 2:
        c1 = constants.require("shift_star")
        return SpecialChain(star_first=RootFunction(y1.fn.plus(y0.fn, c1), y1.lam, y1.criticality, (y0.fn,), "y*_k+1"))
    c2 = constants.require("shift_sharp")
    d1 = constants.require("shift_sharp_top")
    y2 = chain.root_function(2)
    sharp1 = RootFunction(y1.fn.plus(y0.fn, c2), y1.lam, y1.criticality, (y0.fn,), "y#_k+1")
    star2 = RootFunction(y2.fn.plus(y1.fn, c2), y2.lam, y2.criticality, (sharp1.fn, y0.fn), "y*_k+2")
    sharp2 = RootFunction(star2.fn.plus(y0.fn, d1), y2.lam, y2.criticality, (sharp1.fn, y0.fn), "y#_k+2")
    return SpecialChain(sharp_first=sharp1, star_second=star2, sharp_second=sharp2)


# -- identity verification ---------------------------------------------------------------

#: Every identity the verifier can check, with the branches it distinguishes.
IDENTITIES = {
    "eigen_orthogonality": ("regular", "critical"),
    "nonreal_norm": ("regular",),
    "multiple_norm": ("regular", "critical"),
    "first_assoc_orthogonality": ("regular", "partner_critical", "chain_critical"),
    "second_assoc_orthogonality": ("regular", "partner_critical", "chain_critical"),
    "triple_first_pairing": ("regular", "critical"),
    "triple_second_pairing": ("regular", "critical"),
    "star_first_orthogonality": ("regular", "critical"),
    "sharp_first_cross": ("regular", "critical"),
    "sharp_first_pairing": ("regular", "critical"),
    "star_second_orthogonality": ("regular", "partner_critical", "chain_critical"),
    "star_second_pairing": ("regular", "critical"),
    "star_second_first": ("regular", "critical"),
    "sharp_second_orthogonality": ("regular", "critical"),
}


@dataclass(frozen=True)
class IdentityCheck:
    identity: str
    branch: str
    members: str
    lhs: complex
    rhs: complex
    abs_err: float
    rel_err: float
    passed: bool


@dataclass
class IdentityReport:
    checks: list = field(default_factory=list)

    def covered(self):
        return {(c.identity, c.branch) for c in self.checks}

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def max_rel(self):
        return max((c.rel_err for c in self.checks), default=0.0)

    def extend(self, other):
        self.checks.extend(other.checks)
        return self


def _check(spec, ident, branch, f, g, constant=0.0):
    """Compare quadrature ``(f, g)`` with ``-(ad-bc) A(f) conj(A(g)) + constant``."""
    lhs = inner_product(f, g)
    rhs = -spec.det * A_functional(f, spec).value * np.conj(A_functional(g, spec).value) + constant
    err = abs(lhs - rhs)
    rel = err / max(norm(f) * norm(g), np.finfo(float).tiny)
    return IdentityCheck(
        identity=ident,
        branch=branch,
        members=f"({f.label}, {g.label})",
        lhs=complex(lhs),
        rhs=complex(rhs),
        abs_err=float(err),
        rel_err=float(rel),
        passed=bool(rel < spec.tolerances.ip_tol),
    )


def _pair_branch(chain_branch, partner_branch):
    if chain_branch is Criticality.CRITICAL:
        return "chain_critical"
    if partner_branch is Criticality.CRITICAL:
        return "partner_critical"
    return "regular"


def verify_identities(spec, system, specials=None):
    """Check every applicable identity on a root system.

    ``specials`` (a :class:`SpecialChain` for the multiple eigenvalue) enables
    the identities of the shifted associated functions.
    """
    report = IdentityReport()
    funcs = system.functions
    case = system.case
    chain_members = set()
    multiple = None
    if case.k is not None:
        multiple = system.chains[case.k]
        chain_members = set(range(case.k, case.k + multiple.multiplicity))
    eigen = [n for n in range(len(funcs)) if funcs[n].level == 0]
    crit = Criticality.CRITICAL

    def branch_of(f):
        return "critical" if f.criticality is crit else "regular"

    # eigenfunctions at distinct eigenvalues are orthogonal in the form
    for i, n in enumerate(eigen):
        for m in eigen[i + 1 :]:
            f, g = funcs[n], funcs[m]
            if f.criticality is not crit and g.criticality is crit:
                f, g = g, f
            if np.conj(g.lam) == f.lam:
                continue
            branch = "critical" if f.criticality is crit else "regular"
            report.checks.append(_check(spec, "eigen_orthogonality", branch, f, g))

    # a non-real eigenfunction has zero defect
    if case.r is not None:
        for n in (case.r, case.s):
            report.checks.append(_check(spec, "nonreal_norm", "regular", funcs[n], funcs[n]))

    if multiple is None:
        return report

    k = case.k
    yk = funcs[k]
    br = branch_of(yk)
    others = [n for n in eigen if n not in chain_members]
    report.checks.append(_check(spec, "multiple_norm", br, yk, yk))

    yk1 = funcs[k + 1] if k + 1 < len(funcs) else multiple.root_function(1)
    for n in others:
        report.checks.append(
            _check(spec, "first_assoc_orthogonality", _pair_branch(yk.criticality, funcs[n].criticality), yk1, funcs[n])
        )

    if multiple.multiplicity >= 3:
        yk2 = funcs[k + 2] if k + 2 < len(funcs) else multiple.root_function(2)
        for n in others:
            report.checks.append(
                _check(spec, "second_assoc_orthogonality", _pair_branch(yk.criticality, funcs[n].criticality), yk2, funcs[n])
            )
        report.checks.append(_check(spec, "triple_first_pairing", br, yk1, yk))
        second = augmented_form(yk1, yk1, spec)
        report.checks.append(_check(spec, "triple_second_pairing", br, yk2, yk, second))

    if specials is None:
        return report
    if specials.star_first is not None:
        report.checks.append(_check(spec, "star_first_orthogonality", br, specials.star_first, yk1))
    if specials.sharp_first is not None:
        second = augmented_form(yk1, yk1, spec)
        yk2 = funcs[k + 2] if k + 2 < len(funcs) else multiple.root_function(2)
        report.checks.append(_check(spec, "sharp_first_cross", br, specials.sharp_first, yk2))
        report.checks.append(_check(spec, "sharp_first_pairing", br, specials.sharp_first, yk1, second))
        star2 = specials.star_second
        for n in others:
            report.checks.append(
                _check(spec, "star_second_orthogonality", _pair_branch(yk.criticality, funcs[n].criticality), star2, funcs[n])
            )
        report.checks.append(_check(spec, "star_second_pairing", br, star2, yk, second))
        report.checks.append(_check(spec, "star_second_first", br, star2, yk1))
        report.checks.append(_check(spec, "sharp_second_orthogonality", br, specials.sharp_second, yk2))
    return report


# -- report output ------------------------------------------------------------------------


def _fmt(value):
    return f"{value:.15g}"


def _cfmt(value):
    value = complex(value)
    if value.imag == 0:
        return _fmt(value.real)
    return f"{_fmt(value.real)}{'+' if value.imag >= 0 else '-'}{_fmt(abs(value.imag))}j"


def write_identity_csv(report, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["identity", "branch", "members", "lhs", "rhs", "abs_err", "rel_err", "pass"])
        for c in report.checks:
            writer.writerow(
                [c.identity, c.branch, c.members, _cfmt(c.lhs), _cfmt(c.rhs), _fmt(c.abs_err), _fmt(c.rel_err), str(c.passed).lower()]
            )
    return path


def format_identity_report(report):
    lines = [f"{'identity':28s} {'branch':16s} {'members':22s} {'rel_err':>10s}  result"]
    for c in report.checks:
        lines.append(
            f"{c.identity:28s} {c.branch:16s} {c.members:22s} {c.rel_err:10.2e}  {'pass' if c.passed else 'FAIL'}"
        )
    passed = sum(c.passed for c in report.checks)
    lines.append(f"{passed}/{len(report.checks)} identities passed; max relative discrepancy {report.max_rel():.2e}")
    return "\n".join(lines) + "\n"
