"""Basis verdicts for the root system with one function removed, and the
biorthogonal systems that certify minimality.

Every biorthogonal element has the form

    u = (f A(p) - p A(f)) / (den A(p)),

a 2x2 determinant built from a root function ``f``, a pivot ``p`` (fixed per
removed index) and a normalizing constant ``den``.  With the indefinite form
of :mod:`slep.innerproducts`, ``(u, y_m) = (<f, y_m> A(p) - <p, y_m> A(f)) / (den A(p))``,
so biorthogonality reduces to the orthogonality relations of the chain.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DenominatorNearZero, NotABasis, RemovedIndexOutOfRange
from .innerproducts import A_functional, build_special_chain, compute_constants, defect, inner_product, norm

BASIS = "basis"
NOT_BASIS = "not_basis"
INDETERMINATE = "indeterminate"

#: Width of the gray zone above the zero threshold, as a multiple of it.
GRAY_FACTOR = 100.0

#: Rule names and their conditions, keyed by (case, removal kind).
RULES = {
    ("i", "any"): ("all_simple", None),
    ("ii", "second"): ("double_remove_second", None),
    ("ii", "first"): ("double_remove_first", "y*_k+1"),
    ("ii", "other"): ("double_remove_other", None),
    ("iii", "third"): ("triple_remove_third", None),
    ("iii", "second"): ("triple_remove_second", "y#_k+1"),
    ("iii", "first"): ("triple_remove_first", "y#_k+2"),
    ("iii", "other"): ("triple_remove_other", None),
    ("iv", "pair"): ("pair_remove_member", None),
    ("iv", "other"): ("pair_remove_other", None),
}


@dataclass(frozen=True)
class Analysis:
    """Everything the verdicts need: root system, chain constants, specials."""

    spec: object
    system: object
    constants: object = None
    specials: object = None
    defects: dict = field(default_factory=dict)


def analyze(spec, system):
    """Compute the distinguished chain's constants, special functions and all
    defects of simple eigenfunctions."""
    case = system.case
    constants = specials = None
    if case.k is not None:
        chain = system.chains[case.k]
        constants = compute_constants(spec, chain)
        specials = build_special_chain(spec, chain, constants)
    elif case.r is not None:
        constants = compute_constants(spec, system.chains[case.r], system.chains[case.s])
    defects = {n: defect(system.functions[n], spec) for n in system.eigenfunction_indices()}
    return Analysis(spec=spec, system=system, constants=constants, specials=specials, defects=defects)


@dataclass(frozen=True)
class BasisVerdict:
    removed_index: int
    case: str
    rule: str
    verdict: str
    decisive_member: str | None
    decisive_value: complex | float | None
    decisive_scale: float | None
    certificate: str

    @property
    def is_basis(self):
        return self.verdict == BASIS


def _removal_kind(case, l):
    if case.tag == "i":
        return "any"
    if case.tag == "iv":
        return "pair" if l in (case.r, case.s) else "other"
    k = case.k
    if case.tag == "ii":
        return {k: "first", k + 1: "second"}.get(l, "other")
    return {k: "first", k + 1: "second", k + 2: "third"}.get(l, "other")


def _chain_function(analysis, n):
    system = analysis.system
    if n < system.count:
        return system.functions[n]
    k = system.case.k
    return system.chains[k].root_function(n - k)


def _special(analysis, label):
    sp = analysis.specials
    return {"y*_k+1": sp.star_first, "y#_k+1": sp.sharp_first, "y#_k+2": sp.sharp_second}[label]


def _retained(analysis, l):
    return [n for n in range(analysis.system.count) if n != l]


def orthogonality_certificate(analysis, member, l):
    """Largest ``|(w, y_n)| / (||w|| ||y_n||)`` over the retained functions."""
    worst = 0.0
    nw = norm(member)
    for n in _retained(analysis, l):
        y = analysis.system.functions[n]
        worst = max(worst, abs(inner_product(member, y)) / (nw * norm(y)))
    return worst


def basis_verdict(analysis, l):
    """Decide whether the root system without ``y_l`` is a basis."""
    system = analysis.system
    spec = analysis.spec
    if not 0 <= l < system.count:
        raise RemovedIndexOutOfRange(f"removed index {l} outside 0..{system.count - 1}")
    case = system.case
    kind = _removal_kind(case, l)
    rule, decisive = RULES[(case.tag, kind)]
    extension = case.tag == "iv" and l == case.s
    if decisive is None:
        text = f"rule {rule}: unconditional basis in L_p, 1<p<inf"
        if extension:
            text += "; removal of the conjugate member handled by symmetry with the upper member (extension)"
        return BasisVerdict(l, case.tag, rule, BASIS, None, None, None, text)

    member = _special(analysis, decisive)
    av = A_functional(member, spec)
    value = av.value
    scale = av.magnitude
    zero_tol = spec.tolerances.zero_tol
    if abs(value) > GRAY_FACTOR * zero_tol * scale:
        verdict = BASIS
        text = f"rule {rule}: A({decisive}) = {value:.6g} is nonzero; basis in L_p, 1<p<inf"
    elif abs(value) <= zero_tol * scale:
        cert = orthogonality_certificate(analysis, member, l)
        if cert < spec.tolerances.ip_tol:
            verdict = NOT_BASIS
            text = (
                f"rule {rule}: A({decisive}) = {value:.3g} vanishes within {zero_tol:g} x {scale:.3g}; "
                f"{decisive} is orthogonal to every retained function (max relative inner product {cert:.2e}), "
                "so the system is not complete in L_2 and hence not a basis (L_2 numerical evidence)"
            )
        else:
            verdict = INDETERMINATE
            text = (
                f"rule {rule}: A({decisive}) = {value:.3g} is numerically zero but the orthogonality "
                f"certificate fails ({cert:.2e} >= {spec.tolerances.ip_tol:g})"
            )
    else:
        verdict = INDETERMINATE
        text = f"rule {rule}: A({decisive}) = {value:.3g} lies in the gray zone near zero"
    return BasisVerdict(l, case.tag, rule, verdict, decisive, value, scale, text)


# -- biorthogonal systems ------------------------------------------------------------


@dataclass(frozen=True)
class BiorthogonalSystem:
    removed_index: int
    members: dict
    denominators: dict
    pivot: str
    retained: tuple


def _element(spec, f, p, a_p, den, name):
    if abs(den) == 0 or not np.isfinite(abs(den)):
        raise DenominatorNearZero(name, den)
    a_f = A_functional(f, spec).value
    fn = f.fn.scaled(a_p).plus(p.fn, -a_f).scaled(1.0 / (den * a_p))
    return fn


def _check_den(analysis, name, value, scale_name=None):
    const = analysis.constants
    zero_tol = analysis.spec.tolerances.zero_tol
    if scale_name and abs(value) <= zero_tol * const.scales[scale_name]:
        raise DenominatorNearZero(name, value)
    return value


def build_biorthogonal(analysis, l, verdict=None):
    """Biorthogonal system to the root system without ``y_l``.

    Raises :class:`NotABasis` when the verdict is not ``basis`` and
    :class:`DenominatorNearZero` when a normalizing constant vanishes.
    """
    spec = analysis.spec
    system = analysis.system
    verdict = verdict or basis_verdict(analysis, l)
    if verdict.verdict != BASIS:
        raise NotABasis(f"removed index {l}: verdict {verdict.verdict}")
    case = system.case
    kind = _removal_kind(case, l)
    y = lambda n: _chain_function(analysis, n)  # noqa: E731
    const = analysis.constants
    plan = {}

    if case.tag in ("ii", "iii"):
        k = case.k
        if case.tag == "ii":
            beta = _check_den(analysis, "pairing_first", const.pairing_first, "pairing_first")
            star1 = analysis.specials.star_first
            if kind == "second":
                pivot, pname = y(k), "y_k"
                plan[k] = (y(k + 1), beta, "pairing_first")
            elif kind == "first":
                pivot, pname = star1, "y*_k+1"
                plan[k + 1] = (y(k), beta, "pairing_first")
            else:
                pivot, pname = y(l), f"y_{l}"
                plan[k] = (star1, beta, "pairing_first")
                plan[k + 1] = (y(k), beta, "pairing_first")
        else:
            gamma = _check_den(analysis, "pairing_second", const.pairing_second, "pairing_second")
            sp = analysis.specials
            if kind == "third":
                pivot, pname = y(k), "y_k"
                plan[k] = (sp.sharp_second, gamma, "pairing_second")
                plan[k + 1] = (y(k + 1), gamma, "pairing_second")
            elif kind == "second":
                pivot, pname = sp.sharp_first, "y#_k+1"
                plan[k] = (sp.sharp_second, gamma, "pairing_second")
                plan[k + 2] = (y(k), gamma, "pairing_second")
            elif kind == "first":
                pivot, pname = sp.sharp_second, "y#_k+2"
                plan[k + 1] = (sp.sharp_first, gamma, "pairing_second")
                plan[k + 2] = (y(k), gamma, "pairing_second")
            else:
                pivot, pname = y(l), f"y_{l}"
                plan[k] = (sp.sharp_second, gamma, "pairing_second")
                plan[k + 1] = (sp.sharp_first, gamma, "pairing_second")
                plan[k + 2] = (y(k), gamma, "pairing_second")
    elif case.tag == "iv":
        r, s = case.r, case.s
        t_r = _check_den(analysis, "pair_pairing", const.pair_pairing, "pair_pairing")
        t_s = const.pair_pairing_conj
        if l == r:
            pivot, pname = y(s), "y_s"
            plan[s] = (y(r), t_r, "pair_pairing")
        elif l == s:
            pivot, pname = y(r), "y_r"
            plan[r] = (y(s), t_s, "pair_pairing_conj")
        else:
            pivot, pname = y(l), f"y_{l}"
            plan[r] = (y(s), t_s, "pair_pairing_conj")
            plan[s] = (y(r), t_r, "pair_pairing")
    else:
        pivot, pname = y(l), f"y_{l}"

    zero_tol = spec.tolerances.zero_tol
    for n in system.eigenfunction_indices():
        if n == l:
            continue
        b_n = analysis.defects[n]
        if abs(b_n) <= zero_tol * norm(y(n)) ** 2:
            raise DenominatorNearZero(f"defect of y_{n}", b_n)
        plan[n] = (y(n), b_n, f"defect_{n}")

    a_p = A_functional(pivot, spec)
    if abs(a_p.value) <= zero_tol * a_p.magnitude:
        raise DenominatorNearZero(f"A({pname})", a_p.value)
    members = {}
    denominators = {}
    retained = tuple(n for n in range(system.count) if n != l)
    for n in retained:
        f, den, name = plan[n]
        members[n] = _element(spec, f, pivot, a_p.value, den, name)
        denominators[n] = (name, den)
    return BiorthogonalSystem(removed_index=l, members=members, denominators=denominators, pivot=pname, retained=retained)


def biorthogonality_matrix(biortho, system):
    """Matrix ``(u_n, y_m)`` over the retained indices and its max deviation from the identity."""
    idx = biortho.retained
    mat = np.array([[inner_product(biortho.members[n], system.functions[m]) for m in idx] for n in idx])
    if not np.iscomplexobj(mat) or np.all(mat.imag == 0):
        mat = mat.real
    dev = float(np.max(np.abs(mat - np.eye(len(idx))))) if len(idx) else 0.0
    return mat, dev


@dataclass(frozen=True)
class MinimalityRow:
    removed_index: int
    verdict: BasisVerdict
    max_deviation: float | None
    note: str = ""


def minimality_report(analysis, removed=None):
    """Verdict and biorthogonality deviation for each removed index.

    By default the removed indices are 0 .. min(N - 1, k + 3) (or up to 3
    when there is no multiple eigenvalue).
    """
    system = analysis.system
    if removed is None:
        top = (system.case.k + 3) if system.case.k is not None else 3
        removed = range(min(system.count - 1, top) + 1)
    rows = []
    for l in removed:
        verdict = basis_verdict(analysis, l)
        dev = None
        note = ""
        if verdict.is_basis:
            try:
                bio = build_biorthogonal(analysis, l, verdict)
                dev = biorthogonality_matrix(bio, system)[1]
            except DenominatorNearZero as exc:
                note = str(exc)
        rows.append(MinimalityRow(l, verdict, dev, note))
    return rows


# -- output --------------------------------------------------------------------------------


def _fmt(value):
    return f"{value:.15g}"


def _num(value):
    if value is None:
        return ""
    value = complex(value)
    if value.imag == 0:
        return _fmt(value.real)
    return f"{_fmt(value.real)}{'+' if value.imag >= 0 else '-'}{_fmt(abs(value.imag))}j"


def write_verdicts_csv(rows, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["removed_index", "case", "rule", "verdict", "decisive_member", "decisive_value", "decisive_scale", "max_deviation", "evidence"])
        for row in rows:
            v = row.verdict
            writer.writerow(
                [
                    v.removed_index,
                    v.case,
                    v.rule,
                    v.verdict,
                    v.decisive_member or "",
                    _num(v.decisive_value),
                    _num(v.decisive_scale),
                    _num(row.max_deviation),
                    "L2 numerical",
                ]
            )
    return path


def verdicts_to_json(rows):
    out = []
    for row in rows:
        v = row.verdict
        out.append(
            {
                "removed_index": v.removed_index,
                "case": v.case,
                "rule": v.rule,
                "verdict": v.verdict,
                "decisive_member": v.decisive_member,
                "decisive_value": _num(v.decisive_value) or None,
                "decisive_scale": _num(v.decisive_scale) or None,
                "max_deviation": _num(row.max_deviation) or None,
                "evidence": "L2 numerical",
                "certificate": v.certificate,
                "note": row.note,
            }
        )
    return out


def write_verdicts_json(rows, path):
    path = Path(path)
    path.write_text(json.dumps(verdicts_to_json(rows), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_matrix_csv(matrix, retained, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n\\m"] + [str(m) for m in retained])
        for n, row in zip(retained, matrix):
            writer.writerow([str(n)] + [_num(v) for v in row])
    return path
