"""Characteristic function, eigenvalue location and case classification.

The eigenvalues are the zeros of

    omega(lam) = (a lam + b) y(1, lam) - (c lam + d) y'(1, lam),

where y is the shooting solution.  Real zeros are bracketed on a scan that is
uniform in ``t = sign(lam) sqrt|lam|``, refined by bisection and safeguarded
Newton steps, and their order is read off the lambda-derivatives of omega.
A possible non-real conjugate pair is detected by the argument principle.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CaseContradiction, ClusterUnresolved, CountShortfall, NumericalError, WindingAmbiguous
from .integrator import endpoint_levels
from .problem import Criticality, classify_criticality

SCAN_TOL = 1e-9
SCAN_STEP = math.pi / 32
PAIR_BOX_HEIGHT = 50.0
PAIR_RETRIES = 5
MAX_MULTIPLICITY = 3


# -- omega and its derivatives ------------------------------------------------


def characteristic_derivatives(lam, spec, m=MAX_MULTIPLICITY, ode_tol=None):
    """``[omega(lam), omega'(lam), ..., omega^(m)(lam)]``.

    With ``v_j = d^j y / d lam^j`` the Leibniz rule gives
    ``omega^(j) = (a lam + b) v_j(1) - (c lam + d) v_j'(1) + j (a v_{j-1}(1) - c v_{j-1}'(1))``.
    """
    v, w = endpoint_levels(spec, lam, m, ode_tol)
    left = spec.a * lam + spec.b
    right = spec.c * lam + spec.d
    out = left * v - right * w
    out[1:] += np.arange(1, m + 1) * (spec.a * v[:-1] - spec.c * w[:-1])
    return out


def characteristic(lam, spec, ode_tol=None):
    """The characteristic function omega at ``lam`` (real or complex)."""
    return characteristic_derivatives(lam, spec, 0, ode_tol)[0]


def local_radius(lam):
    """Neighbourhood radius used to normalize omega near ``lam``."""
    return 1.0 + math.sqrt(abs(lam))


def local_scale(lam, spec, derivs=None):
    """Magnitude normalizer: the largest scaled Taylor coefficient
    ``|omega^(j)| rho^j / j!`` (j <= 3) at ``lam`` and ``lam +- rho``."""
    rho = local_radius(lam)
    weights = np.array([rho**j / math.factorial(j) for j in range(MAX_MULTIPLICITY + 1)])
    best = 0.0
    for point in (lam - rho, lam, lam + rho):
        d = derivs if (point == lam and derivs is not None) else characteristic_derivatives(point, spec)
        best = max(best, float(np.max(np.abs(d) * weights)))
    return best


# -- records --------------------------------------------------------------------


@dataclass(frozen=True)
class EigenvalueRecord:
    """One distinct eigenvalue.  ``index`` is the first index it occupies."""

    index: int
    lam: float | complex
    multiplicity: int
    criticality: Criticality
    residuals: tuple
    scale: float

    @property
    def is_real(self):
        return not isinstance(self.lam, complex)

    @property
    def indices(self):
        return tuple(range(self.index, self.index + self.multiplicity))

    def with_index(self, index):
        return EigenvalueRecord(index, self.lam, self.multiplicity, self.criticality, self.residuals, self.scale)


@dataclass(frozen=True)
class SpectrumCase:
    """Which of the four alternatives holds.  ``k`` is the first index of the
    multiple eigenvalue; ``r`` and ``s = r + 1`` index the conjugate pair."""

    tag: str
    k: int | None = None
    r: int | None = None
    s: int | None = None


@dataclass(frozen=True)
class Spectrum:
    records: tuple
    case: SpectrumCase
    count: int
    window: tuple
    pair_note: str = ""
    extra: tuple = field(default=(), repr=False)

    def record_of(self, n):
        """The record whose index range contains ``n``, and the level within it."""
        for rec in self.records:
            if rec.index <= n < rec.index + rec.multiplicity:
                return rec, n - rec.index
        raise IndexError(f"index {n} outside the computed spectrum")

    def eigenvalue(self, n):
        return self.record_of(n)[0].lam


# -- classification of a single root --------------------------------------------


def _scaled(derivs, rho):
    return np.abs(derivs) * np.array([rho**j / math.factorial(j) for j in range(len(derivs))])


def _newton_on(spec, lam, order, lo=None, hi=None, iters=30):
    """Newton iteration on omega^(order) using omega^(order+1)."""
    tol = spec.tolerances.root_tol
    for _ in range(iters):
        d = characteristic_derivatives(lam, spec, order + 1)
        if d[order + 1] == 0:
            break
        step = -d[order] / d[order + 1]
        new = lam + step
        if lo is not None and not (lo <= new <= hi):
            break
        lam = new
        if abs(step) <= tol * (1.0 + abs(lam)):
            break
    return lam


def _order_at(derivs, rho, scale, mult_tol):
    scaled = _scaled(derivs, rho)
    for j, value in enumerate(scaled):
        if value > mult_tol * scale:
            return j
    return len(scaled)


def _make_record(spec, lam, multiplicity, derivs, scale):
    return EigenvalueRecord(
        index=-1,
        lam=lam,
        multiplicity=multiplicity,
        criticality=classify_criticality(lam, spec),
        residuals=tuple(float(abs(v)) for v in derivs[: multiplicity + 1]),
        scale=scale,
    )


def classify_root(spec, lam, lo=None, hi=None, prefer=(3, 2)):
    """Decide the multiplicity of a zero near ``lam`` and polish it.

    A simple zero is accepted when ``|omega'| rho`` exceeds ``mult_tol``
    times the local scale.  Otherwise Newton on ``omega^(m-1)`` is tried for
    each ``m`` in ``prefer`` and the first ``m`` meeting the derivative
    criterion (all lower scaled derivatives below the threshold, the m-th
    above it) is accepted.
    """
    mult_tol = spec.tolerances.mult_tol
    derivs = characteristic_derivatives(lam, spec)
    scale = local_scale(lam, spec, derivs)
    rho = local_radius(lam)
    if _order_at(derivs, rho, scale, mult_tol) == 0:
        raise ClusterUnresolved(f"no zero of omega near {lam!r}")
    scaled = _scaled(derivs, rho)
    if scaled[1] > mult_tol * scale:
        return _make_record(spec, lam, 1, derivs, scale)
    for m in prefer:
        cand = _newton_on(spec, lam, m - 1)
        if abs(cand - lam) > 1e-3 * rho:
            continue
        d = characteristic_derivatives(cand, spec)
        s = local_scale(cand, spec, d)
        if _order_at(d, local_radius(cand), s, mult_tol) == m:
            return _make_record(spec, cand, m, d, s)
    order = _order_at(derivs, rho, scale, mult_tol)
    if order > MAX_MULTIPLICITY:
        return _make_record(spec, lam, MAX_MULTIPLICITY, derivs, scale)
    raise ClusterUnresolved(f"zero near {lam!r} fails the multiplicity criterion (apparent order {order})")


# -- real roots -----------------------------------------------------------------


def scan_window(spec, count):
    """``(lam_low, lam_high)`` enclosing the first ``count`` eigenvalues.

    Besides ``-d/c``, ``-b/a`` and 0, the lower end sits below the square of
    the largest positive root of ``c mu^3 - a mu^2 - d mu + b``, whose roots
    locate any eigenvalue ``lam = -mu^2`` far below zero.
    """
    a, b, c, d = spec.a, spec.b, spec.c, spec.d
    qmax = float(np.max(np.abs(spec.potential.sampled(4097))))
    mus = [r.real for r in np.roots([c, -a, -d, b]) if abs(r.imag) < 1e-9 and r.real > 0]
    far = -((max(mus) + 1.0) ** 2) if mus else 0.0
    low = min(-d / c, -b / a, 0.0, far) - 25.0 - 2.0 * qmax
    high = ((count + 2) * math.pi) ** 2
    return low, high


def _scan_points(low, high, step):
    t_low = -math.sqrt(-low) if low < 0 else math.sqrt(low)
    t_high = math.sqrt(high)
    n = int(math.ceil((t_high - t_low) / step)) + 1
    # an irrational offset keeps distinguished values such as 0 off the nodes
    offset = step * (math.sqrt(5.0) - 1.0) / 2.0
    t = t_low + offset + step * np.arange(n)
    t = t[t < t_high]
    return np.sign(t) * t * t


def sample_characteristic(spec, lams, ode_tol=SCAN_TOL):
    return np.array([characteristic(float(lam), spec, ode_tol) for lam in lams])


def _bisect_sign(fn, lo, hi, flo, width):
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0:
            return mid, mid, fm
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return lo, hi, flo


def _refine_odd(spec, lo, hi):
    """Bisection then bracketed Newton for a sign change of omega on [lo, hi]."""
    rho = local_radius(0.5 * (lo + hi))
    f = lambda lam: characteristic(lam, spec)  # noqa: E731
    flo = f(lo)
    fhi = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    lo, hi, flo = _bisect_sign(f, lo, hi, flo, 1e-3 * rho)
    if lo == hi:
        return lo
    lam = 0.5 * (lo + hi)
    tol = spec.tolerances.root_tol
    best = (np.inf, lam)
    for _ in range(60):
        d = characteristic_derivatives(lam, spec, 1)
        if d[0] == 0:
            return lam
        best = min(best, (abs(d[0]), lam))
        if np.sign(d[0]) == np.sign(flo):
            lo, flo = lam, d[0]
        else:
            hi = lam
        if d[1] != 0 and abs(d[0] / d[1]) <= tol * (1.0 + abs(lam)):
            # converged: the correction is below tolerance, take it and stop
            lam = lam - d[0] / d[1]
            break
        new = lam - d[0] / d[1] if d[1] != 0 else 0.5 * (lo + hi)
        if not (lo < new < hi):
            new = 0.5 * (lo + hi)
        lam = new
        if hi - lo <= tol * (1.0 + abs(lam)):
            break
    d = characteristic_derivatives(lam, spec, 1)
    return min(best, (abs(d[0]), lam))[1]


def _extremum(spec, lo, hi):
    """Zero of omega' between ``lo`` and ``hi`` (where omega' changes sign), or None."""
    g = lambda lam: characteristic_derivatives(lam, spec, 1, SCAN_TOL)[1]  # noqa: E731
    glo, ghi = g(lo), g(hi)
    if np.sign(glo) == np.sign(ghi):
        return None
    rho = local_radius(0.5 * (lo + hi))
    lo, hi, glo = _bisect_sign(g, lo, hi, glo, 1e-6 * rho)
    return _newton_on(spec, 0.5 * (lo + hi), 1, lo - 1e-6 * rho, hi + 1e-6 * rho, iters=8)


@dataclass
class _ScanResult:
    lams: np.ndarray
    values: np.ndarray
    roots: list
    near_misses: list


def _real_roots_in(spec, low, high):
    lams = _scan_points(low, high, SCAN_STEP)
    vals = sample_characteristic(spec, lams)
    signs = np.sign(vals)
    roots = []
    near = []
    for i in range(len(lams) - 1):
        if signs[i] == 0:
            lo_i = max(i - 1, 0)
            roots.append(classify_root(spec, float(lams[i]), lams[lo_i], lams[i + 1]))
        elif signs[i] * signs[i + 1] < 0:
            lam = _refine_odd(spec, float(lams[i]), float(lams[i + 1]))
            roots.append(classify_root(spec, lam, prefer=(3, 2)))
    absv = np.abs(vals)
    for i in range(1, len(lams) - 1):
        if not (absv[i] < absv[i - 1] and absv[i] < absv[i + 1]):
            continue
        if not (signs[i - 1] == signs[i] == signs[i + 1] != 0):
            continue
        lo, hi = float(lams[i - 1]), float(lams[i + 1])
        ext = _extremum(spec, lo, hi)
        if ext is None:
            continue
        fe = characteristic(ext, spec)
        if np.sign(fe) != signs[i] and fe != 0:
            for a, b in ((lo, ext), (ext, hi)):
                lam = _refine_odd(spec, a, b)
                roots.append(classify_root(spec, lam, prefer=(3, 2)))
            continue
        derivs = characteristic_derivatives(ext, spec)
        scale = local_scale(ext, spec, derivs)
        if abs(fe) <= spec.tolerances.mult_tol * scale:
            roots.append(classify_root(spec, ext, prefer=(2, 3)))
        else:
            near.append(ext)
    roots = _merge(sorted(roots, key=lambda r: r.lam))
    return _ScanResult(lams=lams, values=vals, roots=roots, near_misses=near)


def _merge(roots):
    merged = []
    for rec in roots:
        if merged and abs(rec.lam - merged[-1].lam) <= 1e-6 * local_radius(rec.lam):
            prev = merged[-1]
            if prev.multiplicity != rec.multiplicity:
                raise ClusterUnresolved(
                    f"zeros {prev.lam!r} and {rec.lam!r} coincide but have multiplicities "
                    f"{prev.multiplicity} and {rec.multiplicity}"
                )
            if rec.residuals[0] < prev.residuals[0]:
                merged[-1] = rec
            continue
        merged.append(rec)
    return merged


def _index(records):
    out = []
    n = 0
    for rec in records:
        out.append(rec.with_index(n))
        n += rec.multiplicity
    return out


def _truncate(records, count):
    out = []
    total = 0
    for rec in records:
        if total >= count:
            break
        out.append(rec)
        total += rec.multiplicity
    return out, total


def locate_real_eigenvalues(spec, count):
    """The first ``count`` real eigenvalues (with multiplicity), ascending."""
    if count < 1:
        raise ValueError("count must be positive")
    low, high = scan_window(spec, count)
    scan = _real_roots_in(spec, low, high)
    records, total = _truncate(_index(scan.roots), count)
    if total < count:
        raise CountShortfall(count, total)
    return records


# -- the conjugate pair ---------------------------------------------------------


def _upper_path(x0, x1, height):
    """Corners of the upper half of the symmetric box, counterclockwise."""
    return [complex(x1, 0.0), complex(x1, height), complex(x0, height), complex(x0, 0.0)]


def _phase_change(spec, corners, min_frac=1e-10, max_evals=20000):
    """Continuous change of arg omega along the polyline ``corners``.

    Segments are halved until every step of the phase is at most pi/3.
    Raises WindingAmbiguous when a segment cannot be resolved.
    """
    evals = 0
    total = 0.0

    def omega(z):
        if z.imag == 0.0:
            return complex(characteristic(z.real, spec, SCAN_TOL))
        return complex(characteristic(z, spec, SCAN_TOL))

    for za, zb in zip(corners[:-1], corners[1:]):
        length = abs(zb - za)
        n0 = max(8, int(length / (0.5 * local_radius(max(abs(za), abs(zb))))))
        n0 = min(n0, 4096)
        ts = list(np.linspace(0.0, 1.0, n0 + 1))
        vals = [omega(za + (zb - za) * t) for t in ts]
        evals += len(vals)
        stack = list(zip(ts[:-1], ts[1:], vals[:-1], vals[1:]))[::-1]
        while stack:
            ta, tb, fa, fb = stack.pop()
            if fa == 0 or fb == 0:
                raise WindingAmbiguous("contour passes through a zero of omega")
            step = cmath.phase(fb / fa)
            if abs(step) <= math.pi / 3:
                total += step
                continue
            if (tb - ta) * length < min_frac * (1.0 + length) or evals > max_evals:
                raise WindingAmbiguous("contour passes too close to a zero of omega")
            tm = 0.5 * (ta + tb)
            fm = omega(za + (zb - za) * tm)
            evals += 1
            stack.append((tm, tb, fm, fb))
            stack.append((ta, tm, fa, fm))
    return total


def _box_count(spec, x0, x1, height):
    """Number of zeros (with multiplicity) in ``[x0, x1] x [-height, height]``.

    By conjugate symmetry the change of arg over the whole boundary is twice
    the change along the upper half.
    """
    turns = _phase_change(spec, _upper_path(x0, x1, height)) / math.pi
    count = round(turns)
    if abs(turns - count) > 0.1:
        raise WindingAmbiguous(f"non-integer winding {turns:.3f} on box [{x0}, {x1}] x [-{height}, {height}]")
    return count


def _real_count(roots, x0, x1):
    return sum(r.multiplicity for r in roots if x0 < r.lam < x1)


def _split_point(lams, vals, i0, i1):
    """A scan node between positions ``i0`` and ``i1`` near the middle where
    |omega| is locally largest (so the split line stays clear of zeros)."""
    mid = (i0 + i1) // 2
    half = max(1, (i1 - i0) // 4)
    lo, hi = max(i0 + 1, mid - half), min(i1 - 1, mid + half)
    window = np.abs(vals[lo : hi + 1]) / (1.0 + np.abs(lams[lo : hi + 1])) ** 1.5
    return lo + int(np.argmax(window))


def _moments(spec, x0, x1, height, nodes):
    """``Im(int_U z^k omega'/omega dz) / pi`` for k = 0, 1, 2 along the upper path."""
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    corners = _upper_path(x0, x1, height)
    acc = np.zeros(3, dtype=complex)
    for za, zb in zip(corners[:-1], corners[1:]):
        half = 0.5 * (zb - za)
        for x, w in zip(gx, gw):
            z = za + half * (x + 1.0)
            d = characteristic_derivatives(z, spec, 1)
            ratio = d[1] / d[0]
            acc += w * half * ratio * np.array([1.0, z, z * z])
    return acc.imag / math.pi


def _pair_in_box(spec, x0, x1, height, roots):
    real1 = sum(r.multiplicity * r.lam for r in roots if x0 < r.lam < x1)
    real2 = sum(r.multiplicity * r.lam**2 for r in roots if x0 < r.lam < x1)
    prev = None
    for nodes in (32, 64, 128, 256):
        mom = _moments(spec, x0, x1, height, nodes)
        if prev is not None and np.all(np.abs(mom - prev) <= 1e-6 * (1.0 + np.abs(mom))):
            break
        prev = mom
    x = 0.5 * (mom[1] - real1)
    re_sq = 0.5 * (mom[2] - real2)
    y = math.sqrt(max(x * x - re_sq, 1e-12))
    z = complex(x, y)
    tol = spec.tolerances.root_tol
    for _ in range(50):
        d = characteristic_derivatives(z, spec, 1)
        step = -d[0] / d[1]
        z = z + step
        if abs(step) <= tol * (1.0 + abs(z)):
            break
    if z.imag <= 0:
        z = z.conjugate()
    return z


def _nonreal_count(spec, x0, x1, height, roots):
    return _box_count(spec, x0, x1, height) - _real_count(roots, x0, x1)


def locate_complex_pair(spec, count=12, scan=None):
    """Search ``[lam_low, lam_high] x (0, 50]`` for a non-real eigenvalue.

    Returns ``(lam_r, conj(lam_r))`` or ``None`` ("none found in box").
    ``scan`` reuses the real-axis scan when available.
    """
    low, high = scan_window(spec, count)
    if scan is None:
        scan = _real_roots_in(spec, low, high)
    lams, vals, roots = scan.lams, scan.values, scan.roots
    last = len(lams) - 1
    tail = max(0, last - 8)
    i_hi = tail + int(np.argmax(np.abs(vals[tail:]) / (1.0 + np.abs(lams[tail:])) ** 1.5))
    i_lo = 0
    height = PAIR_BOX_HEIGHT
    nonreal = None
    for attempt in range(PAIR_RETRIES + 1):
        try:
            nonreal = _nonreal_count(spec, float(lams[i_lo]), float(lams[i_hi]), height, roots)
            break
        except WindingAmbiguous:
            if attempt == PAIR_RETRIES:
                raise
            height *= 1.0 + 0.07 * (attempt + 1)
            i_hi = max(i_hi - 1, 1)
    if nonreal == 0:
        return None
    if nonreal > 2:
        raise CaseContradiction(f"{nonreal} non-real eigenvalues found; at most one conjugate pair is possible")
    if nonreal != 2:
        raise WindingAmbiguous(f"winding count leaves {nonreal} non-real zeros (expected 0 or 2)")
    i0, i1 = i_lo, i_hi
    while i1 - i0 > 4:
        sp = _split_point(lams, vals, i0, i1)
        left = _nonreal_count(spec, float(lams[i0]), float(lams[sp]), height, roots)
        if left == 2:
            i1 = sp
        elif left == 0:
            i0 = sp
        else:
            raise WindingAmbiguous("pair straddles a split line")
    z = _pair_in_box(spec, float(lams[i0]), float(lams[i1]), height, roots)
    if abs(z.imag) <= spec.tolerances.root_tol * (1.0 + abs(z)):
        raise WindingAmbiguous("pair refinement collapsed onto the real axis")
    return z, z.conjugate()


# -- case classification --------------------------------------------------------


def classify_case(records, pair):
    """Tag the spectrum with one of the alternatives i-iv."""
    multiple = [r for r in records if r.is_real and r.multiplicity >= 2]
    if len(multiple) > 1:
        raise CaseContradiction("more than one multiple eigenvalue")
    if multiple and pair is not None:
        raise CaseContradiction("a multiple eigenvalue and a non-real pair cannot coexist")
    if pair is not None:
        upper = [r for r in records if not r.is_real and r.lam.imag > 0]
        lower = [r for r in records if not r.is_real and r.lam.imag < 0]
        if len(upper) != 1 or len(lower) != 1:
            raise CaseContradiction("pair records missing from the spectrum")
        return SpectrumCase("iv", r=upper[0].index, s=lower[0].index)
    if multiple:
        tag = "ii" if multiple[0].multiplicity == 2 else "iii"
        return SpectrumCase(tag, k=multiple[0].index)
    return SpectrumCase("i")


def compute_spectrum(spec, count=12, search_pair=True):
    """First ``count`` eigenvalues (with multiplicity), the pair search and the case."""
    low, high = scan_window(spec, count)
    scan = _real_roots_in(spec, low, high)
    pair = None
    note = "pair search skipped"
    if search_pair:
        pair = locate_complex_pair(spec, count, scan)
        note = "conjugate pair found" if pair else f"no non-real eigenvalue in box of height {PAIR_BOX_HEIGHT:g}"
    recs = list(scan.roots)
    if pair is not None:
        for z in pair:
            d = characteristic_derivatives(z, spec)
            recs.append(_make_record(spec, z, 1, d, local_scale(z, spec, d)))
    recs.sort(key=lambda r: (r.lam.real, -r.lam.imag if isinstance(r.lam, complex) else 0.0))
    records, total = _truncate(_index(recs), count)
    if total < count:
        raise CountShortfall(count, total)
    if pair is not None and not any(isinstance(r.lam, complex) for r in records):
        pair = None
    case = classify_case(records, pair)
    return Spectrum(records=tuple(records), case=case, count=count, window=(low, high), pair_note=note)


def root_residual_ok(rec, spec):
    """``|omega(lam)| <= root_tol * local scale``."""
    return rec.residuals[0] <= spec.tolerances.root_tol * rec.scale


# -- export -----------------------------------------------------------------------


def _fmt(value):
    return f"{value:.15g}"


def write_spectrum_csv(spectrum, path):
    """CSV with index, Re lam, Im lam, multiplicity, criticality, |omega|, |omega'|."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "re_lambda", "im_lambda", "multiplicity", "criticality", "abs_omega", "abs_domega"])
        for rec in spectrum.records:
            lam = complex(rec.lam)
            writer.writerow(
                [
                    rec.index,
                    _fmt(lam.real),
                    _fmt(lam.imag),
                    rec.multiplicity,
                    rec.criticality.value,
                    _fmt(rec.residuals[0]),
                    _fmt(rec.residuals[1]) if len(rec.residuals) > 1 else "",
                ]
            )
    return path


__all__ = [
    "EigenvalueRecord",
    "NumericalError",
    "Spectrum",
    "SpectrumCase",
    "characteristic",
    "characteristic_derivatives",
    "classify_case",
    "classify_root",
    "compute_spectrum",
    "locate_complex_pair",
    "locate_real_eigenvalues",
    "local_scale",
    "sample_characteristic",
    "scan_window",
    "write_spectrum_csv",
]
