"""Independent high-precision oracles for the q = 0 problems used as fixtures.

For q = 0 the shooting solution is known in closed form,

    y(x) = sigma (sin(beta) cos(s x) + cos(beta) sin(s x) / s),   s = sqrt(lam),

so the characteristic function and its lambda-derivatives can be evaluated
with mpmath without touching the package's integrator.  Running this file
regenerates ``fixtures/instances.json``.
"""

import json
import sys
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40

FIXTURE_PATH = Path(__file__).with_name("fixtures") / "instances.json"


def _sinc_like(lam):
    """sin(sqrt(lam)) / sqrt(lam), entire in lam."""
    if lam == 0:
        return mp.mpf(1)
    s = mp.sqrt(lam)
    return mp.sin(s) / s


def endpoint(lam, beta, sigma=1):
    """(y(1), y'(1)) of the q = 0 shooting solution."""
    lam = mp.mpmathify(lam)
    c = mp.cos(mp.sqrt(lam)) if lam != 0 else mp.mpf(1)
    y1 = sigma * (mp.sin(beta) * c + mp.cos(beta) * _sinc_like(lam))
    dy1 = sigma * (-mp.sin(beta) * lam * _sinc_like(lam) + mp.cos(beta) * c)
    return y1, dy1


def omega(lam, a, b, c, d, beta, sigma=1):
    y1, dy1 = endpoint(lam, beta, sigma)
    value = (a * lam + b) * y1 - (c * lam + d) * dy1
    # real lam gives a real value; drop the rounding-level imaginary part
    return mp.re(value) if mp.im(mp.mpmathify(lam)) == 0 else value


def omega_derivative(lam, order, a, b, c, d, beta, sigma=1):
    return mp.diff(lambda z: omega(z, a, b, c, d, beta, sigma), lam, order)


def bisect_double_d(a=1, b=0, c=1, beta=mp.pi / 2, lam0=0, lo=-3, hi=0.5):
    """Bisection on d for a collision of real roots at ``lam0``.

    With b = 0, beta = pi/2 the point lam0 = 0 is a root for every d; the
    root becomes double where omega'(0; d) changes sign.
    """
    g = lambda dd: omega_derivative(lam0, 1, a, b, c, dd, beta)  # noqa: E731
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    glo = g(lo)
    if glo * g(hi) > 0:
        raise ValueError("no sign change of omega' on the d bracket")
    for _ in range(140):
        mid = (lo + hi) / 2
        gm = g(mid)
        if gm == 0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return (lo + hi) / 2


def triple_with_critical_neighbour(c=1, beta=mp.pi / 2, guess=(-15.3, 609.5, 34.5)):
    """A regular triple eigenvalue of a problem whose d puts the critical
    point -d/c = pi^2/4 on the spectrum (y = cos(pi x / 2) vanishes at 1).

    Solves omega = omega' = omega'' = 0 for (a, b, lam) with d fixed.
    """
    d = -mp.pi**2 / 4

    def equations(a, b, lam):
        return [omega_derivative(lam, j, a, b, c, d, beta) for j in range(3)]

    a, b, lam = mp.findroot(equations, [mp.mpf(g) for g in guess])
    return {"a": a, "b": b, "c": mp.mpf(c), "d": d, "lam": lam}


def taylor_cubic_roots(a, b, c, d, beta=mp.pi / 2, lam0=0):
    """Roots of the cubic Taylor polynomial of omega at lam0."""
    coeffs = [omega_derivative(lam0, j, a, b, c, d, beta) / mp.factorial(j) for j in range(4)]
    return mp.polyroots(coeffs[::-1], maxsteps=200, extraprec=60)


def cubic_discriminant(a, b, c, d, beta=mp.pi / 2, lam0=0):
    """Discriminant of the cubic Taylor polynomial; negative means a non-real pair."""
    p3, p2, p1, p0 = [omega_derivative(lam0, j, a, b, c, d, beta) / mp.factorial(j) for j in (3, 2, 1, 0)]
    return 18 * p3 * p2 * p1 * p0 - 4 * p2**3 * p0 + p2**2 * p1**2 - 4 * p3 * p1**3 - 27 * p3**2 * p0**2


def scan_for_pair(a=3, b=0, c=1, d_values=None):
    """Values of d for which the triple at 0 (d = -3) splits into a real root
    and a non-real pair, judged from the cubic Taylor model near 0."""
    if d_values is None:
        d_values = [mp.mpf(-3.5) + mp.mpf(k) / 10 for k in range(11)]
    hits = []
    for d in d_values:
        if cubic_discriminant(a, b, c, d) < -mp.mpf("1e-25"):
            hits.append(d)
    return hits


def complex_pair(a=3, b=0, c=1, d=-3.1, guess=0.07 + 1.22j):
    z = mp.findroot(lambda lam: omega(lam, a, b, c, d, mp.pi / 2), mp.mpc(guess))
    return z


def positive_roots(a, b, c, d, beta, sigma=1, count=8, step=0.05):
    """First ``count`` positive zeros of omega, bracketed on sqrt(lam) and
    refined by the Illinois method."""
    f = lambda t: omega(t * t, a, b, c, d, beta, sigma)  # noqa: E731
    roots = []
    t = mp.mpf(step)
    ft = f(t)
    while len(roots) < count:
        t2 = t + step
        f2 = f(t2)
        if ft * f2 < 0:
            r = mp.findroot(f, (t, t2), solver="illinois")
            roots.append(r * r)
        t, ft = t2, f2
    return roots


def _s(value):
    return mp.nstr(value, 25)


def generate():
    dstar = bisect_double_d()
    trip = triple_with_critical_neighbour()
    pair = complex_pair()
    crit_d = -mp.pi**2 / 4
    out = {
        "case_ii_regular_double": {
            "oracle": "bisection on d of omega'(0; d), a=1, b=0, c=1, beta=pi/2, q=0",
            "a": 1.0,
            "b": 0.0,
            "c": 1.0,
            "d": _s(dstar),
            "beta": "pi/2",
            "lam": "0",
        },
        "case_ii_critical_double": {
            "oracle": "closed form: y = cos(pi x / 2), omega'(pi^2/4) = 0",
            "a": 1.0,
            "b": _s(-crit_d),
            "c": 1.0,
            "d": _s(crit_d),
            "beta": "pi/2",
            "lam": _s(-crit_d),
            "omega_prime": _s(omega_derivative(-crit_d, 1, 1, -crit_d, 1, crit_d, mp.pi / 2)),
        },
        "case_iii_critical_neighbour": {
            "oracle": "mpmath findroot on omega = omega' = omega'' = 0 in (a, b, lam), c=1, d=-pi^2/4",
            "a": _s(trip["a"]),
            "b": _s(trip["b"]),
            "c": 1.0,
            "d": _s(trip["d"]),
            "beta": "pi/2",
            "lam": _s(trip["lam"]),
        },
        "case_i_simple": {"oracle": "none needed", "a": 1.0, "b": 0.0, "c": 1.0, "d": -2.0, "beta": "pi/2"},
        "case_iv_pair": {
            "oracle": "cubic Taylor scan over d then mpmath findroot on the closed form",
            "a": 3.0,
            "b": 0.0,
            "c": 1.0,
            "d": -3.1,
            "beta": "pi/2",
            "lam_re": _s(mp.re(pair)),
            "lam_im": _s(abs(mp.im(pair))),
            "pair_d_values": [_s(v) for v in scan_for_pair()],
        },
        "example1_positive_roots": {
            "oracle": "closed form omega bracketed on sqrt(lam), Illinois refinement",
            "roots": [_s(r) for r in positive_roots(3, 0, 1, -3, mp.pi / 2, count=9)],
        },
        "example2_positive_roots": {
            "oracle": "closed form omega bracketed on sqrt(lam), Illinois refinement",
            "roots": [_s(r) for r in positive_roots(9, 15, 5, 0, 3 * mp.pi / 4, mp.sqrt(2), count=9)],
        },
        "case_i_roots": {
            "oracle": "closed form omega bracketed on sqrt(lam), Illinois refinement; lam = 0 is a root since b = 0",
            "roots": [_s(r) for r in positive_roots(1, 0, 1, -2, mp.pi / 2, count=31)],
        },
        "example1_omega": {
            "oracle": "mpmath derivatives of the closed form at 0",
            "derivatives": [_s(omega_derivative(0, j, 3, 0, 1, -3, mp.pi / 2)) for j in range(4)],
        },
    }
    return out


if __name__ == "__main__":
    data = generate()
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if "--write" in sys.argv:
        FIXTURE_PATH.parent.mkdir(exist_ok=True)
        FIXTURE_PATH.write_text(text)
    print(text)
