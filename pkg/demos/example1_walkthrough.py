"""Walk through the triple eigenvalue of Example 1: (a, b, c, d) = (3, 0, 1, -3), q = 0.

Run:  python3 demos/example1_walkthrough.py
"""

from fractions import Fraction

from slep.basis import analyze, basis_verdict, biorthogonality_matrix, build_biorthogonal
from slep.chains import build_system
from slep.innerproducts import A_functional, format_identity_report, verify_identities
from slep.problem import make_problem
from slep.spectrum import compute_spectrum


def show(label, value, exact):
    print(f"  {label:22s} {value: .12f}   exact {str(exact):>12s}  err {abs(value - float(exact)):.1e}")


spec = make_problem(3, 0, 1, -3)
spectrum = compute_spectrum(spec, 10)
print(f"case {spectrum.case.tag}, k = {spectrum.case.k}")
for rec in spectrum.records[:4]:
    print(f"  lambda_{rec.index} = {float(rec.lam): .10f}  multiplicity {rec.multiplicity}  {rec.criticality.value}")

system = build_system(spec, spectrum)
an = analyze(spec, system)
c = an.constants
print("\nchain constants at zero shifts")
show("Q", c.pairing_second, Fraction(1, 45))
show("L", c.pairing_cross, Fraction(-1, 189))
show("C2 = -L/Q", c.shift_sharp, Fraction(5, 21))
show("J", c.pairing_top, Fraction(-5, 3969))
show("D1 = -J/Q", c.shift_sharp_top, Fraction(25, 441))
show("A(y#_1)", A_functional(an.specials.sharp_first, spec).value, Fraction(-1, 42))
show("A(y#_2)", A_functional(an.specials.sharp_second, spec).value, Fraction(-11, 10584))

print("\nboundary-term identities")
report = verify_identities(spec, system, an.specials)
print(format_identity_report(report).splitlines()[-1])

print("\nremoving one root function")
for l in range(4):
    v = basis_verdict(an, l)
    dev = biorthogonality_matrix(build_biorthogonal(an, l, v), system)[1]
    print(f"  l={l}: {v.verdict:10s} {v.rule:22s} biorthogonality deviation {dev:.1e}")
