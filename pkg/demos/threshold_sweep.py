"""Sweep the first-order chain shift through the basis threshold of both examples.

Removing y_1 leaves a basis unless A(y#_1) vanishes.  A(y#_1) is affine in the
shift, so the verdict flips at a single shift value.

Run:  python3 demos/threshold_sweep.py
"""

import numpy as np

from slep.basis import analyze, basis_verdict
from slep.chains import build_system
from slep.cli import PRESETS, preset_shifts
from slep.problem import validate_problem
from slep.spectrum import compute_spectrum


def sweep(preset, centre, widths=(0.05, 1e-3, 1e-6, 1e-9, 0.0)):
    spec = validate_problem(dict(PRESETS[preset]["problem"]))
    spectrum = compute_spectrum(spec, 10)
    print(f"{preset}: reference threshold C = {centre:.12f}")
    for w in sorted({centre - x for x in widths} | {centre + x for x in widths}):
        C, _ = preset_shifts(preset, w, 0.0)
        an = analyze(spec, build_system(spec, spectrum, C, 0.0))
        v = basis_verdict(an, 1)
        print(f"  C = {w: .12f}  A(y#_1) = {v.decisive_value: .3e}  {v.verdict}")
    shifts = np.array([centre - 0.1, centre + 0.1])
    values = []
    for w in shifts:
        C, _ = preset_shifts(preset, w, 0.0)
        values.append(basis_verdict(analyze(spec, build_system(spec, spectrum, C, 0.0)), 1).decisive_value)
    print(f"  slope dA/dC = {(values[1] - values[0]) / (shifts[1] - shifts[0]):.9f}\n")


sweep("example1", 1 / 14)
sweep("example2", -23 / 324)
