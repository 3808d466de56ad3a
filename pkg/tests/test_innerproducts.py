import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import analysis_of, constants_of, problem, spectrum_of, system_of
from slep.chains import build_chain, build_system
from slep.errors import BranchUndefined, GridMismatch, MissingConstant
from slep.innerproducts import (
    IDENTITIES,
    A_functional,
    build_special_chain,
    compute_constants,
    defect,
    format_identity_report,
    inner_product,
    norm,
    simpson_weights,
    verify_identities,
    write_identity_csv,
)
from slep.integrator import integrate_base
from slep.problem import Criticality


def test_simpson_weights():
    assert simpson_weights(1025).sum() == pytest.approx(1.0, abs=1e-15)
    x = np.linspace(0, 1, 9)
    assert np.dot(simpson_weights(9), x**3) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(GridMismatch):
        simpson_weights(1024)


def test_eigenfunction_norms():
    _, chain, _, _ = constants_of("example2")
    y0 = chain.root_function(0)
    assert norm(y0) ** 2 == pytest.approx(1 / 3, abs=1e-12)
    assert inner_product(y0, y0) == pytest.approx(75 * 1 / 225, abs=1e-12)
    _, chain1, _, _ = constants_of("example1")
    assert norm(chain1.root_function(0)) ** 2 == pytest.approx(1.0, abs=1e-14)


def test_conjugate_symmetry_of_quadrature():
    spec = problem("example1")
    f = integrate_base(spec, 2.0 + 1.0j)
    g = integrate_base(spec, 5.0 - 0.3j)
    assert inner_product(f, g) == pytest.approx(np.conj(inner_product(g, f)), abs=1e-15)
    other = integrate_base(problem("example1", grid_points=257), 1.0)
    with pytest.raises(GridMismatch):
        inner_product(f, other)


def test_example1_constants():
    _, _, const, specials = constants_of("example1")
    spec = problem("example1")
    assert const.branch is Criticality.REGULAR
    assert const.pairing_second == pytest.approx(1 / 45, abs=1e-10)
    assert const.pairing_cross == pytest.approx(-1 / 189, abs=1e-10)
    assert const.shift_sharp == pytest.approx(5 / 21, abs=1e-9)
    assert const.pairing_top == pytest.approx(-5 / 3969, abs=1e-10)
    assert const.shift_sharp_top == pytest.approx(25 / 441, abs=1e-8)
    assert abs(const.pairing_first) <= 1e-10 and abs(const.defect) <= 1e-10
    assert A_functional(specials.sharp_first, spec).value == pytest.approx(-1 / 42, abs=1e-10)
    assert A_functional(specials.sharp_second, spec).value == pytest.approx(-11 / 10584, abs=1e-10)


def test_example1_special_functions():
    _, _, _, specials = constants_of("example1")
    x = specials.sharp_first.fn.grid
    assert np.max(np.abs(specials.sharp_first.fn.values - (-(x**2) / 2 + 5 / 21))) < 1e-9
    expected = x**4 / 24 - 5 * x**2 / 42 + 25 / 441
    assert np.max(np.abs(specials.sharp_second.fn.values - expected)) < 1e-8


@pytest.mark.parametrize("C, D", [(0.2, 0.0), (-0.4, 0.3), (1 / 14, -1.0)])
def test_example1_constants_with_shifts(C, D):
    spec, _, const, specials = constants_of("example1", C, D)
    assert const.pairing_cross == pytest.approx(2 * C / 45 - 1 / 189, abs=1e-10)
    assert const.shift_sharp == pytest.approx(5 / 21 - 2 * C, abs=1e-9)
    assert const.pairing_top == pytest.approx(-5 / 3969 + 2 * D / 45 + 2 * C / 189 - C**2 / 15, abs=1e-10)
    assert const.shift_sharp_top == pytest.approx(25 / 441 - 2 * D - 10 * C / 21 + 3 * C**2, abs=1e-8)
    assert A_functional(specials.sharp_first, spec).value == pytest.approx(-1 / 42 + C / 3, abs=1e-10)
    a2 = -11 / 10584 + C / 42 + D / 3 - C**2 / 3
    assert A_functional(specials.sharp_second, spec).value == pytest.approx(a2, abs=1e-10)


def test_example2_constants():
    spec, _, const, specials = constants_of("example2")
    assert const.branch is Criticality.CRITICAL
    assert const.pairing_second == pytest.approx(4 / 175, abs=1e-10)
    assert const.pairing_cross == pytest.approx(-277 / 70875, abs=1e-10)
    assert const.shift_sharp == pytest.approx(277 / 1620, abs=1e-8)
    assert const.pairing_top == pytest.approx(-491767 / 252598500, abs=1e-10)
    assert const.shift_sharp_top == pytest.approx(491767 / 5773680, abs=1e-8)
    assert A_functional(specials.sharp_first, spec).value == pytest.approx(-23 / 4860, abs=1e-10)
    assert A_functional(specials.sharp_second, spec).value == pytest.approx(-3551 / 17321040, abs=1e-11)


@pytest.mark.parametrize("C, D", [(0.3, 0.0), (-0.25, 0.4)])
def test_example2_constants_with_reference_shifts(C, D):
    # internal shifts are the negated reference constants for this problem
    spec, _, const, specials = constants_of("example2", -C, -D)
    assert const.pairing_cross == pytest.approx(-277 / 70875 - 8 * C / 175, abs=1e-10)
    assert const.shift_sharp == pytest.approx(277 / 1620 + 2 * C, abs=1e-8)
    assert A_functional(specials.sharp_first, spec).value == pytest.approx(-23 / 4860 - C / 15, abs=1e-10)
    a2 = -3551 / 17321040 - 23 * C / 4860 - D / 15 - C**2 / 15
    assert A_functional(specials.sharp_second, spec).value == pytest.approx(a2, abs=1e-11)


def test_example2_sharp_first_endpoint():
    spec, _, const, specials = constants_of("example2")
    f = specials.sharp_first
    assert f.fn.derivs[-1] / (spec.a * f.lam + spec.b) - spec.a * f.lower[0].derivs[-1] / (spec.a * f.lam + spec.b) ** 2 == pytest.approx(
        -23 / 4860, abs=1e-10
    )


def test_simple_real_defect_nonzero():
    spec, system = system_of("example1")
    for n in system.eigenfunction_indices():
        value = defect(system.functions[n], spec)
        assert abs(value) > 1e-3


@pytest.mark.parametrize("name", ["example1", "example2", "case_ii", "case_ii_critical"])
def test_defect_vanishes_on_multiple(name):
    spec, _, const, _ = constants_of(name)
    assert const.is_zero("defect", spec.tolerances.zero_tol)


def test_defect_vanishes_on_nonreal():
    spec, system = system_of("case_iv")
    case = system.case
    for n in (case.r, case.s):
        f = system.functions[n]
        assert abs(defect(f, spec)) <= 1e-8 * (norm(f) ** 2)


def test_case_ii_constants():
    for name in ("case_ii", "case_ii_critical"):
        spec, chain, const, specials = constants_of(name)
        assert chain.multiplicity == 2
        assert not const.is_zero("pairing_first", spec.tolerances.zero_tol)
        assert not const.is_zero("pairing_second", spec.tolerances.zero_tol)
        assert math.isfinite(const.shift_star)
        assert specials.star_first is not None and specials.sharp_first is None
        with pytest.raises(MissingConstant):
            const.require("shift_sharp")


@pytest.mark.parametrize("name", ["example1", "example2", "case_iii_neighbour"])
def test_triple_constants_invariants(name):
    spec, _, const, _ = constants_of(name)
    tol = spec.tolerances.zero_tol
    assert const.is_zero("pairing_first", tol)
    assert not const.is_zero("pairing_second", tol)
    assert const.shift_star is None


def test_pair_constants():
    an = analysis_of("case_iv")
    const = an.constants
    assert const.pair_pairing_conj == pytest.approx(np.conj(const.pair_pairing), rel=1e-8)
    assert abs(const.pair_pairing) > 1e-6


def test_missing_constant_for_simple_chain():
    spec = problem("case_i")
    rec = spectrum_of("case_i").records[2]
    chain = build_chain(spec, rec)
    const = compute_constants(spec, chain)
    with pytest.raises(MissingConstant):
        build_special_chain(spec, chain, const)
    with pytest.raises(MissingConstant):
        const.require("pairing_second")


def test_branch_undefined():
    spec = problem("example2")
    rec = spectrum_of("example2").records[0]
    chain = build_chain(spec, rec)
    bogus = chain.root_function(0)
    from dataclasses import replace

    with pytest.raises(BranchUndefined):
        A_functional(replace(bogus, criticality=Criticality.REGULAR), spec)


def test_q_shift_invariance():
    base = constants_of("example1")[2].pairing_second
    for C, D in [(0.5, 0.0), (-2.0, 1.0), (1 / 14, 3.0)]:
        assert constants_of("example1", C, D)[2].pairing_second == pytest.approx(base, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 5.0))
def test_constants_scale_quadratically(sigma):
    spec = problem("example1")
    scaled = spec.with_scale(sigma)
    sp = spectrum_of("example1")
    chain = build_chain(spec, sp.records[0])
    chain_s = build_chain(scaled, sp.records[0])
    c1 = compute_constants(spec, chain)
    c2 = compute_constants(scaled, chain_s)
    for name in ("pairing_second", "pairing_cross", "pairing_top"):
        assert getattr(c2, name) == pytest.approx(sigma**2 * getattr(c1, name), rel=1e-9)
    assert c2.shift_sharp == pytest.approx(c1.shift_sharp, rel=1e-9)


IDENTITY_FIXTURES = ["example1", "example2", "case_i", "case_ii", "case_ii_critical", "case_iii_neighbour", "case_iv"]


def _report(name):
    an = analysis_of(name)
    return verify_identities(an.spec, an.system, an.specials)


@pytest.mark.parametrize("name", IDENTITY_FIXTURES)
def test_identities_pass(name):
    report = _report(name)
    assert report.checks
    assert report.all_passed, format_identity_report(report)
    assert report.max_rel() < 1e-7


def test_identity_coverage():
    covered = set()
    for name in IDENTITY_FIXTURES:
        covered |= _report(name).covered()
    required = {(ident, br) for ident, branches in IDENTITIES.items() for br in branches}
    assert required <= covered, sorted(required - covered)


def test_example_identity_pairs():
    report = _report("example1")
    entries = [c for c in report.checks if c.identity == "first_assoc_orthogonality" and c.members.startswith("(y_1,")]
    assert any("y_3" in c.members for c in entries)
    assert all(c.rel_err < 1e-8 for c in entries)
    report2 = _report("example2")
    entries = [c for c in report2.checks if c.identity == "eigen_orthogonality" and "y_0" in c.members and "y_3" in c.members]
    assert entries and entries[0].branch == "critical" and entries[0].rel_err < 1e-8


def test_simpson_convergence_on_orthogonality():
    errs = []
    for m in (257, 513):
        spec = problem("case_i", grid_points=m)
        sp = spectrum_of("case_i", 10, m)
        system = build_system(spec, sp)
        rep = verify_identities(spec, system)
        errs.append(max(c.abs_err for c in rep.checks if c.identity == "eigen_orthogonality"))
    assert errs[0] / errs[1] >= 8


def test_identity_csv(tmp_path):
    path = write_identity_csv(_report("example1"), tmp_path / "id.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "identity,branch,members,lhs,rhs,abs_err,rel_err,pass"
    assert all(line.endswith(",true") for line in lines[1:])
