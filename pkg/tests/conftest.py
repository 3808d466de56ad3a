import json
import math
from functools import lru_cache
from pathlib import Path

import pytest

from slep.basis import analyze
from slep.chains import build_system
from slep.innerproducts import build_special_chain, compute_constants
from slep.problem import make_problem
from slep.spectrum import compute_spectrum

HERE = Path(__file__).parent
CONFIGS = HERE.parent / "configs"
INSTANCES = json.loads((HERE / "fixtures" / "instances.json").read_text())


def _coef(entry, key):
    return float(entry[key])


def instance_problem(name, **overrides):
    entry = INSTANCES[name]
    beta = {"pi/2": math.pi / 2}[entry["beta"]]
    return make_problem(*(_coef(entry, k) for k in "abcd"), beta=beta, **overrides)


PROBLEMS = {
    "example1": lambda **kw: make_problem(3, 0, 1, -3, **kw),
    "example2": lambda **kw: make_problem(9, 15, 5, 0, beta=3 * math.pi / 4, scale=math.sqrt(2), **kw),
    "case_i": lambda **kw: instance_problem("case_i_simple", **kw),
    "case_ii": lambda **kw: instance_problem("case_ii_regular_double", **kw),
    "case_ii_critical": lambda **kw: instance_problem("case_ii_critical_double", **kw),
    # |b| ~ 600 amplifies the ODE error in omega, so this fixture integrates tighter
    "case_iii_neighbour": lambda **kw: instance_problem("case_iii_critical_neighbour", ode_tol=1e-13, **kw),
    "case_iv": lambda **kw: instance_problem("case_iv_pair", **kw),
}


def problem(name, grid_points=1025, scale=None):
    kw = {"grid_points": grid_points}
    spec = PROBLEMS[name](**kw)
    if scale is not None:
        spec = spec.with_scale(scale)
    return spec


@lru_cache(maxsize=None)
def spectrum_of(name, count=10, grid_points=1025):
    return compute_spectrum(problem(name, grid_points), count)


@lru_cache(maxsize=None)
def system_of(name, count=10, shift_C=0.0, shift_D=0.0, grid_points=1025):
    spec = problem(name, grid_points)
    return spec, build_system(spec, spectrum_of(name, count, grid_points), shift_C, shift_D)


@lru_cache(maxsize=None)
def analysis_of(name, count=10, shift_C=0.0, shift_D=0.0, grid_points=1025):
    spec, system = system_of(name, count, shift_C, shift_D, grid_points)
    return analyze(spec, system)


@lru_cache(maxsize=None)
def constants_of(name, shift_C=0.0, shift_D=0.0):
    spec, system = system_of(name, 10, shift_C, shift_D)
    chain = system.distinguished_chain()
    const = compute_constants(spec, chain)
    return spec, chain, const, build_special_chain(spec, chain, const)


@pytest.fixture(scope="session")
def instances():
    return INSTANCES
