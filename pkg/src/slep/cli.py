"""Command-line front end.

    slep spectrum --config problem.json --N 12
    slep basis --config problem.json --removed 1 --shift-C 0.0714285714
    slep report --preset example1 --N 10 --removed 1 --out results/

Exit status: 0 success, 2 invalid input, 3 numerical failure, 4 a
``not_basis`` verdict when ``--expect-basis`` was given.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import basis as basis_mod
from .chains import RootChain, build_system, write_chain
from .errors import NoData, NotABasis, NumericalError, SlepError
from .innerproducts import (
    A_functional,
    format_identity_report,
    verify_identities,
    write_identity_csv,
)
from .problem import load_problem, problem_to_dict, validate_problem
from .spectrum import SCAN_TOL, characteristic, compute_spectrum, write_spectrum_csv

COMMANDS = ("spectrum", "chains", "verify", "basis", "biortho", "report")
FORMATS = ("csv", "json", "text")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_NOT_BASIS = 4

#: Built-in problems with the sign convention of their reference shifts:
#: internal (C, D) = (sign_C * C, sign_D * D).
PRESETS = {
    "example1": {
        "problem": {"a": 3, "b": 0, "c": 1, "d": -3, "beta": math.pi / 2, "q": "0", "scale": 1.0},
        "sign_C": 1.0,
        "sign_D": 1.0,
    },
    "example2": {
        "problem": {"a": 9, "b": 15, "c": 5, "d": 0, "beta": 3 * math.pi / 4, "q": "0", "scale": math.sqrt(2)},
        "sign_C": -1.0,
        "sign_D": -1.0,
    },
}


def preset_shifts(name, C, D):
    """Internal shifts for a preset's reference ``(C, D)``."""
    p = PRESETS[name]
    return p["sign_C"] * C, p["sign_D"] * D


@dataclass
class RunConfig:
    command: str
    problem: object
    N: int = 12
    removed: int | None = None
    shift_C: float = 0.0
    shift_D: float = 0.0
    out: Path = Path("slep_out")
    formats: tuple = FORMATS
    expect_basis: bool = False


def _fmt(value):
    return f"{value:.15g}"


def _num(value):
    if value is None:
        return None
    value = complex(value)
    if value.imag == 0:
        return _fmt(value.real)
    return [_fmt(value.real), _fmt(value.imag)]


# -- plot data ----------------------------------------------------------------------


@dataclass(frozen=True)
class OmegaSamples:
    lams: np.ndarray
    values: np.ndarray


def omega_samples(spec, low, high, n=2048):
    lams = np.linspace(low, high, n)
    vals = np.array([characteristic(float(x), spec, SCAN_TOL) for x in lams])
    return OmegaSamples(lams, vals)


def emit_plot_data(artifact, path):
    """CSV for external plotting: chain members over x, or (lambda, omega) samples."""
    path = Path(path)
    if artifact is None:
        raise NoData("nothing to plot")
    if isinstance(artifact, RootChain):
        members = artifact.members
        cplx = np.iscomplexobj(members[0].values)
        header = ["x"]
        for j in range(len(members)):
            header += [f"re_member{j}", f"im_member{j}"] if cplx else [f"member{j}"]
        rows = []
        for i, x in enumerate(members[0].grid):
            row = [_fmt(x)]
            for fn in members:
                v = fn.values[i]
                row += [_fmt(v.real), _fmt(v.imag)] if cplx else [_fmt(v)]
            rows.append(row)
    elif isinstance(artifact, OmegaSamples):
        if len(artifact.lams) == 0:
            raise NoData("no omega samples")
        header = ["lambda", "omega"]
        rows = [[_fmt(x), _fmt(v)] for x, v in zip(artifact.lams, artifact.values)]
    else:
        raise NoData(f"no plot data for {type(artifact).__name__}")
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


# -- pipeline -----------------------------------------------------------------------


@dataclass
class Artifacts:
    out: Path
    paths: list = field(default_factory=list)

    def add(self, path):
        self.paths.append(Path(path))
        return path

    def write_text(self, name, text):
        path = self.out / name
        path.write_text(text, encoding="utf-8")
        return self.add(path)

    def write_json(self, name, data):
        return self.write_text(name, json.dumps(data, indent=2, sort_keys=True) + "\n")

    def manifest(self):
        entries = []
        for p in sorted(set(self.paths)):
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            entries.append({"path": str(p.relative_to(self.out)), "sha256": digest})
        path = self.out / "manifest.json"
        path.write_text(json.dumps({"artifacts": entries}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _spectrum_json(spectrum):
    return {
        "case": spectrum.case.tag,
        "k": spectrum.case.k,
        "r": spectrum.case.r,
        "s": spectrum.case.s,
        "pair_search": spectrum.pair_note,
        "window": [_fmt(x) for x in spectrum.window],
        "records": [
            {
                "index": rec.index,
                "lambda": _num(rec.lam),
                "multiplicity": rec.multiplicity,
                "criticality": rec.criticality.value,
                "residuals": [_fmt(abs(r)) for r in rec.residuals],
            }
            for rec in spectrum.records
        ],
    }


def _spectrum_text(spectrum):
    lines = [f"case {spectrum.case.tag}" + (f" (k={spectrum.case.k})" if spectrum.case.k is not None else "")]
    for rec in spectrum.records:
        lam = complex(rec.lam)
        lam_s = _fmt(lam.real) if lam.imag == 0 else f"{_fmt(lam.real)} {'+' if lam.imag > 0 else '-'} {_fmt(abs(lam.imag))}i"
        lines.append(f"  lambda_{rec.index} = {lam_s}  multiplicity {rec.multiplicity}  {rec.criticality.value}")
    lines.append(spectrum.pair_note)
    return "\n".join(lines) + "\n"


class Session:
    """Lazily computed pipeline stages shared by the commands."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.spec = cfg.problem
        self._spectrum = self._system = self._analysis = None

    @property
    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = compute_spectrum(self.spec, self.cfg.N)
        return self._spectrum

    @property
    def system(self):
        if self._system is None:
            self._system = build_system(self.spec, self.spectrum, self.cfg.shift_C, self.cfg.shift_D)
        return self._system

    @property
    def analysis(self):
        if self._analysis is None:
            self._analysis = basis_mod.analyze(self.spec, self.system)
        return self._analysis


def _do_spectrum(s, art):
    fmts = s.cfg.formats
    if "csv" in fmts:
        art.add(write_spectrum_csv(s.spectrum, art.out / "spectrum.csv"))
    if "json" in fmts:
        art.write_json("spectrum.json", _spectrum_json(s.spectrum))
    if "text" in fmts:
        art.write_text("spectrum.txt", _spectrum_text(s.spectrum))


def _do_chains(s, art):
    for index, chain in sorted(s.system.chains.items()):
        for p in write_chain(chain, art.out / "chains", f"chain_{index}"):
            art.add(p)


def _do_verify(s, art):
    report = verify_identities(s.spec, s.system, s.analysis.specials)
    if "csv" in s.cfg.formats or "json" in s.cfg.formats:
        art.add(write_identity_csv(report, art.out / "identities.csv"))
    if "text" in s.cfg.formats:
        art.write_text("identities.txt", format_identity_report(report))
    return report


def _write_verdicts(s, art, rows, stem):
    if "csv" in s.cfg.formats:
        art.add(basis_mod.write_verdicts_csv(rows, art.out / f"{stem}.csv"))
    if "json" in s.cfg.formats:
        art.add(basis_mod.write_verdicts_json(rows, art.out / f"{stem}.json"))
    if "text" in s.cfg.formats:
        art.write_text(f"{stem}.txt", "".join(f"l={r.removed_index}: {r.verdict.verdict}. {r.verdict.certificate}\n" for r in rows))


def _do_basis(s, art):
    verdict = basis_mod.basis_verdict(s.analysis, s.cfg.removed)
    row = basis_mod.MinimalityRow(s.cfg.removed, verdict, None)
    _write_verdicts(s, art, [row], "verdict")
    return verdict


def _do_biortho(s, art):
    verdict = basis_mod.basis_verdict(s.analysis, s.cfg.removed)
    try:
        bio = basis_mod.build_biorthogonal(s.analysis, s.cfg.removed, verdict)
    except (NotABasis, basis_mod.DenominatorNearZero) as exc:
        print(f"slep: no biorthogonal system for l={s.cfg.removed}: {exc}", file=sys.stderr)
        return verdict, None
    matrix, dev = basis_mod.biorthogonality_matrix(bio, s.system)
    art.add(basis_mod.write_matrix_csv(matrix, bio.retained, art.out / f"biortho_l{s.cfg.removed}.csv"))
    if "json" in s.cfg.formats:
        art.write_json(
            f"biortho_l{s.cfg.removed}.json",
            {
                "removed_index": s.cfg.removed,
                "pivot": bio.pivot,
                "max_deviation": _fmt(dev),
                "denominators": {str(n): [name, _num(v)] for n, (name, v) in sorted(bio.denominators.items())},
            },
        )
    return verdict, dev


def _traced(value, module, formula):
    return {"value": _num(value), "module": module, "formula": formula}


def _summary(s, report, rows):
    spec = s.spec
    spectrum = s.spectrum
    out = {
        "problem": {k: (_fmt(v) if isinstance(v, float) else v) for k, v in problem_to_dict(spec).items() if k != "tolerances"},
        "tolerances": {k: _fmt(v) for k, v in problem_to_dict(spec)["tolerances"].items()},
        "N": s.cfg.N,
        "shift_C": _fmt(s.cfg.shift_C),
        "shift_D": _fmt(s.cfg.shift_D),
        "case": spectrum.case.tag,
        "eigenvalues": [
            dict(_traced(rec.lam, "spectrum", "characteristic_root"), index=rec.index, multiplicity=rec.multiplicity, criticality=rec.criticality.value)
            for rec in spectrum.records
        ],
        "constants": {},
        "A_values": {},
        "identities": {"checked": len(report.checks), "passed": sum(c.passed for c in report.checks), "max_rel": _fmt(report.max_rel())},
        "verdicts": [
            {
                "removed_index": r.removed_index,
                "verdict": r.verdict.verdict,
                "rule": r.verdict.rule,
                "decisive": None if r.verdict.decisive_member is None else _traced(r.verdict.decisive_value, "basis", f"A_functional({r.verdict.decisive_member})"),
                "max_deviation": None if r.max_deviation is None else _traced(r.max_deviation, "basis", "biorthogonality_matrix"),
            }
            for r in rows
        ],
    }
    const = s.analysis.constants
    if const is not None:
        for name in (
            "defect",
            "pairing_first",
            "pairing_second",
            "pairing_cross",
            "pairing_top",
            "shift_star",
            "shift_sharp",
            "shift_sharp_top",
            "pair_pairing",
            "pair_pairing_conj",
        ):
            value = getattr(const, name)
            if value is not None:
                out["constants"][name] = _traced(value, "innerproducts", f"compute_constants.{name}")
    sp = s.analysis.specials
    if sp is not None:
        for name in ("star_first", "sharp_first", "star_second", "sharp_second"):
            member = getattr(sp, name)
            if member is not None:
                out["A_values"][name] = _traced(A_functional(member, spec).value, "innerproducts", f"A_functional({member.label})")
    return out


def _summary_text(summary):
    lines = [f"case {summary['case']}, N = {summary['N']}, shifts C = {summary['shift_C']}, D = {summary['shift_D']}"]
    for name, entry in summary["constants"].items():
        lines.append(f"  {name} = {entry['value']}")
    for name, entry in summary["A_values"].items():
        lines.append(f"  A({name}) = {entry['value']}")
    ids = summary["identities"]
    lines.append(f"identities: {ids['passed']}/{ids['checked']} passed, max relative discrepancy {ids['max_rel']}")
    for v in summary["verdicts"]:
        lines.append(f"  removed {v['removed_index']}: {v['verdict']} ({v['rule']})")
    return "\n".join(lines) + "\n"


def _do_report(s, art):
    _do_spectrum(s, art)
    _do_chains(s, art)
    report = _do_verify(s, art)
    removed = None
    if s.cfg.removed is not None:
        removed = sorted(set(range(min(s.cfg.N - 1, 3) + 1)) | {s.cfg.removed})
    rows = basis_mod.minimality_report(s.analysis, removed)
    _write_verdicts(s, art, rows, "verdicts")
    if s.cfg.removed is not None:
        _do_biortho(s, art)
    chain = s.system.distinguished_chain() or s.system.chains[0]
    art.add(emit_plot_data(chain, art.out / "plot_chain.csv"))
    low, high = s.spectrum.window
    art.add(emit_plot_data(omega_samples(s.spec, low, high), art.out / "plot_omega.csv"))
    summary = _summary(s, report, rows)
    art.write_json("summary.json", summary)
    if "text" in s.cfg.formats:
        art.write_text("summary.txt", _summary_text(summary))
    return summary, rows


def run(cfg):
    """Execute one command; returns ``(exit_status, summary)``."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    art = Artifacts(cfg.out)
    s = Session(cfg)
    status = EXIT_OK
    result = None
    if cfg.command == "spectrum":
        _do_spectrum(s, art)
        result = _spectrum_json(s.spectrum)
    elif cfg.command == "chains":
        _do_chains(s, art)
    elif cfg.command == "verify":
        report = _do_verify(s, art)
        result = {"checked": len(report.checks), "passed": sum(c.passed for c in report.checks)}
    elif cfg.command == "basis":
        verdict = _do_basis(s, art)
        result = {"verdict": verdict.verdict, "rule": verdict.rule}
        if cfg.expect_basis and verdict.verdict != basis_mod.BASIS:
            status = EXIT_NOT_BASIS
    elif cfg.command == "biortho":
        verdict, dev = _do_biortho(s, art)
        result = {"verdict": verdict.verdict, "max_deviation": dev}
        if cfg.expect_basis and verdict.verdict != basis_mod.BASIS:
            status = EXIT_NOT_BASIS
    elif cfg.command == "report":
        result, rows = _do_report(s, art)
        if cfg.expect_basis and any(r.verdict.verdict != basis_mod.BASIS for r in rows if cfg.removed is None or r.removed_index == cfg.removed):
            status = EXIT_NOT_BASIS
    art.manifest()
    return status, result


def build_parser():
    parser = argparse.ArgumentParser(prog="slep", description="Spectral analysis with an eigenparameter-dependent boundary condition.")
    parser.add_argument("command", choices=COMMANDS)
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="problem JSON file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in problem; shifts are read in its reference convention")
    parser.add_argument("--N", type=int, default=12, help="number of eigenvalues, counted with multiplicity (>= 4)")
    parser.add_argument("--removed", type=int, help="index of the removed root function")
    parser.add_argument("--shift-C", type=float, default=0.0, dest="shift_C")
    parser.add_argument("--shift-D", type=float, default=0.0, dest="shift_D")
    parser.add_argument("--grid-points", type=int, dest="grid_points", help="override the grid size")
    parser.add_argument("--expect-basis", action="store_true")
    parser.add_argument("--out", type=Path, default=Path("slep_out"))
    parser.add_argument("--formats", default=",".join(FORMATS), help="comma-separated subset of csv,json,text")
    return parser


class UsageError(SlepError):
    pass


def config_from_args(args):
    if args.N < 4:
        raise UsageError(f"--N must be at least 4, got {args.N}")
    if args.command in ("basis", "biortho") and args.removed is None:
        raise UsageError(f"{args.command} requires --removed")
    formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    bad = sorted(set(formats) - set(FORMATS))
    if bad:
        raise UsageError(f"unknown formats: {', '.join(bad)}")
    shift_C, shift_D = args.shift_C, args.shift_D
    if args.preset:
        raw = dict(PRESETS[args.preset]["problem"])
        if args.grid_points is not None:
            raw["grid_points"] = args.grid_points
        problem = validate_problem(raw)
        shift_C, shift_D = preset_shifts(args.preset, shift_C, shift_D)
    else:
        problem = load_problem(args.config)
        if args.grid_points is not None:
            problem = validate_problem(replace(problem, grid_points=args.grid_points))
    return RunConfig(
        command=args.command,
        problem=problem,
        N=args.N,
        removed=args.removed,
        shift_C=shift_C,
        shift_D=shift_D,
        out=args.out,
        formats=formats,
        expect_basis=args.expect_basis,
    )


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        status, result = run(cfg)
    except NumericalError as exc:
        print(f"slep: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SlepError, OSError, ValueError) as exc:
        print(f"slep: invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if result is not None:
        print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return status


if __name__ == "__main__":
    sys.exit(main())
