"""Command line front end.

Every subcommand resolves its parameters (defaults included), runs one solver
and writes a table as CSV with ``#`` metadata lines or as JSON. When ``--out``
is given a ``.meta.json`` sidecar records the parameters, tolerances and
wall time. ``golden`` reruns the stored table fixtures.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from mpmath import mp

from . import __version__
from . import classrep, collisions, crossed_fields, decay, helium_collinear, helium_pt, milne, stark_gutzwiller, wkb1d, zeeman
from .config import UNITS, Settings
from .errors import FixtureMissing, SemiclassicaError, UnknownParameter, ValidationError
from .models import (
    FieldConfig,
    FrozenPlanetQN,
    GoldenReport,
    NegativeIonModel,
    PowerLawCase,
    ResultTable,
    RunSpec,
    StarkProblem,
)

logger = logging.getLogger(__name__)

GOLDEN_DIR = Path(__file__).resolve().parent / "golden"
FORMATS = ("csv", "json")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
GOLDEN_FAILURE_EXIT = 3


def _integer(raw: str) -> int:
    return int(raw)


def _real(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError(f"{raw!r} is not finite")
    return value


def _reals(raw: str) -> List[float]:
    return [_real(part) for part in str(raw).split(",") if part.strip()]


def _choice(*options: str) -> Callable[[str], str]:
    def parse(raw: str) -> str:
        if raw not in options:
            raise ValueError(f"{raw!r} is not one of {', '.join(options)}")
        return raw

    return parse


@dataclass(frozen=True)
class Param:
    parse: Callable[[str], object]
    default: object = None
    help: str = ""

    def resolve(self, key: str, raw: object) -> object:
        if raw is None:
            return self.default
        try:
            return self.parse(str(raw))
        except ValueError as exc:
            raise ValidationError(f"bad value for {key}: {exc}", parameter=key) from exc


@dataclass(frozen=True)
class Command:
    handler: Callable[[dict, RunSpec, Settings], ResultTable]
    help: str
    params: Dict[str, Param] = field(default_factory=dict)


def _parallel_map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _coulomb(r: float, charge: float) -> float:
    return -charge / r


def _oscillator(r: float, omega: float) -> float:
    return 0.5 * omega * omega * r * r


def run_wkb(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    l, n_r_max = values["l"], values["n_r_max"]
    if values["potential"] == "coulomb":
        charge = values["charge"]
        problem = wkb1d.RadialProblem(partial(_coulomb, charge=charge), l=l, m=values["m"])
        bracket = (-charge * charge, -1e-3 * charge * charge)
    else:
        omega = values["omega"]
        problem = wkb1d.RadialProblem(partial(_oscillator, omega=omega), l=l, m=values["m"])
        bracket = (0.0, (2 * n_r_max + l + 4) * omega)
    rows = [(*entry.quantum_numbers, entry.energy, entry.action_residual) for entry in wkb1d.radial_spectrum(problem, n_r_max, bracket)]
    return ResultTable(["n_r", "l", "m", "energy_au", "action_residual_hbar"], rows, values, {"action": asdict(wkb1d.ACTION_QUADRATURE)})


def run_crossed(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    n = values["n"]
    j = (n - 1) / 2.0
    angle = math.radians(values["angle_deg"])
    f = UNITS.field_from_kv_per_cm(values["field_kv_cm"])
    b = UNITS.b_from_tesla(values["b_tesla"])
    n1 = j if values["n1"] is None else values["n1"]
    n2 = j if values["n2"] is None else values["n2"]
    cfg = FieldConfig(F=(f * math.sin(angle), 0.0, f * math.cos(angle)), B=(0.0, 0.0, b), n=n, n1=n1, n2=n2)
    crossed_fields.validate_config(cfg)
    w1, w2, _, _ = crossed_fields.pseudo_spin_frequencies(cfg)
    energy = crossed_fields.first_order_energy(cfg)
    row = (n, n1, n2, w1, w2, energy, UNITS.energy_to_ev(energy))
    return ResultTable(["n", "n1", "n2", "omega1_au", "omega2_au", "energy_au", "energy_eV"], [row], values)


def run_zeeman(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    n, m, index = values["n"], values["m"], values["index"]
    branch = zeeman.Branch.INSIDE if values["branch"] == "inside" else zeeman.Branch.OUTSIDE
    harmonic = zeeman.harmonic_shift(n, m, branch, index)
    Lambda = epsilon = None
    if values["method"] == "quadrature":
        state = zeeman.quantize_lambda(n, m, branch, index)
        Lambda, epsilon = state.Lambda, state.epsilon
    row = (n, m, values["branch"], index, Lambda, epsilon, harmonic)
    columns = ["n", "m", "branch", "index", "Lambda_scaled", "epsilon_scaled", "epsilon_osc_scaled"]
    return ResultTable(columns, [row], values, {"libration": asdict(zeeman.LIBRATION_QUADRATURE)})


def run_helium_pt(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    n, k, Z = values["n"], values["k"], values["z"]
    grid = helium_pt.effective_hamiltonian_grid(values["grid"], values["grid"], cache_dir=settings.cache_dir)
    q, w = helium_pt.quantize_w(n, k, grid)
    energy = Z / n**2 * w
    row = (n, k, q, w, energy, UNITS.energy_to_ev(energy))
    tolerances = {"pair": asdict(helium_pt.PAIR_QUADRATURE), "contour": asdict(helium_pt.CONTOUR_QUADRATURE)}
    return ResultTable(["n", "k", "q_scaled", "w_scaled", "energy_au", "energy_eV"], [row], values, tolerances)


def run_frozen_planet(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    qn = FrozenPlanetQN(values["s"], values["k"], values["l"])
    energy = helium_collinear.frozen_planet_energy(qn)
    return ResultTable(["s", "k", "l", "energy_au", "energy_1e2_au"], [(qn.s, qn.k, qn.l, energy, 100.0 * energy)], values)


def run_decay(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    n = values["n"]
    ls = range(1, n) if values["l"] is None else [values["l"]]
    rows = []
    for l in ls:
        tau = decay.lifetime_classical_au(n, l)
        seconds = UNITS.time_to_s(tau)
        rows.append((n, l, tau, seconds, seconds * 1e9))
    return ResultTable(["n", "l", "tau_cl_au", "tau_cl_s", "tau_cl_ns"], rows, values)


def _stark_row(problem: StarkProblem) -> tuple:
    res = stark_gutzwiller.solve_resonance(problem)
    return (problem.n1, problem.n2, problem.m, res.E.real, res.gamma, res.S.real, res.S.imag, res.w.real, res.iterations)


def run_stark(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    F = UNITS.field_from_kv_per_cm(values["field_kv_cm"])
    given = [values[key] for key in ("n1", "n2", "m")]
    if all(v is None for v in given):
        triples = stark_gutzwiller.TABLE_ROWS
    elif any(v is None for v in given):
        raise ValidationError("give all of n1, n2 and m, or none of them for the full table")
    else:
        triples = [tuple(given)]
    problems = [StarkProblem(F, m, n1, n2) for n1, n2, m in triples]
    rows = _parallel_map(_stark_row, problems, spec.jobs)
    columns = ["n1", "n2", "m", "energy_au", "gamma_au", "action_re_au", "action_im_au", "exponent_re", "iterations"]
    return ResultTable(columns, rows, values, {"field_au": F})


def _detach_row(task: tuple) -> tuple:
    energy_ev, model, samples, seed = task
    E = UNITS.energy_from_ev(energy_ev)
    sigma = collisions.detachment_cross_section(E, model)
    mc = collisions.detachment_monte_carlo(E, model, samples=samples, seed=seed) if samples else None
    return (energy_ev, E, sigma, UNITS.area_to_cm2(sigma), mc)


def run_detach(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    model = NegativeIonModel(d=values["d"], binding=values["binding"])
    samples = values["samples"]
    tasks = [(e, model, samples, spec.seed + i) for i, e in enumerate(values["energy_ev"])]
    rows = _parallel_map(_detach_row, tasks, spec.jobs)
    diagnostics = {"threshold_eV": UNITS.energy_to_ev(model.threshold)}
    columns = ["energy_eV", "energy_au", "sigma_au", "sigma_cm2", "sigma_mc_au"]
    return ResultTable(columns, rows, values, diagnostics=diagnostics)


def run_bea(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    target = collisions.hydrogenic_target(values["n"], values["l"], values["charge"])
    process = values["process"]
    if process == "excitation" and values["n_final"] is None:
        raise ValidationError("excitation needs --n-final")
    rows = []
    for v in values["velocity_au"]:
        if process == "ionization":
            sigma = collisions.bea_ionization(target, v)
        else:
            sigma = collisions.bea_excitation_n(target, v, values["n_final"])
        rows.append((v, sigma, UNITS.area_to_cm2(sigma)))
    return ResultTable(["velocity_au", "sigma_au", "sigma_cm2"], rows, values, {"sigma": asdict(collisions.SIGMA_QUADRATURE)})


def run_classrep(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    n, omega, hbar = values["n"], values["omega"], values["hbar"]
    quantum = hbar * omega
    e_max = values["e_max"] if values["e_max"] is not None else (8.0 + 4.0 * n) * quantum
    grid = np.linspace(0.0, e_max, values["points"])
    dist = classrep.ho_distribution(n, omega, hbar, grid)
    norm, mean = classrep.sum_rules(dist)
    rows = [(float(e), float(p)) for e, p in zip(dist.grid, dist.phi)]
    diagnostics = {"normalization": norm, "mean_energy_au": mean, "eigenvalue_au": (n + 0.5) * quantum}
    return ResultTable(["energy_au", "phi_per_au"], rows, values, diagnostics=diagnostics)


def _mp_text(value: object, digits: int) -> str:
    return mp.nstr(value, digits)


def run_milne(values: dict, spec: RunSpec, settings: Settings) -> ResultTable:
    digits = settings.precision
    mode = values["mode"]
    tolerances = {"precision_digits": digits}
    if mode == "late":
        q = values["q_coeff"]
        if q is None:
            try:
                nu = Fraction(values["nu"])
            except (ValueError, ZeroDivisionError) as exc:
                raise ValidationError(f"bad value for nu: {values['nu']!r}") from exc
            if nu == -1:
                raise ValidationError("nu = -1 is the excluded scaling point")
            q = float(nu * (nu + 2) / (4 * (nu + 1) ** 2))
        table = milne.dingle_self_similarity(q, n_max=values["n_max"], m_levels=values["levels"], precision=digits)
        rows = [(n, _mp_text(phi, digits)) for n, phi in zip(table.n, table.phi)]
        return ResultTable(["n", "phi_n_au"], rows, values, tolerances, table.report)

    case = PowerLawCase(alpha=values["alpha"], nu=values["nu"], x=values["x"], precision=digits)
    if mode == "critical":
        result = milne.critical_index(case, values["hbar"])
        rows = [(n, _mp_text(term, digits)) for n, term in enumerate(result.terms)]
        diagnostics = {"index": result.index, "prediction": result.prediction}
        return ResultTable(["n", "term_au"], rows, values, tolerances, diagnostics)

    lambdas = milne.lambda_recurrence(case, values["n_max"])
    with mp.workdps(digits):
        h2 = mp.mpf(values["hbar"]) ** 2
        rows = [(n, _mp_text(lam, digits), _mp_text(lam * h2**n, digits)) for n, lam in enumerate(lambdas)]
    return ResultTable(["n", "lambda_n_au", "hbar_term_au"], rows, values, tolerances)


COMMANDS: Dict[str, Command] = {
    "wkb": Command(
        run_wkb,
        "radial EBK spectrum with Morse-index phases",
        {
            "potential": Param(_choice("coulomb", "oscillator"), "coulomb"),
            "l": Param(_integer, 0),
            "m": Param(_integer, 0),
            "n_r_max": Param(_integer, 5),
            "charge": Param(_real, 1.0),
            "omega": Param(_real, 1.0),
        },
    ),
    "crossed": Command(
        run_crossed,
        "first-order energy of a hydrogen manifold in crossed fields",
        {
            "n": Param(_integer, 10),
            "n1": Param(_real, None, "pseudo-spin projection, default j"),
            "n2": Param(_real, None, "pseudo-spin projection, default j"),
            "field_kv_cm": Param(_real, 0.0),
            "b_tesla": Param(_real, 0.0),
            "angle_deg": Param(_real, 90.0, "angle between F and B"),
        },
    ),
    "zeeman": Command(
        run_zeeman,
        "quadratic Zeeman shift within an {n, m} manifold",
        {
            "n": Param(_integer, 40),
            "m": Param(_integer, 0),
            "branch": Param(_choice("inside", "outside"), "inside"),
            "index": Param(_integer, 0),
            "method": Param(_choice("quadrature", "harmonic"), "quadrature"),
        },
    ),
    "helium-pt": Command(
        run_helium_pt,
        "first-order energy of two equivalent electrons",
        {
            "z": Param(_real, 2.0),
            "n": Param(_integer, 3),
            "k": Param(_integer, 0),
            "grid": Param(_integer, 40, "grid points per axis"),
        },
    ),
    "frozen-planet": Command(
        run_frozen_planet,
        "semiclassical frozen-planet energy",
        {"s": Param(_integer, 4), "k": Param(_integer, 0), "l": Param(_integer, 0)},
    ),
    "decay": Command(
        run_decay,
        "classical radiative lifetime",
        {"n": Param(_integer, 2), "l": Param(_integer, None, "default: every l from 1 to n-1")},
    ),
    "stark": Command(
        run_stark,
        "complex Stark resonances from the periodic-orbit pole condition",
        {
            "field_kv_cm": Param(_real, 8.0),
            "n1": Param(_integer, None),
            "n2": Param(_integer, None),
            "m": Param(_integer, None),
        },
    ),
    "detach": Command(
        run_detach,
        "classical collisional detachment of a negative ion",
        {
            "energy_ev": Param(_reals, [3.0, 4.0, 5.0, 7.0, 10.0, 20.0, 50.0], "comma separated impact energies"),
            "d": Param(_real, 2.7),
            "binding": Param(_real, 0.0278),
            "samples": Param(_integer, 0, "Monte Carlo samples per energy, 0 to skip"),
        },
    ),
    "bea": Command(
        run_bea,
        "binary-encounter ionization or shell excitation of a hydrogenic target",
        {
            "n": Param(_integer, 1),
            "l": Param(_integer, 0),
            "charge": Param(_real, 1.0),
            "velocity_au": Param(_reals, [1.0, 2.0, 5.0, 10.0, 20.0], "comma separated projectile speeds"),
            "process": Param(_choice("ionization", "excitation"), "ionization"),
            "n_final": Param(_integer, None),
        },
    ),
    "classrep": Command(
        run_classrep,
        "energy distribution of an oscillator eigenstate",
        {
            "n": Param(_integer, 0),
            "omega": Param(_real, 1.0),
            "hbar": Param(_real, 1.0),
            "points": Param(_integer, 201),
            "e_max": Param(_real, None),
        },
    ),
    "milne": Command(
        run_milne,
        "higher-order WKB terms, critical index and late-term layers",
        {
            "mode": Param(_choice("terms", "critical", "late"), "terms"),
            "nu": Param(str, "1/2", "power-law exponent, fractions allowed"),
            "alpha": Param(_real, 1.0),
            "x": Param(_real, 10.0),
            "hbar": Param(_real, 1.0),
            "n_max": Param(_integer, 30),
            "q_coeff": Param(_real, None, "late-term kernel strength, default from nu"),
            "levels": Param(_integer, 2),
        },
    ),
}


def resolve_params(command: Command, params: Dict[str, object]) -> dict:
    unknown = sorted(set(params) - set(command.params))
    if unknown:
        raise UnknownParameter(f"unknown parameters: {', '.join(unknown)}", unknown=unknown)
    return {key: param.resolve(key, params.get(key)) for key, param in command.params.items()}


def execute(spec: RunSpec, settings: Optional[Settings] = None) -> ResultTable:
    command = COMMANDS.get(spec.subcommand)
    if command is None:
        raise ValidationError(f"unknown subcommand {spec.subcommand!r}")
    if spec.format not in FORMATS:
        raise ValidationError(f"format must be one of {', '.join(FORMATS)}")
    if spec.jobs < 1:
        raise ValidationError("jobs must be at least 1")
    values = resolve_params(command, spec.params)
    logger.info("running %s with %s", spec.subcommand, values)
    return command.handler(values, spec, settings or Settings())


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(value: object) -> object:
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def metadata(spec: RunSpec, table: ResultTable) -> dict:
    return {
        "tool": "semiclassica",
        "version": __version__,
        "subcommand": spec.subcommand,
        "seed": spec.seed,
        "parameters": table.parameters,
        "tolerances": table.tolerances,
        "diagnostics": table.diagnostics,
    }


def render(spec: RunSpec, table: ResultTable) -> str:
    meta = metadata(spec, table)
    if spec.format == "json":
        rows = [[_jsonable(v) for v in row] for row in table.rows]
        payload = {"metadata": meta, "columns": table.columns, "rows": rows}
        return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"
    buffer = io.StringIO()
    for key, value in meta.items():
        buffer.write(f"# {key}: {json.dumps(value, sort_keys=True, default=str)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def run(spec: RunSpec, settings: Optional[Settings] = None, stream=None) -> int:
    """Run one subcommand and write its table; returns the process exit code."""
    started = time.perf_counter()
    try:
        settings = settings or Settings.from_env()
        table = execute(spec, settings)
    except SemiclassicaError as exc:
        logger.error("%s failed: %s", spec.subcommand, exc)
        print(json.dumps(exc.as_dict(), sort_keys=True, default=str), file=sys.stderr)
        return exc.exit_code
    text = render(spec, table)
    if spec.output is None:
        (stream or sys.stdout).write(text)
        return 0
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    sidecar = dict(metadata(spec, table), output=out.name, format=spec.format, wall_time_s=time.perf_counter() - started)
    out.with_name(out.name + ".meta.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=str), encoding="utf-8")
    logger.info("wrote %s (%d rows)", out, len(table.rows))
    return 0


def _load_fixture(path: Path) -> List[dict]:
    try:
        fixture = json.loads(path.read_text(encoding="utf-8"))
        cases = fixture["cases"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FixtureMissing(f"{path.name} is not a readable golden fixture") from exc
    if not cases:
        raise FixtureMissing(f"{path.name} holds no cases")
    return cases


def _check(table: ResultTable, row: int, column: str, expectation: dict) -> Optional[str]:
    got = table.rows[row][table.columns.index(column)]
    expected = float(expectation["value"])
    tol = float(expectation.get("abs_tol", 0.0)) or float(expectation.get("rel_tol", 0.0)) * abs(expected)
    if got is None or abs(float(got) - expected) > tol:
        return f"{column}: got {got}, expected {expected} +- {tol:.3g}"
    return None


def golden(spec_dir: Union[str, Path] = GOLDEN_DIR, settings: Optional[Settings] = None) -> GoldenReport:
    """Rerun every stored fixture and diff it against its expected values."""
    directory = Path(spec_dir)
    paths = sorted(directory.glob("*.json")) if directory.is_dir() else []
    if not paths:
        raise FixtureMissing(f"no golden fixtures under {directory}")
    settings = settings or Settings()
    report = GoldenReport()
    for path in paths:
        for i, case in enumerate(_load_fixture(path)):
            name = f"{path.stem}[{i}] {case.get('subcommand')} {json.dumps(case.get('params', {}), sort_keys=True)}"
            try:
                table = execute(RunSpec(case["subcommand"], dict(case.get("params", {}))), settings)
                problems = [_check(table, case.get("row", 0), column, exp) for column, exp in case["expect"].items()]
            except SemiclassicaError as exc:
                problems = [f"{exc.__class__.__name__}: {exc}"]
            except (KeyError, IndexError, ValueError) as exc:
                problems = [f"malformed case: {exc!r}"]
            problems = [p for p in problems if p]
            if problems:
                report.failed.append(f"{name}: {'; '.join(problems)}")
            else:
                report.passed.append(name)
    logger.info("golden: %d passed, %d failed", len(report.passed), len(report.failed))
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="table file; a .meta.json sidecar is written next to it")
    common.add_argument("--format", choices=FORMATS, default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for independent grid points")
    common.add_argument("--log-level", choices=LOG_LEVELS, type=str.upper, default=None)

    parser = argparse.ArgumentParser(prog="semiclassica", description="Semiclassical atomic physics toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, command in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=command.help)
        for key, param in command.params.items():
            default = "" if param.default is None else f" (default {param.default})"
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=param.help + default)
    g = sub.add_parser("golden", help="rerun the stored table fixtures")
    g.add_argument("--dir", default=str(GOLDEN_DIR))
    g.add_argument("--log-level", choices=LOG_LEVELS, type=str.upper, default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = Settings.from_env()
    except SemiclassicaError as exc:
        print(json.dumps(exc.as_dict(), sort_keys=True), file=sys.stderr)
        return exc.exit_code
    level = args.log_level or settings.log_level
    logging.basicConfig(level=level if level in LOG_LEVELS else "WARNING", format="%(levelname)s %(name)s: %(message)s")

    if args.subcommand == "golden":
        try:
            report = golden(args.dir, settings)
        except SemiclassicaError as exc:
            print(json.dumps(exc.as_dict(), sort_keys=True), file=sys.stderr)
            return exc.exit_code
        for name in report.passed:
            print(f"PASS {name}")
        for line in report.failed:
            print(f"FAIL {line}")
        return 0 if report.ok else GOLDEN_FAILURE_EXIT

    params = {key: getattr(args, key) for key in COMMANDS[args.subcommand].params if getattr(args, key) is not None}
    spec = RunSpec(args.subcommand, params, args.out, args.format, args.seed, args.jobs)
    return run(spec, settings)


if __name__ == "__main__":
    sys.exit(main())
