import argparse
import logging
import os
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from estimators import FitConfig, get_estimator
from utils.helpers import format_matrix, print_section, print_success, print_warning, records_table
from utils.logger import run_logger

from .config import DEFAULT_CONFIG_FILE, DEFAULT_MERGE_TOL, MATRIX_DECIMALS, VERSION
from .cp import choi_from_supermatrix, cp_filter_generator, cp_filter_propagator, cp_penalty
from .errors import InputError
from .hadamard import decompose_relaxation, rebuild_check
from .io import (
    RunManifest,
    dataset_from_json,
    dataset_to_json,
    generator_from_json,
    generator_to_json,
    lindblads_to_json,
    load_json,
    load_yaml,
    matrix_from_json,
    matrix_to_json,
    report_to_json,
    write_json,
)
from .liouville import BASIS_NAMES, basis_by_name
from .matfuncs import negative_mass
from .synth import NoiseSpec, add_noise, simulate_propagators, simulate_state_dataset

logger = logging.getLogger(f"lindblad_fit.{__name__}")

MASS_FLOOR = 1e-12


def parse_times(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        times = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--times: could not parse '{text}'", hint="use comma-separated seconds, e.g. 0.4,0.8")
    if not times:
        raise InputError("--times: empty list")
    return times


def load_settings(path: Optional[str]) -> Dict[str, Any]:
    """Config file contents; a missing default file means built-in defaults"""
    if path:
        return load_yaml(path)
    if os.path.exists(DEFAULT_CONFIG_FILE):
        return load_yaml(DEFAULT_CONFIG_FILE)
    return {}


def pick(cli_value: Any, section: Dict[str, Any], key: str, default: Any) -> Any:
    """CLI flag > config file > default"""
    if cli_value is not None:
        return cli_value
    value = section.get(key)
    return default if value is None else value


def default_display_basis(n: int) -> str:
    return "transition" if n == 4 else ("cartesian" if n & (n - 1) == 0 else "zeeman")


def relaxation_summary(g, basis_name: str) -> List[Dict[str, Any]]:
    """Diagonal rates of R with time constants; T1 for diagonal basis elements, T2 otherwise"""
    basis = basis_by_name(basis_name, g.n)
    r = g.in_basis(basis_name).relaxation_part
    labels = basis.labels or [str(i) for i in range(len(basis))]
    rows = []
    for k, element in enumerate(basis.elements):
        if np.allclose(element, element[0, 0] * np.eye(g.n)):
            continue
        rate = float(np.real(r[k, k]))
        is_diagonal = np.allclose(element, np.diag(np.diag(element)))
        rows.append({
            "element": labels[k],
            "kind": "T1" if is_diagonal else "T2",
            "rate": rate,
            "time_constant": 1.0 / rate if rate > 0 else float("inf"),
        })
    return rows


def output_decimals(settings: Dict[str, Any]) -> int:
    section = settings.get("output", {}) or {}
    return int(section.get("decimals", MATRIX_DECIMALS))


def _new_warnings(start: int) -> List[str]:
    return run_logger.warnings()[start:]


def cmd_simulate(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
    section = settings.get("simulate", {}) or {}
    g = generator_from_json(load_json(args.generator))
    g.validate()
    times = pick(parse_times(args.times), section, "times", None)
    if not times:
        raise InputError("no simulation times given", hint="pass --times 0.4,0.8,1.6,3.2")
    sigma = float(pick(args.noise_sigma, section, "noise_sigma", 0.0))
    seed = int(pick(args.seed, section, "seed", 0))
    target = pick(args.noise_target, section, "noise_target", "propagators")
    effective = {"times": times, "noise_sigma": sigma, "seed": seed, "noise_target": target,
                 "state_pairs": bool(args.state_pairs)}

    if args.state_pairs:
        basis_name = args.basis or default_display_basis(g.n)
        effective["basis"] = basis_name
        ds = simulate_state_dataset(g, times, basis_by_name(basis_name, g.n))
    else:
        ds = simulate_propagators(g, times)
    if sigma > 0:
        ds = add_noise(ds, NoiseSpec(sigma=sigma, seed=seed, target=target))

    print_section("simulate")
    print(f"N={ds.n}, {len(ds.times)} time(s): {', '.join(f'{t:g}' for t in ds.times)} s")
    print(f"kind: {ds.kind}, noise sigma {sigma:g} (seed {seed})")
    return {"config": effective, "payload": dataset_to_json(ds), "inputs": [args.generator]}


def cmd_estimate(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
    dec = output_decimals(settings)
    section = dict(settings.get("fit", {}) or {})
    ds = dataset_from_json(load_json(args.dataset))
    overrides = {
        "structure": args.structure,
        "penalty_weight": args.penalty_weight,
        "max_iterations": args.max_iter,
        "simplex_tolerance": args.tol,
        "restarts": args.restarts,
    }
    for key, value in overrides.items():
        if value is not None:
            section[key] = value
    if args.final_filter:
        section["final_filter"] = True
    cfg = FitConfig.from_dict(section)
    inputs = [args.dataset]
    if args.seed_generator:
        cfg.seed_generator = generator_from_json(load_json(args.seed_generator))
        inputs.append(args.seed_generator)

    warn_start = len(run_logger.warnings())
    estimator = get_estimator(args.method, cfg)
    report = estimator.estimate(ds)
    warnings = _new_warnings(warn_start)

    basis_name = args.basis or default_display_basis(ds.n)
    summary = relaxation_summary(report.estimate, basis_name)
    basis = basis_by_name(basis_name, ds.n)

    print_section(f"estimate ({report.method})")
    print(f"chi^2       {report.chi_squared:.6e}")
    print(f"CP penalty  {report.penalty_at_solution:.6e}")
    print(f"iterations  {report.iterations}  converged: {report.converged}")
    residual_rows = [{"time": t, "residual": r} for t, r in zip(ds.times, report.residual_per_time)]
    print(records_table(residual_rows, decimals=dec))
    print_section(f"relaxation matrix ({basis_name} basis)")
    print(format_matrix(report.estimate.in_basis(basis_name).relaxation_part, basis.labels, decimals=dec))
    print_section("rates")
    print(records_table(summary, decimals=dec))
    for w in warnings:
        print_warning(w)

    payload = report_to_json(report)
    payload["summary"] = summary
    payload["warnings"] = warnings
    effective = {"method": args.method, "fit": cfg.to_dict(), "display_basis": basis_name}
    return {"config": effective, "payload": payload, "inputs": inputs}


def cmd_decompose(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
    dec = output_decimals(settings)
    section = settings.get("decompose", {}) or {}
    g = generator_from_json(load_json(args.generator))
    if args.basis and args.basis != g.basis:
        raise InputError(f"basis mismatch: file is in the '{g.basis}' basis, --basis says '{args.basis}'")
    if g.n != 4:
        raise InputError(f"decompose needs a two-spin generator (N=4), got N={g.n}")
    merge_tol = float(pick(args.merge_tol, section, "merge_tolerance", DEFAULT_MERGE_TOL))
    eigen_tol = float(section.get("eigen_tolerance", 1e-8))

    r_tra = g.in_basis("transition").relaxation_part
    decomp = decompose_relaxation(
        r_tra, merge_degenerate=not args.no_merge, merge_tol=merge_tol, eigen_tol=eigen_tol
    )

    print_section("T1 block (Zeeman basis)")
    print(format_matrix(decomp.r_t1_zee, decimals=dec))
    print_section("T2 Hadamard matrix (Zeeman basis)")
    print(format_matrix(decomp.r_t2_zee.rates, decimals=dec))
    print_section("nonadiabatic T2")
    print(format_matrix(decomp.r_t2_na.rates, decimals=dec))
    print_section("adiabatic T2")
    print(format_matrix(decomp.r_t2_ad.rates, decimals=dec))
    print_section("Lindblad operators")
    shares = decomp.lindblads.shares()
    rows = [
        {"provenance": tag, "weight": w, "share": s, "diagonal": np.allclose(op, np.diag(np.diag(op)))}
        for tag, w, s, op in zip(decomp.lindblads.provenance, decomp.lindblads.weights, shares,
                                 decomp.lindblads.operators)
    ]
    print(records_table(rows, decimals=dec))
    print(f"\ndiscrepancy {decomp.discrepancy:.4f}")

    payload = decomp.to_dict()
    payload["lindblads"] = lindblads_to_json(decomp.lindblads)
    if args.check_rebuild:
        check = rebuild_check(decomp)
        payload["rebuild_check"] = check
        print(f"rebuild check: T1 {check['t1_max_error']:.2e}, T2 {check['t2_max_error']:.2e}")
    effective = {"merge": not args.no_merge, "merge_tolerance": merge_tol, "eigen_tolerance": eigen_tol}
    return {"config": effective, "payload": payload, "inputs": [args.generator]}


def cmd_filter_cp(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
    obj = load_json(args.input)
    if isinstance(obj, dict) and "relaxation_part" in obj:
        g = generator_from_json(obj)
        filtered, mass = cp_filter_generator(g)
        payload = generator_to_json(filtered)
        payload["penalty_after"] = cp_penalty(filtered)
    else:
        p = matrix_from_json(obj.get("propagator", obj) if isinstance(obj, dict) else obj, "propagator")
        mass = negative_mass(choi_from_supermatrix(p).matrix)
        payload = {"propagator": matrix_to_json(cp_filter_propagator(p))}
    if mass < MASS_FLOOR:
        mass = 0.0
    payload["removed_mass"] = mass
    print_section("filter-cp")
    print(f"{mass:.6g} mass removed")
    return {"config": {}, "payload": payload, "inputs": [args.input]}


def cmd_convert(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
    dec = output_decimals(settings)
    g = generator_from_json(load_json(args.generator)).in_basis(args.basis)
    print_section(f"relaxation matrix ({args.basis} basis)")
    print(format_matrix(g.relaxation_part, basis_by_name(args.basis, g.n).labels, decimals=dec))
    return {"config": {"basis": args.basis}, "payload": generator_to_json(g), "inputs": [args.generator]}


def cmd_report(args: argparse.Namespace, settings: Dict[str, Any]) -> Dict[str, Any]:
    dec = output_decimals(settings)
    obj = load_json(args.report)
    if not isinstance(obj, dict):
        raise InputError(f"{args.report}: not a report")
    print_section(f"report {args.report}")
    for key in ("method", "chi_squared", "penalty_at_solution", "converged", "discrepancy", "removed_mass"):
        if key in obj:
            print(f"{key:20s} {obj[key]}")
    if "summary" in obj:
        print(records_table(obj["summary"], decimals=dec))
    if "lindblads" in obj and isinstance(obj["lindblads"], list):
        rows = [{"provenance": r.get("provenance"), "weight": r.get("weight")} for r in obj["lindblads"]]
        print(records_table(rows, decimals=dec))
    if "manifest" in obj:
        m = obj["manifest"]
        print(f"\n{m.get('command')} v{m.get('version')} digest {m.get('config_digest', '')[:12]}")
    return {}


COMMANDS: Dict[str, Callable[[argparse.Namespace, Dict[str, Any]], Dict[str, Any]]] = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "decompose": cmd_decompose,
    "filter-cp": cmd_filter_cp,
    "convert": cmd_convert,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lindblad-fit",
        description="Estimate Markovian supergenerators and their Lindblad operators",
    )
    parser.add_argument("--config", help="YAML config file (default: $LINDBLAD_FIT_CONFIG or fit.yaml)")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="forward-simulate a dataset from a generator")
    p.add_argument("generator")
    p.add_argument("--times", help="comma-separated times in seconds")
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise-target", choices=["propagators", "density_matrices"])
    p.add_argument("--state-pairs", action="store_true", help="simulate input/output density matrices")
    p.add_argument("--basis", choices=BASIS_NAMES, help="basis of the input states")
    p.add_argument("--output", default="dataset.json")

    p = sub.add_parser("estimate", help="estimate the supergenerator of a dataset")
    p.add_argument("dataset")
    p.add_argument("--method", default="cpfit", choices=["logm", "richardson", "eiglog", "cpfit", "lsfit"])
    p.add_argument("--structure", choices=["full", "kite", "none"])
    p.add_argument("--penalty-weight", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--final-filter", action="store_true", help="CP-filter the fitted generator")
    p.add_argument("--seed-generator", help="generator JSON used as the simplex seed")
    p.add_argument("--basis", choices=BASIS_NAMES, help="basis for printed matrices")
    p.add_argument("--output", default="report.json")

    p = sub.add_parser("decompose", help="T1/T2 Lindblad decomposition of a two-spin generator")
    p.add_argument("generator")
    p.add_argument("--basis", choices=BASIS_NAMES, help="expected basis of the generator file")
    p.add_argument("--no-merge", action="store_true", help="keep individual T1 jumps")
    p.add_argument("--merge-tol", type=float)
    p.add_argument("--check-rebuild", action="store_true")
    p.add_argument("--output", default="decomposition.json")

    p = sub.add_parser("filter-cp", help="project a propagator (or generator) onto the CP set")
    p.add_argument("input")
    p.add_argument("--output", default="filtered.json")

    p = sub.add_parser("convert", help="re-express a generator in another basis")
    p.add_argument("generator")
    p.add_argument("--basis", required=True, choices=BASIS_NAMES)
    p.add_argument("--output", default="converted.json")

    p = sub.add_parser("report", help="print a JSON report as tables")
    p.add_argument("report")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        if e.code in (0, None):
            return 0
        raise InputError("invalid command line")
    settings = load_settings(args.config)
    handler = COMMANDS[args.command]
    try:
        result = handler(args, settings)
    except Exception as e:
        run_logger.log_step(args.command, {}, success=False, error=e)
        raise
    if not result:
        return 0
    manifest = RunManifest(command=args.command, inputs=result["inputs"], config=result["config"])
    run_logger.log_step(args.command, {"inputs": result["inputs"]}, summary=f"-> {args.output}")
    manifest.finish(run_logger.get_session_summary())
    write_json(args.output, result["payload"], manifest)
    print_success(f"wrote {args.output}")
    return 0
