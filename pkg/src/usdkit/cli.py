"""Command-line front end: ``usdkit <command> ...``.

Reports go to stdout as JSON (sorted keys, 12 significant digits) or as a
plain table with ``--output table``. Errors go to stderr as
``{"error": <name>, "message": <text>}`` with exit codes 2 (parse),
3 (dimension/precondition), 4 (numeric) and 5 (internal).
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import numkernel as nk
from . import usd
from .distill import BipartiteState, plan_distillation, schmidt
from .errors import ParseError, UsdkitError
from .families import (
    apply_degenerate_mixer,
    apply_phase_family,
    degeneracy_structure,
    distillation_family,
    inconclusive_analysis,
    phase_transform,
)
from .fileio import dumps, jsonable, load_matrix, load_states, matrix_from_json, matrix_to_json, read_json, states_to_json, write_json
from .simulate import SEED_ENV, measure_distillation, measure_usd, outcome_probabilities

EXIT_INTERNAL = 5


def _tolerances(args) -> dict:
    return {
        "orthogonality": args.tol,
        "passive": usd.PASSIVE_TOL,
        "singular_rtol": nk.SINGULAR_RTOL,
        "degeneracy_rtol": nk.DEGENERACY_RTOL,
        "population": usd.POPULATION_TOL,
        "rank": 1e-10,
    }


def _floats(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError as exc:
        raise ParseError(f"--{name}: expected comma-separated numbers") from exc


def _angle(rad: float) -> dict:
    return {"rad": rad, "deg": float(np.degrees(rad))}


def cmd_analyze(args) -> dict:
    rep = usd.analyze(usd.LossyOperator(load_matrix(args.matrix)))
    bounds = None
    if rep.invertible:
        bounds = {"lower": rep.angle_lower_bound, "upper": rep.angle_upper_bound}
    return {
        "command": "analyze",
        "singular_values": rep.singular_values,
        "spectral_norm": rep.spectral_norm,
        "passive": rep.passive,
        "invertible": rep.invertible,
        "non_discriminating": rep.non_discriminating,
        "best_angle_rad": rep.best_angle_rad,
        "best_angle_deg": rep.best_angle_deg,
        "bounds": bounds,
        "condition_product": rep.condition_product,
    }


def cmd_optimal_pair(args) -> dict:
    op = usd.LossyOperator(load_matrix(args.matrix))
    pair = usd.optimal_pair(op)
    out_overlap = abs(np.vdot(pair.out_plus, pair.out_minus)) / (
        np.linalg.norm(pair.out_plus) * np.linalg.norm(pair.out_minus))
    if args.save:
        write_json(args.save, states_to_json(pair.states))
    return {
        "command": "optimal-pair",
        "g_plus": pair.g_plus,
        "g_minus": pair.g_minus,
        "out_plus": pair.out_plus,
        "out_minus": pair.out_minus,
        "angle_rad": pair.angle_rad,
        "angle_deg": float(np.degrees(pair.angle_rad)),
        "cos_angle": float(np.cos(pair.angle_rad)),
        "output_overlap": out_overlap,
        "detection_probability": pair.detection_probability,
        "conclusive_probability": pair.conclusive_probability,
        "degenerate": pair.degenerate,
    }


def cmd_discriminate(args) -> dict:
    states = load_states(args.states)
    weights = _floats(args.weights, "weights") if args.weights else None
    u_out = load_matrix(args.unitary) if args.unitary else None
    op = usd.synthesize_discriminator(states, weights, u_out)
    outputs = op.matrix @ states.states
    if args.save:
        write_json(args.save, matrix_to_json(op.matrix))
    return {
        "command": "discriminate",
        "operator": op.matrix,
        "spectral_norm": op.spectral_norm,
        "passive": op.passive,
        "output_weights": np.linalg.norm(outputs, axis=0),
        "output_residual": usd.discrimination_residual(op, states),
        "best_angle": _angle(usd.analyze(op).best_angle_rad),
    }


def cmd_distill(args) -> dict:
    state = BipartiteState(load_matrix(args.state))
    plan = plan_distillation(state)
    s_in = schmidt(state)
    s_out = schmidt(plan.output_state)
    if args.save:
        write_json(args.save, matrix_to_json(plan.filter.matrix))
    return {
        "command": "distill",
        "success_probability": plan.success_probability,
        "filtered_norm_squared": plan.output_state.norm ** 2,
        "filter": plan.filter.matrix,
        "schmidt_input": s_in.coefficients_lambda,
        "schmidt_output": s_out.coefficients_lambda,
        "output_spread": s_out.spread,
    }


def _member(member, kind: str) -> dict:
    return {
        "family": kind,
        "states": member.states,
        "output_residual": member.residual,
        "gram": member.gram,
        "reference_gram": member.reference_gram,
    }


def cmd_family(args) -> dict:
    op = usd.LossyOperator(load_matrix(args.matrix))
    ds = degeneracy_structure(op)
    report = {
        "command": "family",
        "degeneracy_groups": [list(g) for g in ds.groups],
        "degeneracy_tolerance": ds.tolerance_used,
    }
    chosen = [x for x in (args.phases, args.unitary, args.mixer) if x]
    if len(chosen) > 1:
        raise ParseError("choose one of --phases, --unitary, --mixer")
    new_states = None
    if args.unitary:
        member = distillation_family(op, load_matrix(args.unitary))
        report.update(_member(member, "distillation"))
        new_states = member.states
    elif args.phases or args.mixer:
        if not args.states:
            raise ParseError("--phases and --mixer need --states")
        states = load_states(args.states)
        if args.phases:
            phases = _floats(args.phases, "phases")
            new_states = apply_phase_family(op, states, phases, tol=args.tol)
            pt = phase_transform(op, phases)
            report.update({
                "family": "phase",
                "states": new_states,
                "input_transform": pt.input_transform,
                "output_transform": pt.output_transform,
                "output_residual": usd.discrimination_residual(op, new_states),
            })
        else:
            doc = read_json(args.mixer)
            if not isinstance(doc, dict) or not isinstance(doc.get("blocks"), list):
                raise ParseError("mixer file must be {\"blocks\": [matrix, ...]}")
            blocks = [matrix_from_json(b) for b in doc["blocks"]]
            member = apply_degenerate_mixer(op, states, blocks, check_tol=args.tol)
            report.update(_member(member, "mixer"))
            new_states = member.states
    if args.save and new_states is not None:
        write_json(args.save, states_to_json(new_states))
    return report


def cmd_inconclusive(args) -> dict:
    op = usd.LossyOperator(load_matrix(args.matrix))
    rho = load_matrix(args.rho) if args.rho else np.eye(op.dim) / op.dim
    res = inconclusive_analysis(op, rho)
    return {
        "command": "inconclusive",
        "m_question": res.m_question,
        "e_question": res.e_question,
        "rho_question": res.rho_question,
        "rank": res.rank,
        "inconclusive_probability": res.probability,
    }


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise ParseError(f"{SEED_ENV} must be an integer") from exc


def cmd_simulate(args) -> dict:
    seed = _seed(args)
    if args.distill:
        plan = plan_distillation(BipartiteState(load_matrix(args.distill)))
        res = measure_distillation(plan, args.shots, seed)
        p = plan.success_probability
        return {
            "command": "simulate",
            "mode": "distillation",
            "shots": res.shots,
            "seed": res.seed,
            "counts": res.counts,
            "success_rate": res.frequency("success"),
            "success_probability": p,
            "standard_error": res.standard_error(p),
        }
    if not (args.matrix and args.states):
        raise ParseError("simulate needs MATRIX and STATES, or --distill STATE")
    op = usd.LossyOperator(load_matrix(args.matrix))
    loaded = load_states(args.states)
    # inputs are rays: simulate their normalized representatives
    states = usd.StateSet(loaded.normalized(), loaded.priors)
    results = measure_usd(op, states, args.shots, seed, tol=args.tol)
    probs = outcome_probabilities(op, states)
    per_input = []
    for i, res in enumerate(results):
        p = float(probs[i, i])
        wrong = sum(c for j, c in res.counts.items() if isinstance(j, int) and j != i)
        per_input.append({
            "input": i,
            "counts": res.counts,
            "conclusive_rate": res.frequency(i),
            "conclusive_probability": p,
            "standard_error": res.standard_error(p),
            "misidentifications": wrong,
        })
    return {"command": "simulate", "mode": "usd", "shots": args.shots, "seed": seed, "inputs": per_input}


def _table(report: dict) -> str:
    lines = []

    def walk(prefix, value):
        if isinstance(value, dict) and not {"rows", "cols", "data"} <= value.keys():
            for k in sorted(value):
                walk(f"{prefix}.{k}" if prefix else k, value[k])
        else:
            lines.append(f"{prefix:<32} {json.dumps(value)}")

    walk("", jsonable(report))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("json", "table"), default="json")
    common.add_argument("--tol", type=float, default=usd.ORTHOGONALITY_TOL,
                        help="tolerance for output orthogonality checks")
    common.add_argument("--save", help="write the resulting matrix or state set to this file")

    parser = argparse.ArgumentParser(prog="usdkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="singular values and best angle of K")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("optimal-pair", parents=[common], help="closest pair K discriminates")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_optimal_pair)

    p = sub.add_parser("discriminate", parents=[common], help="build K for a state set")
    p.add_argument("states")
    p.add_argument("--weights", help="comma-separated output weights in (0, 1]")
    p.add_argument("--unitary", help="matrix file with the output basis")
    p.set_defaults(func=cmd_discriminate)

    p = sub.add_parser("distill", parents=[common], help="local filter for a bipartite state")
    p.add_argument("state", help="matrix file with the coefficient matrix")
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("family", parents=[common], help="other state sets K discriminates")
    p.add_argument("matrix")
    p.add_argument("--states")
    p.add_argument("--phases", help="comma-separated phases (radians), one per singular vector")
    p.add_argument("--unitary", help="matrix file with U0 for the K^-1 U0 family")
    p.add_argument("--mixer", help='JSON file {"blocks": [matrix, ...]}, one unitary per degeneracy group')
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("inconclusive", parents=[common], help="post-measurement state of the inconclusive branch")
    p.add_argument("matrix")
    p.add_argument("--rho", help="density matrix file (default I/N)")
    p.set_defaults(func=cmd_inconclusive)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check through a unitary dilation")
    p.add_argument("matrix", nargs="?")
    p.add_argument("states", nargs="?")
    p.add_argument("--distill", metavar="STATE", help="simulate distillation of this bipartite state instead")
    p.add_argument("--shots", type=int, default=100000)
    p.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV}, then 0")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
        report["tolerances"] = _tolerances(args)
    except UsdkitError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(json.dumps({"error": "Internal", "message": repr(exc)}) + "\n")
        return EXIT_INTERNAL
    sys.stdout.write(dumps(report) if args.output == "json" else _table(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
