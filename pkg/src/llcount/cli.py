"""Batch command-line front end.

Subcommands run the four counting pipelines plus hypothesis checks and the
exact oracles; reports are printed as human-readable text or JSON lines.
Exit codes: 0 success, 2 hypothesis violation without --force, 3 parse error,
4 resource cap exceeded, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from numpy.linalg import LinAlgError

from . import cnf as cnfmod
from . import formats, oracles, qsat
from .clusters import (ApproxResult, ConditionCheck,
                       approx_partition_function, check_weight_condition,
                       choose_truncation_order)
from .errors import LLCountError, SpecParseError
from .graphs import greedy_coloring
from .projectors import (ProjectorSet, support_dependency_graph, validate_set,
                         verify_commuting)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc}") from None


def _sniff(text: str) -> str:
    for raw in text.splitlines():
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        first = s.split()[0]
        if first in ("p", "c") or first.lstrip("-").isdigit():
            return "cnf"
        if first == "d":
            return "projectors"
        if first == "vertices":
            return "table"
        return "unknown"
    return "unknown"


def _load_table_spec(text: str):
    # events-spec and weights-spec share a grammar; distinguish by keyword.
    if any(line.split()[0] == "weight" for _, line in formats._lines(text)):
        return "weights", formats.parse_weights_spec(text)
    return "events", formats.parse_events_spec(text)


def _conditions_json(checks) -> list[dict]:
    return [{"name": c.name, "passed": c.passed, "margin": c.margin,
             "detail": c.detail} for c in checks]


def _approx_fields(approx: ApproxResult) -> dict:
    return {
        "m": approx.truncation_order,
        "delta_used": approx.delta,
        "epsilon": approx.epsilon,
        "log_error_bound": approx.additive_log_error_bound,
        "log_value_re": approx.log_value.real,
        "log_value_im": approx.log_value.imag,
        "graph_order": approx.graph_order,
        "max_degree": approx.max_degree,
        "cluster_count": approx.cluster_count,
        "conditions": _conditions_json(approx.checks),
        "forced": approx.forced,
        "status": "forced" if approx.forced else "ok",
    }


def _emit(report: dict, fmt: str, stream=None) -> None:
    stream = stream or sys.stdout
    if fmt == "jsonl":
        stream.write(json.dumps(report, sort_keys=True) + "\n")
        return
    order = ("command", "input", "status", "value", "normalized_value",
             "absolute_value", "m", "epsilon", "delta_requested", "delta_used",
             "log_value_re", "log_value_im", "log_error_bound", "graph_order",
             "max_degree", "chi", "cluster_count", "lambda_star", "t",
             "relative_coefficient", "additive_part", "worst_case_total",
             "suggested_delta", "forced", "elapsed_s")
    for key in order:
        if key in report:
            stream.write(f"{key:>20}: {report[key]}\n")
    for cond in report.get("conditions", ()):
        flag = "pass" if cond["passed"] else "FAIL"
        stream.write(f"{'condition':>20}: [{flag}] {cond['name']} "
                     f"(margin {cond['margin']:.6g}) {cond['detail']}\n")
    for key in sorted(report):
        if key not in order and key != "conditions":
            stream.write(f"{key:>20}: {report[key]}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="target relative error in (0, 1]")
    p.add_argument("--delta", type=float, default=0.1,
                   help="decay-margin parameter of the hypotheses")
    p.add_argument("--force", action="store_true",
                   help="compute even when a checked hypothesis fails "
                        "(no error certificate)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for weight evaluation")
    p.add_argument("--coloring", metavar="PATH",
                   help="optional proper-coloring file (v c lines)")
    p.add_argument("--format", choices=("human", "jsonl"), default="human")
    p.add_argument("--dense-cap", type=int, default=None,
                   help="cap on dense operator dimension per evaluation")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="llcount",
        description="Certified approximate counting via truncated "
                    "cluster expansions.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count-sat", help="approximate #SAT of a DIMACS CNF")
    p.add_argument("input")
    _add_common(p)
    p.add_argument("--exact-rational", action="store_true",
                   help="exact rational truncated expansion (CNF weights "
                        "are dyadic); only the final exp rounds")

    p = sub.add_parser("prob-intersection",
                       help="approximate Pr[all events] from a DIMACS CNF "
                            "or an events-spec")
    p.add_argument("input")
    _add_common(p)

    p = sub.add_parser("qsat-commuting",
                       help="kernel-intersection dimension, commuting family")
    p.add_argument("input")
    _add_common(p)

    p = sub.add_parser("qsat-general",
                       help="kernel-intersection dimension, general family")
    p.add_argument("input")
    _add_common(p)
    p.add_argument("--mode", choices=("stability", "detectability"),
                   default="stability")
    p.add_argument("--t", type=int, default=1,
                   help="detectability rounds (mode=detectability)")
    p.add_argument("--lambda-star", type=float, default=None,
                   help="certified lower bound on the spectral gap")

    p = sub.add_parser("polymer-z",
                       help="approximate a polymer partition function from "
                            "a graph+weights spec")
    p.add_argument("input")
    _add_common(p)

    p = sub.add_parser("check", help="hypothesis report only")
    p.add_argument("input")
    _add_common(p)
    p.add_argument("--t", type=int, default=None,
                   help="also check the detectability rank condition at t")
    p.add_argument("--stability-cap", type=int, default=3)

    p = sub.add_parser("oracle", help="exact desk-scale oracles")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    for name, help_text, extra in (
            ("sat-count", "exhaustive satisfying-assignment count", ()),
            ("prob", "exact inclusion-exclusion probability", ()),
            ("dim", "exact kernel-intersection dimension and gap", ()),
            ("detect-trace", "exact detectability trace", ("t",)),
            ("polymer-z", "exact polymer partition function", ()),
            ("ursell", "brute-force Ursell function of an edge-list graph", ())):
        op = osub.add_parser(name, help=help_text)
        op.add_argument("input")
        op.add_argument("--format", choices=("human", "jsonl"), default="human")
        if "t" in extra:
            op.add_argument("--t", type=int, default=1)
    return ap


def _load_projectors(args) -> ProjectorSet:
    ps = formats.parse_projector_spec(_read(args.input))
    cap = getattr(args, "dense_cap", None)
    if cap is None:
        cap = oracles.OracleBudget.from_env().max_dense_dim
    ps.dense_cap = cap
    return ps


def _maybe_coloring(args, graph):
    if getattr(args, "coloring", None):
        return formats.parse_coloring(_read(args.coloring), graph)
    return None


def _run_count_sat(args) -> dict:
    f = cnfmod.parse_dimacs(_read(args.input))
    graph = cnfmod.cnf_dependency_graph(f)
    res = cnfmod.count_satisfying(
        f, args.epsilon, args.delta, coloring=_maybe_coloring(args, graph),
        force=args.force, threads=args.threads, exact=args.exact_rational)
    report = {"command": "count-sat", "input": args.input,
              "value": res.count, "normalized_value": res.probability,
              "absolute_value": res.count, "chi": res.chi_used,
              "variable_count": res.variable_count,
              "delta_requested": res.delta_requested}
    report.update(_approx_fields(res.approx))
    if res.approx.exact_log is not None:
        report["log_value_exact"] = str(res.approx.exact_log)
    report["elapsed_s"] = res.approx.elapsed
    return report


def _run_prob_intersection(args) -> dict:
    text = _read(args.input)
    if _sniff(text) == "cnf":
        source = cnfmod.parse_dimacs(text)
        graph = cnfmod.cnf_dependency_graph(source)
    else:
        kind, parsed = _load_table_spec(text)
        if kind != "events":
            raise SpecParseError("prob-intersection needs a CNF or events-spec")
        source = parsed
        graph = source.graph
    res = cnfmod.approx_probability_intersection(
        source, args.epsilon, args.delta,
        coloring=_maybe_coloring(args, graph), force=args.force,
        threads=args.threads)
    report = {"command": "prob-intersection", "input": args.input,
              "value": res.probability, "normalized_value": res.probability,
              "chi": res.chi_used, "delta_requested": res.delta_requested}
    report.update(_approx_fields(res.approx))
    report["elapsed_s"] = res.approx.elapsed
    return report


def _run_qsat_commuting(args) -> dict:
    ps = _load_projectors(args)
    res = qsat.approx_dim_commuting(
        ps, args.epsilon, args.delta,
        coloring=_maybe_coloring(args, support_dependency_graph(ps)),
        force=args.force, threads=args.threads)
    return _dim_report("qsat-commuting", args, res, ps)


def _dim_report(command: str, args, res: qsat.DimensionResult,
                ps: ProjectorSet) -> dict:
    report = {"command": command, "input": args.input,
              "value": res.normalized, "normalized_value": res.normalized,
              "absolute_value": res.absolute, "chi": res.chi_used,
              "d": ps.d, "qudit_count": ps.qudit_count,
              "method": res.method, "delta_requested": res.delta_requested}
    report.update(_approx_fields(res.approx))
    report["elapsed_s"] = res.approx.elapsed
    return report


def _run_qsat_general(args) -> dict:
    ps = _load_projectors(args)
    if args.mode == "stability":
        res = qsat.approx_dim_general(ps, args.epsilon, args.delta,
                                      force=args.force, threads=args.threads)
        return _dim_report("qsat-general", args, res, ps)
    params = qsat.DetectabilityParams(
        t=args.t, epsilon=args.epsilon,
        coloring=_maybe_coloring(args, support_dependency_graph(ps)),
        lambda_star=args.lambda_star)
    res = qsat.approx_dim_detectability(ps, params, args.delta,
                                        force=args.force, threads=args.threads)
    report = {"command": "qsat-general", "input": args.input,
              "mode": "detectability", "value": res.z,
              "normalized_value": res.z, "absolute_value": res.absolute_z,
              "chi": res.chi_used, "d": ps.d, "qudit_count": ps.qudit_count,
              "t": res.t, "lambda_star": res.lambda_star,
              "relative_coefficient": res.relative_coefficient,
              "additive_part": res.additive_part,
              "worst_case_total": res.worst_case_total,
              "delta_requested": res.delta_requested}
    report.update(_approx_fields(res.approx))
    report["elapsed_s"] = res.approx.elapsed
    return report


def _run_polymer_z(args) -> dict:
    graph, oracle, _ = formats.parse_weights_spec(_read(args.input))
    approx = approx_partition_function(graph, oracle, args.epsilon, args.delta,
                                       force=args.force, threads=args.threads)
    report = {"command": "polymer-z", "input": args.input,
              "value": approx.value.real,
              "value_im": approx.value.imag,
              "delta_requested": args.delta}
    report.update(_approx_fields(approx))
    report["elapsed_s"] = approx.elapsed
    return report


def _run_check(args) -> dict:
    text = _read(args.input)
    kind = _sniff(text)
    checks = []
    extra: dict = {}
    if kind == "cnf":
        f = cnfmod.parse_dimacs(text)
        graph = cnfmod.cnf_dependency_graph(f)
        col = _maybe_coloring(args, graph) or greedy_coloring(graph)
        dmax = graph.max_degree()
        checks.append(cnfmod.k_condition_check(f, args.delta, dmax,
                                               col.num_colors))
        per_event = [float(cnfmod.joint_false_probability(f, (v,)))
                     for v in graph.vertices()]
        checks.append(cnfmod._per_event_check(per_event, args.delta, dmax,
                                              col.num_colors))
        delta_used = cnfmod._usable_delta(per_event, args.delta, dmax,
                                          col.num_colors, checks[-1].passed)
        extra = {"chi": col.num_colors, "graph_order": graph.vertex_count,
                 "max_degree": dmax, "delta_used": delta_used,
                 "m": choose_truncation_order(graph.vertex_count, dmax,
                                              delta_used, args.epsilon)}
    elif kind == "projectors":
        ps = formats.parse_projector_spec(text)
        if args.dense_cap:
            ps.dense_cap = args.dense_cap
        graph = support_dependency_graph(ps)
        col = _maybe_coloring(args, graph) or greedy_coloring(graph)
        diags = validate_set(ps)
        worst_idx = min(range(len(diags)), default=None,
                        key=lambda i: diags[i].passed)
        checks.append(ConditionCheck(
            "projector-validation", all(dg.passed for dg in diags), 0.0,
            f"{len(diags)} projectors validated"
            + ("" if worst_idx is None or diags[worst_idx].passed
               else f"; projector {worst_idx} fails")))
        comm = verify_commuting(ps)
        checks.append(ConditionCheck(
            "pairwise-commutation", comm.commuting,
            0.0 if comm.commuting else -1.0,
            f"{comm.pairs_checked} overlapping pairs, failures "
            f"{list(comm.failures)}"))
        rank_chk, _ = qsat._rank_check(ps, args.delta, graph.max_degree(),
                                       col.num_colors)
        checks.append(rank_chk)
        stab = qsat.stability_check(ps, args.stability_cap, args.delta)
        checks.append(stab.as_check())
        if args.t:
            dmax = graph.max_degree()
            thr = (1.0 / (math.exp(1.0 + args.delta)
                          * (2 * args.t * (dmax + 1) - 1))) ** (args.t * col.num_colors)
            dchk, _ = qsat._rank_check(ps, args.delta, dmax, col.num_colors,
                                       name="detectability-rank-condition",
                                       threshold=thr)
            checks.append(dchk)
        extra = {"chi": col.num_colors, "graph_order": graph.vertex_count,
                 "max_degree": graph.max_degree(),
                 "suggested_delta": qsat.suggest_delta_general(ps, args.epsilon)}
    elif kind == "table":
        kind2, parsed = _load_table_spec(text)
        if kind2 == "events":
            oracle = parsed
            graph = oracle.graph
            col = _maybe_coloring(args, graph) or greedy_coloring(graph)
            checks.append(cnfmod._per_event_check(
                oracle.per_event_probabilities(), args.delta,
                graph.max_degree(), col.num_colors))
            extra = {"chi": col.num_colors, "graph_order": graph.vertex_count,
                     "max_degree": graph.max_degree()}
        else:
            graph, oracle, max_size = parsed
            m = choose_truncation_order(graph.vertex_count,
                                        graph.max_degree(), args.delta,
                                        args.epsilon)
            rep = check_weight_condition(graph, oracle, min(m, max_size),
                                         args.delta)
            checks.append(rep.as_check())
            extra = {"graph_order": graph.vertex_count,
                     "max_degree": graph.max_degree(), "m": m,
                     "delta_used": args.delta}
    else:
        raise SpecParseError("unrecognized input format")
    report = {"command": "check", "input": args.input,
              "status": "pass" if all(c.passed for c in checks) else "fail",
              "conditions": _conditions_json(checks)}
    report.update(extra)
    return report


def _run_oracle(args) -> dict:
    cmd = args.oracle_command
    budget = oracles.OracleBudget.from_env()
    text = _read(args.input)
    if cmd == "sat-count":
        f = cnfmod.parse_dimacs(text)
        value = oracles.brute_force_sat_count(f, budget=budget)
    elif cmd == "prob":
        if _sniff(text) == "cnf":
            value = float(oracles.exact_inclusion_exclusion_probability(
                cnfmod.parse_dimacs(text), budget=budget))
        else:
            kind, parsed = _load_table_spec(text)
            if kind != "events":
                raise SpecParseError("oracle prob needs a CNF or events-spec")
            value = oracles.exact_inclusion_exclusion_probability(
                parsed, budget=budget)
    elif cmd == "dim":
        ps = formats.parse_projector_spec(text)
        exact = oracles.exact_dimension_full_diagonalization(ps, budget=budget)
        return {"command": "oracle-dim", "input": args.input,
                "value": exact.normalized_dim,
                "normalized_value": exact.normalized_dim,
                "absolute_value": exact.absolute_dim,
                "lambda_star": exact.lambda_star}
    elif cmd == "detect-trace":
        ps = formats.parse_projector_spec(text)
        coloring = greedy_coloring(support_dependency_graph(ps))
        value = oracles.exact_detectability_trace(ps, coloring, args.t,
                                                  budget=budget)
    elif cmd == "polymer-z":
        graph, oracle, _ = formats.parse_weights_spec(text)
        z = oracles.brute_force_polymer_z(graph, oracle, budget=budget)
        return {"command": "oracle-polymer-z", "input": args.input,
                "value": z.real, "value_im": z.imag}
    elif cmd == "ursell":
        graph = formats.parse_edge_list(text)
        frac = oracles.ursell_bruteforce(graph, budget=budget)
        return {"command": "oracle-ursell", "input": args.input,
                "value": float(frac), "exact": str(frac)}
    else:  # pragma: no cover - argparse prevents this
        raise SpecParseError(f"unknown oracle {cmd!r}")
    return {"command": f"oracle-{cmd}", "input": args.input, "value": value}


_RUNNERS = {
    "count-sat": _run_count_sat,
    "prob-intersection": _run_prob_intersection,
    "qsat-commuting": _run_qsat_commuting,
    "qsat-general": _run_qsat_general,
    "polymer-z": _run_polymer_z,
    "check": _run_check,
    "oracle": _run_oracle,
}


def _validate_args(args) -> None:
    epsilon = getattr(args, "epsilon", None)
    if epsilon is not None and not 0.0 < epsilon <= 1.0:
        raise SpecParseError("--epsilon must lie in (0, 1]")
    delta = getattr(args, "delta", None)
    if delta is not None and delta <= 0.0:
        raise SpecParseError("--delta must be positive")
    t = getattr(args, "t", None)
    if t is not None and t < 1:
        raise SpecParseError("--t must be a positive integer")
    threads = getattr(args, "threads", None)
    if threads is not None and threads < 1:
        raise SpecParseError("--threads must be a positive integer")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fmt = getattr(args, "format", "human")
    start = time.perf_counter()
    try:
        _validate_args(args)
        report = _RUNNERS[args.command](args)
    except LLCountError as exc:
        err = {"command": args.command, "error": str(exc),
               "exit_code": exc.exit_code}
        checks = getattr(exc, "checks", None)
        if checks:
            err["conditions"] = _conditions_json(checks)
        _emit(err, fmt, sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        _emit({"command": args.command, "error": f"invalid input: {exc}",
               "exit_code": 3}, fmt, sys.stderr)
        return 3
    except LinAlgError as exc:
        _emit({"command": args.command, "error": f"linear algebra failure: {exc}",
               "exit_code": 5}, fmt, sys.stderr)
        return 5
    if "elapsed_s" not in report:
        report["elapsed_s"] = time.perf_counter() - start
    _emit(report, fmt)
    if args.command == "check" and report.get("status") != "pass":
        return 2
    return 0



if __name__ == "__main__":
    sys.exit(main())
