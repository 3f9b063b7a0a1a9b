"""Command-line front end: solve, verify, generate, stats."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from .flowstate import write_trace_csv
from .instances import (FormulaError, assignment_hints, gen_3sat, gen_oscillator, gen_random_acyclic,
                        gen_random_cyclic, parse_dimacs)
from .network import NetworkError, parse_network, serialize_network, stats
from .numerics import format_rational, to_rational
from .solver import (HintError, ResourceLimitError, SolverConfig, resolve_hints, result_to_dict,
                     solve)
from .verifier import RawFlow, report, verify

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _read(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def cmd_solve(args) -> int:
    net = parse_network(_read(args.network))
    hints = {}
    if args.hints:
        hints = resolve_hints(net, json.loads(_read(args.hints)))
    cfg = SolverConfig(horizon=args.horizon, max_phases=args.max_phases, hints=hints, mode=args.mode)
    status = EXIT_OK
    try:
        res = solve(net, cfg)
    except ResourceLimitError as exc:
        print(f"error: {exc}; writing the partial result", file=sys.stderr)
        res = exc.partial
        status = EXIT_RESOURCE
    _write(args.out, _dump(result_to_dict(res)))
    if args.trace:
        _write(args.trace, write_trace_csv(res.flow, decimals=not args.exact_only))
    if args.events:
        _write(args.events, res.event_lines())
    return status


def cmd_verify(args) -> int:
    net = parse_network(_read(args.network))
    doc = json.loads(_read(args.flow))
    raw = RawFlow.from_doc(net, doc.get("flow", doc))
    violations = verify(net, raw)
    sys.stdout.write(report(violations))
    return EXIT_OK if not violations else EXIT_FAIL


def cmd_generate(args) -> int:
    if args.family == "oscillator":
        net = gen_oscillator(args.U)
    elif args.family == "3sat":
        phi = parse_dimacs(_read(args.cnf))
        indicator = parse_network(_read(args.indicator)) if args.indicator else gen_oscillator(1)
        net = gen_3sat(phi, indicator)
        if args.assignment is not None:
            lits = [int(x) for x in args.assignment.replace(",", " ").split()]
            assignment = {abs(l): l > 0 for l in lits}
            hints = assignment_hints(phi, assignment)
            if args.hints_out:
                _write(args.hints_out, _dump(hints))
            else:
                print(_dump(hints), end="", file=sys.stderr)
    else:
        gen = gen_random_cyclic if args.cyclic else gen_random_acyclic
        extra = {} if args.density is None else {"density": args.density}
        net = gen(args.seed, args.nodes, **extra)
    _write(args.out, serialize_network(net))
    return EXIT_OK


def cmd_stats(args) -> int:
    net = parse_network(_read(args.network))
    st = stats(net)
    doc = {
        "nodes": net.num_nodes,
        "edges": len(net.edges),
        "tau_min": format_rational(st.tau_min),
        "max_out_degree": st.max_out_degree,
        "inflow_breakpoint_count": st.inflow_breakpoint_count,
        "total_inflow_volume": format_rational(st.total_inflow_volume),
        "acyclic": net.is_acyclic(),
    }
    sys.stdout.write(_dump(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ideflow", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="debug log of labels per phase")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute an equilibrium flow")
    s.add_argument("--network", help="network document (default: stdin)")
    s.add_argument("--horizon", type=to_rational, help="stop at this time (p/q)")
    s.add_argument("--max-phases", type=int, default=100_000)
    s.add_argument("--hints", help="JSON object mapping a node to the head of its preferred edge")
    s.add_argument("--mode", choices=("auto", "general", "acyclic"), default="auto")
    s.add_argument("--out", help="result document (default: stdout)")
    s.add_argument("--trace", help="write a per-edge CSV trace here")
    s.add_argument("--exact-only", action="store_true", help="omit decimal columns from the trace")
    s.add_argument("--events", help="write the event log here")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a flow for feasibility and equilibrium")
    v.add_argument("--network", required=True)
    v.add_argument("--flow", required=True, help="result document from solve")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("generate", help="write a generated network document")
    gs = g.add_subparsers(dest="family", required=True)
    go = gs.add_parser("oscillator")
    go.add_argument("--U", type=to_rational, required=True)
    gc = gs.add_parser("3sat")
    gc.add_argument("--cnf", required=True, help="DIMACS CNF file")
    gc.add_argument("--indicator", help="indicator network document (default: oscillator with U=1)")
    gc.add_argument("--assignment", help="satisfying assignment as signed literals, e.g. '1 -2 3'")
    gc.add_argument("--hints-out", help="where to write the hints for --assignment")
    gr = gs.add_parser("random")
    gr.add_argument("--seed", type=int, required=True)
    gr.add_argument("--nodes", type=int, required=True)
    gr.add_argument("--density", type=float, help="edge probability (family default if omitted)")
    gr.add_argument("--cyclic", action="store_true")
    for sp in (go, gc, gr):
        sp.add_argument("--out", help="default: stdout")
    g.set_defaults(func=cmd_generate)

    st = sub.add_parser("stats", help="instance statistics")
    st.add_argument("--network", help="network document (default: stdin)")
    st.set_defaults(func=cmd_stats)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (NetworkError, HintError, FormulaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
