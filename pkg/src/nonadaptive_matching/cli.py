"""Command-line entry point: generate, estimate, distinguish, probe, experiment.

Every randomized subcommand needs ``--seed``; identical arguments give
byte-identical files and stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .analysis import MODELS, VERDICT_RULES, ExperimentConfig, rows_to_csv, run_experiment
from .distinguishers import birthday_distinguisher, third_root_distinguisher, two_round_distinguisher
from .estimator import DEFAULT_CONSTANT, estimate_matching_size
from .graph import BipartiteMultigraph, exact_maximum_matching
from .instance import InstanceParams, ParamsError, World, generate, public_view, write_instance
from .rng import child_rng
from .tree_probe import TreeProbePlan, execute_tree_plan

SCHEMA_VERSION = "1"
ESTIMATE_COLUMNS = ("seed", "estimate", "exact_mu", "charged_queries")
DISTINGUISH_COLUMNS = ("trial", "world", "verdict", "correct", "charged_queries", "evidence")


class CliError(Exception):
    """Invariant or input failure; reported on stderr with exit code 1."""


def _params(args, epsilon: float = 0.0) -> InstanceParams:
    if args.strict:
        return InstanceParams(args.n, args.delta, epsilon, args.seed)
    try:
        return InstanceParams(args.n, args.delta, epsilon, args.seed)
    except ParamsError:
        p = InstanceParams.constructible(args.n, args.delta, epsilon, args.seed)
        print(
            f"note: (n={args.n}, delta={args.delta}) is not constructible; using delta={p.delta:.6g} "
            f"(g={p.groups}, k={p.k}, d*={p.d_star}); pass --strict to reject instead",
            file=sys.stderr,
        )
        return p


def _emit_csv(path, columns, rows) -> None:
    """Write to ``path``, or to stdout when no path is given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r[c] for c in columns])
    if path:
        Path(path).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def cmd_generate(args) -> int:
    p = _params(args)
    inst = generate(p, World(args.world.upper()), child_rng(args.seed, 0, "instance"))
    out = Path(args.out)
    sidecar = Path(args.truth) if args.truth else out.with_name(out.name + ".truth.json")
    write_instance(inst, out, sidecar)
    print(json.dumps({"graph": str(out), "truth": str(sidecar), "n_prime": p.n_prime, "edges": inst.graph.num_edges}))
    return 0


def cmd_estimate(args) -> int:
    rows = []
    file_graph = BipartiteMultigraph.read_text(args.graph) if args.graph != "generated" else None
    if file_graph is None and args.n is None:
        raise CliError("--n is required for generated graphs")
    params = _params(args) if file_graph is None else None
    for t in range(args.trials):
        seed = args.seed + t
        if file_graph is None:
            g = public_view(generate(params, World(args.world.upper()), child_rng(seed, 0, "instance")))
            n = params.n
        else:
            g = file_graph
            n = args.n if args.n is not None else g.num_vertices
        res = estimate_matching_size(
            g, n, args.delta, child_rng(seed, 0, "estimate"), args.constant, args.max_degree_bound
        )
        mu = exact_maximum_matching(g).size if not args.no_mu else ""
        rows.append({"seed": seed, "estimate": res.estimate, "exact_mu": mu, "charged_queries": res.charged_queries})
    _emit_csv(args.csv, ESTIMATE_COLUMNS, rows)
    if args.csv:
        print(json.dumps({"rows": len(rows), "csv": args.csv}))
    return 0


def cmd_distinguish(args) -> int:
    p = _params(args)
    rows, right, decided = [], 0, 0
    for t in range(args.trials):
        inst = generate(p, World(args.world.upper()), child_rng(args.seed, t, "instance"))
        g = public_view(inst)
        rng = child_rng(args.seed, t, "distinguish")
        if args.method == "birthday":
            v = birthday_distinguisher(g, p, rng, args.c)
        elif args.method == "third-root":
            v = third_root_distinguisher(g, p, rng, args.c1, args.c2)
        else:
            v = two_round_distinguisher(g, p, rng, args.c)
        ok = v.verdict.value == inst.world.value
        if v.verdict.value != "UNDECIDED":
            decided += 1
            right += ok
        rows.append(
            {
                "trial": t,
                "world": inst.world.value,
                "verdict": v.verdict.value,
                "correct": int(ok),
                "charged_queries": v.charged_queries,
                "evidence": v.evidence,
            }
        )
    if args.csv:
        _emit_csv(args.csv, DISTINGUISH_COLUMNS, rows)
    print(json.dumps({"method": args.method, "trials": args.trials, "decided": decided, "correct": right}))
    return 0


def cmd_probe(args) -> int:
    plan = TreeProbePlan.read(args.plan)
    if args.graph:
        g = BipartiteMultigraph.read_text(args.graph)
    else:
        if args.n is None:
            raise CliError("give --graph or --n/--delta")
        p = _params(args)
        g = public_view(generate(p, World(args.world.upper()), child_rng(args.seed, 0, "instance")))
    t = execute_tree_plan(g, plan, child_rng(args.seed, 0, "execute"))
    if args.out:
        t.write_csv(args.out)
    print(json.dumps({"root": t.root, "charged_queries": t.charged_queries, "edges": int(t.edges().shape[0])}))
    return 0


def cmd_experiment(args) -> int:
    p = _params(args, args.epsilon)
    trees = None
    if args.plan:
        if args.model == "flat":
            raise CliError("--plan needs --model tree or forest")
        trees = [TreeProbePlan.read(args.plan)]
    cfg = ExperimentConfig(
        params=p,
        model=args.model,
        trials=args.trials,
        q=args.q,
        csv_path=None,
        verdict_rule=args.verdict,
        compute_mu=not args.no_mu,
        tree_plans=trees,
    )
    res = run_experiment(cfg)
    text = rows_to_csv(res.rows)
    if args.csv:
        Path(args.csv).write_text(text)
    else:
        sys.stdout.write(text)
    summary = res.summary()
    summary["charged_queries_mean"] = sum(res.charged) / len(res.charged)
    print(json.dumps(summary), file=sys.stderr if not args.csv else sys.stdout)
    return 0


def _add_instance_flags(sp, n_required=True):
    sp.add_argument("--n", type=int, required=n_required, help="scale parameter")
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--strict", action="store_true", help="reject non-constructible (n, delta) instead of snapping delta")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonadaptive-matching", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"nonadaptive-matching {__version__} (csv schema {SCHEMA_VERSION})"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("generate", help="write a hard instance and its ground-truth sidecar")
    _add_instance_flags(sp)
    sp.add_argument("--world", choices=["yes", "no", "mixed"], default="mixed")
    sp.add_argument("--out", required=True)
    sp.add_argument("--truth", help="sidecar path (default: <out>.truth.json)")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("estimate", help="run the sampling estimator")
    _add_instance_flags(sp, n_required=False)
    sp.add_argument("--graph", default="generated", help="graph file, or 'generated' for a hard instance")
    sp.add_argument("--world", choices=["yes", "no", "mixed"], default="yes")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--constant", type=float, default=DEFAULT_CONSTANT)
    sp.add_argument("--max-degree-bound", type=int)
    sp.add_argument("--no-mu", action="store_true", help="skip the exact matching size")
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("distinguish", help="run a YES/NO distinguisher on fresh instances")
    _add_instance_flags(sp)
    sp.add_argument("--method", choices=["birthday", "third-root", "two-round"], required=True)
    sp.add_argument("--world", choices=["yes", "no", "mixed"], default="mixed")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--c", type=float, default=4.0)
    sp.add_argument("--c1", type=float, default=4.0)
    sp.add_argument("--c2", type=float, default=4.0)
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_distinguish)

    sp = sub.add_parser("probe", help="execute a tree-probe plan file")
    sp.add_argument("--plan", required=True)
    sp.add_argument("--graph")
    sp.add_argument("--n", type=int)
    sp.add_argument("--delta", type=float, default=0.5)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--strict", action="store_true")
    sp.add_argument("--world", choices=["yes", "no", "mixed"], default="mixed")
    sp.add_argument("--out", help="transcript CSV")
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("experiment", help="multi-trial structural statistics")
    _add_instance_flags(sp)
    sp.add_argument("--epsilon", type=float, default=0.0)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--model", choices=MODELS, default="flat")
    sp.add_argument("--plan", help="tree plan file (tree/forest models)")
    sp.add_argument("--q", type=int, help="budget (default n^(1+epsilon))")
    sp.add_argument("--verdict", choices=VERDICT_RULES, default="certificate")
    sp.add_argument("--no-mu", action="store_true")
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("trials",):
        if getattr(args, name, 1) < 1:
            parser.error(f"--{name} must be at least 1")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
