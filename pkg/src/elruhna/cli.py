"""Command-line interface: ``elruhna stats | align | perturb | eval | experiment``.

Exit codes are 0 on success, 2 for usage, configuration or parse errors and
3 when an input has an empty 2-core.

A ``--config`` file holds ``key = value`` lines whose keys are long flag
names (``temperature``, ``rounds``, ``timing`` ...).  Flags given on the
command line win over the file.

CSV outputs of ``experiment``
-----------------------------
``raw.csv``
    ``instance,level,seed,accuracy,edge_correctness,runtime_ms``
``aggregate.csv``
    ``instance,level,runs,mean_accuracy,std_accuracy,mean_edge_correctness,std_edge_correctness,mean_runtime_ms``

Rows are sorted by level, then seed.  The runtime columns stay empty unless
``--timing`` is given, so by default both files are byte-identical across
runs with the same flags (and any ``--jobs``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .hypercore import Hypergraph, HypergraphError, read_hypergraph, serialize_hypergraph, stats, two_core
from .metrics import (MetricError, Alignment, accuracy, hyperedge_correctness, incidence_objective,
                      nonexclusive_overlap)
from .oracle import OracleSizeError, brute_force_vertex_align
from .perturb import DEFAULT_LEVELS, NoiseSpec, perturb, sweep
from .propagate import CoolingConfig
from .solver import SolverConfig, align_any

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE = 0, 2, 3

log = logging.getLogger("elruhna")


class UsageError(Exception):
    """Bad flags, configuration or input files (exit 2)."""


class DegenerateInput(Exception):
    """An input whose 2-core is empty (exit 3)."""


# -- config files -----------------------------------------------------------

_BOOL_KEYS = {"timing", "plain_centrality", "oracle"}


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment.  Keys use ``_`` for ``-``."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _to_bool(key: str, value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"config key {key!r}: expected a boolean, got {value!r}")


# -- parser -----------------------------------------------------------------

def _solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--mode", choices=("dense", "sparse"), default="dense")
    g.add_argument("--k", type=int, default=None, help="candidates per node in sparse mode")
    g.add_argument("--beta", type=float, default=1.0, help="weight of the importance blocks")
    g.add_argument("--temperature", type=float, default=2.0)
    g.add_argument("--iters", type=int, default=20, help="propagation iterations")
    g.add_argument("--eps-zero", type=float, default=1e-6, help="similarities below this are dropped")
    g.add_argument("--rounds", type=int, default=10, help="outer rounds")
    g.add_argument("--plain-centrality", action="store_true",
                   help="unbalanced power iteration for the initial similarities")


def _common_flags(p: argparse.ArgumentParser, out_help: str) -> None:
    p.add_argument("--seed", type=int, default=None, help="random seed (random and reported if omitted)")
    p.add_argument("--out", default=None, help=out_help)
    p.add_argument("--config", default=None, help="key = value file of flag defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elruhna", description="Hypergraph alignment.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="2-core size statistics of an instance")
    p.add_argument("instance")
    _common_flags(p, "write JSON here instead of stdout")

    p = sub.add_parser("align", help="align a query hypergraph into a data hypergraph")
    p.add_argument("query")
    p.add_argument("data")
    p.add_argument("--truth", default=None, help="truth JSON from 'perturb', to report accuracy")
    p.add_argument("--trace", default=None, help="write per-round JSON lines here")
    p.add_argument("--oracle", action="store_true", help="also report the exhaustive optimum (tiny inputs)")
    _solver_flags(p)
    _common_flags(p, "write JSON here instead of stdout")

    p = sub.add_parser("perturb", help="noisy, permuted, 2-cored copy of an instance")
    p.add_argument("instance")
    p.add_argument("--noise", type=float, default=0.0, help="fraction of hyperedges replaced")
    p.add_argument("--lam", type=float, default=None, help="mean size of random hyperedges")
    p.add_argument("--truth-out", default=None, help="write the ground-truth JSON here")
    _common_flags(p, "write the noisy hypergraph here instead of stdout")

    p = sub.add_parser("eval", help="score an alignment JSON")
    p.add_argument("query")
    p.add_argument("data")
    p.add_argument("alignment", help="JSON written by 'align'")
    p.add_argument("--truth", default=None)
    p.add_argument("--oracle", action="store_true")
    _common_flags(p, "write JSON here instead of stdout")

    p = sub.add_parser("experiment", help="noise sweep over levels and seeds")
    p.add_argument("instance")
    p.add_argument("--levels", default=",".join(str(x) for x in DEFAULT_LEVELS),
                   help="comma-separated noise levels")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds (seed, seed+1, ...)")
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="fill the runtime columns (output is then not reproducible)")
    _solver_flags(p)
    _common_flags(p, "output directory for the CSV files")
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    overrides = read_config(args.config)
    given = _explicit_dests(parser, argv, args.command)
    known = vars(args)
    for key, value in overrides.items():
        if key not in known or key in ("command", "config"):
            raise UsageError(f"config key {key!r} is not a flag of '{args.command}'")
        if key in given:
            continue
        if key in _BOOL_KEYS:
            known[key] = _to_bool(key, value)
            continue
        action = _action_for(parser, args.command, key)
        try:
            known[key] = action.type(value) if action.type else value
        except ValueError as exc:
            raise UsageError(f"config key {key!r}: {exc}") from exc
        if action.choices and known[key] not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {sorted(action.choices)}")
    return argparse.Namespace(**known)


def _subparser(parser, command):
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[command]
    raise KeyError(command)


def _action_for(parser, command, dest):
    for a in _subparser(parser, command)._actions:
        if a.dest == dest:
            return a
    raise UsageError(f"unknown flag {dest!r}")


def _explicit_dests(parser, argv, command) -> set[str]:
    sp = _subparser(parser, command)
    table = {opt: a.dest for a in sp._actions for opt in a.option_strings}
    dests = set()
    for tok in argv:
        if tok.startswith("--"):
            name = tok.split("=", 1)[0]
            if name in table:
                dests.add(table[name])
    return dests


# -- helpers ----------------------------------------------------------------

def _load(path) -> Hypergraph:
    try:
        return read_hypergraph(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (ValueError, UnicodeDecodeError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


class Instance:
    """A parsed file, its 2-core and the maps back to file labels and lines."""

    def __init__(self, path):
        self.path = str(path)
        self.raw = _load(path)
        self.core, self.kept_v, self.kept_e = two_core(self.raw)
        if self.core.m == 0:
            raise DegenerateInput(f"{path}: the 2-core is empty")
        self.vertex_of_label = {self.core.label(v): v for v in range(self.core.n)}
        self.edge_of_line = {int(line): i for i, line in enumerate(self.kept_e)}

    def line(self, e: int) -> int:
        return int(self.kept_e[e])


def _seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2**31))
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def solver_config(args) -> SolverConfig:
    try:
        cooling = CoolingConfig(temperature=args.temperature, n_iter=args.iters, epsilon_zero=args.eps_zero)
        return SolverConfig(beta=args.beta, mode=args.mode, k=args.k, cooling=cooling,
                            max_outer_rounds=args.rounds, seed=args.seed,
                            balanced=not args.plain_centrality)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def alignment_from_json(obj, Q: Instance, D: Instance) -> Alignment:
    """Label / line pairs back to an alignment between the two 2-cores."""
    try:
        vmap = {Q.vertex_of_label[str(a)]: D.vertex_of_label[str(b)] for a, b in obj.get("vertex_pairs", [])}
        emap = {Q.edge_of_line[int(a)]: D.edge_of_line[int(b)] for a, b in obj.get("hyperedge_pairs", [])}
        return Alignment(vmap, emap)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"alignment refers to an unknown vertex or hyperedge: {exc}") from exc


def alignment_to_json(sigma: Alignment, Q: Instance, D: Instance) -> dict:
    return {
        "vertex_pairs": [[Q.core.label(q), D.core.label(d)] for q, d in sorted(sigma.vertex_map.items())],
        "hyperedge_pairs": [[Q.line(q), D.line(d)] for q, d in sorted(sigma.edge_map.items())],
    }


def metric_records(sigma: Alignment, Q: Instance, D: Instance, seed, noise=None,
                   truth: Alignment | None = None) -> list[dict]:
    base = {"n_Q": Q.core.n, "m_Q": Q.core.m, "n_D": D.core.n, "m_D": D.core.m, "seed": seed, "noise": noise}
    values = {
        "edge_correctness": hyperedge_correctness(Q.core, D.core, sigma),
        "incidence_objective": incidence_objective(Q.core, D.core, sigma),
        "nonexclusive_overlap": nonexclusive_overlap(Q.core, D.core, sigma),
    }
    if truth is not None:
        values["accuracy"] = accuracy(sigma, truth) if truth.vertex_map else 0.0
    return [{"metric": k, "value": v, **base} for k, v in values.items()]


def _truth(path, Q: Instance, D: Instance) -> tuple[Alignment, float | None]:
    obj = _read_json(path)
    # pairs whose endpoints were peeled from either core are not scored
    vmap = {Q.vertex_of_label[str(a)]: D.vertex_of_label[str(b)] for a, b in obj.get("vertex_pairs", [])
            if str(a) in Q.vertex_of_label and str(b) in D.vertex_of_label}
    emap = {Q.edge_of_line[int(a)]: D.edge_of_line[int(b)] for a, b in obj.get("hyperedge_pairs", [])
            if int(a) in Q.edge_of_line and int(b) in D.edge_of_line}
    return Alignment(vmap, emap), obj.get("noise")


def _oracle(Q: Instance, D: Instance) -> dict:
    HQ, HD = (Q.core, D.core) if Q.core.n <= D.core.n else (D.core, Q.core)
    try:
        value, _ = brute_force_vertex_align(HQ, HD, "EC")
    except OracleSizeError as exc:
        raise UsageError(f"--oracle: {exc}") from exc
    return {"objective": "edge_correctness", "value": value, "swapped": HQ is not Q.core}


# -- commands ---------------------------------------------------------------

def cmd_stats(args) -> int:
    inst = Instance(args.instance)
    out = {"instance": inst.path, **stats(inst.core).as_dict(),
           "raw_n": inst.raw.n, "raw_m": inst.raw.m}
    _emit(_dumps(out), args.out)
    return EXIT_OK


def cmd_align(args) -> int:
    Q, D = Instance(args.query), Instance(args.data)
    seed = _seed(args)
    cfg = solver_config(args)
    sigma, trace, swapped = align_any(Q.core, D.core, cfg)
    truth, noise = _truth(args.truth, Q, D) if args.truth else (None, None)
    result = {
        "query": Q.path,
        "data": D.path,
        "seed": seed,
        "swapped": swapped,
        **alignment_to_json(sigma, Q, D),
        "metrics": metric_records(sigma, Q, D, seed, noise, truth),
    }
    if args.oracle:
        result["oracle"] = _oracle(Q, D)
    if args.trace:
        Path(args.trace).write_text("".join(r.to_json() + "\n" for r in trace), encoding="utf-8")
    _emit(_dumps(result), args.out)
    return EXIT_OK


def cmd_perturb(args) -> int:
    inst = Instance(args.instance)
    seed = _seed(args)
    try:
        spec = NoiseSpec(args.noise, args.lam, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    noisy, truth = perturb(inst.core, spec)
    if noisy.m == 0:
        raise DegenerateInput("the noisy copy has an empty 2-core")
    # fresh names so the labels carry no trace of the permutation
    names = tuple(f"v{i}" for i in range(noisy.n))
    noisy = Hypergraph(noisy.n, noisy.edges, names)
    text = serialize_hypergraph(noisy)
    _emit(text, args.out)
    if args.truth_out:
        obj = {
            "noise": spec.noise_level,
            "lam": spec.lam,
            "seed": seed,
            "vertex_pairs": [[inst.core.label(q), names[d]] for q, d in sorted(truth.vertex_map.items())],
            "hyperedge_pairs": [[inst.line(q), d] for q, d in sorted(truth.edge_map.items())],
        }
        # the noisy copy is already a 2-core, so its line index is its hyperedge index
        Path(args.truth_out).write_text(_dumps(obj), encoding="utf-8")
    return EXIT_OK


def cmd_eval(args) -> int:
    Q, D = Instance(args.query), Instance(args.data)
    obj = _read_json(args.alignment)
    sigma = alignment_from_json(obj, Q, D)
    truth, noise = _truth(args.truth, Q, D) if args.truth else (None, None)
    result = {"metrics": metric_records(sigma, Q, D, obj.get("seed", args.seed), noise, truth)}
    if args.oracle:
        result["oracle"] = _oracle(Q, D)
    _emit(_dumps(result), args.out)
    return EXIT_OK


def _levels(text: str) -> list[float]:
    try:
        levels = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--levels: {exc}") from exc
    if not levels or any(not 0.0 <= q <= 1.0 for q in levels):
        raise UsageError("--levels must be a nonempty list of values in [0, 1]")
    return levels


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_experiment(args) -> int:
    inst = Instance(args.instance)
    seed = _seed(args)
    levels = _levels(args.levels)
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    cfg = solver_config(args)
    name = Path(inst.path).stem
    seeds = [seed + i for i in range(args.seeds)]
    rows, agg = sweep(inst.core, levels, seeds, cfg, instance=name, jobs=args.jobs, lam=args.lam)

    timed = args.timing
    raw_csv = _csv_text(
        ["instance", "level", "seed", "accuracy", "edge_correctness", "runtime_ms"],
        [[r.instance, _fmt(r.level), r.seed, _fmt(r.accuracy), _fmt(r.edge_correctness),
          f"{r.runtime_ms:.3f}" if timed else ""] for r in rows],
    )
    agg_csv = _csv_text(
        ["instance", "level", "runs", "mean_accuracy", "std_accuracy", "mean_edge_correctness",
         "std_edge_correctness", "mean_runtime_ms"],
        [[a.instance, _fmt(a.level), a.runs, _fmt(a.mean_accuracy), _fmt(a.std_accuracy),
          _fmt(a.mean_edge_correctness), _fmt(a.std_edge_correctness),
          f"{a.mean_runtime_ms:.3f}" if timed else ""] for a in agg],
    )
    out = Path(args.out or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "raw.csv").write_text(raw_csv, encoding="utf-8")
        (out / "aggregate.csv").write_text(agg_csv, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc.strerror or exc}") from exc

    print(f"{'level':>6} {'runs':>4} {'accuracy':>17} {'edge_correct':>17}")
    for a in agg:
        print(f"{a.level:6.3f} {a.runs:4d} {a.mean_accuracy:8.4f} ± {a.std_accuracy:6.4f} "
              f"{a.mean_edge_correctness:8.4f} ± {a.std_edge_correctness:6.4f}")
    return EXIT_OK


COMMANDS = {
    "stats": cmd_stats,
    "align": cmd_align,
    "perturb": cmd_perturb,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"elruhna: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"elruhna: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateInput as exc:
        print(f"elruhna: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (HypergraphError, MetricError) as exc:
        print(f"elruhna: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
