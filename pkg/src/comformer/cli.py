"""Command-line interface.

Machine-readable output (JSON / CSV) goes to stdout or ``--out``; human
summaries go to stderr. Exit codes: 0 success, 1 input error, 2 domain
diagnostic (disconnected graph, inconsistent placement, failed verification).
``COMFORMER_THREADS`` caps the per-file concurrency of batch commands.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import _core
from .errors import (
    ComformerError,
    DisconnectedError,
    InconsistentPlacementError,
    LeftHandedSolutionError,
    ParseError,
)
from .fixtures import FAMILIES, FixtureSpec, generate, random_crystal
from .graph import EQUIVARIANT, INVARIANT, build_equivariant_graph, build_invariant_graph, compare_graphs
from .io import (
    StructureDocument,
    parse_crystal_json,
    parse_graph_json,
    parse_poscar,
    write_crystal_json,
    write_graph_json,
    write_poscar,
)
from .model import (
    ECOMFORMER,
    ICOMFORMER,
    ModelConfig,
    featurize,
    forward,
    init_parameters,
    parameters_from_json,
    parameters_to_json,
)
from .reconstruct import (
    match_structures,
    reconstruct_crystal,
    reconstruct_crystal_equivariant,
)
from .symmetry import fuzz_invariance

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DOMAIN = 2

_DOMAIN_ERRORS = (DisconnectedError, InconsistentPlacementError, LeftHandedSolutionError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); usage errors are input errors
        raise _UsageError(message)


def _threads() -> int:
    env = os.environ.get("COMFORMER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise _UsageError(f"COMFORMER_THREADS must be an integer, got {env!r}")
    return min(8, os.cpu_count() or 1)


def _map_ordered(fn, items):
    if len(items) <= 1 or _threads() == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(fn, items))


def _read_structure(path: str, fmt: str) -> StructureDocument:
    raw = Path(path).read_bytes()
    if fmt == "json" or (fmt == "auto" and path.endswith(".json")):
        return parse_crystal_json(raw, source_path=path)
    return parse_poscar(raw, source_path=path)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _build_graph(crystal, kind: str, k: int):
    if kind == EQUIVARIANT:
        return build_equivariant_graph(crystal, k)
    return build_invariant_graph(crystal, k)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_graph(args) -> int:
    out_dir = Path(args.out) if args.out else Path(".")
    single_file = args.out and args.out.endswith(".json") and len(args.inputs) == 1

    def build(path: str):
        doc = _read_structure(path, args.format)
        graph = _build_graph(doc.crystal, args.kind, args.k)
        return path, write_graph_json(graph)

    results = _map_ordered(build, args.inputs)
    for path, text in results:
        if single_file:
            Path(args.out).write_text(text)
            target = args.out
        else:
            out_dir.mkdir(parents=True, exist_ok=True)
            target = out_dir / (Path(path).stem + ".graph.json")
            Path(target).write_text(text)
        print(f"{path} -> {target}", file=sys.stderr)
    return EXIT_OK


def _infer_k(graph) -> int:
    ordinary = np.ones(graph.n_edges, dtype=bool)
    table = graph.designated
    if table is not None:
        ordinary[table[table >= 0]] = False
    counts = np.bincount(graph.dst[ordinary], minlength=graph.n_nodes)
    return max(1, int(counts.min()))


def _verify_one(path: str, args):
    raw = Path(path).read_bytes()
    if path.endswith(".graph.json"):
        graph = parse_graph_json(raw)
        crystal = (
            reconstruct_crystal(graph)
            if graph.kind == INVARIANT
            else reconstruct_crystal_equivariant(graph)
        )
        rebuilt = _build_graph(crystal, graph.kind, _infer_k(graph))
        ok = compare_graphs(graph, rebuilt, tol=max(args.tol, 1e-7))
        return {"path": path, "kind": graph.kind, "roundtrip_consistent": bool(ok),
                "rmsd": 0.0 if ok else float("inf"), "max_pointwise": 0.0 if ok else float("inf"),
                "success": bool(ok)}
    doc = _read_structure(path, args.format)
    graph = _build_graph(doc.crystal, args.kind, args.k)
    crystal = (
        reconstruct_crystal(graph)
        if args.kind == INVARIANT
        else reconstruct_crystal_equivariant(graph)
    )
    report = match_structures(doc.crystal, crystal, tol=args.tol)
    return {"path": path, "kind": args.kind, **report.to_dict()}


def cmd_verify(args) -> int:
    root = Path(args.input)
    if root.is_dir():
        paths = sorted(str(p) for p in root.iterdir() if p.is_file())
    else:
        paths = [args.input]
    if not paths:
        raise _UsageError(f"no input files under {args.input}")

    reports = _map_ordered(lambda p: _verify_one(p, args), paths)
    rmsds = [r["rmsd"] for r in reports if np.isfinite(r["rmsd"])]
    summary = {
        "count": len(reports),
        "all_success": all(r["success"] for r in reports),
        "mean_rmsd": float(np.mean(rmsds)) if rmsds else None,
        "max_rmsd": float(np.max(rmsds)) if rmsds else None,
        "mean_max_pointwise": float(
            np.mean([r["max_pointwise"] for r in reports if np.isfinite(r["max_pointwise"])])
        )
        if rmsds
        else None,
        "max_max_pointwise": float(
            np.max([r["max_pointwise"] for r in reports if np.isfinite(r["max_pointwise"])])
        )
        if rmsds
        else None,
    }
    _emit(json.dumps({"structures": reports, "summary": summary}, indent=1) + "\n", args.out)
    print(
        f"verified {summary['count']} structures; mean rmsd "
        f"{summary['mean_rmsd']}; all_success={summary['all_success']}",
        file=sys.stderr,
    )
    return EXIT_OK if summary["all_success"] else EXIT_DOMAIN


def cmd_invariance(args) -> int:
    doc = _read_structure(args.input, args.format)
    report = fuzz_invariance(
        doc.crystal,
        k=args.k,
        trials=args.trials,
        seed=args.seed,
        tol=args.tol,
        include_mirror=args.include_mirror,
    )
    _emit(json.dumps(report.to_dict(), indent=1) + "\n", args.out)
    print(
        f"invariance fuzz: {report.passed} passed, {report.failed} failed, "
        f"worst deviation {report.worst_deviation:.3e}",
        file=sys.stderr,
    )
    return EXIT_OK if report.failed == 0 else EXIT_DOMAIN


def _load_model(args):
    config = ModelConfig.from_file(args.model) if args.model else ModelConfig()
    if args.params:
        if not Path(args.params).is_file():
            raise _UsageError(f"params file not found: {args.params}")
        params = parameters_from_json(Path(args.params).read_text(), config)
        if params.variant != args.variant:
            raise _UsageError(
                f"params file holds {params.variant!r}, requested {args.variant!r}"
            )
    else:
        params = init_parameters(config, args.variant)
    return config, params


def _model_rows(args, per_file):
    config, params = _load_model(args)
    kind = INVARIANT if args.variant == ICOMFORMER else EQUIVARIANT

    def run(path: str):
        doc = _read_structure(path, args.format)
        graph = _build_graph(doc.crystal, kind, args.k)
        return per_file(path, graph, config, params)

    return _map_ordered(run, args.inputs)


def cmd_featurize(args) -> int:
    rows = _model_rows(
        args,
        lambda path, graph, config, params: [path]
        + [repr(v) for v in featurize(graph, config, params)],
    )
    buf = _stdio.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["path"] + [f"f{i}" for i in range(len(rows[0]) - 1)])
    writer.writerows(rows)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_predict(args) -> int:
    rows = _model_rows(
        args,
        lambda path, graph, config, params: [path, repr(forward(graph, config, params))],
    )
    buf = _stdio.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["path", "prediction"])
    writer.writerows(rows)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_init_params(args) -> int:
    config = ModelConfig.from_file(args.model) if args.model else ModelConfig()
    if args.seed is not None:
        config = ModelConfig(**{**config.__dict__, "seed": args.seed})
    _emit(parameters_to_json(init_parameters(config, args.variant)), args.out)
    return EXIT_OK


def cmd_fixtures(args) -> int:
    out_dir = Path(args.out or "fixtures")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for family in args.families:
        for i in range(args.count):
            spec = FixtureSpec(family=family, n_atoms=args.n_atoms, seed=args.seed + i)
            crystal = generate(spec)
            doc = StructureDocument(crystal=crystal, comment=f"{family} seed={spec.seed}")
            name = f"{family.replace('-', '_')}_{i:03d}"
            if args.format == "json":
                path = out_dir / f"{name}.json"
                path.write_text(write_crystal_json(doc))
            else:
                path = out_dir / f"{name}.poscar"
                path.write_text(write_poscar(doc))
            written.append(str(path))
    print(f"wrote {len(written)} fixtures to {out_dir}", file=sys.stderr)
    return EXIT_OK


def _time_call(fn, repeats: int = 3) -> float:
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def cmd_bench(args) -> int:
    sizes = [int(tok) for tok in args.n_range.split(",") if tok.strip()]
    if not sizes:
        raise _UsageError("--n-range must list at least one size")
    config = ModelConfig()
    params = init_parameters(config, ICOMFORMER)
    rows = []
    backends = _core.available_backends()
    for n in sizes:
        crystal = random_crystal(seed=args.seed, n_atoms=n)
        for name, query in backends.items():
            import comformer.graph as graphmod

            saved = graphmod.radius_query
            graphmod.radius_query = query
            try:
                build_s = _time_call(
                    lambda: build_invariant_graph(crystal, args.k), args.repeats
                )
            finally:
                graphmod.radius_query = saved
            graph = build_invariant_graph(crystal, args.k)
            fwd_s = _time_call(lambda: forward(graph, config, params), args.repeats)
            rows.append([crystal.n_atoms, args.k, name, f"{build_s:.6f}", f"{fwd_s:.6f}"])
    buf = _stdio.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["n", "k", "backend", "build_seconds", "forward_seconds"])
    writer.writerows(rows)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def _add_common(p, k_default=12):
    p.add_argument("--k", type=int, default=k_default, help="neighbor count for graph building")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--format", choices=["auto", "poscar", "json"], default="auto")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="comformer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="build crystal graphs from structure files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--kind", choices=[INVARIANT, EQUIVARIANT], default=INVARIANT)
    _add_common(p)
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("verify", help="reconstruct structures from graphs and score rmsd")
    p.add_argument("input", help="structure file or directory")
    p.add_argument("--kind", choices=[INVARIANT, EQUIVARIANT], default=INVARIANT)
    _add_common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("invariance", help="fuzz crystal passive symmetries")
    p.add_argument("input")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--include-mirror", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_invariance, tol=1e-9)

    for name, fn in (("featurize", cmd_featurize), ("predict", cmd_predict)):
        p = sub.add_parser(name, help=f"{name} structures with a frozen model")
        p.add_argument("inputs", nargs="+")
        p.add_argument("--variant", choices=[ICOMFORMER, ECOMFORMER], default=ICOMFORMER)
        p.add_argument("--model", default=None, help="model config JSON/TOML")
        p.add_argument("--params", default=None, help="parameters JSON (default: seeded init)")
        _add_common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("init-params", help="write seeded model parameters")
    p.add_argument("--variant", choices=[ICOMFORMER, ECOMFORMER], default=ICOMFORMER)
    p.add_argument("--model", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_init_params)

    p = sub.add_parser("fixtures", help="write synthetic crystal fixtures")
    p.add_argument("--families", nargs="+", default=list(FAMILIES), choices=list(FAMILIES))
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--n-atoms", type=int, default=4)
    _add_common(p)
    p.set_defaults(fn=cmd_fixtures)

    p = sub.add_parser("bench", help="time graph building and forward passes")
    p.add_argument("--n-range", default="64,128,256")
    p.add_argument("--repeats", type=int, default=3)
    _add_common(p)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ParseError, ComformerError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
