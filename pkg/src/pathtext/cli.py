"""Command-line surface: execute and typecheck paths, search, generate,
produce saliency training data, and score with BLEU.

Exit codes: 0 success, 1 domain error, 2 usage error, 3 backend error.
Results go to stdout; logs and error records go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import linearize_table, parse_graph, parse_table
from .dsl import parse_path, serialize_path, typecheck_path
from .errors import EngineError
from .gateway import LlmGateway, MockNliClient, RemoteNliClient, RemoteSaliencyClient, make_backend
from .metrics import evaluate_bleu
from .modules import evaluate_path, registry_default, render_value
from .prompts import PromptLibrary
from .scoring import (
    generate_saliency_training_data,
    make_heuristic_scorer,
    read_gold,
    write_samples,
)
from .search import SearchConfig, best_first_search_table, enumerate_all_paths, fuse_states


def _load_table(path: str, fmt: str | None):
    suffix = Path(path).suffix.lstrip(".").lower()
    fmt = fmt or (suffix if suffix in ("json", "csv", "tsv") else "json")
    with open(path, encoding="utf-8") as fp:
        return parse_table(fp.read(), fmt)


def _load_graph(path: str):
    with open(path, encoding="utf-8") as fp:
        return parse_graph(fp.read())


def _make_scorer(name: str, reg):
    if name == "heuristic":
        return make_heuristic_scorer(reg)
    client = RemoteSaliencyClient()
    return lambda table, path: client.score(linearize_table(table), serialize_path(path))


def _make_gateway(args) -> LlmGateway:
    prompts = PromptLibrary.from_file(args.demos) if getattr(args, "demos", None) else PromptLibrary()
    return LlmGateway(make_backend(args.backend), prompts)


def cmd_exec(args) -> int:
    reg = registry_default()
    table = _load_table(args.table, args.format)
    path = parse_path(args.path)
    typecheck_path(path, reg, table)
    trace: list | None = [] if args.trace else None
    value = evaluate_path(table, path, reg, trace)
    if trace is not None:
        for step in trace:
            print(json.dumps(step))
    print(render_value(value))
    return 0


def cmd_typecheck(args) -> int:
    reg = registry_default()
    table = _load_table(args.table, args.format)
    print(typecheck_path(parse_path(args.path), reg, table).value)
    return 0


def _run_search(args, reg, table):
    cfg = SearchConfig(beam_size=args.beam, num_paths=args.num_paths, max_depth=args.max_depth)
    scorer = _make_scorer(args.scorer, reg)
    log: list | None = [] if args.log_search else None
    result = best_first_search_table(table, cfg, reg, scorer, search_log=log)
    if args.log_search:
        with open(args.log_search, "w", encoding="utf-8") as fp:
            for record in log or []:
                fp.write(json.dumps(record) + "\n")
    return result


def cmd_search(args) -> int:
    reg = registry_default()
    table = _load_table(args.table, args.format)
    result = _run_search(args, reg, table)
    if not result.found:
        print(json.dumps({"found": 0, **result.diagnostics}), file=sys.stderr)
        return 0
    for path, score in zip(result.paths, result.scores):
        print(f"{score:.6f}\t{serialize_path(path)}")
    return 0


def cmd_generate(args) -> int:
    reg = registry_default()
    gateway = _make_gateway(args)
    if args.task == "table":
        table = _load_table(args.table, args.format)
        result = _run_search(args, reg, table)
        if not result.found:
            print(json.dumps({"found": 0, **result.diagnostics}), file=sys.stderr)
            return 0
        for path in result.paths:
            print(gateway.surface_realize_path(table, path))
        return 0
    graph = _load_graph(args.graph)
    nli = MockNliClient() if args.backend == "mock" else RemoteNliClient()
    state, _ = fuse_states(graph, gateway, nli)
    print(state.text)
    return 0


def cmd_baseline(args) -> int:
    gateway = _make_gateway(args)
    if args.task == "table":
        value = _load_table(args.table, args.format)
    else:
        value = _load_graph(args.graph)
    print(gateway.baseline_generate(args.mode, args.task, value))
    return 0


def cmd_enumerate(args) -> int:
    reg = registry_default()
    table = _load_table(args.table, args.format)
    for path in enumerate_all_paths(table, args.max_depth, reg):
        print(serialize_path(path))
    return 0


def cmd_saliency_data(args) -> int:
    reg = registry_default()
    with open(args.gold, encoding="utf-8") as fp:
        gold = read_gold(fp)
    samples = generate_saliency_training_data(gold, reg)
    with open(args.out, "w", encoding="utf-8") as fp:
        written = write_samples(samples, fp)
    correct = sum(1 for s in samples if s.label == "correct")
    print(json.dumps({
        "gold": len(gold),
        "correct": correct,
        "incorrect": written - correct,
        "samples": written,
        "out": args.out,
    }))
    return 0


def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fp:
        return [line.rstrip("\n") for line in fp if line.strip()]


def _plot_report(report, out: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    scores = [h["bleu_3"] for h in report.per_hypothesis]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(scores, bins=20, range=(0.0, 1.0), color="#4878d0", edgecolor="white")
    ax.set_xlabel("per-hypothesis BLEU-3")
    ax.set_ylabel("count")
    ax.set_title(
        f"corpus BLEU-1/2/3 = {report.bleu_1:.3f} / {report.bleu_2:.3f} / {report.bleu_3:.3f}"
    )
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def cmd_eval_bleu(args) -> int:
    hyps = _read_lines(args.hyps)
    refs = [line.split("\t") for line in _read_lines(args.refs)]
    report = evaluate_bleu(hyps, refs)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fp:
            for record in report.per_hypothesis:
                fp.write(json.dumps(record) + "\n")
            fp.write(json.dumps(report.to_record()) + "\n")
    if args.plot:
        _plot_report(report, args.plot)
    print(json.dumps(report.to_record()))
    return 0


def _add_table_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--table", required=True, help="table file (json record, csv, or tsv)")
    p.add_argument("--format", choices=("json", "csv", "tsv"), help="override format sniffed from the extension")


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beam", type=int, default=20)
    p.add_argument("--num-paths", type=int, default=1)
    p.add_argument("--max-depth", type=int, default=5)
    p.add_argument("--scorer", choices=("heuristic", "remote"), default="heuristic")
    p.add_argument("--seed", type=int, default=0,
                   help="reserved for stochastic scorers; shipped scorers ignore it")
    p.add_argument("--log-search", metavar="FILE", help="write one record per expansion")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathtext")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exec", help="evaluate a reasoning path against a table")
    _add_table_arg(p)
    p.add_argument("--path", required=True)
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("typecheck", help="print a path's output datatype")
    _add_table_arg(p)
    p.add_argument("--path", required=True)
    p.set_defaults(func=cmd_typecheck)

    p = sub.add_parser("search", help="best-first search for true reasoning paths")
    _add_table_arg(p)
    _add_search_args(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("generate", help="search (table) or fuse (graph), then verbalize")
    p.add_argument("--task", choices=("table", "graph"), required=True)
    p.add_argument("--table")
    p.add_argument("--format", choices=("json", "csv", "tsv"))
    p.add_argument("--graph")
    p.add_argument("--backend", choices=("mock", "remote"), default="mock")
    p.add_argument("--demos", help="demo file overriding the packaged demonstrations")
    _add_search_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("baseline", help="direct or chain-of-thought prompting")
    p.add_argument("--mode", choices=("direct", "cot"), required=True)
    p.add_argument("--task", choices=("table", "graph"), required=True)
    p.add_argument("--table")
    p.add_argument("--format", choices=("json", "csv", "tsv"))
    p.add_argument("--graph")
    p.add_argument("--backend", choices=("mock", "remote"), default="mock")
    p.add_argument("--demos")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("enumerate", help="exhaustive oracle over small tables")
    _add_table_arg(p)
    p.add_argument("--max-depth", type=int, default=3)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("saliency-data", help="expand gold paths into labeled samples")
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_saliency_data)

    p = sub.add_parser("eval-bleu", help="corpus BLEU-1/2/3 report")
    p.add_argument("--hyps", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--out", help="write per-hypothesis records (jsonl)")
    p.add_argument("--plot", help="render a score histogram to this image file")
    p.set_defaults(func=cmd_eval_bleu)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    missing = []
    if getattr(args, "task", None) == "table" and not getattr(args, "table", "x"):
        missing.append("--table")
    if getattr(args, "task", None) == "graph" and not getattr(args, "graph", "x"):
        missing.append("--graph")
    if missing:
        print(f"error: {' and '.join(missing)} required for --task {args.task}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except EngineError as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(json.dumps({"error": "UsageError", "message": str(e)}), file=sys.stderr)
        return 2
    except OSError as e:
        print(json.dumps({"error": "IOError", "message": str(e)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
