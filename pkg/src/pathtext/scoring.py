"""Value functions: fluency, semantic consistency, their ensemble, and the
saliency metric for partial reasoning paths, plus the generator that turns
gold paths into labeled training samples for an external saliency classifier.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from .data import Table, build_table, linearize_table, parse_table
from .dsl import (
    Apply,
    PathNode,
    apply_nodes_postorder,
    parse_path,
    path_depth,
    serialize_path,
    typecheck_path,
)
from .errors import EmptyInput, EngineError, MalformedInput
from .grammar import enumerate_steps
from .modules import (
    ModuleRegistry,
    TableV,
    evaluate_path,
    outermost_filter,
    referenced_columns,
)

log = logging.getLogger(__name__)

LABEL_CORRECT = "correct"
LABEL_INCORRECT = "incorrect"
TRUNCATION = "truncation"
MODULE_SWAP = "module_swap"
INPUT_SWAP = "input_swap"


@dataclass(frozen=True)
class EnsembleConfig:
    """Mixing ratio between fluency and semantic consistency."""

    alpha: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


def fluency_score(token_logprobs: Sequence[float]) -> float:
    """Geometric-mean token probability: exp of the mean log-probability."""
    if not token_logprobs:
        raise EmptyInput("fluency needs at least one token log-probability")
    return math.exp(sum(token_logprobs) / len(token_logprobs))


def semantic_consistency_score(realizations: Sequence[str], summary: str, nli) -> float:
    """Mean of both-way entailment probabilities between the realized
    triples (concatenated) and the summary."""
    premise = " ".join(realizations)
    forward = nli.entail(premise, summary)
    backward = nli.entail(summary, premise)
    return 0.5 * (forward + backward)


def ensemble_score(fluency: float, consistency: float, cfg: EnsembleConfig | None = None) -> float:
    cfg = cfg or EnsembleConfig()
    return cfg.alpha * fluency + (1.0 - cfg.alpha) * consistency


@dataclass(frozen=True)
class SaliencyQuery:
    table: Table
    partial_path: PathNode


def heuristic_saliency(
    query: SaliencyQuery,
    reg: ModuleRegistry,
    _narrowing_cache: dict | None = None,
) -> float:
    """Offline stand-in for the trained saliency classifier.

    0.5 * narrowing + 0.3 * diversity + 0.2 * depth_bonus, where narrowing
    rewards filters that actually shrink the table (0.25 when the path has
    no filter), diversity is the fraction of columns touched, and the depth
    bonus saturates at three steps. Deterministic and bounded in [0, 1].
    """
    table, path = query.table, query.partial_path
    filt = outermost_filter(path)
    if filt is None or not table.rows:
        narrowing = 0.25
    else:
        key = serialize_path(filt)
        narrowing = None if _narrowing_cache is None else _narrowing_cache.get(key)
        if narrowing is None:
            filtered = evaluate_path(table, filt, reg)
            assert isinstance(filtered, TableV)
            narrowing = 1.0 - len(filtered.table.rows) / len(table.rows)
            if _narrowing_cache is not None:
                _narrowing_cache[key] = narrowing
    diversity = len(referenced_columns(path, reg)) / len(table.header)
    depth_bonus = min(path_depth(path), 3) / 3
    return 0.5 * narrowing + 0.3 * diversity + 0.2 * depth_bonus


def make_heuristic_scorer(reg: ModuleRegistry):
    """(table, path) -> saliency closure with per-table narrowing memoization.

    Scores are identical to calling heuristic_saliency directly; the cache
    only skips re-evaluating filter subpaths shared across candidates.
    """
    caches: dict[int, tuple[Table, dict]] = {}

    def scorer(table: Table, path: PathNode) -> float:
        entry = caches.get(id(table))
        if entry is None or entry[0] is not table:
            entry = (table, {})
            caches[id(table)] = entry
        return heuristic_saliency(SaliencyQuery(table, path), reg, entry[1])

    return scorer


def saliency_score(
    query: SaliencyQuery,
    backend: str = "heuristic",
    reg: ModuleRegistry | None = None,
    client=None,
) -> float:
    """Saliency of a partial path for a table, via the heuristic or a
    remote classifier endpoint."""
    if backend == "heuristic":
        from .modules import registry_default

        return heuristic_saliency(query, reg or registry_default())
    if backend == "remote":
        if client is None:
            raise ValueError("remote saliency needs a client")
        return client.score(linearize_table(query.table), serialize_path(query.partial_path))
    raise ValueError(f"unknown saliency backend {backend!r}")


@dataclass(frozen=True)
class LabeledPathSample:
    table: Table
    path: PathNode
    label: str
    provenance: str


def _module_swaps(prefix: Apply, reg: ModuleRegistry) -> list[Apply]:
    spec = reg.resolve(prefix.module)
    out = []
    for other in reg.symbolic_specs():
        if other.name == spec.name:
            continue
        if other.input_types == spec.input_types and other.output_type == spec.output_type:
            out.append(Apply(other.name, prefix.args))
    return sorted(out, key=lambda a: a.module)


def _input_swaps(prefix: Apply, table: Table, reg: ModuleRegistry) -> list[Apply]:
    spec = reg.resolve(prefix.module)
    inner = prefix.args[0]
    try:
        state = evaluate_path(table, inner, reg)
    except EngineError:
        return []
    gold_args = prefix.args[1:]
    out = []
    for step in enumerate_steps(state, table, reg, current_path=inner):
        if step.module.name != spec.name:
            continue
        if len(step.args) != len(gold_args):
            continue
        diffs = sum(
            1 for a, b in zip(step.args, gold_args)
            if serialize_path(a) != serialize_path(b)
        )
        if diffs == 1:
            out.append(Apply(prefix.module, (inner, *step.args)))
    return out


def generate_saliency_training_data(
    gold: Iterable[tuple[Table, PathNode]],
    reg: ModuleRegistry,
) -> list[LabeledPathSample]:
    """Expand gold (table, path) pairs into labeled partial-path samples.

    Each of a path's k module applications yields one correct sample (its
    subtree); every correct sample then yields incorrect ones by swapping
    the outermost module for another of the same signature, or exactly one
    of its arguments for another admissible value. Gold paths that fail to
    typecheck are reported and skipped.
    """
    samples: list[LabeledPathSample] = []
    for table, path in gold:
        try:
            typecheck_path(path, reg, table)
        except EngineError as e:
            log.warning("skipping gold path %s: %s", serialize_path(path), e)
            continue
        prefixes = apply_nodes_postorder(path)
        correct_keys = {serialize_path(p) for p in prefixes}
        emitted: set[str] = set()
        for prefix in prefixes:
            samples.append(LabeledPathSample(table, prefix, LABEL_CORRECT, TRUNCATION))
        for prefix in prefixes:
            for swapped in _module_swaps(prefix, reg):
                key = serialize_path(swapped)
                if key in correct_keys or key in emitted:
                    continue
                emitted.add(key)
                samples.append(LabeledPathSample(table, swapped, LABEL_INCORRECT, MODULE_SWAP))
            for swapped in _input_swaps(prefix, table, reg):
                key = serialize_path(swapped)
                if key in correct_keys or key in emitted:
                    continue
                emitted.add(key)
                samples.append(LabeledPathSample(table, swapped, LABEL_INCORRECT, INPUT_SWAP))
    return samples


def write_samples(samples: Iterable[LabeledPathSample], fp: TextIO) -> int:
    """Line-delimited sample records; returns the number written."""
    from .data import table_to_json

    n = 0
    for s in samples:
        record = {
            "table": table_to_json(s.table),
            "path": serialize_path(s.path),
            "label": s.label,
            "provenance": s.provenance,
        }
        fp.write(json.dumps(record) + "\n")
        n += 1
    return n


def read_samples(fp: TextIO) -> list[LabeledPathSample]:
    out = []
    for i, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedInput(f"sample line {i}: invalid json: {e}") from e
        t = record["table"]
        table = build_table(t.get("topic", ""), t["header"], t["rows"])
        out.append(
            LabeledPathSample(
                table, parse_path(record["path"]), record["label"], record["provenance"]
            )
        )
    return out


def read_gold(fp: TextIO) -> list[tuple[Table, PathNode]]:
    """Line-delimited gold records: {"table": <table json>, "path": "<path>"}."""
    out = []
    for i, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedInput(f"gold line {i}: invalid json: {e}") from e
        table = parse_table(json.dumps(record["table"]), "json")
        out.append((table, parse_path(record["path"])))
    return out
