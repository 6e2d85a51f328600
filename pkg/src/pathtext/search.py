"""Best-first search over reasoning paths, the exhaustive oracle enumerator,
and the greedy fusion loop for graph summarization.

Ranking is deterministic end to end: score ties break on the serialized
path, so outputs are identical across runs and under row shuffles of the
input table.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .data import Graph, Table, Triple, normalize_numeric_cell
from .dsl import ALL_ROWS, Apply, DataType, Literal, PathNode, serialize_path
from .errors import EngineError, InstanceTooLarge
from .gateway import join_sentences
from .grammar import CandidateStep, enumerate_steps
from .modules import (
    BoolV,
    ModuleRegistry,
    NumV,
    StrV,
    TableV,
    Value,
    apply_module,
)
from .scoring import EnsembleConfig, ensemble_score, fluency_score, semantic_consistency_score


@dataclass
class SearchConfig:
    beam_size: int = 20
    num_paths: int = 1
    max_depth: int = 5

    def __post_init__(self):
        if self.num_paths < 1 or self.beam_size < 1 or self.max_depth < 1:
            raise ValueError("beam_size, num_paths, and max_depth must be positive")
        if self.beam_size < self.num_paths:
            raise ValueError("beam_size must be at least num_paths")


@dataclass(frozen=True)
class BeamEntry:
    path: PathNode
    value: Value
    score: float
    depth: int


@dataclass
class SearchResult:
    """Completed paths sorted by score (desc, then serialization).

    An empty `paths` list is the no-path-found outcome; `diagnostics`
    explains what the search did.
    """

    paths: list[PathNode]
    scores: list[float]
    diagnostics: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return bool(self.paths)


def _step_arg_values(step: CandidateStep) -> list[Value]:
    values: list[Value] = []
    for arg, want in zip(step.args, step.module.input_types[1:]):
        assert isinstance(arg, Literal)
        if want == DataType.NUMBER:
            num = normalize_numeric_cell(arg.text)
            assert num is not None  # enumeration grounds operands in cell values
            values.append(NumV(num))
        else:
            values.append(StrV(arg.text))
    return values


def _extend(entry_value: Value, step: CandidateStep) -> Value:
    return apply_module(step.module, [entry_value, *_step_arg_values(step)])


def best_first_search_table(
    table: Table,
    cfg: SearchConfig,
    reg: ModuleRegistry,
    scorer,
    search_log: list | None = None,
) -> SearchResult:
    """Search for up to `num_paths` reasoning paths that evaluate to true.

    Maintains a frontier of at most `beam_size` partial paths; each round
    pops the best, enumerates grammar-admissible steps, evaluates them
    (errors and false booleans are discarded), scores survivors with
    `scorer(table, path)`, and truncates. True booleans move to the
    completed set without occupying frontier slots.
    """
    root = BeamEntry(ALL_ROWS, TableV(table), scorer(table, ALL_ROWS), 0)
    frontier: dict[str, BeamEntry] = {serialize_path(root.path): root}
    completed: dict[str, tuple[PathNode, float]] = {}
    stats = {"expansions": 0, "generated": 0, "discarded_errors": 0,
             "discarded_false": 0, "pruned": 0}

    while frontier and len(completed) < cfg.num_paths:
        ser, entry = min(frontier.items(), key=lambda kv: (-kv[1].score, kv[0]))
        del frontier[ser]
        if entry.depth >= cfg.max_depth:
            continue
        stats["expansions"] += 1
        record = {"popped": ser, "score": entry.score, "candidates": 0,
                  "completed": 0, "discarded": 0, "pruned": 0}
        for step in enumerate_steps(entry.value, table, reg, current_path=entry.path):
            new_path = Apply(step.module.name, (entry.path, *step.args))
            record["candidates"] += 1
            stats["generated"] += 1
            try:
                value = _extend(entry.value, step)
            except EngineError:
                stats["discarded_errors"] += 1
                record["discarded"] += 1
                continue
            new_ser = serialize_path(new_path)
            if isinstance(value, BoolV):
                if value.value:
                    if new_ser not in completed:
                        completed[new_ser] = (new_path, scorer(table, new_path))
                        record["completed"] += 1
                else:
                    stats["discarded_false"] += 1
                    record["discarded"] += 1
                continue
            candidate = BeamEntry(new_path, value, scorer(table, new_path), entry.depth + 1)
            existing = frontier.get(new_ser)
            if existing is None or candidate.score > existing.score:
                frontier[new_ser] = candidate
        if len(frontier) > cfg.beam_size:
            ranked = sorted(frontier.items(), key=lambda kv: (-kv[1].score, kv[0]))
            dropped = len(frontier) - cfg.beam_size
            frontier = dict(ranked[: cfg.beam_size])
            stats["pruned"] += dropped
            record["pruned"] = dropped
        record["frontier"] = len(frontier)
        if search_log is not None:
            search_log.append(record)

    ranked = sorted(completed.items(), key=lambda kv: (-kv[1][1], kv[0]))
    top = [pair for _, pair in ranked[: cfg.num_paths]]
    return SearchResult(
        paths=[p for p, _ in top],
        scores=[s for _, s in top],
        diagnostics=stats,
    )


def enumerate_all_paths(table: Table, max_depth: int, reg: ModuleRegistry) -> list[PathNode]:
    """Exhaustive oracle: every well-typed path that evaluates to true.

    Desk-scale only; guards reject tables beyond 6 rows / 4 columns or
    depth beyond 4.
    """
    if len(table.rows) > 6 or len(table.header) > 4 or max_depth > 4:
        raise InstanceTooLarge(
            "oracle enumeration is limited to 6 rows, 4 columns, depth 4"
        )
    found: dict[str, PathNode] = {}
    stack: list[tuple[PathNode, Value, int]] = [(ALL_ROWS, TableV(table), 0)]
    while stack:
        path, value, depth = stack.pop()
        if depth >= max_depth:
            continue
        for step in enumerate_steps(value, table, reg, current_path=path):
            new_path = Apply(step.module.name, (path, *step.args))
            try:
                new_value = _extend(value, step)
            except EngineError:
                continue
            if isinstance(new_value, BoolV):
                if new_value.value:
                    found.setdefault(serialize_path(new_path), new_path)
                continue
            stack.append((new_path, new_value, depth + 1))
    return [found[k] for k in sorted(found)]


@dataclass(frozen=True)
class FusionState:
    """A summary covering a subset of the input graph's triples."""

    covered: frozenset[Triple]
    text: str
    token_logprobs: tuple[float, ...]


def fuse_states(
    graph: Graph,
    gateway,
    nli,
    cfg: EnsembleConfig | None = None,
) -> tuple[FusionState, dict]:
    """Greedy (beam 1) fusion loop; returns the final state and step counts.

    Every triple is surface-realized once; then, while more than one state
    remains, all unordered pairs are scored with the fluency/consistency
    ensemble over their locally joined texts and the winning pair is fused
    through the text-fusion module, so exactly len(graph) - 1 fusion calls
    reach the backend.
    """
    cfg = cfg or EnsembleConfig()
    realized: dict[Triple, str] = {}
    states: list[FusionState] = []
    counts = {"sr_calls": 0, "fusion_calls": 0, "pairs_scored": 0}
    for triple in graph.sorted_triples():
        completion = gateway.realize_triple_completion(triple)
        counts["sr_calls"] += 1
        realized[triple] = completion.text
        states.append(
            FusionState(frozenset({triple}), completion.text, tuple(completion.token_logprobs))
        )
    while len(states) > 1:
        best = None
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                joined = join_sentences(states[i].text, states[j].text)
                logprobs = states[i].token_logprobs + states[j].token_logprobs
                covered = states[i].covered | states[j].covered
                premise = [realized[t] for t in sorted(covered)]
                s_f = fluency_score(logprobs)
                s_sc = semantic_consistency_score(premise, joined, nli)
                score = ensemble_score(s_f, s_sc, cfg)
                counts["pairs_scored"] += 1
                key = (-score, joined, i, j)
                if best is None or key < best[0]:
                    best = (key, i, j)
        _, i, j = best
        completion = gateway.fuse_completion(states[i].text, states[j].text)
        counts["fusion_calls"] += 1
        fused = FusionState(
            states[i].covered | states[j].covered,
            completion.text,
            tuple(completion.token_logprobs),
        )
        states = [s for k, s in enumerate(states) if k not in (i, j)] + [fused]
    return states[0], counts


def greedy_fuse_graph(graph: Graph, gateway, nli, cfg: EnsembleConfig | None = None) -> str:
    """Summary text for a graph: surface-realize each triple, then greedily
    fuse pairs until a single summary covers every triple."""
    state, _ = fuse_states(graph, gateway, nli, cfg)
    return state.text
