"""Completion backends, NLI/saliency clients, and the neural-module gateway.

The mock backend is a pure function of the prompt: it answers from the
prompt's own demonstrations when the query matches one, and otherwise
synthesizes deterministic text (triple humanization, sentence joining, or a
fixed per-module verbalization of reasoning paths). Every mock token carries
log(0.9), so mock fluency is always 0.9.
"""

from __future__ import annotations

import math
import os
import re
import time
from collections import Counter
from dataclasses import dataclass

from .data import Graph, Table, Triple, fold, render_cell, serialize_graph
from .dsl import AllRows, Literal, PathNode, parse_path, serialize_path
from .errors import (
    BackendProtocolError,
    BackendUnavailable,
    EmptyGeneration,
    EngineError,
    PathSyntaxError,
)
from .prompts import (
    COT_WEBNLG,
    DIRECT_LOGICNLG,
    DIRECT_WEBNLG,
    FUSION,
    SR_PATH_LOGICNLG,
    SR_TRIPLE,
    PromptLibrary,
)

MOCK_TOKEN_LOGPROB = math.log(0.9)

ENV_LLM_URL = "ENGINE_LLM_URL"
ENV_LLM_TOKEN = "ENGINE_LLM_TOKEN"
ENV_NLI_URL = "ENGINE_NLI_URL"
ENV_SALIENCY_URL = "ENGINE_SALIENCY_URL"


@dataclass
class CompletionResult:
    text: str
    token_logprobs: list[float]


def humanize_entity(name: str) -> str:
    return " ".join(name.replace("_", " ").split())


def humanize_relation(name: str) -> str:
    words = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", name.replace("_", " "))
    return " ".join(words.lower().split())


def humanize_triple(text: str) -> str:
    fields = [f.strip() for f in text.split("|")]
    if len(fields) != 3:
        return " ".join(text.split()) + "."
    s, r, o = fields
    return f"{humanize_entity(s)} {humanize_relation(r)} {humanize_entity(o)}."


def join_sentences(a: str, b: str) -> str:
    """Concatenate texts, dropping repeated sentences (mock fusion rule)."""
    seen: list[str] = []
    for text in (a, b):
        for sentence in text.split(". "):
            sentence = sentence.strip()
            if not sentence:
                continue
            if not sentence.endswith("."):
                sentence += "."
            if sentence not in seen:
                seen.append(sentence)
    return " ".join(seen)


_REL_PHRASE = {
    "greater": "more than",
    "lesser": "less than",
    "less": "less than",
    "greater_eq": "at least",
    "lesser_eq": "at most",
    "less_eq": "at most",
}

_CANONICAL = {"argmax": "arg_max", "argmin": "arg_min"}


def _vp(node: PathNode) -> str:
    if isinstance(node, AllRows):
        return "the table"
    if isinstance(node, Literal):
        return node.text
    name = _CANONICAL.get(node.module, node.module)
    args = node.args
    inner = args[0] if args else None

    def ctx() -> str:
        return "" if isinstance(inner, AllRows) else f" in {_vp(inner)}"

    def of() -> str:
        return "" if isinstance(inner, AllRows) else f" of {_vp(inner)}"

    lit = [_vp(a) for a in args[1:]]
    if name == "filter_all":
        return _vp(inner)
    if name in ("filter_eq", "filter_not_eq"):
        verb = "is" if name == "filter_eq" else "is not"
        return f"the rows{of()} where {lit[0]} {verb} {lit[1]}"
    if name.startswith("filter_"):
        rel = _REL_PHRASE[name.removeprefix("filter_")]
        return f"the rows{of()} where {lit[0]} is {rel} {lit[1]}"
    if name in ("arg_max", "arg_min"):
        extreme = "highest" if name == "arg_max" else "lowest"
        return f"the row with the {extreme} {lit[0]}{ctx()}"
    if name in ("max", "min"):
        extreme = "highest" if name == "max" else "lowest"
        return f"the {extreme} {lit[0]}{ctx()}"
    if name == "avg":
        return f"the average {lit[0]}{ctx()}"
    if name == "sum":
        return f"the total {lit[0]}{ctx()}"
    if name == "count":
        return f"the number of rows{ctx()}"
    if name == "hop":
        return f"the {lit[0]} of {_vp(inner)}"
    if name == "eq":
        return f"{_vp(args[0])} is {_vp(args[1])}"
    if name == "only":
        return f"{_vp(inner)} has exactly one row"
    if name in ("all_eq", "all_not_eq", "most_eq", "most_not_eq"):
        head = "all" if name.startswith("all_") else "most"
        verb = "are not" if name.endswith("not_eq") else "are"
        if name == "all_not_eq":
            return f"none of the {lit[0]} values{ctx()} are {lit[1]}"
        return f"{head} of the {lit[0]} values{ctx()} {verb} {lit[1]}"
    head = "all" if name.startswith("all_") else "most"
    rel = _REL_PHRASE[name.split("_", 1)[1]]
    return f"{head} of the {lit[0]} values{ctx()} are {rel} {lit[1]}"


def verbalize_path(path: PathNode) -> str:
    """Fixed per-module phrase rendering of a reasoning path."""
    text = _vp(path)
    text = text[0].upper() + text[1:]
    if not text.endswith("."):
        text += "."
    return text


def _parse_block(block: str) -> list[tuple[str, str]]:
    fields = []
    for line in block.splitlines():
        label, sep, value = line.partition(":")
        if sep:
            fields.append((label.strip(), value.strip()))
    return fields


class MockBackend:
    """Deterministic prompt-driven stand-in for the completion model."""

    def __init__(self):
        self.completions = 0

    def complete(self, prompt: str, max_tokens: int = 128) -> CompletionResult:
        self.completions += 1
        text = self._answer(prompt)
        return CompletionResult(text, [MOCK_TOKEN_LOGPROB] * len(text.split()))

    def _answer(self, prompt: str) -> str:
        blocks = prompt.split("\n###\n")
        instruction = blocks[0].strip()
        query = _parse_block(blocks[-1]) if len(blocks) > 1 else []
        demos = [_parse_block(b) for b in blocks[1:-1]]
        inputs = query[:-1]
        for demo in demos:
            if demo[:-1] == inputs and demo:
                return demo[-1][1]
        values = {label: value for label, value in query}
        if "combine two sentences" in instruction:
            return join_sentences(values.get("First Sentence", ""), values.get("Second Sentence", ""))
        if "convert a triple to a sentence" in instruction:
            return humanize_triple(values.get("Triple", ""))
        if "step-by-step" in instruction:
            return self._cot(values.get("Triples", ""))
        if "convert triples to sentences" in instruction:
            return self._direct_graph(values.get("Triples", ""))
        if "for the reasoning path" in instruction:
            return self._path_statement(values.get("Reasoning Path", ""), values)
        if "logically entailed statement" in instruction:
            rows = values.get("Table Content", "")
            n = rows.count(" | ") + 1 if rows.strip() else 0
            topic = values.get("Table Topic", "the table")
            return f"The table about {topic} has {n} rows."
        return "No answer."

    def _sentences(self, triples: str) -> list[str]:
        return [humanize_triple(t) for t in triples.split("#") if t.strip()]

    def _direct_graph(self, triples: str) -> str:
        out = ""
        for sentence in self._sentences(triples):
            out = sentence if not out else join_sentences(out, sentence)
        return out

    def _cot(self, triples: str) -> str:
        sentences = self._sentences(triples)
        return " # ".join(sentences + [self._direct_graph(triples)])

    def _path_statement(self, path_text: str, values: dict) -> str:
        try:
            return verbalize_path(parse_path(path_text))
        except PathSyntaxError:
            topic = values.get("Table Topic", "the table")
            return f"A statement about {topic}."


def _post_json(url: str, payload: dict, token: str | None = None, timeout: float = 10.0) -> dict:
    import requests

    headers = {"Content-Type": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    last_error: Exception | None = None
    for attempt in range(3):  # one try plus two retries
        try:
            response = requests.post(url, json=payload, headers=headers, timeout=timeout)
        except requests.RequestException as e:
            last_error = e
            time.sleep(0.5 * 2**attempt)
            continue
        if response.status_code != 200:
            raise BackendProtocolError(f"{url} answered {response.status_code}")
        try:
            return response.json()
        except ValueError as e:
            raise BackendProtocolError(f"{url} returned invalid json") from e
    raise BackendUnavailable(f"{url} unreachable: {last_error}")


class RemoteBackend:
    """HTTP completion backend (greedy decoding with token logprobs)."""

    def __init__(self, url: str | None = None, token: str | None = None):
        self.url = url or os.environ.get(ENV_LLM_URL)
        self.token = token or os.environ.get(ENV_LLM_TOKEN)
        if not self.url:
            raise BackendUnavailable(f"{ENV_LLM_URL} is not set")

    def complete(self, prompt: str, max_tokens: int = 128) -> CompletionResult:
        record = _post_json(
            self.url,
            {"prompt": prompt, "max_tokens": max_tokens, "temperature": 0, "logprobs": True},
            token=self.token,
        )
        if "text" not in record or "token_logprobs" not in record:
            raise BackendProtocolError("completion response lacks text/token_logprobs")
        return CompletionResult(str(record["text"]), [float(x) for x in record["token_logprobs"]])


class MockNliClient:
    """Deterministic entailment: token containment of the hypothesis."""

    def entail(self, premise: str, hypothesis: str) -> float:
        p = set(fold(premise).split())
        h = set(fold(hypothesis).split())
        if not h:
            return 0.0
        return len(h & p) / len(h)


class RemoteNliClient:
    def __init__(self, url: str | None = None):
        self.url = url or os.environ.get(ENV_NLI_URL)
        if not self.url:
            raise BackendUnavailable(f"{ENV_NLI_URL} is not set")

    def entail(self, premise: str, hypothesis: str) -> float:
        record = _post_json(self.url, {"premise": premise, "hypothesis": hypothesis})
        if "p_entail" not in record:
            raise BackendProtocolError("nli response lacks p_entail")
        return float(record["p_entail"])


class RemoteSaliencyClient:
    def __init__(self, url: str | None = None):
        self.url = url or os.environ.get(ENV_SALIENCY_URL)
        if not self.url:
            raise BackendUnavailable(f"{ENV_SALIENCY_URL} is not set")

    def score(self, table_linearized: str, path: str) -> float:
        record = _post_json(self.url, {"table_linearized": table_linearized, "path": path})
        if "p_correct" not in record:
            raise BackendProtocolError("saliency response lacks p_correct")
        return float(record["p_correct"])


def make_backend(name: str):
    if name == "mock":
        return MockBackend()
    if name == "remote":
        return RemoteBackend()
    raise ValueError(f"unknown backend {name!r}")


def make_nli(name: str):
    return MockNliClient() if name == "mock" else RemoteNliClient()


class LlmGateway:
    """Renders prompts, calls the backend, and exposes the neural modules."""

    def __init__(self, backend=None, prompts: PromptLibrary | None = None):
        self.backend = backend or MockBackend()
        self.prompts = prompts or PromptLibrary()
        self.calls: Counter = Counter()

    def complete(self, prompt: str, max_tokens: int = 128) -> CompletionResult:
        result = self.backend.complete(prompt, max_tokens)
        text = result.text.split("###")[0].splitlines()[0].strip() if result.text else ""
        if not text:
            raise EmptyGeneration("backend returned a blank generation")
        return CompletionResult(text, result.token_logprobs)

    def realize_triple_completion(self, triple: Triple | str) -> CompletionResult:
        self.calls["sr_triple"] += 1
        text = triple.render() if isinstance(triple, Triple) else triple
        return self.complete(self.prompts.render(SR_TRIPLE, {"triple": text}))

    def surface_realize_triple(self, triple: Triple | str) -> str:
        return self.realize_triple_completion(triple).text

    def fuse_completion(self, first: str, second: str) -> CompletionResult:
        self.calls["fusion"] += 1
        return self.complete(self.prompts.render(FUSION, {"sent1": first, "sent2": second}))

    def fuse_texts(self, first: str, second: str) -> str:
        return self.fuse_completion(first, second).text

    def surface_realize_path(self, table: Table, path: PathNode) -> str:
        self.calls["sr_path"] += 1
        prompt = self.prompts.render(
            SR_PATH_LOGICNLG,
            {
                "table_topic": table.topic,
                "table_header": " # ".join(table.header),
                "reasoning_path": serialize_path(path),
            },
        )
        return self.complete(prompt).text

    def baseline_generate(self, mode: str, task: str, value: Graph | Table) -> str:
        """Direct or chain-of-thought prompting over a graph or table."""
        self.calls["baseline"] += 1
        if task == "graph":
            assert isinstance(value, Graph)
            slots = {"triples": serialize_graph(value)}
            if mode == "direct":
                return self.complete(self.prompts.render(DIRECT_WEBNLG, slots)).text
            if mode == "cot":
                text = self.complete(self.prompts.render(COT_WEBNLG, slots)).text
                segments = [s.strip() for s in text.split("#") if s.strip()]
                if not segments:
                    raise EmptyGeneration("chain-of-thought output had no final step")
                return segments[-1]
        if task == "table":
            assert isinstance(value, Table)
            if mode == "cot":
                raise EngineError("no chain-of-thought template exists for tables")
            content = " | ".join(
                " # ".join(render_cell(c) for c in row) for row in value.rows
            )
            slots = {
                "table_topic": value.topic,
                "table_header": " # ".join(value.header),
                "table_content": content,
            }
            return self.complete(self.prompts.render(DIRECT_LOGICNLG, slots)).text
        raise ValueError(f"unknown baseline mode/task {mode!r}/{task!r}")
