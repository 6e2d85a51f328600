"""Prompt templates for the neural modules and the prompting baselines.

Each template is an instruction line followed by `###`-separated blocks of
labeled lines; demonstrations come from a demo file so their number is
configurable, and rendering is byte-deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .errors import MalformedInput, MissingSlot

DIRECT_WEBNLG = "direct_webnlg"
COT_WEBNLG = "cot_webnlg"
SR_TRIPLE = "sr_triple"
FUSION = "fusion"
SR_PATH_LOGICNLG = "sr_path_logicnlg"
DIRECT_LOGICNLG = "direct_logicnlg"

TEMPLATE_IDS = (
    DIRECT_WEBNLG,
    COT_WEBNLG,
    SR_TRIPLE,
    FUSION,
    SR_PATH_LOGICNLG,
    DIRECT_LOGICNLG,
)


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    instruction: str
    fields: tuple[tuple[str, str], ...]  # (label, slot name) in render order
    answer_label: str


TEMPLATES: dict[str, PromptTemplate] = {
    DIRECT_WEBNLG: PromptTemplate(
        DIRECT_WEBNLG,
        "Let's convert triples to sentences",
        (("Triples", "triples"),),
        "Output",
    ),
    COT_WEBNLG: PromptTemplate(
        COT_WEBNLG,
        "Let's convert triples to sentences step-by-step",
        (("Triples", "triples"),),
        "Output",
    ),
    SR_TRIPLE: PromptTemplate(
        SR_TRIPLE,
        "Let's convert a triple to a sentence",
        (("Triple", "triple"),),
        "Sentence",
    ),
    FUSION: PromptTemplate(
        FUSION,
        "Let's combine two sentences",
        (("First Sentence", "sent1"), ("Second Sentence", "sent2")),
        "Combined Sentence",
    ),
    SR_PATH_LOGICNLG: PromptTemplate(
        SR_PATH_LOGICNLG,
        "Let's generate a logically entailed statement from the table for the reasoning path",
        (
            ("Table Topic", "table_topic"),
            ("Table Header", "table_header"),
            ("Reasoning Path", "reasoning_path"),
        ),
        "Generation",
    ),
    DIRECT_LOGICNLG: PromptTemplate(
        DIRECT_LOGICNLG,
        "Let's generate a logically entailed statement from the table",
        (
            ("Table Topic", "table_topic"),
            ("Table Header", "table_header"),
            ("Table Content", "table_content"),
        ),
        "Generation",
    ),
}


def _default_demos() -> dict:
    text = resources.files("pathtext").joinpath("assets/demos.json").read_text("utf-8")
    return json.loads(text)


class PromptLibrary:
    """Templates plus a demonstration set loaded from a demo file."""

    def __init__(self, demos: dict | None = None):
        self.demos = demos if demos is not None else _default_demos()

    @classmethod
    def from_file(cls, path: str) -> "PromptLibrary":
        with open(path, encoding="utf-8") as fp:
            try:
                demos = json.load(fp)
            except json.JSONDecodeError as e:
                raise MalformedInput(f"demo file {path}: invalid json: {e}") from e
        return cls(demos)

    def demo_count(self, template_id: str) -> int:
        return len(self.demos.get(template_id, ()))

    def render(self, template_id: str, slots: dict) -> str:
        template = TEMPLATES.get(template_id)
        if template is None:
            raise MissingSlot(f"unknown template {template_id!r}")
        lines = [template.instruction]
        for demo in self.demos.get(template_id, ()):
            lines.append("###")
            for label, slot in template.fields:
                if slot not in demo:
                    raise MissingSlot(f"demo for {template_id} lacks slot {slot!r}")
                lines.append(f"{label}: {demo[slot]}")
            if "answer" not in demo:
                raise MissingSlot(f"demo for {template_id} lacks its answer")
            lines.append(f"{template.answer_label}: {demo['answer']}")
        lines.append("###")
        for label, slot in template.fields:
            if slot not in slots:
                raise MissingSlot(f"template {template_id} needs slot {slot!r}")
            lines.append(f"{label}: {slots[slot]}")
        lines.append(f"{template.answer_label}:")
        return "\n".join(lines)


def render_prompt(template_id: str, slots: dict, library: PromptLibrary | None = None) -> str:
    return (library or PromptLibrary()).render(template_id, slots)
