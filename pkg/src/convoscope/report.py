"""Graph exports (DOT dialect), emotion polarity lookup, and report assembly.

Exports are text-only graph descriptions; rendering is the user's tool.
Output ordering is fixed (nodes by rank, edges sorted) so byte-identical
inputs give byte-identical documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .agenda_llm import ConvoSnapshot
from .influencers import InfluencerNetwork

REPORT_VERSION = 1

_POLARITY_COLOR = {"negative": "red", "positive": "blue", "neutral": "grey"}


@dataclass
class PolarityLexicon:
    """Case-insensitive emotion-word polarity lookup; unknown words -> neutral."""

    mapping: dict[str, str]

    def polarity(self, word: str) -> str:
        return self.mapping.get(word.strip().casefold(), "neutral")

    def color(self, word: str) -> str:
        return _POLARITY_COLOR[self.polarity(word)]

    @classmethod
    def from_lines(cls, lines) -> "PolarityLexicon":
        mapping: dict[str, str] = {}
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in _POLARITY_COLOR:
                raise ValueError(f"bad polarity lexicon line: {line!r}")
            mapping[parts[0].casefold()] = parts[1]
        return cls(mapping=mapping)

    @classmethod
    def from_file(cls, path: str | Path) -> "PolarityLexicon":
        return cls.from_lines(Path(path).read_text("utf-8").splitlines())

    @classmethod
    def default(cls) -> "PolarityLexicon":
        text = resources.files("convoscope").joinpath("data", "polarity_lexicon.txt").read_text("utf-8")
        return cls.from_lines(text.splitlines())


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def export_network(net: InfluencerNetwork) -> str:
    """DOT digraph of the influencer network.

    Nodes are labeled I1..Ik by rank; edge labels carry retweet weights;
    self-retweeting nodes get the marker attribute selfrt="true".
    """
    index = net.display_index()
    lines = ["digraph influencer_network {"]
    for author in net.nodes:
        attrs = [f'author_id="{_dot_escape(author)}"']
        loops = net.self_loops.get(author, 0)
        if loops:
            attrs.append('selfrt="true"')
            attrs.append(f'selfrt_count="{loops}"')
        lines.append(f"  {index[author]} [{', '.join(attrs)}];")
    ranked_edges = sorted(
        ((index[src], index[dst], weight) for (src, dst), weight in net.edges.items()),
        key=lambda e: (int(e[0][1:]), int(e[1][1:])),
    )
    for src, dst, weight in ranked_edges:
        lines.append(f'  {src} -> {dst} [label="{weight}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_snapshot(snapshot: ConvoSnapshot, lexicon: PolarityLexicon) -> str:
    """DOT digraph of a convo snapshot.

    One grey blob per entity, an action-labeled edge from the central hub to
    each entity, and one emotion edge per (entity, emotion) colored by
    polarity (negative red, positive blue, neutral grey).
    """
    hub_label = snapshot.source_cluster_id or "cluster"
    lines = ["digraph convo_snapshot {"]
    lines.append(f'  hub [label="{_dot_escape(hub_label)}", shape="box"];')
    for i, entry in enumerate(snapshot.entries):
        node = f"e{i}"
        lines.append(
            f'  {node} [label="{_dot_escape(entry.entity)}", style="filled", fillcolor="grey"];'
        )
    for i, entry in enumerate(snapshot.entries):
        node = f"e{i}"
        if entry.promoted_actions:
            lines.append(
                f'  hub -> {node} [label="{_dot_escape(entry.promoted_actions)}", color="grey"];'
            )
        for emotion in entry.emotions:
            polarity = lexicon.polarity(emotion)
            color = _POLARITY_COLOR[polarity]
            lines.append(
                f'  hub -> {node} [label="{_dot_escape(emotion)}", color="{color}", polarity="{polarity}"];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def report_schema() -> dict:
    text = resources.files("convoscope").joinpath("data", "report_schema.json").read_text("utf-8")
    return json.loads(text)


def validate_report(report: dict) -> None:
    jsonschema.validate(instance=report, schema=report_schema())


def dumps_report(report: dict) -> str:
    """Canonical serialization: sorted keys, stable indentation."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
