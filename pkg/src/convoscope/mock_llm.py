"""Deterministic scripted chat responder for offline runs and tests.

Implements the transport interface of :mod:`agenda_llm` (callable taking the
request payload and returning a chat-completion response body). Replies are
derived from the message chunk, so identical inputs give identical outputs.
"""

from __future__ import annotations

import json
import re
from collections import Counter

_HASHTAG_RE = re.compile(r"#(\w+)")
_CAPWORD_RE = re.compile(r"\b[A-Z][a-zA-Z]{2,}\b")

_EMOTION_CYCLE = ("anger", "hope", "support", "concern", "admiration")


def _chunk_entities(chunk: str, limit: int = 3) -> list[str]:
    counts: Counter[str] = Counter()
    order: dict[str, int] = {}
    for match in _CAPWORD_RE.findall(chunk):
        counts[match] += 1
        order.setdefault(match, len(order))
    for match in _HASHTAG_RE.findall(chunk):
        name = match.capitalize()
        counts[name] += 1
        order.setdefault(name, len(order))
    ranked = sorted(counts, key=lambda w: (-counts[w], order[w]))
    return ranked[:limit] or ["the community"]


class ScriptedLlm:
    """Canned responses keyed off the latest user prompt in the payload."""

    def __init__(self):
        self.requests: list[dict] = []

    def _reply(self, payload: dict) -> str:
        messages = payload["messages"]
        last = messages[-1]["content"]
        first_user = next(m["content"] for m in messages if m["role"] == "user")
        # The chunk rides after the "Messages:" marker; keep prompt wording out.
        chunk = first_user.split("Messages:", 1)[-1]
        entities = _chunk_entities(chunk)
        if "overall agenda" in last:
            lead = entities[0]
            return f"to promote {lead} and coordinate supporters around shared demands"
        if "Combine the entities" in last:
            blocks = []
            for i, entity in enumerate(entities):
                blocks.append(
                    json.dumps(
                        {
                            "entity": entity,
                            "promoted_actions": f"rally support for {entity}",
                            "emotions": [_EMOTION_CYCLE[i % len(_EMOTION_CYCLE)]],
                        },
                        ensure_ascii=False,
                        indent=0,
                    )
                )
            return "output = [\n" + ",\n".join(blocks) + "\n]"
        if "top distinct entities" in last:
            return ", ".join(entities)
        if "promoting about each entity" in last:
            return "\n".join(f"{e}: rally support for {e}" for e in entities)
        if "emotions expressed" in last:
            return "\n".join(
                f"{e}: {_EMOTION_CYCLE[i % len(_EMOTION_CYCLE)]}" for i, e in enumerate(entities)
            )
        return "No agenda"

    def __call__(self, payload: dict) -> dict:
        self.requests.append(payload)
        return {"choices": [{"message": {"content": self._reply(payload)}}]}
