"""Prompt-chain characterization of message clusters via a chat endpoint.

The chain asks for entities, promoted actions, and emotions over a packed
chunk of messages, then requests a combined JSON-style listing that is parsed
into a :class:`ConvoSnapshot`. A separate single prompt produces the agenda
summary. Template texts ship as editable files under ``prompts/``.
"""

from __future__ import annotations

import ast
import json
import logging
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import requests

from .corpus import Message, strip_links_and_emoji

logger = logging.getLogger(__name__)

AGENDA_STEM = "The agenda behind this set of tweets is"
NO_AGENDA_MARKER = "no agenda"
MAX_SNAPSHOT_ENTRIES = 5
# Turns in the multi-turn chain; bounds reply text accumulated in context.
_CHAIN_TURNS = 4

_INPUT_SLOT = "{input_text}"
_TEMPLATE_SLOT = "{output_template}"


class LlmError(Exception):
    pass


class SnapshotParseError(Exception):
    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


def estimate_tokens(text: str) -> int:
    """Tokenizer-independent size estimate: ceil(chars / 4)."""
    return (len(text) + 3) // 4


@dataclass
class PromptBundle:
    system: str
    prompts: tuple[str, str, str, str]
    output_template: str
    agenda_summary: str

    def __post_init__(self) -> None:
        texts = (self.system, *self.prompts, self.output_template, self.agenda_summary)
        if any(not t.strip() for t in texts):
            raise ValueError("prompt templates must be non-empty")
        if self.agenda_summary.count(_INPUT_SLOT) != 1:
            raise ValueError("agenda summary template needs exactly one {input_text} slot")

    @classmethod
    def from_dir(cls, path: str | Path) -> "PromptBundle":
        path = Path(path)

        def read(name: str) -> str:
            return (path / name).read_text("utf-8").strip("\n")

        return cls(
            system=read("system.txt"),
            prompts=tuple(read(f"prompt{i}.txt") for i in range(1, 5)),
            output_template=read("output_template.txt"),
            agenda_summary=read("agenda_summary.txt"),
        )

    @classmethod
    def default(cls) -> "PromptBundle":
        base = resources.files("convoscope").joinpath("prompts")

        def read(name: str) -> str:
            return base.joinpath(name).read_text("utf-8").strip("\n")

        return cls(
            system=read("system.txt"),
            prompts=tuple(read(f"prompt{i}.txt") for i in range(1, 5)),
            output_template=read("output_template.txt"),
            agenda_summary=read("agenda_summary.txt"),
        )

    def overhead_text(self) -> str:
        return "\n".join((self.system, *self.prompts, self.output_template, self.agenda_summary, AGENDA_STEM))


@dataclass
class LlmConfig:
    endpoint: str = ""
    model: str = "llama-2-13b-chat"
    context_budget_tokens: int = 4096
    max_new_tokens: int = 500
    nucleus_p: float = 0.9
    timeout: float = 60.0
    retry: int = 2
    backoff: float = 0.5
    api_key: str = ""
    multi_turn: bool = True
    headroom: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 < self.nucleus_p <= 1.0:
            raise ValueError("nucleus_p must be in (0, 1]")
        if self.max_new_tokens >= self.context_budget_tokens:
            raise ValueError("max_new_tokens must be below the context budget")
        if not 0.0 <= self.headroom < 1.0:
            raise ValueError("headroom must be in [0, 1)")


@dataclass(eq=True)
class SnapshotEntry:
    entity: str
    promoted_actions: str
    emotions: tuple[str, ...]


@dataclass
class ConvoSnapshot:
    entries: list[SnapshotEntry]
    source_cluster_id: str = field(default="", compare=False)
    raw_output: str = field(default="", compare=False)


@dataclass
class AgendaSummary:
    text: str
    no_agenda: bool = False


def message_llm_text(message: Message) -> str:
    """Model-facing text: raw text minus links and emoji, hashtags retained."""
    return strip_links_and_emoji(message.raw_text)


def pack_messages(messages: list[Message], bundle: PromptBundle, cfg: LlmConfig) -> list[str]:
    """Greedily pack messages (by retweet count desc) into budgeted chunks.

    Capacity reserves room for every prompt template, the model's replies at
    each chain turn, and the configured headroom. A message too large to fit
    alone is truncated at a word boundary with an ellipsis marker.
    """
    if not messages:
        raise ValueError("cannot pack an empty cluster")
    overhead = estimate_tokens(bundle.overhead_text())
    turns = _CHAIN_TURNS if cfg.multi_turn else 1
    usable = int(cfg.context_budget_tokens * (1.0 - cfg.headroom))
    capacity = usable - overhead - turns * cfg.max_new_tokens
    if capacity <= 0:
        raise ValueError(
            f"context budget {cfg.context_budget_tokens} cannot fit templates plus replies"
        )
    ordered = sorted(messages, key=lambda m: (-m.retweet_count, m.id))
    chunks: list[str] = []
    current: list[str] = []
    current_tokens = 0
    for message in ordered:
        text = message_llm_text(message)
        tokens = estimate_tokens(text) + 1
        if tokens > capacity:
            if current:
                chunks.append("\n".join(current))
                current, current_tokens = [], 0
            limit = max(capacity * 4 - 8, 4)
            cut = text[:limit]
            if " " in cut:
                cut = cut[: cut.rfind(" ")]
            chunks.append(cut + " …")
            logger.warning("message %s exceeds chunk capacity; truncated", message.id)
            continue
        if current_tokens + tokens > capacity:
            chunks.append("\n".join(current))
            current, current_tokens = [], 0
        current.append(text)
        current_tokens += tokens
    if current:
        chunks.append("\n".join(current))
    return chunks


def _http_transport(payload: dict, cfg: LlmConfig) -> dict:
    headers = {"Content-Type": "application/json"}
    if cfg.api_key:
        headers["Authorization"] = f"Bearer {cfg.api_key}"
    response = requests.post(cfg.endpoint, json=payload, headers=headers, timeout=cfg.timeout)
    response.raise_for_status()
    return response.json()


def _chat(conversation: list[dict], cfg: LlmConfig, transport=None) -> str:
    """One chat-completion request with retries and exponential backoff."""
    payload = {
        "model": cfg.model,
        "messages": conversation,
        "top_p": cfg.nucleus_p,
        "max_tokens": cfg.max_new_tokens,
    }
    last_error: Exception | None = None
    for attempt in range(cfg.retry + 1):
        try:
            if transport is not None:
                data = transport(payload)
            else:
                if not cfg.endpoint:
                    raise LlmError("no endpoint configured and no transport supplied")
                data = _http_transport(payload, cfg)
            return data["choices"][0]["message"]["content"]
        except (requests.RequestException, LlmError, KeyError, IndexError, TypeError) as exc:
            last_error = exc
            if attempt < cfg.retry:
                time.sleep(cfg.backoff * (2**attempt))
    raise LlmError(f"chat request failed after {cfg.retry + 1} attempts: {last_error}")


def _with_input(template: str, chunk: str) -> str:
    if _INPUT_SLOT in template:
        return template.replace(_INPUT_SLOT, chunk)
    return f"{template}\nMessages: {chunk}"


def run_prompt_chain(chunk: str, bundle: PromptBundle, cfg: LlmConfig, transport=None) -> str:
    """Issue the four prompts over one chunk and return the final reply.

    Multi-turn mode holds one conversation (system prompt, then each prompt
    as a user turn with the chunk attached to the first). Single-turn mode
    concatenates all four prompts into one request.
    """
    rendered = [
        _with_input(bundle.prompts[0], chunk),
        bundle.prompts[1],
        bundle.prompts[2],
        bundle.prompts[3].replace(_TEMPLATE_SLOT, bundle.output_template),
    ]
    conversation = [{"role": "system", "content": bundle.system}]
    if not cfg.multi_turn:
        conversation.append({"role": "user", "content": "\n\n".join(rendered)})
        return _chat(conversation, cfg, transport)
    reply = ""
    for content in rendered:
        conversation.append({"role": "user", "content": content})
        reply = _chat(conversation, cfg, transport)
        conversation.append({"role": "assistant", "content": reply})
    return reply


def summarize_agenda(chunk: str, bundle: PromptBundle, cfg: LlmConfig, transport=None) -> AgendaSummary:
    """Ask for the overall agenda; prefix the completion stem when absent."""
    conversation = [
        {"role": "system", "content": bundle.system},
        {"role": "user", "content": bundle.agenda_summary.replace(_INPUT_SLOT, chunk)},
    ]
    reply = _chat(conversation, cfg, transport).strip()
    if not reply:
        raise LlmError("empty agenda summary reply")
    if reply.casefold().startswith(NO_AGENDA_MARKER):
        return AgendaSummary(text=reply, no_agenda=True)
    if reply.casefold().startswith(AGENDA_STEM.casefold()):
        return AgendaSummary(text=reply, no_agenda=False)
    return AgendaSummary(text=f"{AGENDA_STEM} {reply}", no_agenda=False)


def _extract_bracketed(text: str) -> str | None:
    start = text.find("[")
    if start < 0:
        return None
    depth = 0
    quote: str | None = None
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if quote is not None:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            continue
        if ch in "'\"":
            quote = ch
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def _tolerant_parse(block: str):
    try:
        return json.loads(block)
    except json.JSONDecodeError:
        pass
    try:
        return ast.literal_eval(block)
    except (ValueError, SyntaxError):
        pass
    fixed = re.sub(r",\s*\.\.\.", "", block)
    fixed = fixed.replace("...", "")
    fixed = re.sub(r",(\s*[\]}])", r"\1", fixed)
    for parser in (json.loads, ast.literal_eval):
        try:
            return parser(fixed)
        except (ValueError, SyntaxError):
            continue
    return None


def _coerce_emotions(value) -> tuple[str, ...]:
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list):
        return ("unspecified",)
    out = tuple(dict.fromkeys(str(v).strip() for v in value if str(v).strip()))
    return out if out else ("unspecified",)


def _coerce_actions(value) -> str:
    if value is None:
        return ""
    if isinstance(value, list):
        return "; ".join(str(v).strip() for v in value if str(v).strip())
    return str(value).strip()


def parse_snapshot(reply: str, source_cluster_id: str = "") -> ConvoSnapshot:
    """Parse a model reply into a snapshot, tolerating JSON-ish sloppiness.

    Accepts prose around the structure, ``output =`` prefixes, single quotes,
    trailing commas, and a literal ``...`` continuation marker. Entries with
    no entity are dropped; entities are deduplicated case-insensitively; at
    most five entries are kept in reply order.
    """
    block = _extract_bracketed(reply)
    data = _tolerant_parse(block) if block else None
    if not isinstance(data, (list, tuple)):
        raise SnapshotParseError("unparseable snapshot: no bracketed list found", raw=reply)
    entries: list[SnapshotEntry] = []
    seen: set[str] = set()
    for item in data:
        if not isinstance(item, dict):
            continue
        fields = {str(k).strip().lower(): v for k, v in item.items()}
        entity = fields.get("entity")
        if not isinstance(entity, str) or not entity.strip():
            continue
        entity = entity.strip()
        key = entity.casefold()
        if key in seen:
            continue
        seen.add(key)
        entries.append(
            SnapshotEntry(
                entity=entity,
                promoted_actions=_coerce_actions(fields.get("promoted_actions")),
                emotions=_coerce_emotions(fields.get("emotions")),
            )
        )
        if len(entries) == MAX_SNAPSHOT_ENTRIES:
            break
    if not entries:
        raise SnapshotParseError("unparseable snapshot: no valid entries", raw=reply)
    return ConvoSnapshot(entries=entries, source_cluster_id=source_cluster_id, raw_output=reply)


def render_snapshot(snapshot: ConvoSnapshot) -> str:
    """Render entries in the output-template structure (inverse of parsing)."""
    blocks = []
    for entry in snapshot.entries:
        obj = {
            "entity": entry.entity,
            "promoted_actions": entry.promoted_actions,
            "emotions": list(entry.emotions),
        }
        blocks.append(json.dumps(obj, ensure_ascii=False, indent=0))
    return "output = [\n" + ",\n".join(blocks) + "\n]"


def merge_snapshots(parts: list[ConvoSnapshot]) -> ConvoSnapshot:
    """Merge per-chunk snapshots by case-folded entity.

    Actions concatenate with "; " (duplicates dropped), emotions union in
    first-seen order, entries rank by how many chunks mention them and then
    by first appearance; the result is clamped to five entries.
    """
    if not parts:
        raise ValueError("no snapshots to merge")
    merged: dict[str, dict] = {}
    for part in parts:
        for entry in part.entries:
            key = entry.entity.casefold()
            slot = merged.setdefault(
                key,
                {"entity": entry.entity, "actions": [], "emotions": [], "chunks": 0, "order": len(merged)},
            )
            slot["chunks"] += 1
            if entry.promoted_actions and entry.promoted_actions not in slot["actions"]:
                slot["actions"].append(entry.promoted_actions)
            for emotion in entry.emotions:
                if emotion not in slot["emotions"]:
                    slot["emotions"].append(emotion)
    ranked = sorted(merged.values(), key=lambda s: (-s["chunks"], s["order"]))
    entries = [
        SnapshotEntry(
            entity=slot["entity"],
            promoted_actions="; ".join(slot["actions"]),
            emotions=tuple(slot["emotions"]) or ("unspecified",),
        )
        for slot in ranked[:MAX_SNAPSHOT_ENTRIES]
    ]
    return ConvoSnapshot(
        entries=entries,
        source_cluster_id=parts[0].source_cluster_id,
        raw_output=parts[0].raw_output,
    )
