"""Message ingestion: schema mapping, retweet resolution, text normalization, filtering.

The ingestion format is line-delimited JSON records. A :class:`SchemaMap`
adapts arbitrary record layouts (including nested keys via dotted paths) to
the internal :class:`Message` fields.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

# Hyperlinks: explicit scheme, www-prefixed hosts, and bare domain-with-path runs.
_URL_RE = re.compile(
    r"""(?:[a-zA-Z][a-zA-Z0-9+.-]*://\S+)   # scheme://...
      | (?:\bwww\.\S+)                      # www.host...
      | (?:\b(?:[a-zA-Z0-9-]+\.)+[a-zA-Z]{2,}/\S*)   # host.tld/path
    """,
    re.VERBOSE,
)

# Pictographic blocks: Emoticons, Misc Symbols & Pictographs, Transport & Map,
# Supplemental Symbols & Pictographs, regional-indicator flags.
_EMOJI_RE = re.compile(
    "["
    "\U0001F300-\U0001F5FF"
    "\U0001F600-\U0001F64F"
    "\U0001F680-\U0001F6FF"
    "\U0001F900-\U0001F9FF"
    "\U0001F1E6-\U0001F1FF"
    "]+"
)
# Variation selectors and ZWJ are zero-width; drop without inserting a space.
_ZERO_WIDTH_RE = re.compile("[︀-️‍]+")

_HASHTAG_RE = re.compile(r"#(\w+)")
_MENTION_TOKEN_RE = re.compile(r"[@#]\w+")
_WS_RE = re.compile(r"\s+")

_TWITTER_TIME_FORMAT = "%a %b %d %H:%M:%S %z %Y"


class CorpusError(Exception):
    """Fatal ingestion problem: unreadable input or zero parseable records."""


@dataclass
class Message:
    """One post, after schema mapping and (optionally) normalization."""

    id: str
    author_id: str
    raw_text: str
    timestamp: int | None = None
    clean_text: str = ""
    hashtags: tuple[str, ...] = ()
    token_count: int = 0
    retweet_of: str | None = None
    resolved_to: str | None = None
    retweet_count: int = 0

    @property
    def is_retweet(self) -> bool:
        return self.retweet_of is not None


@dataclass
class CorpusStats:
    """Record accounting. Invariant: raw == retained + dropped_filter + retweet_records + skipped."""

    raw: int = 0
    skipped: int = 0
    retweet_records: int = 0
    dangling: int = 0
    self_references: int = 0
    retained: int = 0
    dropped_filter: int = 0

    def as_dict(self) -> dict:
        return {
            "raw": self.raw,
            "skipped": self.skipped,
            "retweet_records": self.retweet_records,
            "dangling": self.dangling,
            "self_references": self.self_references,
            "retained": self.retained,
            "dropped_filter": self.dropped_filter,
        }


@dataclass
class Corpus:
    messages: dict[str, Message] = field(default_factory=dict)
    stats: CorpusStats = field(default_factory=CorpusStats)

    def __len__(self) -> int:
        return len(self.messages)

    def originals(self) -> Iterator[Message]:
        return (m for m in self.messages.values() if not m.is_retweet)

    def retweets(self) -> Iterator[Message]:
        return (m for m in self.messages.values() if m.is_retweet)


def message_sort_key(msg: Message) -> tuple[int, int, str]:
    """Chronological order; missing timestamps sort last, ties broken by id."""
    if msg.timestamp is None:
        return (1, 0, msg.id)
    return (0, msg.timestamp, msg.id)


@dataclass
class SchemaMap:
    """Maps source record keys (dotted paths allowed) onto Message fields."""

    id: str
    author: str
    text: str
    timestamp: str
    retweeted_id: str
    hashtag_mode: str = "regex"  # "regex" or "field"
    hashtag_field: str = ""

    def __post_init__(self) -> None:
        for name in ("id", "author", "text", "timestamp", "retweeted_id"):
            if not getattr(self, name):
                raise ValueError(f"schema mapping for {name!r} must be non-empty")
        if self.hashtag_mode not in ("regex", "field"):
            raise ValueError(f"unknown hashtag_mode {self.hashtag_mode!r}")
        if self.hashtag_mode == "field" and not self.hashtag_field:
            raise ValueError("hashtag_mode 'field' requires hashtag_field")

    @classmethod
    def from_dict(cls, data: dict) -> "SchemaMap":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    @classmethod
    def from_file(cls, path: str | Path) -> "SchemaMap":
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    @classmethod
    def preset(cls, name: str) -> "SchemaMap":
        """Bundled presets: "default" and "french-election-2022"."""
        filename = {
            "default": "default_schema.json",
            "french-election-2022": "french_election_schema.json",
        }.get(name)
        if filename is None:
            raise ValueError(f"unknown schema preset {name!r}")
        text = resources.files("convoscope").joinpath("data", filename).read_text("utf-8")
        return cls.from_dict(json.loads(text))


def resolve_schema(spec: str | Path | SchemaMap | dict) -> SchemaMap:
    """Accept a SchemaMap, a preset name, a dict, or a path to a schema file."""
    if isinstance(spec, SchemaMap):
        return spec
    if isinstance(spec, dict):
        return SchemaMap.from_dict(spec)
    spec = str(spec)
    try:
        return SchemaMap.preset(spec)
    except ValueError:
        return SchemaMap.from_file(spec)


def _dig(record: dict, dotted: str):
    value = record
    for part in dotted.split("."):
        if not isinstance(value, dict) or part not in value:
            return None
        value = value[part]
    return value


def _parse_timestamp(value) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return int(value)
    text = str(value).strip()
    if not text:
        return None
    if text.lstrip("-").isdigit():
        return int(text)
    try:
        return int(datetime.fromisoformat(text.replace("Z", "+00:00")).timestamp())
    except ValueError:
        pass
    try:
        parsed = datetime.strptime(text, _TWITTER_TIME_FORMAT)
        return int(parsed.replace(tzinfo=parsed.tzinfo or timezone.utc).timestamp())
    except ValueError:
        return None


def strip_links_and_emoji(text: str) -> str:
    """Remove hyperlinks and emoji, keeping hashtags and mentions inline."""
    text = _URL_RE.sub(" ", text)
    text = _EMOJI_RE.sub(" ", text)
    text = _ZERO_WIDTH_RE.sub("", text)
    return _WS_RE.sub(" ", text).strip()


def normalize_text(raw: str) -> tuple[str, tuple[str, ...], int]:
    """Return (clean_text, hashtags, token_count) for one raw message text.

    Hyperlinks and emoji are removed; hashtags are extracted lowercase (and,
    like @-mentions, stripped from the clean text). token_count counts
    whitespace tokens that are neither hashtags nor mentions and contain at
    least one letter or digit.
    """
    delinked = _URL_RE.sub(" ", raw)
    deemojied = _ZERO_WIDTH_RE.sub("", _EMOJI_RE.sub(" ", delinked))
    hashtags = tuple(dict.fromkeys(m.lower() for m in _HASHTAG_RE.findall(delinked)))
    token_count = sum(
        1
        for tok in deemojied.split()
        if not tok.startswith(("#", "@")) and any(ch.isalnum() for ch in tok)
    )
    clean = _WS_RE.sub(" ", _MENTION_TOKEN_RE.sub(" ", deemojied)).strip()
    return clean, hashtags, token_count


def _extract_field_hashtags(value) -> tuple[str, ...]:
    if value is None:
        return ()
    items: Iterable
    if isinstance(value, str):
        items = re.split(r"[\s,]+", value)
    elif isinstance(value, list):
        items = (v.get("text", "") if isinstance(v, dict) else v for v in value)
    else:
        return ()
    tags = (str(item).strip().lstrip("#").lower() for item in items)
    return tuple(dict.fromkeys(t for t in tags if t))


def _record_to_message(record: dict, schema: SchemaMap, stats: CorpusStats) -> Message | None:
    msg_id = _dig(record, schema.id)
    author = _dig(record, schema.author)
    text = _dig(record, schema.text)
    if msg_id is None or author is None or not isinstance(text, str) or not str(msg_id):
        return None
    msg_id = str(msg_id)
    retweet_of = _dig(record, schema.retweeted_id)
    retweet_of = str(retweet_of) if retweet_of not in (None, "") else None
    if retweet_of == msg_id:
        stats.self_references += 1
        retweet_of = None
    clean, regex_tags, token_count = normalize_text(text)
    if schema.hashtag_mode == "field":
        hashtags = _extract_field_hashtags(_dig(record, schema.hashtag_field))
    else:
        hashtags = regex_tags
    return Message(
        id=msg_id,
        author_id=str(author),
        raw_text=text,
        timestamp=_parse_timestamp(_dig(record, schema.timestamp)),
        clean_text=clean,
        hashtags=hashtags,
        token_count=token_count,
        retweet_of=retweet_of,
    )


def parse_records(lines: Iterable[str], schema: SchemaMap) -> Corpus:
    """Parse an iterable of JSON lines into a Corpus (no retweet resolution)."""
    stats = CorpusStats()
    messages: dict[str, Message] = {}
    bad_samples: list[str] = []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        stats.raw += 1
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            record = None
        message = _record_to_message(record, schema, stats) if isinstance(record, dict) else None
        if message is None or message.id in messages:
            stats.skipped += 1
            if len(bad_samples) < 3:
                bad_samples.append(f"line {line_no}: {line[:120]}")
            continue
        messages[message.id] = message
    if not messages:
        detail = "; ".join(bad_samples) if bad_samples else "input contained no records"
        raise CorpusError(f"zero parseable records ({detail})")
    stats.retweet_records = sum(1 for m in messages.values() if m.is_retweet)
    stats.retained = len(messages) - stats.retweet_records
    return Corpus(messages=messages, stats=stats)


def parse_corpus(path: str | Path, schema: SchemaMap) -> Corpus:
    """Parse a line-delimited record file. Malformed lines are skipped, not fatal."""
    try:
        with open(path, encoding="utf-8") as handle:
            return parse_records(handle, schema)
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc


def _follow_to_root(msg: Message, messages: dict[str, Message]) -> Message | None:
    """Walk a retweet chain to its root original; None when dangling or cyclic."""
    visited = {msg.id}
    target = msg.retweet_of
    while target is not None:
        nxt = messages.get(target)
        if nxt is None:
            return None
        if nxt.retweet_of is None:
            return nxt
        if nxt.id in visited:
            return None
        visited.add(nxt.id)
        target = nxt.retweet_of
    return None


def resolve_retweets(corpus: Corpus) -> Corpus:
    """Link every retweet record to its root original and tally retweet counts.

    RT-of-RT chains credit the root only. Dangling targets and cycles are
    counted in stats.dangling. Idempotent: counts are recomputed from scratch.
    """
    for message in corpus.messages.values():
        message.retweet_count = 0
        message.resolved_to = None
    dangling = 0
    cycles = 0
    for message in corpus.messages.values():
        if not message.is_retweet:
            continue
        root = _follow_to_root(message, corpus.messages)
        if root is None:
            dangling += 1
            if message.retweet_of in corpus.messages:
                cycles += 1
            continue
        message.resolved_to = root.id
        root.retweet_count += 1
    corpus.stats.dangling = dangling
    if cycles:
        logger.warning("broke %d cyclic retweet link(s); counted as dangling", cycles)
    return corpus


def filter_messages(corpus: Corpus) -> Corpus:
    """Keep only originals with >=1 hashtag and >=3 textual tokens.

    Retweet records are dropped from the message collection (they remain
    accounted for in stats.retweet_records). Idempotent.
    """
    kept: dict[str, Message] = {}
    dropped = 0
    for message in corpus.messages.values():
        if message.is_retweet:
            continue
        if len(message.hashtags) >= 1 and message.token_count >= 3:
            kept[message.id] = message
        else:
            dropped += 1
    stats = replace(
        corpus.stats,
        retained=len(kept),
        dropped_filter=corpus.stats.dropped_filter + dropped,
    )
    return Corpus(messages=kept, stats=stats)


def _message_to_dict(msg: Message) -> dict:
    return {
        "id": msg.id,
        "author_id": msg.author_id,
        "raw_text": msg.raw_text,
        "timestamp": msg.timestamp,
        "clean_text": msg.clean_text,
        "hashtags": list(msg.hashtags),
        "token_count": msg.token_count,
        "retweet_of": msg.retweet_of,
        "resolved_to": msg.resolved_to,
        "retweet_count": msg.retweet_count,
    }


def _message_from_dict(data: dict) -> Message:
    return Message(
        id=data["id"],
        author_id=data["author_id"],
        raw_text=data["raw_text"],
        timestamp=data.get("timestamp"),
        clean_text=data.get("clean_text", ""),
        hashtags=tuple(data.get("hashtags", ())),
        token_count=data.get("token_count", 0),
        retweet_of=data.get("retweet_of"),
        resolved_to=data.get("resolved_to"),
        retweet_count=data.get("retweet_count", 0),
    )


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    payload = {
        "stats": corpus.stats.as_dict(),
        "messages": [_message_to_dict(m) for m in corpus.messages.values()],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, ensure_ascii=False), "utf-8")


def load_corpus(path: str | Path) -> Corpus:
    payload = json.loads(Path(path).read_text("utf-8"))
    messages = {d["id"]: _message_from_dict(d) for d in payload["messages"]}
    stats = CorpusStats(**payload["stats"])
    return Corpus(messages=messages, stats=stats)
