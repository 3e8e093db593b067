from __future__ import annotations

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from convoscope.agenda_llm import (
    AGENDA_STEM,
    ConvoSnapshot,
    LlmConfig,
    LlmError,
    PromptBundle,
    SnapshotEntry,
    SnapshotParseError,
    estimate_tokens,
    merge_snapshots,
    message_llm_text,
    pack_messages,
    parse_snapshot,
    render_snapshot,
    run_prompt_chain,
    summarize_agenda,
)
from convoscope.corpus import Message
from convoscope.mock_llm import ScriptedLlm


def msg(mid, text, retweets=0):
    return Message(id=mid, author_id="u", raw_text=text, clean_text=text, retweet_count=retweets)


def _cfg(**kwargs):
    defaults = dict(endpoint="", retry=0, backoff=0.0)
    defaults.update(kwargs)
    return LlmConfig(**defaults)


class TestPromptBundle:
    def test_default_templates_load(self):
        bundle = PromptBundle.default()
        assert "agenda detection assistant" in bundle.system
        assert bundle.prompts[0] == (
            "What are the top distinct entities (maximum 5) mentioned in several messages?"
        )
        assert bundle.prompts[1] == (
            "What are the authors promoting about each entity? Give me 1 phrase for each."
        )
        assert bundle.prompts[2] == "What are the emotions expressed towards each entity?"
        assert '"entity": {entity}' in bundle.output_template
        assert '"promoted_actions": {action}' in bundle.output_template
        assert bundle.agenda_summary.count("{input_text}") == 1

    def test_from_dir_roundtrip(self, tmp_path):
        default = PromptBundle.default()
        for name, text in [
            ("system.txt", default.system),
            ("prompt1.txt", default.prompts[0]),
            ("prompt2.txt", default.prompts[1]),
            ("prompt3.txt", default.prompts[2]),
            ("prompt4.txt", default.prompts[3]),
            ("output_template.txt", default.output_template),
            ("agenda_summary.txt", default.agenda_summary),
        ]:
            (tmp_path / name).write_text(text, "utf-8")
        assert PromptBundle.from_dir(tmp_path) == default

    def test_summary_template_needs_slot(self):
        default = PromptBundle.default()
        with pytest.raises(ValueError, match="input_text"):
            PromptBundle(
                system=default.system,
                prompts=default.prompts,
                output_template=default.output_template,
                agenda_summary="no slot here",
            )


class TestLlmConfig:
    def test_defaults_match_contract(self):
        cfg = LlmConfig()
        assert cfg.context_budget_tokens == 4096
        assert cfg.max_new_tokens == 500
        assert cfg.nucleus_p == 0.9

    def test_validation(self):
        with pytest.raises(ValueError, match="nucleus_p"):
            LlmConfig(nucleus_p=0.0)
        with pytest.raises(ValueError, match="context budget"):
            LlmConfig(context_budget_tokens=400, max_new_tokens=500)


class TestPackMessages:
    def test_small_cluster_single_chunk(self):
        bundle = PromptBundle.default()
        messages = [msg("1", "alpha beta"), msg("2", "gamma delta"), msg("3", "epsilon zeta")]
        chunks = pack_messages(messages, bundle, _cfg())
        assert len(chunks) == 1
        for m in messages:
            assert m.clean_text in chunks[0]

    def test_budget_forces_split_preserving_order(self):
        bundle = PromptBundle.default()
        overhead = estimate_tokens(bundle.overhead_text())
        # derived with the stated estimator: capacity = usable - overhead - 4*max_new
        max_new = 40
        text = "x" * 400  # 100 tokens each
        capacity_wanted = 220
        usable = capacity_wanted + overhead + 4 * max_new
        budget = int(usable / 0.8 + 1)
        cfg = _cfg(context_budget_tokens=budget, max_new_tokens=max_new)
        messages = [msg(str(i), text, retweets=10 - i) for i in range(3)]
        chunks = pack_messages(messages, bundle, cfg)
        assert len(chunks) == 2
        assert chunks[0].count("x" * 400) == 2  # two fit, third spills
        assert chunks[1].count("x" * 400) == 1

    def test_messages_ordered_by_retweet_count(self):
        bundle = PromptBundle.default()
        messages = [msg("a", "low message", 1), msg("b", "high message", 9)]
        chunk = pack_messages(messages, bundle, _cfg())[0]
        assert chunk.index("high message") < chunk.index("low message")

    def test_oversized_message_truncated_with_marker(self):
        bundle = PromptBundle.default()
        cfg = _cfg(context_budget_tokens=4096, max_new_tokens=500)
        huge = msg("big", "word " * 5000)
        chunks = pack_messages([huge], bundle, cfg)
        assert len(chunks) == 1
        assert chunks[0].endswith("…")
        assert estimate_tokens(chunks[0]) <= int(4096 * 0.8)

    def test_empty_cluster_error(self):
        with pytest.raises(ValueError, match="empty"):
            pack_messages([], PromptBundle.default(), _cfg())

    def test_budget_too_small_error(self):
        with pytest.raises(ValueError, match="budget"):
            pack_messages([msg("1", "hi there")], PromptBundle.default(),
                          _cfg(context_budget_tokens=600, max_new_tokens=500))

    def test_conservation_every_message_in_exactly_one_chunk(self):
        bundle = PromptBundle.default()
        cfg = _cfg(context_budget_tokens=1280, max_new_tokens=100)
        messages = [msg(f"m{i}", f"only{i}x " * 30, retweets=i) for i in range(12)]
        chunks = pack_messages(messages, bundle, cfg)
        assert len(chunks) > 1
        joined = "\n".join(chunks)
        for i in range(12):
            # each message lands in exactly one chunk
            assert sum(f"only{i}x" in chunk for chunk in chunks) == 1
            assert f"only{i}x" in joined

    def test_llm_text_keeps_hashtags_strips_links(self):
        m = Message(
            id="1",
            author_id="u",
            raw_text="Soutenez #Frexit \U0001F1EB\U0001F1F7 https://t.co/x",
            clean_text="Soutenez",
        )
        assert message_llm_text(m) == "Soutenez #Frexit"


class TestPromptChainWire:
    def test_multi_turn_conversation_and_payload(self, chat_server):
        chat_server.responder = lambda payload: "reply %d" % len(payload["messages"])
        cfg = _cfg(endpoint=chat_server.url, retry=0)
        bundle = PromptBundle.default()
        reply = run_prompt_chain("Some messages #here", bundle, cfg)
        assert len(chat_server.payloads) == 4
        first = chat_server.payloads[0]
        assert first["top_p"] == 0.9
        assert first["max_tokens"] == 500
        assert "temperature" not in first
        assert first["messages"][0]["role"] == "system"
        assert "Some messages #here" in first["messages"][1]["content"]
        last = chat_server.payloads[-1]
        # conversation carries prior assistant turns
        assert [m["role"] for m in last["messages"]] == [
            "system", "user", "assistant", "user", "assistant", "user", "assistant", "user",
        ]
        assert '"entity": {entity}' in last["messages"][-1]["content"]
        assert reply == "reply 8"

    def test_single_turn_mode_one_request(self, chat_server):
        chat_server.responder = lambda payload: "combined"
        cfg = _cfg(endpoint=chat_server.url, multi_turn=False)
        run_prompt_chain("chunk text", PromptBundle.default(), cfg)
        assert len(chat_server.payloads) == 1
        content = chat_server.payloads[0]["messages"][1]["content"]
        assert "top distinct entities" in content
        assert "emotions expressed" in content

    def test_retry_contract_exactly_three_attempts(self, chat_server):
        chat_server.fail_next = 10**6
        cfg = _cfg(endpoint=chat_server.url, retry=2, backoff=0.0, timeout=5.0)
        with pytest.raises(LlmError, match="after 3 attempts"):
            run_prompt_chain("chunk", PromptBundle.default(), cfg)
        assert len(chat_server.payloads) == 3

    def test_recovers_after_transient_failures(self, chat_server):
        chat_server.fail_next = 2
        chat_server.responder = lambda payload: "recovered"
        cfg = _cfg(endpoint=chat_server.url, retry=2, backoff=0.0, multi_turn=False)
        assert run_prompt_chain("chunk", PromptBundle.default(), cfg) == "recovered"

    def test_mock_transport_echo_template(self):
        bundle = PromptBundle.default()
        template_reply = bundle.output_template
        transport = lambda payload: {"choices": [{"message": {"content": template_reply}}]}
        reply = run_prompt_chain("chunk", bundle, _cfg(multi_turn=False), transport)
        assert reply == template_reply

    def test_context_budget_never_exceeded(self, chat_server):
        # property over the whole exchange, measured with the stated estimator
        chat_server.responder = lambda payload: "w" * 360  # under max_new_tokens
        max_new = 100
        cfg = _cfg(endpoint=chat_server.url, context_budget_tokens=2048, max_new_tokens=max_new)
        bundle = PromptBundle.default()
        messages = [msg(f"m{i}", f"filler{i} " * 40) for i in range(20)]
        for chunk in pack_messages(messages, bundle, cfg):
            chat_server.payloads.clear()
            run_prompt_chain(chunk, bundle, cfg)
            summarize_agenda(chunk, bundle, cfg)
            for payload in chat_server.payloads:
                conversation = "\n".join(m["content"] for m in payload["messages"])
                assert estimate_tokens(conversation) + max_new <= 2048


class TestSummarizeAgenda:
    def test_stem_prefixed(self):
        transport = ScriptedLlm()
        summary = summarize_agenda("support #Asselineau now", PromptBundle.default(), _cfg(), transport)
        assert summary.text.startswith(AGENDA_STEM + " to promote")
        assert not summary.no_agenda

    def test_existing_stem_not_doubled(self):
        reply = AGENDA_STEM + " to promote X"
        transport = lambda payload: {"choices": [{"message": {"content": reply}}]}
        summary = summarize_agenda("chunk", PromptBundle.default(), _cfg(), transport)
        assert summary.text == reply

    def test_no_agenda_marker(self):
        transport = lambda payload: {"choices": [{"message": {"content": "No agenda"}}]}
        summary = summarize_agenda("chunk", PromptBundle.default(), _cfg(), transport)
        assert summary.no_agenda

    def test_empty_reply_error(self):
        transport = lambda payload: {"choices": [{"message": {"content": "  "}}]}
        with pytest.raises(LlmError, match="empty"):
            summarize_agenda("chunk", PromptBundle.default(), _cfg(), transport)


FILLED_TEMPLATE = """output = [
{
"entity": "EU",
"promoted_actions": "leave the union",
"emotions": ["anger"]
},
...
]"""


class TestParseSnapshot:
    def test_verbatim_template_single_entity(self):
        snapshot = parse_snapshot(FILLED_TEMPLATE)
        assert len(snapshot.entries) == 1
        entry = snapshot.entries[0]
        assert entry.entity == "EU"
        assert entry.promoted_actions == "leave the union"
        assert entry.emotions == ("anger",)

    def test_seven_entities_clamped_to_five(self):
        items = ",\n".join(
            '{"entity": "E%d", "promoted_actions": "a", "emotions": ["joy"]}' % i
            for i in range(7)
        )
        snapshot = parse_snapshot(f"[{items}]")
        assert len(snapshot.entries) == 5
        assert [e.entity for e in snapshot.entries] == ["E0", "E1", "E2", "E3", "E4"]

    def test_unparseable_reply_carries_raw(self):
        with pytest.raises(SnapshotParseError) as err:
            parse_snapshot("I cannot find entities")
        assert err.value.raw == "I cannot find entities"

    def test_prose_around_structure_tolerated(self):
        reply = "Sure! Here is the output =\n" + '[{"entity": "X", "emotions": "fear"}]' + "\nHope that helps."
        snapshot = parse_snapshot(reply)
        assert snapshot.entries[0].entity == "X"
        assert snapshot.entries[0].emotions == ("fear",)

    def test_single_quotes_and_trailing_commas(self):
        reply = "output = [{'entity': 'Macron', 'promoted_actions': 'oppose', 'emotions': ['anger'],},]"
        snapshot = parse_snapshot(reply)
        assert snapshot.entries[0].entity == "Macron"

    def test_scalar_emotion_coerced_to_list(self):
        snapshot = parse_snapshot('[{"entity": "X", "emotions": "hope"}]')
        assert snapshot.entries[0].emotions == ("hope",)

    def test_entries_missing_entity_dropped(self):
        reply = '[{"promoted_actions": "a", "emotions": ["x"]}, {"entity": "Keep", "emotions": ["y"]}]'
        snapshot = parse_snapshot(reply)
        assert [e.entity for e in snapshot.entries] == ["Keep"]

    def test_duplicate_entities_deduplicated(self):
        reply = '[{"entity": "EU", "emotions": ["a"]}, {"entity": "eu", "emotions": ["b"]}]'
        snapshot = parse_snapshot(reply)
        assert len(snapshot.entries) == 1

    def test_action_list_joined(self):
        reply = '[{"entity": "X", "promoted_actions": ["a", "b"], "emotions": ["c"]}]'
        assert parse_snapshot(reply).entries[0].promoted_actions == "a; b"

    def test_missing_emotions_defaulted(self):
        snapshot = parse_snapshot('[{"entity": "X"}]')
        assert snapshot.entries[0].emotions == ("unspecified",)

    def test_all_entries_invalid_is_error(self):
        with pytest.raises(SnapshotParseError, match="no valid entries"):
            parse_snapshot('[{"promoted_actions": "a"}]')

    def test_brackets_inside_strings_do_not_confuse_extraction(self):
        reply = 'output = [{"entity": "group [core]", "promoted_actions": "push ] hard", "emotions": ["joy"]}]'
        snapshot = parse_snapshot(reply)
        assert snapshot.entries[0].entity == "group [core]"
        assert snapshot.entries[0].promoted_actions == "push ] hard"


_entity = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=20
).map(str.strip).filter(lambda s: s)
_emotion = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=12
).map(str.strip).filter(lambda s: s)


@st.composite
def snapshots(draw):
    n = draw(st.integers(min_value=1, max_value=5))
    entities = draw(
        st.lists(_entity, min_size=n, max_size=n, unique_by=lambda e: e.casefold())
    )
    entries = []
    for entity in entities:
        emotions = draw(st.lists(_emotion, min_size=1, max_size=4, unique=True))
        actions = draw(st.one_of(st.just(""), _entity))
        entries.append(
            SnapshotEntry(entity=entity, promoted_actions=actions, emotions=tuple(emotions))
        )
    return ConvoSnapshot(entries=entries)


@given(snapshots())
@settings(max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_render_parse_roundtrip(snapshot):
    assert parse_snapshot(render_snapshot(snapshot)) == snapshot


class TestMergeSnapshots:
    def test_single_part_identity(self):
        part = parse_snapshot(FILLED_TEMPLATE)
        assert merge_snapshots([part]) == part

    def test_duplicate_parts_invariant(self):
        part = parse_snapshot(FILLED_TEMPLATE)
        assert merge_snapshots([part, part]) == merge_snapshots([part])

    def test_shared_entity_merged(self):
        a = ConvoSnapshot(
            entries=[SnapshotEntry("Macron", "oppose the pass", ("anger",))]
        )
        b = ConvoSnapshot(
            entries=[
                SnapshotEntry("macron", "criticize policy", ("fear", "anger")),
                SnapshotEntry("EU", "leave now", ("hope",)),
            ]
        )
        merged = merge_snapshots([a, b])
        assert [e.entity for e in merged.entries] == ["Macron", "EU"]
        top = merged.entries[0]
        assert top.promoted_actions == "oppose the pass; criticize policy"
        assert top.emotions == ("anger", "fear")

    def test_ranking_by_chunk_count_then_first_seen(self):
        # derived by hand: E repeats in both parts, so it outranks all
        # first-part singletons; remaining order is first appearance.
        part1 = ConvoSnapshot(
            entries=[
                SnapshotEntry("A", "", ("x",)),
                SnapshotEntry("B", "", ("x",)),
                SnapshotEntry("C", "", ("x",)),
                SnapshotEntry("E", "", ("x",)),
            ]
        )
        part2 = ConvoSnapshot(
            entries=[
                SnapshotEntry("E", "", ("y",)),
                SnapshotEntry("F", "", ("x",)),
                SnapshotEntry("G", "", ("x",)),
                SnapshotEntry("H", "", ("x",)),
            ]
        )
        merged = merge_snapshots([part1, part2])
        assert len(merged.entries) == 5
        assert [e.entity for e in merged.entries] == ["E", "A", "B", "C", "F"]

    def test_empty_parts_rejected(self):
        with pytest.raises(ValueError, match="no snapshots"):
            merge_snapshots([])
