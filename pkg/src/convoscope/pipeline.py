"""Stage orchestration: ingest through report, with on-disk caching and resume.

Each stage writes its artifact under ``<out_dir>/cache`` together with a hash
of everything that feeds it (upstream stage keys plus the relevant config
slice). A resumed run reloads any stage whose key is unchanged instead of
recomputing it. A stage failure halts the run with the stage name; completed
artifacts stay on disk.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import msg_cluster as mc
from .agenda_llm import (
    AgendaSummary,
    ConvoSnapshot,
    LlmConfig,
    LlmError,
    PromptBundle,
    SnapshotEntry,
    SnapshotParseError,
    merge_snapshots,
    pack_messages,
    parse_snapshot,
    run_prompt_chain,
    summarize_agenda,
)
from .config import PipelineConfig, config_hash
from .corpus import (
    Corpus,
    filter_messages,
    load_corpus,
    parse_corpus,
    resolve_retweets,
    resolve_schema,
    save_corpus,
)
from .hashtag_groups import (
    Convo,
    HashtagGroup,
    extract_groups,
    find_convos,
    fit_lda,
    topic_groups,
)
from .influencers import (
    InfluencerNetwork,
    InfluencerProfile,
    InfluencerStats,
    build_network,
    coordination_metrics,
    influencer_stats,
    top_influencers,
)
from .mock_llm import ScriptedLlm
from .report import PolarityLexicon, REPORT_VERSION, dumps_report, export_network, export_snapshot, validate_report

logger = logging.getLogger(__name__)

STAGES = ("ingest", "groups", "convo", "influencers", "network", "clusters", "characterize", "report")

_STAGE_ALIASES = {
    "hashtag-groups": "groups",
    "convos": "convo",
    "coordination": "network",
    "msg-clusters": "clusters",
    "agenda": "characterize",
}


class PipelineError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


def normalize_stage(name: str) -> str:
    stage = _STAGE_ALIASES.get(name, name)
    if stage not in STAGES:
        raise ValueError(f"unknown stage {name!r}; choose from {', '.join(STAGES)}")
    return stage


def _digest(payload) -> str:
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class PipelineRun:
    def __init__(self, config: PipelineConfig, *, resume: bool = False, transport=None):
        self.config = config
        self.resume = resume
        self.transport = transport
        self.out_dir = Path(config.out_dir)
        self.cache_dir = self.out_dir / "cache"
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.cache_dir / "manifest.json"
        self.manifest: dict[str, str] = {}
        if resume and self.manifest_path.exists():
            self.manifest = json.loads(self.manifest_path.read_text("utf-8"))
        self.computed_stages: list[str] = []
        self.keys: dict[str, str] = {}
        self.failed_chunks = 0

    # -- cache plumbing ----------------------------------------------------

    def _artifact(self, name: str) -> Path:
        return self.cache_dir / name

    def _fresh(self, stage: str, key: str, *artifacts: str) -> bool:
        return (
            self.resume
            and self.manifest.get(stage) == key
            and all(self._artifact(a).exists() for a in artifacts)
        )

    def _mark(self, stage: str, key: str) -> None:
        self.manifest[stage] = key
        self.manifest_path.write_text(json.dumps(self.manifest, indent=2, sort_keys=True), "utf-8")

    def _load_json(self, name: str):
        return json.loads(self._artifact(name).read_text("utf-8"))

    def _store_json(self, name: str, data) -> None:
        self._artifact(name).write_text(
            json.dumps(data, sort_keys=True, ensure_ascii=False), "utf-8"
        )

    # -- stages ------------------------------------------------------------

    def _stage_ingest(self) -> tuple[Corpus, Corpus]:
        cfg = self.config.corpus
        if not cfg.input_path:
            raise ValueError("corpus.input_path is not configured")
        input_path = Path(cfg.input_path)
        schema = resolve_schema(cfg.schema)
        key = _digest({"input": _file_digest(input_path), "schema": schema.__dict__})
        self.keys["ingest"] = key
        if self._fresh("ingest", key, "corpus_resolved.json", "corpus_filtered.json"):
            return (
                load_corpus(self._artifact("corpus_resolved.json")),
                load_corpus(self._artifact("corpus_filtered.json")),
            )
        self.computed_stages.append("ingest")
        resolved = resolve_retweets(parse_corpus(input_path, schema))
        filtered = filter_messages(resolved)
        save_corpus(resolved, self._artifact("corpus_resolved.json"))
        save_corpus(filtered, self._artifact("corpus_filtered.json"))
        self._mark("ingest", key)
        return resolved, filtered

    def _stage_groups(self, filtered: Corpus) -> dict:
        g = self.config.groups
        payload = {"upstream": self.keys["ingest"], "groups": g.__dict__, "seed": self.config.seed}
        if g.method == "lda":
            payload["lda"] = self.config.lda.__dict__
        key = _digest(payload)
        self.keys["groups"] = key
        if self._fresh("groups", key, "groups.json"):
            return self._load_json("groups.json")
        self.computed_stages.append("groups")
        if g.method == "lda":
            lda_cfg = self.config.lda
            model = fit_lda(
                filtered,
                n_topics=lda_cfg.n_topics,
                iterations=lda_cfg.iterations,
                alpha=lda_cfg.alpha,
                beta=lda_cfg.beta,
                seed=self.config.seed,
            )
            tgroups = topic_groups(model, lda_cfg.top_words)
            dominant = model.dominant_topics()
            data = {
                "method": "lda",
                "groups": [
                    {
                        "group_id": tg.topic_id,
                        "exemplar": tg.words[0],
                        "members": list(tg.words),
                        "scores": {w: float(s) for w, s in zip(tg.words, tg.weights)},
                    }
                    for tg in tgroups
                ],
                "noise": [],
                "doc_topics": {m: int(t) for m, t in zip(model.message_ids_, dominant)},
            }
        else:
            groups, noise = extract_groups(
                filtered,
                top_n=g.top_n,
                target_dim=g.target_dim,
                n_neighbors=g.n_neighbors,
                min_cluster_size=g.min_cluster_size,
                min_samples=g.min_samples,
                bypass_below=g.bypass_below,
                n_epochs=g.n_epochs,
                seed=self.config.seed,
            )
            data = {
                "method": "hashtags",
                "groups": [
                    {
                        "group_id": grp.group_id,
                        "exemplar": grp.exemplar,
                        "members": list(grp.members),
                        "scores": grp.scores,
                    }
                    for grp in groups
                ],
                "noise": sorted(noise),
            }
        self._store_json("groups.json", data)
        self._mark("groups", key)
        return data

    def _stage_convo(self, filtered: Corpus, groups_data: dict) -> list[dict]:
        terms = self.config.convo.terms
        key = _digest({"upstream": self.keys["groups"], "terms": sorted(t.lower() for t in terms)})
        self.keys["convo"] = key
        if self._fresh("convo", key, "convos.json"):
            return self._load_json("convos.json")
        self.computed_stages.append("convo")
        if not terms:
            data: list[dict] = []
        elif groups_data["method"] == "lda":
            # Rebuild lightweight group/topic objects from the cached stage data.
            from .hashtag_groups import TopicGroup

            tgroups = [
                TopicGroup(
                    topic_id=g["group_id"],
                    words=tuple(g["members"]),
                    weights=tuple(g["scores"][w] for w in g["members"]),
                )
                for g in groups_data["groups"]
            ]
            convos = self._topic_convos(filtered, groups_data, tgroups, terms)
            data = [self._convo_to_dict(c) for c in convos]
        else:
            groups = [
                HashtagGroup(
                    group_id=g["group_id"],
                    members=tuple(g["members"]),
                    exemplar=g["exemplar"],
                    scores=g["scores"],
                )
                for g in groups_data["groups"]
            ]
            convos = find_convos(filtered, groups, terms)
            data = [self._convo_to_dict(c) for c in convos]
        self._store_json("convos.json", data)
        self._mark("convo", key)
        return data

    @staticmethod
    def _topic_convos(filtered: Corpus, groups_data: dict, tgroups, terms) -> list[Convo]:
        from .hashtag_groups import _build_convo, _normalize_terms

        normed = _normalize_terms(terms)
        doc_topics = groups_data["doc_topics"]
        convos = []
        for tg in tgroups:
            matched = tuple(t for t in normed if t in set(tg.words))
            if not matched:
                continue
            members = [
                filtered.messages[m]
                for m, topic in doc_topics.items()
                if topic == tg.topic_id and m in filtered.messages
            ]
            convos.append(_build_convo(filtered, tg.topic_id, matched, members))
        return convos

    @staticmethod
    def _convo_to_dict(convo: Convo) -> dict:
        return {
            "terms": list(convo.terms),
            "group_id": convo.group_id,
            "message_ids": list(convo.message_ids),
            "author_tweets": convo.author_tweets,
            "author_retweets": convo.author_retweets,
        }

    @staticmethod
    def _convo_from_dict(data: dict) -> Convo:
        return Convo(
            terms=tuple(data["terms"]),
            group_id=data["group_id"],
            message_ids=tuple(data["message_ids"]),
            author_tweets=data["author_tweets"],
            author_retweets=data["author_retweets"],
        )

    def _stage_influencers(self, convos: list[dict]) -> list[dict]:
        cfg = self.config.convo
        key = _digest(
            {
                "upstream": self.keys["convo"],
                "top_k": cfg.top_k,
                "proportional": cfg.proportional_threshold,
            }
        )
        self.keys["influencers"] = key
        if self._fresh("influencers", key, "influencers.json"):
            return self._load_json("influencers.json")
        self.computed_stages.append("influencers")
        data = []
        for convo_data in convos:
            convo = self._convo_from_dict(convo_data)
            profiles = top_influencers(
                convo, cfg.top_k, proportional_threshold=cfg.proportional_threshold
            )
            stats = influencer_stats(convo, profiles)
            data.append(
                {
                    "profiles": [
                        {
                            "author_id": p.author_id,
                            "rank": p.rank,
                            "tweets": p.tweets_in_convo,
                            "received_retweets": p.received_retweets,
                        }
                        for p in profiles
                    ],
                    "stats": {
                        "tweets": stats.influencer_tweets,
                        "convo_tweets": stats.convo_tweets,
                        "tweet_share": stats.tweet_share,
                        "retweets": stats.influencer_retweets,
                        "convo_retweets": stats.convo_retweets,
                        "retweet_share": stats.retweet_share,
                    },
                }
            )
        self._store_json("influencers.json", data)
        self._mark("influencers", key)
        return data

    def _stage_network(self, resolved: Corpus, influencers_data: list[dict]) -> list[dict]:
        cfg = self.config.coordination
        key = _digest(
            {
                "upstream": self.keys["influencers"],
                "weights": cfg.weights,
                "threshold": cfg.operation_threshold,
            }
        )
        self.keys["network"] = key
        if self._fresh("network", key, "networks.json"):
            return self._load_json("networks.json")
        self.computed_stages.append("network")
        data = []
        for entry in influencers_data:
            profiles = [
                InfluencerProfile(
                    author_id=p["author_id"],
                    rank=p["rank"],
                    tweets_in_convo=p["tweets"],
                    received_retweets=p["received_retweets"],
                )
                for p in entry["profiles"]
            ]
            stats = InfluencerStats(
                influencer_tweets=entry["stats"]["tweets"],
                convo_tweets=entry["stats"]["convo_tweets"],
                influencer_retweets=entry["stats"]["retweets"],
                convo_retweets=entry["stats"]["convo_retweets"],
            )
            net = build_network(resolved, profiles)
            metrics = coordination_metrics(net, stats, tuple(cfg.weights))
            index = net.display_index()
            data.append(
                {
                    "nodes": [
                        {
                            "author_id": a,
                            "index": index[a],
                            "self_retweets": net.self_loops.get(a, 0),
                        }
                        for a in net.nodes
                    ],
                    "edges": [
                        {"src": s, "dst": d, "weight": w}
                        for (s, d), w in sorted(net.edges.items())
                    ],
                    "metrics": metrics.as_dict(),
                    "operation_flag": metrics.operation_score >= cfg.operation_threshold,
                }
            )
        self._store_json("networks.json", data)
        self._mark("network", key)
        return data

    def _stage_clusters(self, filtered: Corpus, convos: list[dict], influencers_data: list[dict]) -> list[list[dict]]:
        cfg = self.config.clusters
        key = _digest(
            {"upstream": self.keys["influencers"], "clusters": cfg.__dict__, "seed": self.config.seed}
        )
        self.keys["clusters"] = key
        if self._fresh("clusters", key, "clusters.json"):
            return self._load_json("clusters.json")
        self.computed_stages.append("clusters")
        if cfg.provider == "remote" and cfg.endpoint:
            provider = mc.RemoteProvider(
                endpoint=cfg.endpoint,
                dim=cfg.dim,
                batch_size=cfg.batch_size,
                allow_fallback=cfg.allow_fallback,
            )
        else:
            provider = mc.LexicalProvider(dim=cfg.dim)
        data: list[list[dict]] = []
        for convo_data, inf_data in zip(convos, influencers_data):
            influencer_ids = {p["author_id"] for p in inf_data["profiles"]}
            messages = [
                filtered.messages[m]
                for m in convo_data["message_ids"]
                if filtered.messages[m].author_id in influencer_ids
            ]
            if not messages:
                data.append([])
                continue
            vectors = mc.embed(messages, provider)
            clusters = mc.cluster_messages(
                messages,
                vectors,
                min_cluster_size=cfg.min_cluster_size,
                min_samples=cfg.min_samples,
                n_components=cfg.n_components,
                n_neighbors=cfg.n_neighbors,
                level2_min_size=cfg.level2_min_size,
                n_epochs=cfg.n_epochs,
                random_state=self.config.seed,
            )
            data.append(
                [
                    {
                        "cluster_id": c.cluster_id,
                        "parent_id": c.parent_id,
                        "message_ids": list(c.message_ids),
                        "top_terms": list(c.top_terms),
                    }
                    for c in clusters
                ]
            )
        self._store_json("clusters.json", data)
        self._mark("clusters", key)
        return data

    def _llm_config(self) -> LlmConfig:
        llm = self.config.llm
        return LlmConfig(
            endpoint=llm.endpoint,
            model=llm.model,
            context_budget_tokens=llm.context_budget_tokens,
            max_new_tokens=llm.max_new_tokens,
            nucleus_p=llm.nucleus_p,
            timeout=llm.timeout,
            retry=llm.retry,
            backoff=llm.backoff,
            api_key=os.environ.get("CONVOSCOPE_API_KEY", ""),
            multi_turn=llm.multi_turn,
            headroom=llm.headroom,
        )

    def _bundle(self) -> PromptBundle:
        if self.config.llm.prompts_dir:
            return PromptBundle.from_dir(self.config.llm.prompts_dir)
        return PromptBundle.default()

    def _characterize_cluster(self, messages, bundle, llm_cfg, transport, audit, cluster_id):
        chunks = pack_messages(messages, bundle, llm_cfg)
        snapshots: list[ConvoSnapshot] = []
        failures = 0

        def one_chunk(indexed) -> tuple[int, ConvoSnapshot | None, str]:
            idx, chunk = indexed
            try:
                reply = run_prompt_chain(chunk, bundle, llm_cfg, transport)
                return idx, parse_snapshot(reply, source_cluster_id=cluster_id), reply
            except (LlmError, SnapshotParseError) as exc:
                logger.warning("chunk %d of cluster %s failed: %s", idx, cluster_id, exc)
                return idx, None, getattr(exc, "raw", "")

        workers = max(1, self.config.llm.concurrency)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_chunk, enumerate(chunks)))
        for idx, snapshot, raw in sorted(results, key=lambda r: r[0]):
            audit.append({"cluster_id": cluster_id, "chunk": idx, "reply": raw, "ok": snapshot is not None})
            if snapshot is None:
                failures += 1
            else:
                snapshots.append(snapshot)
        merged = merge_snapshots(snapshots) if snapshots else None
        agenda: AgendaSummary | None
        try:
            agenda = summarize_agenda(chunks[0], bundle, llm_cfg, transport)
        except LlmError as exc:
            logger.warning("agenda summary for cluster %s failed: %s", cluster_id, exc)
            agenda = None
            failures += 1
        return merged, agenda, failures

    def _stage_characterize(self, filtered: Corpus, clusters_data: list[list[dict]]) -> list[dict]:
        llm_section = self.config.llm
        key = _digest({"upstream": self.keys["clusters"], "llm": llm_section.__dict__})
        self.keys["characterize"] = key
        if self._fresh("characterize", key, "snapshots.json"):
            data = self._load_json("snapshots.json")
            self.failed_chunks = data["failed_chunks"]
            return data["convos"]
        self.computed_stages.append("characterize")
        transport = self.transport
        if transport is None and llm_section.mock:
            transport = ScriptedLlm()
        bundle = self._bundle()
        llm_cfg = self._llm_config()
        audit: list[dict] = []
        out: list[dict] = []
        for convo_clusters in clusters_data:
            per_cluster: dict[str, dict] = {}
            parents = {c["parent_id"] for c in convo_clusters if c["parent_id"]}
            leaves = [c for c in convo_clusters if c["cluster_id"] not in parents]
            for cluster in leaves:
                messages = [filtered.messages[m] for m in cluster["message_ids"]]
                merged, agenda, failures = self._characterize_cluster(
                    messages, bundle, llm_cfg, transport, audit, cluster["cluster_id"]
                )
                self.failed_chunks += failures
                per_cluster[cluster["cluster_id"]] = {
                    "snapshot": None
                    if merged is None
                    else {
                        "entries": [
                            {
                                "entity": e.entity,
                                "promoted_actions": e.promoted_actions,
                                "emotions": list(e.emotions),
                            }
                            for e in merged.entries
                        ]
                    },
                    "agenda": None
                    if agenda is None
                    else {"text": agenda.text, "no_agenda": agenda.no_agenda},
                }
            out.append({"clusters": per_cluster})
        audit_path = self._artifact("llm_audit.jsonl")
        audit_path.write_text(
            "".join(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n" for row in audit),
            "utf-8",
        )
        self._store_json("snapshots.json", {"convos": out, "failed_chunks": self.failed_chunks})
        self._mark("characterize", key)
        return out

    # -- report ------------------------------------------------------------

    def _assemble_report(self, stage: str, resolved: Corpus, filtered: Corpus, sections: dict) -> dict:
        timestamps = [m.timestamp for m in resolved.messages.values() if m.timestamp is not None]
        report: dict = {
            "version": REPORT_VERSION,
            "metadata": {
                "config_hash": config_hash(self.config),
                "seed": self.config.seed,
                "terms": sorted(t.lower().lstrip("#") for t in self.config.convo.terms),
                "corpus_stats": filtered.stats.as_dict(),
                "time_range": {
                    "min": min(timestamps) if timestamps else None,
                    "max": max(timestamps) if timestamps else None,
                },
                "stage": stage,
            },
            "diagnostics": {
                "dangling_retweets": filtered.stats.dangling,
                "failed_chunks": self.failed_chunks,
                "skipped_lines": filtered.stats.skipped,
                "stages_run": [s for s in STAGES if STAGES.index(s) <= STAGES.index(stage)],
            },
        }
        if "groups" in sections:
            groups_data = sections["groups"]
            report["groups"] = [
                {"group_id": g["group_id"], "exemplar": g["exemplar"], "members": g["members"]}
                for g in groups_data["groups"]
            ]
            report["noise_hashtags"] = groups_data["noise"]
        if "convo" in sections:
            convos_out = []
            convos = sections["convo"]
            influencers_data = sections.get("influencers")
            networks_data = sections.get("network")
            clusters_data = sections.get("clusters")
            characterize_data = sections.get("characterize")
            for i, convo_data in enumerate(convos):
                convo = self._convo_from_dict(convo_data)
                entry: dict = {
                    "group_id": convo.group_id,
                    "terms": list(convo.terms),
                    "stats": {
                        "authors": convo.total_authors,
                        "tweets": convo.total_tweets,
                        "retweets": convo.total_retweets,
                    },
                }
                if influencers_data is not None:
                    inf = influencers_data[i]
                    entry["influencers"] = inf["profiles"]
                    entry["influencer_stats"] = {
                        "tweets": inf["stats"]["tweets"],
                        "tweet_share": inf["stats"]["tweet_share"],
                        "retweets": inf["stats"]["retweets"],
                        "retweet_share": inf["stats"]["retweet_share"],
                    }
                if networks_data is not None:
                    net = networks_data[i]
                    entry["network"] = {"nodes": net["nodes"], "edges": net["edges"]}
                    entry["coordination"] = net["metrics"]
                    entry["operation_flag"] = net["operation_flag"]
                if clusters_data is not None:
                    characterized = (
                        characterize_data[i]["clusters"] if characterize_data is not None else {}
                    )
                    entry["clusters"] = [
                        {
                            "cluster_id": c["cluster_id"],
                            "parent_id": c["parent_id"],
                            "size": len(c["message_ids"]),
                            "top_terms": c["top_terms"],
                            **characterized.get(c["cluster_id"], {}),
                        }
                        for c in clusters_data[i]
                    ]
                convos_out.append(entry)
            report["convos"] = convos_out
        return report

    def _write_exports(self, sections: dict) -> list[Path]:
        lexicon = (
            PolarityLexicon.from_file(self.config.polarity_lexicon)
            if self.config.polarity_lexicon
            else PolarityLexicon.default()
        )
        written: list[Path] = []
        networks_data = sections.get("network")
        if networks_data:
            for i, net_data in enumerate(networks_data):
                net = InfluencerNetwork(
                    nodes=tuple(n["author_id"] for n in net_data["nodes"]),
                    edges={(e["src"], e["dst"]): e["weight"] for e in net_data["edges"]},
                    self_loops={
                        n["author_id"]: n["self_retweets"]
                        for n in net_data["nodes"]
                        if n["self_retweets"]
                    },
                )
                path = self.out_dir / f"network_convo{i}.dot"
                path.write_text(export_network(net), "utf-8")
                written.append(path)
        characterize_data = sections.get("characterize")
        if characterize_data:
            for i, convo_entry in enumerate(characterize_data):
                for cluster_id, payload in sorted(convo_entry["clusters"].items()):
                    if not payload["snapshot"]:
                        continue
                    snapshot = ConvoSnapshot(
                        entries=[
                            SnapshotEntry(
                                entity=e["entity"],
                                promoted_actions=e["promoted_actions"],
                                emotions=tuple(e["emotions"]),
                            )
                            for e in payload["snapshot"]["entries"]
                        ],
                        source_cluster_id=cluster_id,
                    )
                    safe = cluster_id.replace(".", "_")
                    path = self.out_dir / f"snapshot_convo{i}_{safe}.dot"
                    path.write_text(export_snapshot(snapshot, lexicon), "utf-8")
                    written.append(path)
        return written

    # -- driver ------------------------------------------------------------

    def run(self, stop_after: str | None = None) -> dict:
        stage = normalize_stage(stop_after) if stop_after else "report"
        stop_idx = STAGES.index(stage)
        sections: dict = {}
        current = "ingest"
        try:
            resolved, filtered = self._stage_ingest()
            if stop_idx >= STAGES.index("groups"):
                current = "groups"
                sections["groups"] = self._stage_groups(filtered)
            if stop_idx >= STAGES.index("convo"):
                current = "convo"
                sections["convo"] = self._stage_convo(filtered, sections["groups"])
            if stop_idx >= STAGES.index("influencers"):
                current = "influencers"
                sections["influencers"] = self._stage_influencers(sections["convo"])
            if stop_idx >= STAGES.index("network"):
                current = "network"
                sections["network"] = self._stage_network(resolved, sections["influencers"])
            if stop_idx >= STAGES.index("clusters"):
                current = "clusters"
                sections["clusters"] = self._stage_clusters(
                    filtered, sections["convo"], sections["influencers"]
                )
            if stop_idx >= STAGES.index("characterize"):
                current = "characterize"
                sections["characterize"] = self._stage_characterize(filtered, sections["clusters"])
            current = "report"
            report = self._assemble_report(stage, resolved, filtered, sections)
            validate_report(report)
            (self.out_dir / "report.json").write_text(dumps_report(report), "utf-8")
            self._write_exports(sections)
            return report
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(current, str(exc)) from exc


def run_pipeline(
    config: PipelineConfig,
    *,
    stop_after: str | None = None,
    resume: bool = False,
    transport=None,
) -> dict:
    """Execute the pipeline and return the (schema-valid) run report."""
    return PipelineRun(config, resume=resume, transport=transport).run(stop_after)
