"""Run configuration: one JSON file, env overrides for secrets."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

ENV_LLM_ENDPOINT = "CONVOSCOPE_LLM_ENDPOINT"
ENV_LLM_MODEL = "CONVOSCOPE_LLM_MODEL"
ENV_API_KEY = "CONVOSCOPE_API_KEY"
ENV_EMBED_ENDPOINT = "CONVOSCOPE_EMBED_ENDPOINT"


@dataclass
class CorpusSection:
    input_path: str = ""
    schema: str = "default"


@dataclass
class GroupsSection:
    method: str = "hashtags"  # "hashtags" or "lda"
    top_n: int = 6000
    target_dim: int = 5
    n_neighbors: int = 15
    min_cluster_size: int = 10
    min_samples: int | None = None
    bypass_below: int = 200
    n_epochs: int = 300


@dataclass
class LdaSection:
    n_topics: int = 20
    iterations: int = 200
    alpha: float = 0.1
    beta: float = 0.01
    top_words: int = 20


@dataclass
class ConvoSection:
    terms: list[str] = field(default_factory=list)
    top_k: int = 10
    proportional_threshold: float | None = None


@dataclass
class CoordinationSection:
    weights: list[float] = field(default_factory=lambda: [0.4, 0.4, 0.2])
    operation_threshold: float = 0.5


@dataclass
class ClustersSection:
    provider: str = "lexical"  # "lexical" or "remote"
    dim: int = 384
    batch_size: int = 32
    endpoint: str = ""
    allow_fallback: bool = True
    min_cluster_size: int = 5
    min_samples: int | None = None
    n_components: int = 5
    n_neighbors: int = 15
    level2_min_size: int = 100
    n_epochs: int = 300


@dataclass
class LlmSection:
    endpoint: str = ""
    model: str = "llama-2-13b-chat"
    context_budget_tokens: int = 4096
    max_new_tokens: int = 500
    nucleus_p: float = 0.9
    timeout: float = 60.0
    retry: int = 2
    backoff: float = 0.5
    multi_turn: bool = True
    headroom: float = 0.2
    mock: bool = False
    concurrency: int = 2
    prompts_dir: str = ""


@dataclass
class PipelineConfig:
    corpus: CorpusSection = field(default_factory=CorpusSection)
    groups: GroupsSection = field(default_factory=GroupsSection)
    lda: LdaSection = field(default_factory=LdaSection)
    convo: ConvoSection = field(default_factory=ConvoSection)
    coordination: CoordinationSection = field(default_factory=CoordinationSection)
    clusters: ClustersSection = field(default_factory=ClustersSection)
    llm: LlmSection = field(default_factory=LlmSection)
    out_dir: str = "out"
    seed: int = 0
    polarity_lexicon: str = ""

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTION_TYPES = {
    "corpus": CorpusSection,
    "groups": GroupsSection,
    "lda": LdaSection,
    "convo": ConvoSection,
    "coordination": CoordinationSection,
    "clusters": ClustersSection,
    "llm": LlmSection,
}


def config_from_dict(data: dict) -> PipelineConfig:
    kwargs: dict = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            section_cls = _SECTION_TYPES[key]
            known = {k: v for k, v in value.items() if k in section_cls.__dataclass_fields__}
            kwargs[key] = section_cls(**known)
        elif key in PipelineConfig.__dataclass_fields__:
            kwargs[key] = value
    return PipelineConfig(**kwargs)


def apply_env_overrides(config: PipelineConfig, env: dict | None = None) -> PipelineConfig:
    env = os.environ if env is None else env
    if env.get(ENV_LLM_ENDPOINT):
        config.llm.endpoint = env[ENV_LLM_ENDPOINT]
    if env.get(ENV_LLM_MODEL):
        config.llm.model = env[ENV_LLM_MODEL]
    if env.get(ENV_EMBED_ENDPOINT):
        config.clusters.endpoint = env[ENV_EMBED_ENDPOINT]
    return config


def load_config(path: str | Path, env: dict | None = None) -> PipelineConfig:
    data = json.loads(Path(path).read_text("utf-8"))
    return apply_env_overrides(config_from_dict(data), env)


def save_config(config: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8")


def config_hash(config: PipelineConfig) -> str:
    """Stable digest of analysis-relevant settings (output directory excluded)."""
    data = config.to_dict()
    data.pop("out_dir", None)
    canonical = json.dumps(data, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
