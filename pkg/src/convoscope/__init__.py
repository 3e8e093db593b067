"""convoscope: topic-anchored message subsets, influencer networks, agenda snapshots."""

from .agenda_llm import (
    AgendaSummary,
    ConvoSnapshot,
    LlmConfig,
    PromptBundle,
    SnapshotEntry,
    merge_snapshots,
    pack_messages,
    parse_snapshot,
    render_snapshot,
    run_prompt_chain,
    summarize_agenda,
)
from .config import PipelineConfig, load_config, save_config
from .corpus import (
    Corpus,
    CorpusError,
    Message,
    SchemaMap,
    filter_messages,
    normalize_text,
    parse_corpus,
    resolve_retweets,
)
from .density import DensityClusterer
from .hashtag_groups import (
    Convo,
    CooccurrenceMatrix,
    HashtagGroup,
    HashtagVocab,
    TopicGroup,
    build_vocab,
    cooccurrence,
    convos_from_topics,
    distance_matrix,
    extract_groups,
    find_convos,
    fit_lda,
    topic_groups,
)
from .influencers import (
    CoordinationMetrics,
    InfluencerNetwork,
    InfluencerProfile,
    InfluencerStats,
    build_network,
    coordination_metrics,
    influencer_stats,
    top_influencers,
)
from .lda import GibbsLda
from .lexical import LexicalEmbedder
from .msg_cluster import (
    LexicalProvider,
    MessageCluster,
    RemoteProvider,
    TwoLevelClusterer,
    cluster_messages,
    embed,
    leaf_clusters,
)
from .pipeline import PipelineError, run_pipeline
from .reduction import NeighborhoodEmbedding
from .report import PolarityLexicon, export_network, export_snapshot, validate_report
from .synthkit import GroundTruth, OperationSpec, PlantSpec, synth_corpus, write_synth_corpus

__version__ = "0.1.0"
