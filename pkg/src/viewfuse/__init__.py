"""Multi-view account similarity fusion, overlapping community detection, and
channel/topic profiling for social-media dump files."""

from .errors import ConfigError, DataError, StageFailure, ViewfuseError
from .ingest import (
    Corpus,
    TweetRecord,
    VideoRecord,
    YouTubeRefs,
    extract_tweet_entities,
    extract_youtube_refs,
    load_corpus,
    resolve_video_channels,
    save_corpus,
)
from .views import ALL_VIEW_KINDS, ViewKind, ViewMatrix, build_view, build_views
from .fusion import (
    NeighborRanking,
    UnifiedGraph,
    aggregate_scores,
    build_unified_graph,
    cosine_ranking,
    neighbor_set,
    svd_aggregate,
)
from .community import (
    CommunityCover,
    SweepReport,
    detect_communities,
    node_significance,
    resolution_sweep,
)
from .profiling import (
    ProfileDocument,
    RankingReport,
    channel_topic_document,
    community_channel_ranking,
    community_topic_ranking,
    tfidf_vectors,
)
from .timeline import EventWindow, UploadSeries, daily_upload_series, window_topic_ranking
from .synth import (
    GroundTruth,
    SynthSpec,
    four_block_spec,
    generate_multiview,
    overlapping_nmi,
    syria_like_spec,
)
from .cli import PipelineConfig, export_graph, run_pipeline

__version__ = "0.1.0"
