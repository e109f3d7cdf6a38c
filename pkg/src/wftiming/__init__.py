"""Burst-level timing analysis toolkit for website-fingerprinting research."""

__version__ = "0.1.0"

from .trace import (
    Burst,
    EmptyTraceError,
    INCOMING,
    OUTGOING,
    Packet,
    Trace,
    TraceParseError,
    UNMONITORED,
    load_trace,
    parse_trace,
    save_trace,
    segment_bursts,
    segment_bursts_by_time,
    serialize_trace,
)
from .features import (
    DEFAULT_BINS,
    FeatureKind,
    GlobalBins,
    build_bins_for_traces,
    build_global_bins,
    extract_feature_vector,
    extract_matrix,
    extract_values,
    instance_histogram,
)
from .represent import DEFAULT_LENGTH, Encoding, Representation, encode, encode_matrix
from .splits import (
    CorpusIndex,
    Split,
    build_index,
    load_time_stats,
    split_by_circuit,
    split_by_speed,
)
from .knn import Distance, KnnModel, evaluate_closed, evaluate_open, fit, predict
from .leakage import (
    LeakageConfig,
    LeakageReport,
    analyze_matrix,
    cluster_features,
    individual_leakage,
    joint_leakage,
    kde_fit,
    pairwise_mi,
    redundancy_filter,
)
from .defense import (
    BurstSequence,
    MoldingPlan,
    Overheads,
    burst_sequence_from_trace,
    mold_trace,
    overhead_report,
    overheads,
    pair_sites,
    supersequence,
)
