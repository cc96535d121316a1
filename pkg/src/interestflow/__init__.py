"""Interest dynamics, concentration and bot heuristics for Reddit-style dumps."""

from .activity_stats import (
    Histogram,
    PowerLawFit,
    SkewGaussianFit,
    activity_distribution,
    fit_double_power_law,
    fit_power_law,
    fit_skew_gaussian,
    post_lifetime,
    user_lifetime,
)
from .bot_filter import BotFlag, EntropyReport, flag_automated, high_activity, length_entropy, name_pattern
from .concentration import ActivityVector, GiniResult, activity_vector, gini, gini_vs_activity, normalized_gini, null_model
from .corpus_ingest import (
    CommentRecord,
    PostRecord,
    SubredditCatalog,
    UserActivitySeries,
    build_post_index,
    build_user_index,
    filter_stream,
    load_catalog,
    parse_record,
)
from .interest_dynamics import (
    BinVector,
    InterestEvent,
    angle,
    angle_sequence,
    bin_comments,
    bin_vector,
    detect_events,
    dominant_element,
    select_active_users,
    transition_matrix,
)

__version__ = "0.1.0"
