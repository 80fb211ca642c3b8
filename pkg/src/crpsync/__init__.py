"""Predicting the next-day synchronization state of two multichannel series
from sliding-window cross-recurrence plots and a small CNN."""

from .dataset import (
    Example,
    ExampleSet,
    SplitDataset,
    WindowConfig,
    build_pair_examples,
    class_weights,
    pool_pairs,
    split_temporal,
)
from .embedding import (
    EmbeddedSeries,
    EmbeddingParams,
    embed,
    estimate_delay_ami,
    estimate_dimension_fnn,
    zscore,
)
from .evaluation import Metrics, confusion, grid_report
from .ingestion import AlignmentReport, TimeSeries, align_pair, load_csv, validate_continuity
from .recurrence import (
    RecurrenceMatrix,
    RqaMeasures,
    cross_recurrence_plot,
    diagonal_targets,
    recurrence_plot,
    render_pgm,
    rqa_measures,
)

__version__ = "0.1.0"
