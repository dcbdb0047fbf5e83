"""lapslice: spectrum-sliced graph filtering, density-aware homophily
metrics, and homophily-maximizing graph restructuring.

The pipeline: slice the normalized-Laplacian spectrum with rational
band-pass filters applied by sparse matvecs (no eigendecomposition), build a
dictionary of band-filtered random signals and node features, learn a node
embedding from labeled nodes with a triplet objective, then rebuild the edge
set from the closest embedding pairs until the homophily score stops
improving.
"""

__version__ = "0.1.0"

from .dictionary import Dictionary, build_dictionary, load_dictionary, save_dictionary
from .eigen import (
    EigenSystem,
    eigendecompose,
    exact_bandpass,
    exact_filter,
    sc_features,
    simplified_sc,
)
from .embedding import (
    EmbeddingModel,
    TrainConfig,
    Triplet,
    forward,
    init_model,
    load_checkpoint,
    loss_gradient,
    sample_triplets,
    save_checkpoint,
    train,
    triplet_loss,
)
from .errors import (
    CapExceededError,
    ConfigError,
    DataError,
    LapsliceError,
    MetricUndefinedError,
    NumericError,
    ParseError,
    TrainingDivergedError,
)
from .expressive import (
    FrequencyFilter,
    ImageSignal,
    baseline_features,
    baseline_regress,
    make_target,
    regress,
    synthetic_image,
)
from .graph import (
    Graph,
    IngestStats,
    SparseSymmetricMatrix,
    generate_class_features,
    generate_er,
    generate_grid,
    generate_sbm,
    graph_with_edges,
    normalized_laplacian,
)
from .homophily import (
    HomophilyReport,
    density_homophily,
    edge_homophily,
    inter_density,
    intra_density,
    node_homophily,
    norm_homophily,
)
from .io import load_graph, save_edge_list
from .restructure import (
    DistanceIndex,
    RestructureResult,
    export_restructured,
    greedy_restructure,
    pairwise_distances,
    restructured_graph,
    topk_edges,
)
from .slicers import (
    RandomSignals,
    SlicerBank,
    SlicerParams,
    apply_slicer,
    exact_slicer,
    jl_min_samples,
    min_eps_hat,
    sample_random_signals,
    slicer_response,
)
