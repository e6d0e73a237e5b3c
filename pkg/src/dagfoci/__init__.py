"""Local causal parent discovery with the CODEC coefficient."""
from .codec import (
    CodecValue,
    DegenerateResponseError,
    DegenerateStatisticError,
    codec,
    codec_conditional,
    codec_unconditional,
    compute_ranks,
    q_n,
)
from .dag_foci import (
    CandidateCollection,
    ClusterGraph,
    ParentalSets,
    build_cluster_graph,
    dag_foci,
    stage_one,
    stage_three,
    stage_two,
)
from .dataset import ColumnSelection, Dataset, DatasetError, filter_environment, load_csv, write_csv
from .evaluation import RunSummary, benchmark, codec_gap_sweep, jaccard, score_run
from .foci import MarkovBoundaryEstimate, foci_select
from .indep_test import PermutationTestResult, permutation_independence_test
from .interventional import InterventionalResult, dag_foci_interventional
from .neighbors import backend_name, nearest_neighbors
from .sem import DagSpec, GroundTruth, builtin, do_intervene, ground_truth, sample

__version__ = "0.1.0"
