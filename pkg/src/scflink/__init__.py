"""Self-configured parallel link prediction: a superstep graph engine, three
link-prediction applications, a boosted-tree executor sizing model, and a
benchmark harness comparing default against self-configured execution."""

from .bench import (
    BenchScenario,
    RunMetrics,
    bench_compare,
    default_config,
    execute_app,
    generate_synthetic_graph,
)
from .features import FeatureVector, LabeledRecord
from .gbdt import (
    EvalReport,
    GbdtModel,
    evaluate,
    load_model,
    predict_class,
    predict_proba,
    save_model,
    train_decision_tree,
    train_gbdt,
)
from .graph import Graph, load_edge_list, partition_graph, run_supersteps
from .linkpred import (
    adamic_adar,
    affiliate_communities,
    detect_overlapping_communities,
    detect_triangles,
    gc_app,
    ocd_app,
    pagerank,
    power_iteration_clustering,
)
from .scf import (
    ClusterSpec,
    ExecConfig,
    UpperBounds,
    collect,
    decide,
    default_bounds,
    generate_training_dataset,
    label_oracle,
    recalculate_config,
    update,
)

__version__ = "0.1.0"
