"""Graph outlier detection on attributed graphs, built on numpy and scipy."""

from .api import (FittedDetector, ScoreReport, decision_function, fit,
                  predict, predict_confidence, predict_proba, score_report)
from .config import DetectorConfig
from .generators import (InjectionResult, benchmark_graph, community_graph,
                         gen_attribute_outliers, gen_structural_outliers)
from .graph import (Graph, from_edges, gcn_normalize, load_edge_list,
                    load_graph, load_json, save_edge_list, save_json, spmm)
from .metrics import (eval_average_precision, eval_precision_at_k,
                      eval_recall_at_k, eval_roc_auc)
from .models import DOMINANT, DONE, GCNAE, MLPAE, OCGNN
from .processing import process_graph

__version__ = "0.1.0"

__all__ = [
    "DetectorConfig", "FittedDetector", "ScoreReport",
    "fit", "decision_function", "predict", "predict_proba",
    "predict_confidence", "score_report", "process_graph",
    "MLPAE", "GCNAE", "DOMINANT", "OCGNN", "DONE",
    "Graph", "from_edges", "load_edge_list", "load_graph", "load_json",
    "save_edge_list", "save_json", "gcn_normalize", "spmm",
    "InjectionResult", "gen_structural_outliers", "gen_attribute_outliers",
    "community_graph", "benchmark_graph",
    "eval_precision_at_k", "eval_recall_at_k", "eval_roc_auc",
    "eval_average_precision",
]
