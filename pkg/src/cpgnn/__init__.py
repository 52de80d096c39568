"""Compatibility-guided belief propagation for node classification on graphs
with arbitrary homophily, with a synthetic benchmark generator and a built-in
equivalence check for the identity-compatibility special case."""

from .autodiff import Tape, Tensor, constant, finite_diff_check, parameter
from .datasets import LabeledDataset, dataset_stats, featureless, load_dataset
from .errors import (ConvergenceError, CpgnnError, GenerationError, InputError,
                     ShapeError, TrainingError, VerificationError)
from .estimators import EstimatorConfig, build_estimator, glorot_init, prior_beliefs
from .experiments import (ExperimentSpec, ResultsTable, run_experiment,
                          simplified_gcn_forward, sweep_h, theorem_check)
from .graph import (LabelAssignment, SparseGraph, build_graph,
                    class_edge_counts, empirical_compatibility,
                    homophily_ratio, normalized_laplacian_tilde)
from .propagation import (CompatParam, PropagationConfig, center_beliefs,
                          final_beliefs, h_estimation_error, init_hbar,
                          propagate, recover_h, sinkhorn_knopp)
from .synth import (ReferenceFeatures, SynthConfig, gaussian_pools, generate,
                    make_target_compat, transfer_features)
from .training import (AdamState, CpgnnModel, TrainConfig, TrainReport,
                       accuracy, cpgnn_forward, joint_loss, make_splits,
                       pretrain, sgc_forward, train_baseline, train_full)

__version__ = "0.1.0"
