"""Classification with permutations as the only internal representation."""

from .config import ConfigError, RunConfig
from .data import Dataset, PerturbationSpec, load_csv, perturb, stratified_split
from .encoder import EncodingPipeline, native_rank_encode
from .ensemble import EnsembleConfig, EnsembleModel, build_ensemble
from .layer import SortLayer
from .network import Network, NetworkConfig
from .perm import Permutation, footrule, kendall_tau, make_rng

__version__ = "0.1.0"

__all__ = ["ConfigError", "RunConfig", "Dataset", "PerturbationSpec", "load_csv", "perturb",
           "stratified_split", "EncodingPipeline", "native_rank_encode", "EnsembleConfig",
           "EnsembleModel", "build_ensemble", "SortLayer", "Network", "NetworkConfig",
           "Permutation", "footrule", "kendall_tau", "make_rng"]
