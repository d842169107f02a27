"""Deep multimodal subspace clustering.

Convolutional autoencoders over multiple views of the same samples, fused
early (pixels), intermediately (mid-network), late (encoder tops), or at the
affinity level (separate networks sharing one self-expressive layer). The
trained self-expressive coefficients feed normalized spectral clustering;
classical SSC/LRR baselines and the evaluation metrics live alongside.
"""

from .baselines import AdmmConfig, AdmmResult, lrr_solve, ssc_solve
from .data import (
    ModalityBundle,
    SynthSpec,
    SynthResult,
    bilinear_resize,
    generate_union_of_subspaces,
    preprocess_bundle,
    rescale_255,
)
from .metrics import ari, clustering_accuracy, evaluate_clustering, nmi
from .network import (
    NetworkSpec,
    ResolvedNetwork,
    autoencode,
    build_network,
    builtin_spec_names,
    fuse,
    load_builtin_spec,
    load_network_spec,
    num_parameters,
    parse_network_spec,
    resolve_network,
)
from .optim import Adam
from .selfexpr import (
    HyperParams,
    SelfExpressiveLayer,
    TrainingDiverged,
    affinity_loss,
    lambda2_for_clusters,
    latent_features,
    pnorm_reg,
    pretrain,
    spatial_loss,
    train_self_expressive,
)
from .spectral import (
    ClusterLabeling,
    build_affinity,
    kmeans,
    normalize_coefficients,
    spectral_cluster,
    symmetric_eig,
)
from .tensor import Tensor, grad_check

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "AdmmConfig",
    "AdmmResult",
    "ClusterLabeling",
    "HyperParams",
    "ModalityBundle",
    "NetworkSpec",
    "ResolvedNetwork",
    "SelfExpressiveLayer",
    "SynthResult",
    "SynthSpec",
    "Tensor",
    "TrainingDiverged",
    "affinity_loss",
    "ari",
    "autoencode",
    "bilinear_resize",
    "build_affinity",
    "build_network",
    "clustering_accuracy",
    "evaluate_clustering",
    "fuse",
    "generate_union_of_subspaces",
    "grad_check",
    "kmeans",
    "lambda2_for_clusters",
    "latent_features",
    "builtin_spec_names",
    "load_builtin_spec",
    "load_network_spec",
    "lrr_solve",
    "nmi",
    "normalize_coefficients",
    "num_parameters",
    "parse_network_spec",
    "pnorm_reg",
    "preprocess_bundle",
    "pretrain",
    "rescale_255",
    "resolve_network",
    "spatial_loss",
    "spectral_cluster",
    "ssc_solve",
    "symmetric_eig",
    "train_self_expressive",
]
