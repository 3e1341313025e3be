"""Local Tchebichef Moment texture descriptors, LBP baselines and a small random forest."""

from .tchebichef import TchebichefBasis, MomentKernel, build_basis, build_kernel, all_kernels
from .ltm import (
    LtmConfig,
    LtmImage,
    FeatureVector,
    LTMTransformer,
    moment_at,
    lehmer_code,
    ltm_image,
    histogram,
    extract_ltm,
)
from .lbp import LbpVariant, LBPTransformer, lbp_image, extract_lbp
from .forest import (
    ForestParams,
    ForestModel,
    EvalReport,
    RandomForest,
    train,
    predict,
    cross_validate,
    evaluate_split,
)
from .dataset import GrayImage, DatasetSplit, load_image, load_split, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "TchebichefBasis",
    "MomentKernel",
    "build_basis",
    "build_kernel",
    "all_kernels",
    "LtmConfig",
    "LtmImage",
    "FeatureVector",
    "LTMTransformer",
    "moment_at",
    "lehmer_code",
    "ltm_image",
    "histogram",
    "extract_ltm",
    "LbpVariant",
    "LBPTransformer",
    "lbp_image",
    "extract_lbp",
    "ForestParams",
    "ForestModel",
    "EvalReport",
    "RandomForest",
    "train",
    "predict",
    "cross_validate",
    "evaluate_split",
    "GrayImage",
    "DatasetSplit",
    "load_image",
    "load_split",
    "generate_synthetic",
]
