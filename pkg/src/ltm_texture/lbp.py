"""Local binary pattern baselines on the 3x3 neighbourhood.

Neighbours ``g0..g7`` run counter-clockwise starting at the east pixel, so
``g_i`` and ``g_{i+4}`` are diametrically opposite. Rows grow downwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import ValidationError, check_gray_image
from .ltm import FeatureVector

# (row offset, column offset) for g0..g7
NEIGHBOUR_OFFSETS = (
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
)

KINDS = ("olbp", "cslbp", "csldp", "xcslbp")
_ALIASES = {
    "olbp": "olbp",
    "lbp": "olbp",
    "cs-lbp": "cslbp",
    "cslbp": "cslbp",
    "cs-ldp": "csldp",
    "csldp": "csldp",
    "xcs-lbp": "xcslbp",
    "xcslbp": "xcslbp",
}
DISPLAY_NAMES = {"olbp": "OLBP", "cslbp": "CS-LBP", "csldp": "CS-LDP", "xcslbp": "XCS-LBP"}


@dataclass(frozen=True)
class LbpVariant:
    kind: str = "olbp"
    threshold: float = 0.0

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValidationError(f"unknown LBP variant {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if not self.threshold >= 0:
            raise ValidationError(f"threshold must be >= 0, got {self.threshold!r}")

    @property
    def bin_count(self) -> int:
        return 256 if self.kind == "olbp" else 16

    @property
    def display_name(self) -> str:
        return DISPLAY_NAMES[self.kind]


def _neighbours(img: np.ndarray):
    h, w = img.shape
    center = img[1 : h - 1, 1 : w - 1]
    g = [img[1 + dr : h - 1 + dr, 1 + dc : w - 1 + dc] for dr, dc in NEIGHBOUR_OFFSETS]
    return center, g


def lbp_image(image, variant: LbpVariant | str = "olbp") -> np.ndarray:
    """Code image over the valid region (one-pixel border dropped)."""
    if isinstance(variant, str):
        variant = LbpVariant(variant)
    img = check_gray_image(image, min_size=3)
    gc, g = _neighbours(img)
    codes = np.zeros(gc.shape, dtype=np.int64)
    if variant.kind == "olbp":
        for p in range(8):
            codes += (g[p] - gc >= 0).astype(np.int64) << p
    elif variant.kind == "cslbp":
        for i in range(4):
            codes += (g[i] - g[i + 4] > variant.threshold).astype(np.int64) << i
    elif variant.kind == "csldp":
        for i in range(4):
            codes += ((g[i] - gc) * (gc - g[i + 4]) >= 0).astype(np.int64) << i
    else:
        for i in range(4):
            v = (g[i] - g[i + 4] + gc) + (g[i] - gc) * (g[i + 4] - gc)
            codes += (v >= 0).astype(np.int64) << i
    return codes


def extract_lbp(image, variant: LbpVariant | str = "olbp") -> FeatureVector:
    if isinstance(variant, str):
        variant = LbpVariant(variant)
    codes = lbp_image(image, variant)
    return FeatureVector(bins=np.bincount(codes.ravel(), minlength=variant.bin_count).astype(np.int64))


class LBPTransformer(BaseEstimator, TransformerMixin):
    """Histogram features for one LBP variant; stateless apart from validation."""

    def __init__(self, kind="olbp", threshold=0.0, normalize=False):
        self.kind = kind
        self.threshold = threshold
        self.normalize = normalize

    def fit(self, X=None, y=None):
        self.variant_ = LbpVariant(self.kind, self.threshold)
        self.n_features_out_ = self.variant_.bin_count
        return self

    def transform(self, X):
        if not hasattr(self, "variant_"):
            self.fit()
        rows = [extract_lbp(img, self.variant_).bins for img in X]
        out = np.asarray(rows, dtype=np.float64).reshape(len(rows), self.n_features_out_)
        if self.normalize:
            out /= out.sum(axis=1, keepdims=True)
        return out
