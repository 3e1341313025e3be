"""Local Tchebichef Moment (LTM) descriptor.

Each valid pixel gets ``k`` weighted local moments; the ranking of those
values is encoded as a Lehmer code in ``[0, k! - 1]`` and the histogram of
codes is the feature vector.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import ValidationError, check_gray_image, check_kernel_size
from .tchebichef import MomentKernel, build_basis, build_kernel

VALUE_MODES = ("raw", "absolute")
TIE_RULES = ("earlier-index-stronger",)
MAX_MOMENTS = 8
MAX_WEIGHT = 100.0

# Weighted moments i, j closer than TIE_TOL * (w_i + w_j) count as equal. Many
# masks have rational entries, so exact ties on integer images are common and
# floating-point round-off (~1e-12 at pixel scale) must not decide them.
TIE_TOL = 1e-9

_ORDER_RE = re.compile(r"^M?(\d)(\d)$", re.IGNORECASE)


def parse_order(token) -> tuple[int, int]:
    """Parse ``"M01"``, ``"01"``, ``(0, 1)`` or ``[0, 1]`` into ``(m, n)``.

    Two-digit forms only cover orders below 10; use pairs beyond that.
    """
    if isinstance(token, str):
        tok = token.strip()
        match = _ORDER_RE.match(tok)
        if match:
            return int(match.group(1)), int(match.group(2))
        parts = re.split(r"[_:,\s]+", tok.lstrip("Mm"))
        if len(parts) == 2 and all(p.isdigit() for p in parts):
            return int(parts[0]), int(parts[1])
        raise ValidationError(f"cannot parse moment order {token!r}")
    try:
        m, n = token
    except (TypeError, ValueError):
        raise ValidationError(f"cannot parse moment order {token!r}") from None
    return int(m), int(n)


@dataclass(frozen=True)
class LtmConfig:
    kernel_size: int = 5
    orders: tuple = ((0, 0), (0, 1), (1, 0), (1, 1), (2, 0))
    weights: tuple = (0.1, 5.0, 5.0, 5.0, 5.0)
    value_mode: str = "raw"
    tie_rule: str = "earlier-index-stronger"

    def __post_init__(self):
        size = check_kernel_size(self.kernel_size)
        orders = tuple(parse_order(o) for o in self.orders)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "kernel_size", size)
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "weights", weights)

        k = len(orders)
        if k < 2:
            raise ValidationError("at least two moment orders are required")
        if k > MAX_MOMENTS:
            raise ValidationError(f"at most {MAX_MOMENTS} moment orders are supported, got {k}")
        if len(weights) != k:
            raise ValidationError(f"{k} orders but {len(weights)} weights")
        for w in weights:
            if not (0.0 < w <= MAX_WEIGHT):
                raise ValidationError(f"weights must lie in (0, {MAX_WEIGHT:g}], got {w!r}")
        for m, n in orders:
            if not (0 <= m < size and 0 <= n < size):
                raise ValidationError(f"order M{m}{n} out of range for kernel size {size}")
        if self.value_mode not in VALUE_MODES:
            raise ValidationError(f"value_mode must be one of {VALUE_MODES}, got {self.value_mode!r}")
        if self.tie_rule not in TIE_RULES:
            raise ValidationError(f"tie_rule must be one of {TIE_RULES}, got {self.tie_rule!r}")

    @property
    def k(self) -> int:
        return len(self.orders)

    @property
    def bin_count(self) -> int:
        return math.factorial(self.k)

    def kernels(self) -> list[MomentKernel]:
        basis = build_basis(self.kernel_size)
        return [build_kernel(basis, m, n) for m, n in self.orders]


@dataclass(frozen=True)
class LtmImage:
    codes: np.ndarray = field(repr=False)
    k: int

    @property
    def height(self) -> int:
        return self.codes.shape[0]

    @property
    def width(self) -> int:
        return self.codes.shape[1]


@dataclass(frozen=True)
class FeatureVector:
    bins: np.ndarray

    @property
    def bin_count(self) -> int:
        return len(self.bins)

    @property
    def total(self) -> int:
        return int(self.bins.sum())


def moment_at(image, x: int, y: int, kernel: MomentKernel) -> float:
    """Correlate ``kernel`` with the window centred at column ``x``, row ``y``."""
    img = check_gray_image(image)
    half = kernel.N // 2
    h, w = img.shape
    if not (half <= x < w - half and half <= y < h - half):
        raise ValidationError(
            f"{kernel.N}x{kernel.N} window centred at (x={x}, y={y}) leaves the {w}x{h} image"
        )
    window = img[y - half : y + half + 1, x - half : x + half + 1]
    return float(np.sum(kernel.w * window))


def lehmer_code(values: Sequence[float], tie_rule: str = "earlier-index-stronger", margins=None) -> int:
    """Rank of the strength ordering of ``values`` in the factorial number system.

    Digit ``i`` counts later positions holding a strictly greater value, so an
    already descending sequence maps to 0 and an ascending one to ``k! - 1``.
    With ``margins``, values ``i`` and ``j`` differing by no more than
    ``margins[i] + margins[j]`` are treated as equal.
    """
    if tie_rule not in TIE_RULES:
        raise ValidationError(f"unknown tie rule {tie_rule!r}")
    vals = [float(v) for v in values]
    k = len(vals)
    if k < 2:
        raise ValidationError("a Lehmer code needs at least two values")
    if any(math.isnan(v) for v in vals):
        raise ValidationError("NaN in Lehmer code input")
    margins = [0.0] * k if margins is None else [float(m) for m in margins]
    code = 0
    for i in range(k):
        digit = sum(1 for j in range(i + 1, k) if vals[j] - vals[i] > margins[i] + margins[j])
        code += digit * math.factorial(k - 1 - i)
    return code


def _weighted_moments(img: np.ndarray, config: LtmConfig, kernels) -> np.ndarray:
    masks = np.stack([kn.w for kn in kernels])
    windows = sliding_window_view(img, (config.kernel_size, config.kernel_size))
    moments = np.einsum("ijyx,kyx->kij", windows, masks, optimize=True)
    if config.value_mode == "absolute":
        moments = np.abs(moments)
    weights = np.asarray(config.weights, dtype=np.float64)
    return moments * weights[:, None, None]


def _codes_from_values(values: np.ndarray, margins: np.ndarray) -> np.ndarray:
    k = values.shape[0]
    codes = np.zeros(values.shape[1:], dtype=np.int64)
    for i in range(k - 1):
        later = values[i + 1 :] - values[i] > (margins[i] + margins[i + 1 :])[:, None, None]
        codes += later.sum(axis=0) * math.factorial(k - 1 - i)
    return codes


def ltm_image(image, config: LtmConfig, kernels: Sequence[MomentKernel] | None = None) -> LtmImage:
    """Lehmer-code image over the valid region (no padding).

    ``kernels`` may be passed to skip rebuilding the masks; they must match
    ``config.orders`` one to one.
    """
    img = check_gray_image(image, min_size=config.kernel_size)
    if kernels is None:
        kernels = config.kernels()
    elif [(kn.m, kn.n) for kn in kernels] != list(config.orders):
        raise ValidationError("kernels do not match the configured orders")
    values = _weighted_moments(img, config, kernels)
    margins = TIE_TOL * np.asarray(config.weights, dtype=np.float64)
    return LtmImage(codes=_codes_from_values(values, margins), k=config.k)


def histogram(ltm: LtmImage) -> FeatureVector:
    bins = np.bincount(ltm.codes.ravel(), minlength=math.factorial(ltm.k))
    return FeatureVector(bins=bins.astype(np.int64))


def extract_ltm(image, config: LtmConfig, kernels=None) -> FeatureVector:
    return histogram(ltm_image(image, config, kernels))


class LTMTransformer(BaseEstimator, TransformerMixin):
    """Map a collection of grayscale images to LTM histograms.

    Parameters
    ----------
    kernel_size : int
        Odd mask size N in [3, 15].
    orders : sequence
        Moment orders, as ``"M01"`` strings or ``(m, n)`` pairs.
    weights : sequence of float
        One positive weight per order.
    value_mode : {"raw", "absolute"}
        Rank signed moments, or their magnitudes.
    normalize : bool
        Divide each histogram by its pixel count.
    """

    def __init__(
        self,
        kernel_size=5,
        orders=("M00", "M01", "M10", "M11", "M20"),
        weights=(0.1, 5, 5, 5, 5),
        value_mode="raw",
        normalize=False,
    ):
        self.kernel_size = kernel_size
        self.orders = orders
        self.weights = weights
        self.value_mode = value_mode
        self.normalize = normalize

    def _config(self) -> LtmConfig:
        return LtmConfig(
            kernel_size=self.kernel_size,
            orders=tuple(self.orders),
            weights=tuple(self.weights),
            value_mode=self.value_mode,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        self.kernels_ = self.config_.kernels()
        self.n_features_out_ = self.config_.bin_count
        return self

    def transform(self, X):
        if not hasattr(self, "config_"):
            self.fit()
        rows = [extract_ltm(img, self.config_, self.kernels_).bins for img in X]
        out = np.asarray(rows, dtype=np.float64).reshape(len(rows), self.n_features_out_)
        if self.normalize:
            out /= out.sum(axis=1, keepdims=True)
        return out


__all__ = [
    "LtmConfig",
    "LtmImage",
    "FeatureVector",
    "LTMTransformer",
    "moment_at",
    "lehmer_code",
    "ltm_image",
    "histogram",
    "extract_ltm",
    "parse_order",
]
