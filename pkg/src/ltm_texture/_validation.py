"""Input validation helpers shared by the descriptor and classifier modules."""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Raised when an argument violates a documented precondition."""


def check_kernel_size(size) -> int:
    if isinstance(size, bool) or not isinstance(size, (int, np.integer)):
        raise ValidationError(f"kernel size must be an integer, got {size!r}")
    size = int(size)
    if size % 2 == 0:
        raise ValidationError(f"kernel size must be odd, got {size}")
    if not 3 <= size <= 15:
        raise ValidationError(f"kernel size must lie in [3, 15], got {size}")
    return size


def check_gray_image(image, min_size: int = 1, name: str = "image") -> np.ndarray:
    """Return ``image`` as a 2-D float64 array after checking shape and range.

    Accepts anything array-like, plus objects exposing a ``pixels`` array
    (such as :class:`ltm_texture.dataset.GrayImage`).
    """
    if hasattr(image, "pixels"):
        image = image.pixels
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D (grayscale), got shape {arr.shape}")
    h, w = arr.shape
    if h < min_size or w < min_size:
        raise ValidationError(
            f"{name} of size {w}x{h} is smaller than the {min_size}x{min_size} neighbourhood"
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    if arr.min() < 0 or arr.max() > 255:
        raise ValidationError(f"{name} values must lie in [0, 255]")
    return arr


def check_feature_matrix(X, name: str = "X") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"{name} must be 2-D (samples x features), got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValidationError(f"{name} is empty")
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{name} contains non-finite values")
    return X
