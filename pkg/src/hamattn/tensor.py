"""Dense float64 array arithmetic shared by every other module.

A "tensor" here is simply a C-contiguous float64 ``numpy.ndarray``; this
module pins that convention and provides the shape-checked primitives the
rest of the package builds on. No broadcasting, views or sparse storage --
shapes are validated at call time and all public operations keep finite
inputs finite.
"""

import numpy as np

from .errors import DimensionError, DomainError
from . import kernels

Tensor = np.ndarray


def as_tensor(data) -> np.ndarray:
    """Coerce ``data`` to a C-contiguous float64 array, rejecting non-finite entries."""
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("tensor entries must be finite (no NaN/Inf)")
    return arr


def matmul(a, b) -> np.ndarray:
    """Standard matrix product of two 2-D tensors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def softmax_vec(x) -> np.ndarray:
    """Softmax of a 1-D tensor, stabilized by max subtraction.

    The result is a probability vector: strictly positive entries summing
    to 1 within 1e-12, invariant under a shared shift of the input.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"softmax_vec expects a 1-D tensor, got shape {x.shape}")
    if x.size == 0:
        raise DomainError("softmax_vec of an empty vector is undefined")
    return kernels.softmax_rows(x.reshape(1, -1))[0]


def l2_norm(x) -> float:
    """Euclidean norm sqrt(sum x_i^2) of a tensor of any shape."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.sum(x * x)))
