"""Baseline attention mechanisms: vanilla, scaled dot-product, multi-head,
multi-level and self-attention.

Two layout conventions meet here and the boundary is a transpose: the
query-vector form stores keys as columns of a ``dk x n`` matrix, while the
matrix form (``sdp_attention``, ``self_attention_layer``) stores one token
per row. Values coincide with keys except in ``sdp_attention``, which keeps
a separate V so multi-head projections can use it. The compatibility
function is the scaled dot product <k,q>/sqrt(dk) throughout.

All functions are pure and operate on plain float64 arrays; the
differentiable counterparts used in training live in :mod:`hamattn.ham`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .tensor import softmax_vec
from . import kernels


@dataclass(frozen=True)
class KeySequence:
    """n key vectors of dimension dk, stored as the columns of K."""

    K: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=np.float64)
        if K.ndim != 2:
            raise DimensionError(f"KeySequence expects a dk x n matrix, got shape {K.shape}")
        if K.shape[0] < 1 or K.shape[1] < 1:
            raise DomainError(f"KeySequence needs dk >= 1 and n >= 1, got {K.shape}")
        object.__setattr__(self, "K", K)

    @property
    def dk(self) -> int:
        return self.K.shape[0]

    @property
    def n(self) -> int:
        return self.K.shape[1]


def _keys(K) -> np.ndarray:
    if isinstance(K, KeySequence):
        return K.K
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2:
        raise DimensionError(f"keys must form a dk x n matrix, got shape {K.shape}")
    if K.size == 0:
        raise DomainError("empty key sequence")
    return K


@dataclass(frozen=True)
class MultiHeadParams:
    """Per-head projections plus the output projection.

    ``wq[i]``, ``wk[i]``, ``wv[i]`` are [d_model, dk]; ``wo`` is [h*dk, d_model].
    """

    wq: tuple
    wk: tuple
    wv: tuple
    wo: np.ndarray

    def __post_init__(self):
        wq = tuple(np.asarray(m, dtype=np.float64) for m in self.wq)
        wk = tuple(np.asarray(m, dtype=np.float64) for m in self.wk)
        wv = tuple(np.asarray(m, dtype=np.float64) for m in self.wv)
        wo = np.asarray(self.wo, dtype=np.float64)
        if not (len(wq) == len(wk) == len(wv)) or len(wq) < 1:
            raise DomainError("need the same (>=1) number of Q/K/V projections per head")
        shape = wq[0].shape
        for m in (*wq, *wk, *wv):
            if m.shape != shape:
                raise DimensionError(f"head projection shapes differ: {m.shape} vs {shape}")
        h, dk = len(wq), shape[1]
        if wo.shape != (h * dk, shape[0]):
            raise DimensionError(
                f"output projection must be [{h * dk}, {shape[0]}], got {wo.shape}"
            )
        object.__setattr__(self, "wq", wq)
        object.__setattr__(self, "wk", wk)
        object.__setattr__(self, "wv", wv)
        object.__setattr__(self, "wo", wo)

    @property
    def h(self) -> int:
        return len(self.wq)

    @classmethod
    def identity(cls, d: int, h: int = 1) -> "MultiHeadParams":
        """h heads of identity projections with a stacked-identity output map."""
        eye = np.eye(d)
        wo = np.concatenate([eye] * h, axis=0) / h
        return cls(wq=(eye,) * h, wk=(eye,) * h, wv=(eye,) * h, wo=wo)


def scaled_dot_score(k, q, dk: int | None = None) -> float:
    """Compatibility score <k,q>/sqrt(dk) between one key and one query."""
    k = np.asarray(k, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if k.shape != q.shape or k.ndim != 1:
        raise DimensionError(f"key and query must be same-length vectors: {k.shape} vs {q.shape}")
    if dk is None:
        dk = k.shape[0]
    return float(k @ q / np.sqrt(dk))


def attention_distribution(K, q) -> np.ndarray:
    """Softmax over the n scaled-dot scores of q against the key columns."""
    K = _keys(K)
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (K.shape[0],):
        raise DimensionError(f"query shape {q.shape} does not match keys {K.shape}")
    return softmax_vec(K.T @ q / np.sqrt(K.shape[0]))


def vanilla_attention(q, K) -> np.ndarray:
    """Convex combination of key columns weighted by the attention distribution."""
    K = _keys(K)
    return K @ attention_distribution(K, q)


def attention_levels(q, K, depth: int) -> np.ndarray:
    """Iterated attention outputs q_1..q_depth, each the next level's query.

    Returns a [depth, dk] array; row t-1 is the level-t output.
    """
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    K = _keys(K)
    out = np.empty((depth, K.shape[0]))
    cur = np.asarray(q, dtype=np.float64)
    for t in range(depth):
        cur = vanilla_attention(cur, K)
        out[t] = cur
    return out


def multi_level_attention(q, K, depth: int) -> np.ndarray:
    """Feed each attention output back as the next query; return level ``depth``."""
    return attention_levels(q, K, depth)[-1]


def sdp_attention(Q, K, V) -> np.ndarray:
    """softmax(Q K^T / sqrt(dk)) V with row-per-token operands."""
    Q = np.asarray(Q, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if Q.ndim != 2 or K.ndim != 2 or V.ndim != 2:
        raise DimensionError(
            f"sdp_attention expects 2-D Q, K, V, got {Q.shape}, {K.shape}, {V.shape}"
        )
    if Q.shape[1] != K.shape[1] or K.shape[0] != V.shape[0]:
        raise DimensionError(
            f"sdp_attention shape mismatch: Q {Q.shape}, K {K.shape}, V {V.shape}"
        )
    if K.shape[0] == 0:
        raise DomainError("empty key sequence")
    p = kernels.softmax_rows(Q @ K.T / np.sqrt(Q.shape[1]))
    return p @ V


def multi_head(Q, K, V, params: MultiHeadParams) -> np.ndarray:
    """Concatenate per-head sdp attentions of projected inputs, then project."""
    Q = np.asarray(Q, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    d_model = params.wq[0].shape[0]
    for name, m in (("Q", Q), ("K", K), ("V", V)):
        if m.ndim != 2 or m.shape[1] != d_model:
            raise DimensionError(f"{name} must be [tokens, {d_model}], got {m.shape}")
    heads = [
        sdp_attention(Q @ wq, K @ wk, V @ wv)
        for wq, wk, wv in zip(params.wq, params.wk, params.wv)
    ]
    return np.concatenate(heads, axis=1) @ params.wo


def self_attention_layer(X) -> np.ndarray:
    """Every token attends over the whole sequence: sdp_attention(X, X, X)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"self attention expects a [n, dk] matrix, got {X.shape}")
    if X.shape[0] == 0:
        raise DomainError("empty input sequence")
    return sdp_attention(X, X, X)
