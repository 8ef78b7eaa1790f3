"""Hierarchical attention: weighted sums over all d attention levels.

``ham_v`` iterates vanilla attention d times from a query vector and returns
the weighted sum of the d level outputs (the raw query at level 0 is not a
summand); ``ham_s`` does the same with self-attention over a whole sequence.
The level weights are the softmax of d trainable scalars, so the one-hot
limits recover plain vanilla attention (weight on level 1) and plain
multi-level attention (weight on level d).

Each operation exists twice: a plain-numpy forward (fast path for the
randomized bound suites) and a taped form built from autodiff primitives
(``*_vars`` for single instances, ``ham_v_context`` batched for the seq2seq
connector). Equivalence of the two paths is covered by tests.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .attention import attention_levels, self_attention_layer, vanilla_attention
from .errors import DimensionError, DomainError
from .tensor import l2_norm, softmax_vec

BOUND_TOL = 1e-9


@dataclass
class HamWeights:
    """d trainable scalars whose softmax gives the level weights."""

    d: int
    c: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"attention depth must be >= 1, got {self.d}")
        if self.c is None:
            # all-zero init: uniform level weights 1/d
            self.c = np.zeros(self.d)
        self.c = np.asarray(self.c, dtype=np.float64)
        if self.c.shape != (self.d,):
            raise DimensionError(f"expected {self.d} level scalars, got shape {self.c.shape}")

    def level_weights(self) -> np.ndarray:
        """Probability vector alpha = softmax(c), recomputed from c on the fly."""
        return softmax_vec(self.c)


def ham_v(q, K, w: HamWeights) -> np.ndarray:
    """Weighted sum of the d iterated vanilla-attention outputs of q against K."""
    levels = attention_levels(q, K, w.d)
    return levels.T @ w.level_weights()


def ham_s(X, w: HamWeights) -> np.ndarray:
    """Weighted sum of d consecutive self-attention results of the sequence X."""
    X = np.asarray(X, dtype=np.float64)
    alpha = w.level_weights()
    acc = np.zeros_like(X)
    cur = X
    for t in range(w.d):
        cur = self_attention_layer(cur)
        acc += alpha[t] * cur
    return acc


# ---------------------------------------------------------------------------
# taped (differentiable) forms


def ham_v_vars(q, K, c) -> ad.Variable:
    """Taped ham_v: q is [dk], K is [dk, n], c is [d]; all differentiable."""
    q, K, c = ad.as_variable(q), ad.as_variable(K), ad.as_variable(c)
    dk, n = K.value.shape
    if q.value.shape != (dk,):
        raise DimensionError(f"query shape {q.value.shape} does not match keys {K.value.shape}")
    inv = 1.0 / np.sqrt(dk)
    kt = ad.transpose(K)
    cur = ad.reshape(q, (1, dk))
    levels = []
    for _ in range(c.value.shape[0]):
        scores = ad.scale(ad.matmul(cur, K), inv)
        cur = ad.matmul(ad.softmax(scores), kt)
        levels.append(cur)
    out = ad.weighted_sum(levels, ad.softmax(c))
    return ad.reshape(out, (dk,))


def ham_s_vars(X, c) -> ad.Variable:
    """Taped ham_s: X is [n, dk], c is [d]."""
    X, c = ad.as_variable(X), ad.as_variable(c)
    if X.value.ndim != 2 or X.value.size == 0:
        raise DimensionError(f"ham_s expects a non-empty [n, dk] matrix, got {X.value.shape}")
    inv = 1.0 / np.sqrt(X.value.shape[1])
    cur = X
    levels = []
    for _ in range(c.value.shape[0]):
        scores = ad.scale(ad.matmul(cur, ad.transpose(cur)), inv)
        cur = ad.matmul(ad.softmax(scores), cur)
        levels.append(cur)
    return ad.weighted_sum(levels, ad.softmax(c))


def ham_v_context(enc, query, c) -> ad.Variable:
    """Batched taped ham_v used as the encoder-decoder connector.

    ``enc`` is [B,T,H] (each example brings its own keys), ``query`` is
    [B,H] and ``c`` is [d]; returns the [B,H] context.
    """
    enc, query, c = ad.as_variable(enc), ad.as_variable(query), ad.as_variable(c)
    inv = 1.0 / np.sqrt(enc.value.shape[2])
    cur = query
    levels = []
    for _ in range(c.value.shape[0]):
        scores = ad.scale(ad.attend_scores(enc, cur), inv)
        cur = ad.attend_combine(enc, ad.softmax(scores))
        levels.append(cur)
    return ad.weighted_sum(levels, ad.softmax(c))


# ---------------------------------------------------------------------------
# norm-bound suite

# Fixed instance where the claimed lower bound min ||k_i|| <= ||output|| fails:
# two opposite keys cancel under a query orthogonal to both.
LOWER_BOUND_COUNTEREXAMPLE = {
    "K_columns": [[1.0, 0.0], [-1.0, 0.0]],
    "q": [0.0, 1.0],
}


@dataclass
class NormBoundReport:
    """Outcome of the randomized attention-norm bound suite."""

    trials: int
    max_depth: int
    seed: int
    levels_checked: int
    upper_violations: int
    lower_violations: int
    first_upper_violation: dict | None
    counterexample: dict

    def passed(self) -> bool:
        return self.upper_violations == 0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "max_depth": self.max_depth,
            "seed": self.seed,
            "levels_checked": self.levels_checked,
            "upper_violations": self.upper_violations,
            "lower_violations": self.lower_violations,
            "first_upper_violation": self.first_upper_violation,
            "lower_bound_counterexample": self.counterexample,
        }


def _counterexample_record() -> dict:
    K = np.array(LOWER_BOUND_COUNTEREXAMPLE["K_columns"]).T
    q = np.array(LOWER_BOUND_COUNTEREXAMPLE["q"])
    out = vanilla_attention(q, K)
    key_norms = np.linalg.norm(K, axis=0)
    return {
        "K_columns": LOWER_BOUND_COUNTEREXAMPLE["K_columns"],
        "q": LOWER_BOUND_COUNTEREXAMPLE["q"],
        "output_norm": l2_norm(out),
        "min_key_norm": float(key_norms.min()),
        "lower_bound_violated": bool(l2_norm(out) < key_norms.min() - BOUND_TOL),
    }


def norm_bound_suite(
    trials: int,
    seed: int = 0,
    max_depth: int = 10,
    dk_range: tuple[int, int] = (2, 16),
    n_range: tuple[int, int] = (1, 32),
    entry_bound: float = 3.0,
) -> NormBoundReport:
    """Randomized check that every attention level keeps the norm upper bound.

    Samples (q, K) instances, iterates attention to ``max_depth`` and asserts
    ||output||_2 <= max_i ||k_i||_2 + 1e-9 at every level and for a random
    ham_v combination of the levels. Lower-bound failures are counted, not
    asserted: the suite also records the fixed cancellation counterexample.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    upper_violations = 0
    lower_violations = 0
    levels_checked = 0
    first_upper = None
    for _ in range(trials):
        dk = int(rng.integers(dk_range[0], dk_range[1] + 1))
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        K = rng.uniform(-entry_bound, entry_bound, size=(dk, n))
        q = rng.uniform(-entry_bound, entry_bound, size=dk)
        key_norms = np.linalg.norm(K, axis=0)
        hi, lo = key_norms.max(), key_norms.min()
        levels = attention_levels(q, K, max_depth)
        norms = np.linalg.norm(levels, axis=1)
        # random level weighting: a convex combination must obey the same bound
        alpha = softmax_vec(rng.uniform(-2.0, 2.0, size=max_depth))
        ham_norm = float(np.linalg.norm(levels.T @ alpha))
        levels_checked += max_depth + 1
        lower_violations += int(np.sum(norms < lo - BOUND_TOL))
        bad = np.nonzero(norms > hi + BOUND_TOL)[0]
        if ham_norm > hi + BOUND_TOL:
            upper_violations += 1
        if bad.size:
            upper_violations += int(bad.size)
            if first_upper is None:
                first_upper = {
                    "K_columns": K.T.tolist(),
                    "q": q.tolist(),
                    "level": int(bad[0] + 1),
                    "output_norm": float(norms[bad[0]]),
                    "max_key_norm": float(hi),
                }
    return NormBoundReport(
        trials=trials,
        max_depth=max_depth,
        seed=seed,
        levels_checked=levels_checked,
        upper_violations=upper_violations,
        lower_violations=lower_violations,
        first_upper_violation=first_upper,
        counterexample=_counterexample_record(),
    )


def reduction_report(instances: int, seed: int = 0, hot: float = 20.0) -> dict:
    """Numerically verify the two one-hot reductions of ham_v and ham_s.

    With the level-t scalar at ``hot`` and the rest at zero the output must
    match the plain level-t attention result; with d=1 the match is exact up
    to float rounding. Depths are capped at 6 and entries at 2 so the softmax
    tail (d-1)*e^-hot stays well under the 1e-7 check threshold.
    """
    if instances < 1:
        raise DomainError(f"instances must be >= 1, got {instances}")
    rng = np.random.default_rng(seed)
    v_onehot = v_d1 = s_onehot = s_d1 = 0.0
    for _ in range(instances):
        dk = int(rng.integers(2, 9))
        n = int(rng.integers(1, 9))
        d = int(rng.integers(2, 7))
        t = int(rng.integers(0, d))
        K = rng.uniform(-2.0, 2.0, size=(dk, n))
        q = rng.uniform(-2.0, 2.0, size=dk)
        X = rng.uniform(-2.0, 2.0, size=(n, dk))

        c = np.zeros(d)
        c[t] = hot
        levels = attention_levels(q, K, d)
        v_onehot = max(v_onehot, float(np.max(np.abs(ham_v(q, K, HamWeights(d, c)) - levels[t]))))
        v_d1 = max(v_d1, float(np.max(np.abs(ham_v(q, K, HamWeights(1)) - levels[0]))))

        cur = X
        s_levels = []
        for _ in range(d):
            cur = self_attention_layer(cur)
            s_levels.append(cur)
        s_onehot = max(s_onehot, float(np.max(np.abs(ham_s(X, HamWeights(d, c)) - s_levels[t]))))
        s_d1 = max(s_d1, float(np.max(np.abs(ham_s(X, HamWeights(1)) - s_levels[0]))))
    return {
        "instances": instances,
        "seed": seed,
        "hot": hot,
        "ham_v_onehot_max_err": v_onehot,
        "ham_v_d1_max_err": v_d1,
        "ham_s_onehot_max_err": s_onehot,
        "ham_s_d1_max_err": s_d1,
    }
