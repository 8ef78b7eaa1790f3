"""Optimizers, the teacher-forced training loop and the depth-sweep experiment.

Every number a run records is determined by (seed, config, corpus): model
init, batch shuffling and the optimizer are all driven by numpy Generators
seeded from one root. The sweep fans the root seed out with a documented
rule -- cell_seed(root, depth, restart) = root*1_000_000 + depth*1_000 +
restart -- so any cell can be reproduced in isolation.

The depth sweep reports best-over-restarts final losses per depth. Global
minima are not computable, so monotonicity is asserted only within a 5%
tolerance: a violation inside the tolerance is restart noise, not a
refutation of the underlying claim.
"""

import time
from dataclasses import dataclass, replace

import numpy as np

from .autodiff import Tape
from .data import Corpus
from .errors import DomainError, TrainingDiverged
from .evaluate import exact_match_rate
from .model import ModelConfig, Seq2SeqModel, generate, sequence_loss

SWEEP_CSV_HEADER = "depth,seed,final_loss,metric,wall_time_s"
SWEEP_TOLERANCE = 0.05


@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 1
    batch_size: int = 32
    seed: int = 0
    ham_depth: int = 1
    restarts: int = 1
    max_grad_norm: float = 5.0  # single fixed safeguard, not a tunable schedule

    def __post_init__(self):
        if self.learning_rate < 0:
            raise DomainError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in ("sgd", "adam"):
            raise DomainError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.epochs < 1 or self.batch_size < 1 or self.ham_depth < 1 or self.restarts < 1:
            raise DomainError("epochs, batch_size, ham_depth and restarts must all be >= 1")


@dataclass
class SweepRecord:
    depth: int
    seed: int
    final_loss: float
    metric: float
    wall_time_s: float


# ---------------------------------------------------------------------------
# optimizers


def sgd_step(params, grads, state, config: TrainConfig):
    for p, g in zip(params, grads):
        p.value -= config.learning_rate * g
    return params, state


def init_adam_state(params) -> dict:
    return {
        "t": 0,
        "m": [np.zeros_like(p.value) for p in params],
        "v": [np.zeros_like(p.value) for p in params],
    }


def adam_step(params, grads, state, config: TrainConfig):
    state["t"] += 1
    t = state["t"]
    b1, b2 = config.beta1, config.beta2
    for i, (p, g) in enumerate(zip(params, grads)):
        m = state["m"][i]
        v = state["v"][i]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p.value -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
    return params, state


def clip_gradients(grads, max_norm: float) -> float:
    """Scale all gradients in place so their global norm is at most max_norm."""
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if total > max_norm > 0:
        factor = max_norm / total
        for g in grads:
            g *= factor
    return total


# ---------------------------------------------------------------------------
# training loop


def _batches(corpus: Corpus, order, batch_size: int):
    """Group a permutation of pair indices into same-shape batches."""
    buckets: dict = {}
    for i in order:
        src, tgt = corpus.pairs[i]
        buckets.setdefault((len(src), len(tgt)), []).append(i)
    out = []
    for key in sorted(buckets):
        idxs = buckets[key]
        for start in range(0, len(idxs), batch_size):
            out.append(idxs[start : start + batch_size])
    return out


def train(model: Seq2SeqModel, corpus: Corpus, config: TrainConfig):
    """Teacher-forced training; returns (model, per-epoch mean token losses)."""
    if len(corpus) == 0:
        raise DomainError("cannot train on an empty corpus")
    rng = np.random.default_rng(config.seed)
    params = list(model.parameters().values())
    state = init_adam_state(params) if config.optimizer == "adam" else None
    step = adam_step if config.optimizer == "adam" else sgd_step

    losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(corpus))
        loss_sum = 0.0
        token_count = 0
        for batch_no, idxs in enumerate(_batches(corpus, order, config.batch_size)):
            src = np.array([corpus.pairs[i][0] for i in idxs], dtype=np.int64)
            tgt = np.array([corpus.pairs[i][1] for i in idxs], dtype=np.int64)
            with Tape() as tape:
                loss = sequence_loss(model, src, tgt)
            loss_value = float(loss.value)
            if not np.isfinite(loss_value):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {batch_no}"
                )
            tape.backward(loss)
            grads = [p.grad for p in params]
            clip_gradients(grads, config.max_grad_norm)
            step(params, grads, state, config)
            tokens = src.shape[0] * (tgt.shape[1] + 1)
            loss_sum += loss_value * tokens
            token_count += tokens
        losses.append(loss_sum / token_count)
    return model, losses


# ---------------------------------------------------------------------------
# depth sweep


def cell_seed(root_seed: int, depth: int, restart: int) -> int:
    """Documented fan-out of the root seed to one (depth, restart) cell."""
    return root_seed * 1_000_000 + depth * 1_000 + restart


def _exact_match(model: Seq2SeqModel, eval_corpus: Corpus) -> float:
    max_len = max(len(tgt) for _, tgt in eval_corpus.pairs) + 2
    pairs = [(generate(src, model, max_len=max_len), tgt) for src, tgt in eval_corpus.pairs]
    return exact_match_rate(pairs)


def depth_sweep(
    train_corpus: Corpus,
    eval_corpus: Corpus,
    depths,
    config: TrainConfig,
    hidden: int = 16,
    bidirectional: bool = True,
):
    """Train restarts x depths cells under one budget; summarize best losses.

    Returns (records, summary); summary maps each depth to its
    best-over-restarts final loss and states whether the sequence is
    non-increasing within SWEEP_TOLERANCE.
    """
    depths = [int(d) for d in depths]
    if not depths or depths != sorted(depths):
        raise DomainError(f"depths must be a non-empty ascending list, got {depths}")
    records = []
    for depth in depths:
        for restart in range(config.restarts):
            seed = cell_seed(config.seed, depth, restart)
            start = time.perf_counter()
            model = Seq2SeqModel(
                ModelConfig(train_corpus.vocab_size, hidden, depth, bidirectional),
                np.random.default_rng(seed),
            )
            cfg = replace(config, seed=seed, ham_depth=depth)
            _, losses = train(model, train_corpus, cfg)
            metric = _exact_match(model, eval_corpus) if len(eval_corpus) else 0.0
            records.append(
                SweepRecord(
                    depth=depth,
                    seed=seed,
                    final_loss=losses[-1],
                    metric=metric,
                    wall_time_s=time.perf_counter() - start,
                )
            )
    best = {d: min(r.final_loss for r in records if r.depth == d) for d in depths}
    monotone = all(
        best[b] <= best[a] * (1.0 + SWEEP_TOLERANCE) for a, b in zip(depths, depths[1:])
    )
    summary = {
        "depths": depths,
        "restarts": config.restarts,
        "seed": config.seed,
        "best_loss": {str(d): best[d] for d in depths},
        "tolerance": SWEEP_TOLERANCE,
        "monotone_within_tolerance": monotone,
    }
    return records, summary


def write_sweep_csv(records, path, include_timing: bool = False) -> None:
    """Write sweep records as CSV.

    Timing is opt-in: the deterministic columns make reruns byte-identical,
    which a wall-clock column would break. Timings always live in the JSON
    summary written next to the CSV by the CLI.
    """
    lines = [SWEEP_CSV_HEADER]
    for r in records:
        wall = repr(r.wall_time_s) if include_timing else ""
        lines.append(f"{r.depth},{r.seed},{r.final_loss!r},{r.metric!r},{wall}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
