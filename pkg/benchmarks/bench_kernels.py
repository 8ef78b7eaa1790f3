#!/usr/bin/env python3
"""Benchmark the numpy kernels against their numba twins.

Times every kernel in hamattn.kernels.IMPLEMENTATIONS on shapes spanning the
training regime (small batch x hidden blocks) up to wider matrices, and
optionally a full training step under each backend via subprocesses.

Usage:
    python benchmarks/bench_kernels.py [--repeats 2000] [--train-step]
"""

import argparse
import subprocess
import sys
import time

import numpy as np

from hamattn import kernels

SHAPES = [(8, 8), (32, 16), (64, 64), (16, 256), (256, 256)]


def best_of(fn, args, repeats, trials=5):
    best = float("inf")
    for _ in range(trials):
        start = time.perf_counter()
        for _ in range(repeats):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / repeats)
    return best


def make_args(name, shape, rng):
    x = rng.uniform(-5.0, 5.0, size=shape)
    if name == "softmax_rows":
        return (x,)
    if name == "softmax_rows_vjp":
        return (kernels.softmax_rows(x), rng.uniform(-1, 1, size=shape))
    if name == "sigmoid":
        return (x,)
    if name == "sigmoid_vjp":
        return (kernels.sigmoid(x), rng.uniform(-1, 1, size=shape))
    if name == "tanh":
        return (x,)
    if name == "tanh_vjp":
        return (kernels.tanh(x), rng.uniform(-1, 1, size=shape))
    if name == "cross_entropy_rows":
        return (x, rng.integers(0, shape[1], size=shape[0]))
    raise ValueError(name)


def bench_kernels(repeats):
    if "numba" not in kernels.IMPLEMENTATIONS:
        print("numba unavailable; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20} {'shape':<12} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for name in kernels.IMPLEMENTATIONS["numpy"]:
        for shape in SHAPES:
            args = make_args(name, shape, rng)
            f_np = kernels.IMPLEMENTATIONS["numpy"][name]
            f_nb = kernels.IMPLEMENTATIONS["numba"][name]
            f_nb(*args)  # compile outside the timer
            t_np = best_of(f_np, args, repeats)
            t_nb = best_of(f_nb, args, repeats)
            print(
                f"{name:<20} {str(shape):<12} {t_np * 1e6:>10.2f} {t_nb * 1e6:>10.2f}"
                f" {t_np / t_nb:>7.2f}x"
            )


TRAIN_SNIPPET = """
import time
import numpy as np
from hamattn.data import gen_task
from hamattn.model import ModelConfig, Seq2SeqModel
from hamattn.train import TrainConfig, train
from hamattn import kernels

corpus = gen_task("copy", 256, 6, 8, seed=0)
cfg = TrainConfig(epochs=3, batch_size=32, seed=1, ham_depth=3)
model = Seq2SeqModel(ModelConfig(corpus.vocab_size, 16, 3, True), np.random.default_rng(1))
train(model, corpus, cfg)  # warm up compilation and caches
model = Seq2SeqModel(ModelConfig(corpus.vocab_size, 16, 3, True), np.random.default_rng(1))
start = time.perf_counter()
train(model, corpus, cfg)
print(f"{kernels.BACKEND}: {(time.perf_counter() - start) / 3:.3f}s per epoch")
"""


def bench_train_step():
    for backend in ("numpy", "numba"):
        proc = subprocess.run(
            [sys.executable, "-c", TRAIN_SNIPPET],
            capture_output=True,
            text=True,
            env={"HAMATTN_KERNELS": backend, "PATH": "/usr/bin:/bin:/usr/local/bin"},
        )
        out = proc.stdout.strip() or proc.stderr.strip()
        print(f"train-step [{backend}]: {out}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000)
    parser.add_argument("--train-step", action="store_true",
                        help="also time whole training epochs per backend")
    args = parser.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    bench_kernels(args.repeats)
    if args.train_step:
        bench_train_step()


if __name__ == "__main__":
    main()
