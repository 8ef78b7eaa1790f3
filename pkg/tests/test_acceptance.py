"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the whole suite is also part of the default ``pytest`` run. The
depth-sweep criterion trains 15 models and dominates the runtime.
"""

import json
import time

import numpy as np
import pytest

from hamattn.attention import MultiHeadParams, multi_head, sdp_attention, vanilla_attention
from hamattn.checks import gradcheck_table
from hamattn.cli import main as cli_main
from hamattn.data import gen_task
from hamattn.evaluate import averaged_bleu, bleu2
from hamattn.ham import reduction_report, norm_bound_suite
from hamattn.tensor import l2_norm
from hamattn.train import SWEEP_TOLERANCE, TrainConfig, depth_sweep

from oracle_bleu import bleu2_bruteforce

# pinned protocol for the depth-sweep criterion; every number that the run
# records is determined by these plus the corpus seeds below
SWEEP_ROOT_SEED = 0
SWEEP_BATCH_SIZE = 32
SWEEP_DEPTHS = [1, 2, 5]
SWEEP_RESTARTS = 5
SWEEP_EPOCHS = 200


def _report(criterion: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} ({detail})")


def test_criterion_1_norm_upper_bound_randomized():
    start = time.perf_counter()
    report = norm_bound_suite(
        10_000, seed=0, max_depth=10, dk_range=(2, 16), n_range=(1, 32), entry_bound=3.0
    )
    elapsed = time.perf_counter() - start
    ok = report.upper_violations == 0 and elapsed < 30.0
    _report(
        "1 norm upper bound",
        ok,
        f"{report.upper_violations} violations over {report.levels_checked} level checks, {elapsed:.1f}s",
    )
    assert report.upper_violations == 0
    assert elapsed < 30.0


def test_criterion_2_lower_bound_counterexample_recorded():
    K = np.array([[1.0, -1.0], [0.0, 0.0]])  # columns (1,0) and (-1,0)
    q = np.array([0.0, 1.0])
    out = vanilla_attention(q, K)
    norms = np.linalg.norm(K, axis=0)
    report = norm_bound_suite(1, seed=0).to_dict()
    recorded = report["lower_bound_counterexample"]
    ok = (
        l2_norm(out) == 0.0
        and norms.min() == 1.0
        and recorded["lower_bound_violated"] is True
        and recorded["output_norm"] < recorded["min_key_norm"]
    )
    _report("2 lower bound counterexample", ok, f"output norm {l2_norm(out)} < min key norm 1")
    assert ok


def test_criterion_3_reduction_identities():
    rep = reduction_report(1_000, seed=0, hot=20.0)
    ok = (
        rep["ham_v_onehot_max_err"] < 1e-7
        and rep["ham_s_onehot_max_err"] < 1e-7
        and rep["ham_v_d1_max_err"] <= 1e-12
        and rep["ham_s_d1_max_err"] <= 1e-12
    )
    _report(
        "3 reduction identities",
        ok,
        f"one-hot errs {rep['ham_v_onehot_max_err']:.2e}/{rep['ham_s_onehot_max_err']:.2e}, "
        f"d=1 errs {rep['ham_v_d1_max_err']:.2e}/{rep['ham_s_d1_max_err']:.2e}",
    )
    assert ok


def test_criterion_4_gradient_checks():
    start = time.perf_counter()
    rows = gradcheck_table(scale="tiny", seed=0, instances=100)
    elapsed = time.perf_counter() - start
    failed = [r["name"] for r in rows if not r["passed"]]
    worst = max(rows, key=lambda r: r["max_err"] / r["threshold"])
    ok = not failed and elapsed < 120.0
    _report(
        "4 gradient checks",
        ok,
        f"{len(rows)} ops x 100 instances, worst {worst['name']} at {worst['max_err']:.2e}, {elapsed:.0f}s",
    )
    assert not failed, f"gradient check failed for {failed}"
    assert elapsed < 120.0


def test_criterion_5_depth_sweep_monotone_within_tolerance():
    """Best-over-restart losses should be non-increasing in depth within 5%.

    This is a stochastic experiment asserted faithfully, not tuned to pass:
    desk-scale calibration across batch sizes 8..128, two clip norms and
    several root seeds never produced the monotone triple, because adam's
    non-decaying steps give deeper models a higher final-loss floor while
    min-over-restarts occasionally picks a fully converged depth-1 run. See
    README "Depth-sweep behavior at desk scale" for the analysis; the exact
    reduction identities (criterion 3) and the frozen-one-hot training
    equivalence test carry the representational claim this experiment
    approximates.
    """
    start = time.perf_counter()
    train_corpus = gen_task("copy", 512, 6, 8, seed=SWEEP_ROOT_SEED)
    eval_corpus = gen_task("copy", 64, 6, 8, seed=SWEEP_ROOT_SEED + 1)
    cfg = TrainConfig(
        learning_rate=0.01,
        optimizer="adam",
        epochs=SWEEP_EPOCHS,
        batch_size=SWEEP_BATCH_SIZE,
        seed=SWEEP_ROOT_SEED,
        restarts=SWEEP_RESTARTS,
    )
    records, summary = depth_sweep(
        train_corpus, eval_corpus, SWEEP_DEPTHS, cfg, hidden=16, bidirectional=True
    )
    elapsed = time.perf_counter() - start
    best = summary["best_loss"]
    ratios = [
        best[str(b)] / best[str(a)] for a, b in zip(SWEEP_DEPTHS, SWEEP_DEPTHS[1:])
    ]
    ok = summary["monotone_within_tolerance"] and elapsed < 900.0
    _report(
        "5 depth sweep trend",
        ok,
        "best losses "
        + ", ".join(f"d={d}: {best[str(d)]:.5f}" for d in SWEEP_DEPTHS)
        + f"; transition ratios {ratios[0]:.3f}, {ratios[1]:.3f} "
        f"(allowed <= {1 + SWEEP_TOLERANCE}); {elapsed:.0f}s",
    )
    assert elapsed < 900.0
    assert summary["monotone_within_tolerance"], (
        f"best-over-restart losses not monotone within {SWEEP_TOLERANCE:.0%}: {best}"
    )


def test_criterion_6_bleu_oracle_equivalence():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1_000):
        cand = [int(t) for t in rng.integers(0, 10, rng.integers(1, 15))]
        ref = [int(t) for t in rng.integers(0, 10, rng.integers(1, 15))]
        worst = max(worst, abs(bleu2(cand, ref) - bleu2_bruteforce(cand, ref)))
    lines = [[3, 4, 5], [6, 7], [8, 9, 3, 4], [5]]
    perfect = averaged_bleu(lines, lines)
    ok = worst <= 1e-12 and perfect == 1.0
    _report("6 bleu oracle equivalence", ok, f"max |diff| {worst:.2e}, perfect group {perfect}")
    assert worst <= 1e-12
    assert perfect == 1.0


def test_criterion_7_multi_head_degeneracy():
    rng = np.random.default_rng(0)
    worst_mh = worst_sdp = 0.0
    for _ in range(200):
        d = int(rng.integers(1, 8))
        m = int(rng.integers(1, 6))
        n = int(rng.integers(1, 8))
        Q = rng.uniform(-3, 3, (m, d))
        K = rng.uniform(-3, 3, (n, d))
        V = rng.uniform(-3, 3, (n, d))
        mh = multi_head(Q, K, V, MultiHeadParams.identity(d, h=1))
        worst_mh = max(worst_mh, float(np.max(np.abs(mh - sdp_attention(Q, K, V)))))
        q = rng.uniform(-3, 3, d)
        single = sdp_attention(q.reshape(1, -1), K, K)[0]
        worst_sdp = max(worst_sdp, float(np.max(np.abs(single - vanilla_attention(q, K.T)))))
    ok = worst_mh <= 1e-12 and worst_sdp <= 1e-12
    _report("7 multi-head degeneracy", ok, f"h=1 identity err {worst_mh:.2e}, m=1 err {worst_sdp:.2e}")
    assert worst_mh <= 1e-12
    assert worst_sdp <= 1e-12


def test_criterion_8_sweep_determinism(tmp_path):
    config = {
        "pairs": 24,
        "seq_len": 4,
        "payload_vocab": 6,
        "eval_pairs": 8,
        "depths": [1, 2],
        "restarts": 2,
        "epochs": 3,
        "batch_size": 8,
        "seed": 9,
        "hidden": 8,
    }
    cfg_path = tmp_path / "sweep.json"
    cfg_path.write_text(json.dumps(config))
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    code_a = cli_main(["sweep", "--config", str(cfg_path), "--out", str(out_a)])
    code_b = cli_main(["sweep", "--config", str(cfg_path), "--out", str(out_b)])
    csv_a = (out_a / "sweep.csv").read_bytes()
    csv_b = (out_b / "sweep.csv").read_bytes()
    ok = csv_a == csv_b and code_a == code_b
    _report("8 sweep determinism", ok, f"{len(csv_a)} byte CSVs identical: {csv_a == csv_b}")
    assert csv_a == csv_b
