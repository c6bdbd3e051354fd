import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chancert.certifier import VERDICT_NEAR, VERDICT_NOT, VERDICT_OPTIMAL
from chancert.choi import BipartiteState
from chancert.experiments import (
    CLASS_CANDIDATE,
    CLASS_SUPPORTS,
    CLASS_UNDECIDED,
    GAP_TOL,
    classify,
    conjecture_witness,
    record_to_dict,
    run_conjecture,
    run_trial,
    summarize,
)
from chancert.linalg import HermOp, spectral_norm
from chancert.objectives import eval_map_apply
from chancert.serialize import canonical_json
from chancert.solvers import SolverConfig, random_channel_choi, random_density

seeds = st.integers(min_value=0, max_value=2**31 - 1)

TINY = SolverConfig(max_iters=2, stall_window=1)


# ------------------------------------------------------------------ classify


def test_classify_truth_table():
    verdicts = (VERDICT_OPTIMAL, VERDICT_NEAR, VERDICT_NOT)
    for near, verdict, hard, kdim in itertools.product(
        (False, True), verdicts, (False, True), (0, 3)
    ):
        cls, bug = classify(near, verdict, hard, kdim)
        if not near:
            assert cls == CLASS_UNDECIDED
        elif verdict == VERDICT_OPTIMAL:
            assert cls == CLASS_SUPPORTS
        elif hard and kdim > 0:
            assert cls == CLASS_CANDIDATE
        else:
            assert cls == CLASS_UNDECIDED
        # a full-rank witness is unique: failure there is a bug, not evidence
        assert bug == (near and hard and kdim == 0)
        if kdim == 0:
            assert cls != CLASS_CANDIDATE


# ------------------------------------------------------------------- witness


@given(seeds)
@settings(max_examples=30)
def test_witness_is_unit_sign_operator_when_no_zeros(seed):
    rng = np.random.default_rng(seed)
    rho = BipartiteState(HermOp(random_density(4, rng)), 2, 2)
    sigma = BipartiteState(HermOp(random_density(4, rng)), 2, 2)
    j = random_channel_choi(2, 2, rng)
    y, w, v, thr = conjecture_witness(rho, sigma, j)
    assert thr > 0.0
    if np.min(np.abs(w)) <= thr:
        return  # degenerate draw; covered by the zero test below
    # all signs are +-1: Y is a unit-norm involution and attains the 1-norm
    assert np.allclose(y.mat @ y.mat, np.eye(4), atol=1e-12)
    assert spectral_norm(y.mat) == pytest.approx(1.0, abs=1e-12)
    diff = sigma.mat - eval_map_apply(rho, j)
    attained = float(np.real(np.vdot(y.mat, diff)))
    nuclear = float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2.0))))
    assert attained == pytest.approx(nuclear, abs=1e-12)


def test_witness_vanishes_on_reached_target():
    rng = np.random.default_rng(0)
    rho = BipartiteState(HermOp(random_density(4, rng)), 2, 2)
    j = random_channel_choi(2, 2, rng)
    sigma = BipartiteState(HermOp(eval_map_apply(rho, j)), 2, 2)
    y, w, _, thr = conjecture_witness(rho, sigma, j)
    assert np.max(np.abs(w)) <= thr  # every eigenvalue is a problem-scale zero
    assert np.max(np.abs(y.mat)) == 0.0


# -------------------------------------------------------------------- trials


def test_reachable_trial_supports():
    rec = run_trial(11, (2, 2, 2), reachable=True)
    assert rec.classification == CLASS_SUPPORTS
    assert rec.verdict == VERDICT_OPTIMAL
    assert rec.converged
    assert rec.zero_eigenvalue and rec.kernel_dim == 4
    assert rec.gap <= GAP_TOL * rec.scale
    assert not rec.full_rank_hard_fail


def test_generic_trial_is_undecided_not_candidate():
    rec = run_trial(11, (2, 2, 2), reachable=False)
    assert rec.classification == CLASS_UNDECIDED
    assert not rec.full_rank_hard_fail
    assert rec.gap > GAP_TOL * rec.scale


def test_unconverged_incumbent_is_gated_to_undecided():
    # with a 2-iteration budget nothing is near-optimal, so nothing can be
    # claimed in either direction
    for t in range(4):
        rec = run_trial(100 + t, (2, 2, 2), reachable=(t % 2 == 0), cfg=TINY)
        assert rec.classification == CLASS_UNDECIDED
        assert not rec.converged


def test_run_conjecture_alternates_and_tallies():
    records, summary = run_conjecture((2, 2, 2), trials=4, seed=2, cfg=TINY)
    assert [r.reachable for r in records] == [True, False, True, False]
    assert len({r.seed for r in records}) == 4
    assert summary["trials"] == 4
    total = summary["supports"] + summary["undecided"] + summary["counterexample_candidates"]
    assert total == 4
    assert summary == summarize(records)


def test_run_conjecture_is_deterministic():
    a, _ = run_conjecture((2, 2, 2), trials=2, seed=5, cfg=TINY)
    b, _ = run_conjecture((2, 2, 2), trials=2, seed=5, cfg=TINY)
    assert [record_to_dict(x) for x in a] == [record_to_dict(y) for y in b]


def test_records_serialize_canonically():
    records, _ = run_conjecture((2, 2, 2), trials=2, seed=1, cfg=TINY)
    for rec in records:
        doc = record_to_dict(rec)
        assert isinstance(doc["dims"], list)
        text = canonical_json(doc)
        assert canonical_json(json.loads(text)) == text
