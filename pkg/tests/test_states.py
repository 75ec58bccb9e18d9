import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bn2o.core.network import Bn2oNetwork, Evidence, codes_to_bits
from bn2o.core.states import (
    StateTable,
    check_state_cap,
    iter_code_blocks,
    state_conditionals,
    state_priors,
    table_posteriors,
)
from bn2o.errors import ImpossibleEvidenceError, InfeasibleComputationError
from strategies import evidence_for, networks


def _masks(evidence_list, n_findings):
    pos = np.zeros((len(evidence_list), n_findings), dtype=bool)
    neg = np.zeros_like(pos)
    for r, ev in enumerate(evidence_list):
        pos[r, ev.sorted_positive()] = True
        neg[r, ev.sorted_negative()] = True
    return pos, neg


def test_state_priors_sum_to_one(make_net):
    net = make_net(6, 2, seed=1)
    codes = np.arange(64)
    assert state_priors(net, codes).sum() == pytest.approx(1.0, abs=1e-14)


def test_subset_tables_agree_bit_for_bit(make_net):
    net = make_net(5, 4, seed=6)
    full = StateTable.full(net)
    codes = np.array([3, 17, 30])
    part = StateTable.for_states(net, codes)
    np.testing.assert_array_equal(part.prior, full.prior[codes])
    np.testing.assert_array_equal(part.cond, full.cond[codes])
    np.testing.assert_array_equal(part.readout, codes_to_bits(codes, 5))


def test_state_conditionals_closed_form(tiny_net):
    np.testing.assert_allclose(state_conditionals(tiny_net, np.array([0, 1])), [[0.05], [0.81]])


def test_code_blocks_cover_everything():
    blocks = list(iter_code_blocks(5, block_bits=3))
    assert [b.size for b in blocks] == [8, 8, 8, 8]
    np.testing.assert_array_equal(np.concatenate(blocks), np.arange(32))


def test_state_cap():
    check_state_cap(10, cap=10)
    with pytest.raises(InfeasibleComputationError):
        check_state_cap(11, cap=10)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_batch_matches_direct_products(data):
    net = data.draw(networks(max_diseases=5, max_findings=5))
    evidence = data.draw(st.lists(evidence_for(net.n_findings), min_size=1, max_size=6))
    table = StateTable.full(net)
    pos, neg = _masks(evidence, net.n_findings)
    post, prob, ok = table.batch(pos, neg)
    for r, ev in enumerate(evidence):
        total, numer = table.accumulate(ev)
        assert ok[r] == (total > 0)
        if ok[r]:
            np.testing.assert_allclose(post[r], numer / total, rtol=0, atol=1e-12)
            assert prob[r] == pytest.approx(total, rel=1e-9)


def test_batch_marks_impossible_rows():
    # finding 0 cannot fire, finding 1 always fires
    net = Bn2oNetwork(priors=[0.2, 0.6], leaks=[0.0, 1.0], coeffs=[[0.0, 0.0], [0.3, 0.3]])
    table = StateTable.full(net)
    pos = np.array([[True, False], [False, True], [False, False]])
    neg = np.array([[False, False], [False, False], [False, True]])
    post, prob, ok = table.batch(pos, neg)
    assert ok.tolist() == [False, True, False]
    np.testing.assert_array_equal(post[0], [0.0, 0.0])
    np.testing.assert_allclose(post[1], net.priors, atol=1e-15)
    assert prob[2] == 0.0
    with pytest.raises(ImpossibleEvidenceError):
        table_posteriors(table, Evidence.of([0]), "test table")


def test_log_weights_follow_the_direct_weights(make_net):
    table = StateTable.full(make_net(4, 4, seed=6))
    ev = Evidence.of([0, 2], [3])
    np.testing.assert_allclose(np.exp(table.log_weights(ev)), table.weights(ev), rtol=1e-12, atol=0)

    dead = StateTable.full(Bn2oNetwork(priors=[0.2, 0.6], leaks=[0.0, 1.0], coeffs=[[0.0, 0.0], [0.3, 0.3]]))
    assert np.all(np.isneginf(dead.log_weights(Evidence.of([0]))))
    assert np.all(np.isneginf(dead.log_weights(Evidence.of(negative=[1]))))


def test_batch_handles_tiny_weights_without_underflow():
    # 40 unlikely positive findings: direct products of the weights fall into subnormals
    n = 40
    net = Bn2oNetwork(priors=[0.5, 0.5], leaks=np.full(n, 1e-8), coeffs=np.full((n, 2), 1e-8))
    table = StateTable.full(net)
    post, _, ok = table.batch(np.ones((1, n), dtype=bool), np.zeros((1, n), dtype=bool))
    assert ok[0]
    assert np.all(np.isfinite(post))
    assert post[0, 0] == pytest.approx(post[0, 1])
