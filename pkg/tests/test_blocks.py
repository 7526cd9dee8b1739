"""Block partitions: parameter selection, greedy construction, verification."""
import math

import numpy as np
import pytest

from asipkit.blocks import (
    VarianceStarvedError,
    build_blocks,
    compute_q,
    covariance_inequality_check,
    plan_partition,
    q_of_amplitude,
    select_amplitude,
    select_separation,
    tail_statistics,
    verify_partition,
)
from asipkit.mixing import Envelope

ENV_UNIT = Envelope(c=1.0, delta=0.5, degenerate=False)
ENV_IID = Envelope(c=0.0, delta=0.5, degenerate=True)


def test_select_separation():
    r, tail = select_separation(ENV_UNIT, 4, 8.0)
    assert r == 17
    assert tail < 1.0 / (32 * 8.0)
    assert select_separation(ENV_IID, 4, 8.0)[0] == 1
    r_fast, _ = select_separation(Envelope(c=1.0, delta=0.25, degenerate=False), 4, 8.0)
    assert r_fast < 17


def test_compute_q_closed_form():
    # unit envelope, r=2, p=4, L=1: Q0 = 2*8*(1+2)(1+1) * sum 2^(-1.5 k)
    q0, qa = compute_q(9.0, 2, 4, 1.0, ENV_UNIT, 8.0)
    geo = 2**-1.5 / (1 - 2**-1.5)
    assert abs(q0 - 96 * geo) < 1e-9
    assert abs(qa - q_of_amplitude(9.0, q0)) < 1e-15
    assert abs(q_of_amplitude(9.0, 1.0) - (1.0 + 2 * math.sqrt(27.0))) < 1e-12
    # smaller exponent keeps more of each alpha power, so Q0 grows
    q0s, _ = compute_q(9.0, 2, 4, 1.0, ENV_UNIT, 8.0, exponent="1-2/p")
    assert q0s > q0


def test_select_amplitude_closed_form():
    a, cert = select_amplitude(0.0)
    assert a == 1.0 and cert == 0.0
    a1, cert1 = select_amplitude(1.0)
    assert abs(a1 - (4 * math.sqrt(3) + math.sqrt(53)) ** 2) < 1e-6
    assert cert1 >= 0.0
    assert select_amplitude(4.0)[0] > a1


def test_build_blocks_iid(iid2):
    part = build_blocks(iid2, 9.0, 2, 200)
    assert part.blocks[0] == (1, 9) and part.blocks[1] == (12, 20)
    assert part.i_blocks[0] == (1, 11)
    assert part.k_of(11) == 1 and part.k_of(20) == 1 and part.k_of(22) == 2
    ka = part.k_array(30)
    assert ka[10] == 1 and ka[29] == part.k_of(30)
    assert np.allclose(part.norms, 3.0)
    assert np.allclose(part.theta_var(), 11.0)


def test_build_blocks_sym(sym):
    part = build_blocks(sym, 9.0, 2, 200)
    assert part.blocks[0] == (1, 5)
    assert abs(part.norms[0] ** 2 - 11.125) < 1e-12


def test_variance_starved(zero):
    with pytest.raises(VarianceStarvedError) as ei:
        build_blocks(zero, 9.0, 2, 50)
    assert ei.value.index == 50
    assert "index 50" in str(ei.value)


def test_verify_partition_iid_oracles(iid2):
    part = build_blocks(iid2, 9.0, 2, 200)
    ver = verify_partition(iid2, part, horizon=200)
    assert abs(ver.a1 - math.sqrt(11)) < 1e-12
    assert abs(ver.a2 - math.sqrt(11)) < 1e-12
    assert abs(ver.c - math.sqrt(11)) < 1e-12
    assert abs(ver.r1 - 11.0) < 1e-12 and abs(ver.r2 - 21.0) < 1e-12
    assert abs(ver.sandwich_min - 1.0) < 1e-12
    assert abs(ver.sandwich_max - 1.0) < 1e-12
    assert ver.sandwich_pass and not ver.sandwich_gated
    # uncertified parameters: the ratio bound is measured but not claimed
    assert ver.ratio_bound is None and ver.ratio_pass is None
    assert abs(ver.ratio_max_dev - 2.0 / 11.0) < 1e-12
    assert ver.structural_ok and ver.norms_ok and ver.coverage_ok


def test_covariance_inequality_oracles(sym, iid2):
    c1 = covariance_inequality_check(sym, [1], [2], p=4)
    assert abs(c1.cov_abs - 0.5) < 1e-12
    assert abs(c1.bound - 8 * 0.125**0.5) < 1e-12
    assert c1.passes and c1.exact
    c2 = covariance_inequality_check(sym, [1], [3], p=4)
    assert abs(c2.cov_abs - 0.25) < 1e-12 and abs(c2.bound - 2.0) < 1e-12
    c0 = covariance_inequality_check(iid2, [(1, 4)], [(6, 8)], p=4)
    assert c0.cov_abs < 1e-14 and c0.passes


def test_tail_statistics(iid2):
    part = build_blocks(iid2, 9.0, 2, 200)
    ts = tail_statistics(iid2, part, p=2)
    # gap of two iid signs followed by one cover point: E(S^2) = 2.5
    for t in ts.norms:
        assert t.exact and abs(t.value - math.sqrt(2.5)) < 1e-12
    assert ts.all_exact and not ts.mc_fallback
    ts4 = tail_statistics(iid2, part, p=4)
    assert abs(ts4.norms[0].value - 8.5**0.25) < 1e-12


def test_plan_partition_sym(sym):
    part, plan = plan_partition(sym, min_blocks=3)
    assert plan.r == 15
    assert abs(plan.q0 - 35.0027622833937) < 1e-3
    assert abs(plan.amplitude - 6999.7) < 5.0
    assert part.count >= 3 and part.r_certified and part.a_certified
    ver = verify_partition(sym, part)
    assert ver.sandwich_gated and ver.sandwich_pass
    assert ver.ratio_hypotheses and ver.ratio_pass
    assert ver.structural_ok
    doc = plan.to_doc()
    assert doc["r"] == 15 and doc["amplitude"] == plan.amplitude


def test_plan_partition_iid(iid2):
    part, plan = plan_partition(iid2, min_blocks=3)
    assert plan.r == 1 and plan.amplitude == 1.0
    assert part.blocks[0] == (1, 1) and part.blocks[1] == (3, 3)
    ver = verify_partition(iid2, part)
    assert ver.sandwich_pass and ver.sandwich_gated
    assert not ver.ratio_hypotheses  # A = 1 never reaches the A > 1 gate
    assert abs(ver.ratio_max_dev - 0.5) < 1e-12


def test_partition_doc_round_trip(iid2):
    part = build_blocks(iid2, 9.0, 2, 200)
    doc = part.to_doc()
    assert doc["amplitude"] == 9.0 and doc["r"] == 2
    assert doc["blocks"][0] == [1, 9]
    assert len(doc["blocks"]) == part.count and doc["cover_end"] == part.cover_end
    assert doc["certified"] is False  # manual A and r carry no certificates
    assert doc["block_l2_norms"] == [3.0] * part.count
