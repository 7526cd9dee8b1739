"""Seeded path sampling, Gaussian surrogate, and distributional diagnostics."""
import math
from math import comb

import numpy as np
import pytest
from scipy.special import ndtr

from asipkit.blocks import build_blocks, plan_partition
from asipkit.chain import ChainConfigError
from asipkit.simulate import (
    clt_diagnostic,
    gaussian_surrogate,
    lil_diagnostic,
    rate_scaling_diagnostic,
    sample_paths,
    variance_matching_diagnostic,
    w1_to_gaussian,
    w1_two_sample,
)

# exact W1 between the 9-step sign-walk law and N(0, 9); frozen from an
# independent trapezoid integration of |F - Phi| (agreement 5e-8)
W1_S9 = 0.5045831549423662


def test_determinism_across_runs_and_workers(sym, monkeypatch):
    monkeypatch.setenv("ASIPKIT_WORKERS", "1")
    b1 = sample_paths(sym, 50, 3000, 42, [10, 50])
    b2 = sample_paths(sym, 50, 3000, 42, [10, 50])
    assert np.array_equal(b1.sums, b2.sums)
    monkeypatch.setenv("ASIPKIT_WORKERS", "4")
    b4 = sample_paths(sym, 50, 3000, 42, [10, 50])
    assert np.array_equal(b1.sums, b4.sums)


def test_sample_moments_match_exact(iid2, sym):
    bi = sample_paths(iid2, 1, 100_000, 7, [1])
    assert abs(float(bi.sums[:, 0, 0].mean())) <= 3.0 / math.sqrt(100_000)
    bs = sample_paths(sym, 2, 20_000, 11, [2])
    v = float(bs.sums[:, 0, 0].var(ddof=1))
    se = math.sqrt(2.0 / 20_000) * 3.0
    assert abs(v - 3.0) <= 4 * se + 0.05


def test_gaussian_surrogate_matches_block_covariances(iid2):
    part = build_blocks(iid2, 9.0, 2, 200)
    sur = gaussian_surrogate(part, 40_000, 5)
    assert sur.clipped == 0
    assert abs(part.theta_var()[0] - 11.0) < 1e-12  # distributional parameter
    assert abs(float(sur.cum_sums[:, 0, 0].var(ddof=1)) - 11.0) < 0.5
    assert abs(float(sur.cum_sums[:, 2, 0].var(ddof=1)) - 33.0) < 1.5


def test_ks_oracle_at_n1(iid2):
    batch = sample_paths(iid2, 1, 100_000, 7, [1])
    ks = clt_diagnostic(batch, iid2)
    # S_1 = +-1 against N(0,1): sup gap is at the atom, 0.5 - Phi(-1)
    assert abs(ks.points[0].ks - (0.5 - ndtr(-1.0))) < 0.01


def test_ks_skips_zero_variance(zero):
    batch = sample_paths(zero, 5, 100, 3, [5])
    ks = clt_diagnostic(batch, zero)
    assert ks.points[0].skipped and ks.points[0].reason
    assert ks.max_ks is None


def test_w1_plumbing():
    rng = np.random.default_rng(1)
    g = rng.normal(0.0, 2.0, 200_000)
    assert w1_to_gaussian(g, 2.0) < 0.02
    assert w1_two_sample(g, g) == 0.0
    assert abs(w1_two_sample(g, g + 0.5) - 0.5) < 1e-9


def test_w1_exact_lattice_law():
    # the full 9-step sign-walk law as a weighted sample: 2^9 atoms
    vals = np.repeat(np.arange(-9, 10, 2.0), [comb(9, k) for k in range(10)])
    assert vals.shape[0] == 512
    assert abs(w1_to_gaussian(vals, 3.0) - W1_S9) < 1e-7


def test_variance_matching_iid_zero_gap(iid2):
    part, _ = plan_partition(iid2, min_blocks=4)
    vm = variance_matching_diagnostic(iid2, part)
    assert all(pt.gap == 0.0 for pt in vm.points)
    assert vm.c_max == 0.0


def test_variance_matching_sym_cross_covariances(sym):
    # adjacent I-covers contribute exactly 4 in total cross covariance each
    part, _ = plan_partition(sym, min_blocks=4)
    vm = variance_matching_diagnostic(sym, part)
    for k, pt in enumerate(vm.points, start=1):
        assert abs(pt.gap - 4.0 * (k - 1)) < 1e-6
    assert vm.c_max < math.inf
    rows = vm.to_rows()
    assert set(rows[0]) == {"k", "n", "gap", "normalizer", "ratio", "direction_id"}


def test_rate_scaling_diagnostic(iid2):
    part = build_blocks(iid2, 9.0, 2, 200)
    batch = sample_paths(iid2, part.cover_end, 20_000, 42, [], partition=part)
    rc = rate_scaling_diagnostic(batch, iid2, part)
    assert rc.points[0].sigma == math.sqrt(11.0)
    assert all(np.isfinite(pt.w1) and pt.stderr >= 0 for pt in rc.points)
    assert rc.bounded
    # restricting to chosen block indices
    rc2 = rate_scaling_diagnostic(batch, iid2, part, k_values=[1, part.count])
    assert len(rc2.points) == 2
    with pytest.raises(ChainConfigError):
        rate_scaling_diagnostic(batch, iid2, part, k_values=[0])
    # two-sample variant against surrogate draws
    sur = gaussian_surrogate(part, 20_000, 9)
    rc3 = rate_scaling_diagnostic(batch, iid2, part, surrogate=sur)
    assert all(np.isfinite(pt.w1) for pt in rc3.points)


def test_lil_diagnostic(iid2, zero):
    lil = lil_diagnostic(iid2, 20_000, 200, 13)
    assert lil.first_n is not None
    assert 0.5 < lil.median < 1.5
    assert lil.n_included > 0
    lz = lil_diagnostic(zero, 100, 50, 3)
    assert lz.n_included == 0 and lz.quantiles == {}


def test_batch_projection_shapes(sym):
    batch = sample_paths(sym, 20, 500, 3, [5, 20])
    assert batch.sums.shape == (500, 2, 1)
    proj = batch.projected(np.array([1.0]))
    assert proj.shape == (500, 2)
    assert np.array_equal(proj, batch.sums[:, :, 0])
