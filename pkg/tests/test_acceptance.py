"""Acceptance gates: eight end-to-end criteria over the built-in battery.

One test per criterion; the -v line of each test is the pass/fail line.
Criteria 5 and 6 assert thresholds that the exact laws of bounded lattice
chains do not actually meet; those tests measure honestly and carry the
measured values in their failure messages rather than loosening the gate.
"""
import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from asipkit.battery import battery
from asipkit.blocks import (
    build_blocks,
    covariance_inequality_check,
    plan_partition,
    verify_partition,
)
from asipkit.mixing import condition_h_profile, mixing_report
from asipkit.moments import engine_for
from asipkit.simulate import (
    clt_diagnostic,
    sample_paths,
    variance_matching_diagnostic,
)

BUDGET_C1 = 300.0  # seconds for the exact-inequality suite
BUDGET_C4 = 600.0
BUDGET_C5 = 300.0


@pytest.fixture(scope="module")
def built_battery():
    """Plan and verify one partition per battery chain; shared by criteria."""
    t0 = time.time()
    rows = {}
    for e in battery():
        ch = e.build()
        part, plan = plan_partition(ch)
        ver = verify_partition(ch, part)
        rows[e.name] = (e, ch, part, plan, ver)
    return rows, time.time() - t0


def test_criterion_1_exact_inequalities(built_battery):
    rows, build_elapsed = built_battery
    t0 = time.time()
    assert len(rows) >= 20
    violations = []
    for name, (e, ch, part, plan, ver) in rows.items():
        # covariance inequality: |Cov| <= 8 alpha(r)^(1-2/p) |X|_p |Y|_p,
        # exact L4 norms and exact alpha, on two separated window pairs
        for w1, w2 in ([(1, 12)], [(18, 29)]), ([(2, 5)], [(9, 16)]):
            civ = covariance_inequality_check(ch, w1, w2, p=4)
            if not (civ.exact and civ.passes):
                violations.append((name, "covariance", w1, w2, civ.cov_abs, civ.bound))
        # variance sandwich [1/2, 3/2] on every certified-r partition
        if ver.sandwich_gated and not ver.sandwich_pass:
            violations.append((name, "sandwich", ver.sandwich_min, ver.sandwich_max))
        # block/cover variance ratio bound 2 Q(A)/A whenever its hypotheses hold
        if ver.ratio_hypotheses and ver.ratio_pass is False:
            violations.append((name, "ratio", ver.ratio_max_dev, ver.ratio_bound))
    elapsed = build_elapsed + (time.time() - t0)
    print(f"criterion 1: {len(rows)} chains, {len(violations)} violations, {elapsed:.1f}s")
    assert violations == []
    assert elapsed < BUDGET_C1, f"exact-inequality suite took {elapsed:.1f}s"


def test_criterion_2_structural_postconditions(built_battery):
    rows, _ = built_battery
    bad = []
    for name, (e, ch, part, plan, ver) in rows.items():
        sqa = math.sqrt(part.amplitude)
        if not all(sqa - 1e-9 <= v <= sqa + ch.L + 1e-9 for v in part.norms):
            bad.append((name, "norm-bracket"))
        if any(a2 - b1 != part.r + 1 for (_, b1), (a2, _) in zip(part.blocks, part.blocks[1:])):
            bad.append((name, "separation"))
        ends = [ib for _, ib in part.i_blocks]
        starts = [ia for ia, _ in part.i_blocks]
        if starts[0] != 1 or any(s != e0 + 1 for e0, s in zip(ends, starts[1:])):
            bad.append((name, "cover-tiling"))
        if part.k_of(part.cover_end) != part.count:
            bad.append((name, "k_n"))
        if not (ver.structural_ok and ver.norms_ok and ver.coverage_ok):
            bad.append((name, "verifier"))
    print(f"criterion 2: {len(rows)} partitions, {len(bad)} violations")
    assert bad == []


def test_criterion_3_mixing_identities():
    t0 = time.time()
    entries = battery()
    for e in entries:
        rep = mixing_report(e.build())
        rep.check_identities()  # alpha <= phi, monotone decay, rho <= sqrt(pi)

    # independent hand-enumeration oracle for the symmetric reference chain:
    # joint of (state 1, state 1+k) from plain matrix arithmetic, events over
    # the single coordinates
    kern = np.array([[0.75, 0.25], [0.25, 0.75]])
    init = np.array([0.5, 0.5])
    joint = np.diag(init) @ np.linalg.matrix_power(kern, 1)
    events = [np.array(m) for m in ([0, 0], [1, 0], [0, 1], [1, 1])]
    alpha1 = max(
        abs(a @ joint @ b - (a @ init) * (b @ init))
        for a in events
        for b in events
    )
    phi1 = max(
        abs((a @ joint @ b) / (a @ init) - b @ init)
        for a in events
        if a @ init > 0
        for b in events
    )
    assert alpha1 == 0.125 and phi1 == 0.25

    from asipkit.battery import entry

    sym_rep = mixing_report(entry("sym2_p05").build())  # the reference chain
    assert sym_rep.alpha[0] == alpha1
    assert sym_rep.phi[0] == phi1
    assert sym_rep.delta_pi == 0.5
    assert abs(sym_rep.rho_sup - 0.5) < 1e-12
    print(f"criterion 3: {len(entries)} chains, sym oracles exact, {time.time()-t0:.1f}s")


def test_criterion_4_oracle_equivalence():
    t0 = time.time()
    checkpoints = [1, 2, 50, 51, 210, 211, 500]
    mean_pairs = [(None, 1), (1, 2), (50, 51), (210, 211)]
    var_ns = [1, 50, 211, 500]
    n_paths = 10_000
    total = failed = 0
    for i, e in enumerate(battery()):
        ch = e.build()
        eng = engine_for(ch)
        batch = sample_paths(ch, 500, n_paths, 9000 + i, checkpoints)
        idx = {n: j for j, n in enumerate(checkpoints)}
        u = np.zeros(ch.d)
        u[0] = 1.0
        # sampled sums are exactly centered, so the MC mean of each increment
        # estimates 0 and the MC mean of squares estimates Var directly
        for prev, cur in mean_pairs:
            inc = batch.sums[:, idx[cur], :]
            if prev is not None:
                inc = inc - batch.sums[:, idx[prev], :]
            mc = inc.mean(axis=0)
            se = inc.std(axis=0, ddof=1) / math.sqrt(n_paths)
            for c in range(ch.d):
                total += 1
                if abs(mc[c]) > 4.0 * se[c] + 1e-12:
                    failed += 1
        for n in var_ns:
            sq = (batch.sums[:, idx[n], :] @ u) ** 2
            exact_v = eng.var_window(1, n, u)
            mc_v = float(sq.mean())
            se_v = float(sq.std(ddof=1)) / math.sqrt(n_paths)
            total += 1
            if abs(mc_v - exact_v) > 4.0 * se_v + 1e-12:
                failed += 1
    elapsed = time.time() - t0
    rate = failed / total
    print(f"criterion 4: {total} checkpoints, {failed} beyond 4se "
          f"({100*rate:.2f}%), {elapsed:.1f}s")
    assert rate <= 0.01, f"failure rate {100*rate:.2f}% over {total} checks"
    assert elapsed < BUDGET_C4


def test_criterion_5_clt_ks_threshold(sym):
    t0 = time.time()
    eng = engine_for(sym)
    n_star = next(n for n in range(1, 400) if eng.s_value(n) >= 200.0)
    batch = sample_paths(sym, n_star, 100_000, 42, [n_star])
    ks = clt_diagnostic(batch, sym).points[0].ks
    # exact distributional floor of the lattice law at the same n, for context
    vals, w, _ = eng.window_distribution(1, n_star, np.array([1.0]))
    from scipy.special import ndtr

    sigma = math.sqrt(eng.s_value(n_star))
    cdf = np.cumsum(w)
    phi = ndtr(vals / sigma)
    floor = max(
        float(np.abs(cdf - phi).max()),
        float(np.abs(np.concatenate(([0.0], cdf[:-1])) - phi).max()),
    )
    elapsed = time.time() - t0
    print(f"criterion 5: n*={n_star}, measured KS={ks:.5f}, "
          f"exact lattice floor={floor:.5f}, {elapsed:.1f}s")
    assert elapsed < BUDGET_C5
    assert ks <= 0.02, (
        f"KS at n*={n_star} is {ks:.5f}; the exact law of the +-1 lattice sum "
        f"sits {floor:.5f} from the Gaussian in sup norm at this n, so the "
        f"0.02 threshold is unreachable at the first s_n >= 200 checkpoint"
    )


def test_criterion_6_variance_matching_stability(built_battery):
    rows, _ = built_battery
    t0 = time.time()
    report = []
    worst = []
    for name, (e, ch, part, plan, ver) in rows.items():
        if "iid" in e.tags:
            continue  # independent blocks have identically zero gap
        eng = engine_for(ch)
        u0 = np.zeros(ch.d)
        u0[0] = 1.0
        # a 32-block partition at the certified separation keeps the doubling
        # comparison affordable on slowly mixing chains; the gap/normalizer
        # trend does not depend on the amplitude scale
        length = max(64, 4 * part.r)
        amp = eng.var_window(1, length, u0)
        p32 = build_blocks(ch, amp, part.r, 34 * (length + part.r) + 2000)
        vm = variance_matching_diagnostic(ch, p32, delta=0.1)
        ratios = np.array([pt.ratio for pt in vm.points])
        run_max = np.maximum.accumulate(ratios)
        changes = []
        for k in (8, 16):
            if 2 * k <= len(run_max) and run_max[k - 1] > 0:
                changes.append((run_max[2 * k - 1] - run_max[k - 1]) / run_max[k - 1])
        assert changes, f"{name}: not enough blocks ({len(run_max)})"
        w = max(changes)
        worst.append((name, w))
        report.append(f"{name}: running max +{100*w:.1f}% per doubling")
    elapsed = time.time() - t0
    print(f"criterion 6: {len(worst)} mixing chains, {elapsed:.1f}s")
    for line in report:
        print("  " + line)
    offenders = [(n, w) for n, w in worst if not w < 0.05]
    assert not offenders, (
        "running max of gap/s^0.6 is not stable under horizon doubling: "
        + "; ".join(f"{n} +{100*w:.1f}%" for n, w in offenders)
        + " -- the boundary cross-covariance sum grows linearly in the block "
        "count while the normalizer grows like (kA)^0.6, so the ratio drifts "
        "upward ~k^0.4 for every genuinely mixing chain"
    )


def test_criterion_7_condition_h_decay():
    t0 = time.time()
    bad = []
    for e in battery():
        prof = condition_h_profile(e.build())
        if "iid" in e.tags:
            if not prof.all_zero:
                bad.append((e.name, "nonzero-gap", max(g for _, g in prof.gaps)))
        else:
            if prof.c_prime is None or not prof.c_prime > 0:
                bad.append((e.name, "no-decay", prof.c_prime))
    print(f"criterion 7: {len(battery())} chains, {len(bad)} violations, "
          f"{time.time()-t0:.1f}s")
    assert bad == []


def test_criterion_8_byte_determinism(chain_files, tmp_path):
    t0 = time.time()

    def run(argv, workers):
        env = dict(os.environ, ASIPKIT_WORKERS=str(workers))
        r = subprocess.run(
            [sys.executable, "-m", "asipkit.cli", *argv],
            capture_output=True, text=True, env=env,
        )
        assert r.returncode == 0, r.stderr[-2000:]

    sim = [
        "simulate", "--chain", chain_files["sym"], "--horizon", "256",
        "--paths", "2000", "--seed", "7", "--amplitude", "40", "--separation", "3",
    ]
    outs = []
    for tag, workers in (("a", 1), ("b", 1), ("c", 4)):
        out = tmp_path / f"sim_{tag}"
        run(sim + ["--out", str(out)], workers)
        outs.append(out)
    names = sorted(os.listdir(outs[0]))
    assert "ks_curve.csv" in names and "simulate_report.json" in names
    for n in names:
        ref = (outs[0] / n).read_bytes()
        assert ref == (outs[1] / n).read_bytes(), f"{n}: differs between runs"
        assert ref == (outs[2] / n).read_bytes(), f"{n}: differs across workers"

    vouts = []
    for tag, workers in (("a", 1), ("b", 4)):
        out = tmp_path / f"ver_{tag}"
        run(["verify", "--out", str(out)], workers)
        vouts.append(out / "verify_report.json")
    assert vouts[0].read_bytes() == vouts[1].read_bytes()
    doc = json.loads(vouts[0].read_text())
    assert doc["n_failed"] == 0
    print(f"criterion 8: simulate x3 + verify x2 byte-identical, {time.time()-t0:.1f}s")
