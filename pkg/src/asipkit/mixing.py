"""Mixing and contraction coefficients, exponential envelopes, and the
characteristic-function factorization spot check.

alpha and phi are computed by brute force over event pairs on the coordinate
sigma-algebras sigma(xi_j), sigma(xi_{j+k}).  For Markov chains this equals
the full past/future definition (dependence factors through the boundary
pair); a windowed variant over cylinder events is available for validation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainConfigError, ChainSpec, pair_joint
from .util import dobrushin

EVENT_PAIR_CAP = 1 << 16


# ---------------------------------------------------------------------------
# alpha / phi


def _event_sums(p: np.ndarray) -> np.ndarray:
    """P(A) for every subset A of a finite space, indexed by bitmask."""
    n = p.shape[0]
    out = np.zeros(1 << n)
    for mask in range(1, 1 << n):
        low = mask & -mask
        out[mask] = out[mask ^ low] + p[low.bit_length() - 1]
    return out


def _alpha_phi_pair(joint: np.ndarray) -> tuple[float, float]:
    """Brute-force alpha and phi over all event pairs of a 2-coordinate law."""
    pa = _event_sums(joint.sum(axis=1))
    pb = _event_sums(joint.sum(axis=0))
    na, nb = joint.shape
    if (1 << na) * (1 << nb) > EVENT_PAIR_CAP:
        raise ChainConfigError(
            f"event-pair count 2^{na + nb} exceeds cap {EVENT_PAIR_CAP}; "
            "reduce the state space or sample events"
        )
    # P(A cap B) for all (A, B): subset-sum over rows, then over columns
    rows = np.zeros((1 << na, nb))
    for mask in range(1, 1 << na):
        low = mask & -mask
        rows[mask] = rows[mask ^ low] + joint[low.bit_length() - 1]
    alpha = 0.0
    phi = 0.0
    for mask in range(1, (1 << na) - 1 + 1):
        r = rows[mask]
        bsums = _event_sums(r)
        dev = np.abs(bsums - pa[mask] * pb)
        alpha = max(alpha, float(dev.max()))
        if pa[mask] > 0:
            phi = max(phi, float((dev / pa[mask]).max()))
    return alpha, phi


def alpha_phi(chain: ChainSpec, k: int, j_range) -> tuple[float, float]:
    """(alpha(k), phi(k)) maximized over start times j in j_range."""
    if k < 1:
        raise ChainConfigError("gap k must be >= 1")
    alpha = phi = 0.0
    for j in j_range:
        a, p = _alpha_phi_pair(pair_joint(chain, j, j + k).matrix)
        alpha = max(alpha, a)
        phi = max(phi, p)
    return alpha, phi


def alpha_phi_windowed(
    chain: ChainSpec, k: int, j_range, width: int = 2
) -> tuple[float, float]:
    """Validation variant: events are cylinders on windows of `width`
    consecutive coordinates ending at j and starting at j+k.  Exponential in
    width; width <= 3 enforced."""
    if width < 1 or width > 3:
        raise ChainConfigError("window width must be in 1..3")
    alpha = phi = 0.0
    for j in j_range:
        lo = max(1, j - width + 1)
        past = list(range(lo, j + 1))
        future = list(range(j + k, j + k + width))
        joint = _cylinder_joint(chain, past, future)
        a, p = _alpha_phi_pair(joint)
        alpha = max(alpha, a)
        phi = max(phi, p)
    return alpha, phi


def _cylinder_joint(chain: ChainSpec, past, future) -> np.ndarray:
    """Joint law of (path on past times, path on future times), flattened."""
    times = past + future
    sizes = [chain.state_size(t) for t in times]
    na = int(np.prod(sizes[: len(past)]))
    nb = int(np.prod(sizes[len(past) :]))
    if (1 << na) * (1 << nb) > EVENT_PAIR_CAP:
        raise ChainConfigError("cylinder event space exceeds brute-force cap")
    joint = np.zeros((na, nb))
    for path in itertools.product(*[range(s) for s in sizes]):
        pr = chain.marginal(times[0])[path[0]]
        for a, b, xa, xb in zip(times[:-1], times[1:], path[:-1], path[1:]):
            step = chain.step_matrix(a, b) if b > a + 1 else chain.kernel(a)
            pr *= step[xa, xb]
        if pr == 0.0:
            continue
        ia = ib = 0
        for s, x in zip(sizes[: len(past)], path[: len(past)]):
            ia = ia * s + x
        for s, x in zip(sizes[len(past) :], path[len(past) :]):
            ib = ib * s + x
        joint[ia, ib] += pr
    return joint


# ---------------------------------------------------------------------------
# contraction coefficients


def dobrushin_coefficient(chain: ChainSpec, j: int) -> float:
    """pi(Q_j): max total-variation distance between rows of kernel j."""
    return dobrushin(chain.kernel(j))


def rho_coefficient(chain: ChainSpec, j: int) -> float:
    """Maximal correlation between xi_j and xi_{j+1}.

    Second singular value of D_j^{-1/2} J D_{j+1}^{-1/2} where J is the joint
    law of the pair and D are the diagonal marginals; zero-probability states
    are dropped.
    """
    m0 = chain.marginal(j)
    m1 = chain.marginal(j + 1)
    joint = m0[:, None] * chain.kernel(j)
    keep0 = m0 > 0
    keep1 = m1 > 0
    j_r = joint[np.ix_(keep0, keep1)]
    b = j_r / np.sqrt(m0[keep0])[:, None] / np.sqrt(m1[keep1])[None, :]
    sv = np.linalg.svd(b, compute_uv=False)
    if sv.shape[0] < 2:
        return 0.0
    return float(min(sv[1], 1.0))


# ---------------------------------------------------------------------------
# envelope


@dataclass
class Envelope:
    """Certified exponential envelope alpha(k) <= c * delta^k on computed k."""

    c: float
    delta: float
    degenerate: bool
    nonmonotone: bool = False

    def value(self, k: float) -> float:
        return self.c * self.delta**k

    def geometric_tail(self, r: int, exponent: float) -> float:
        """sum_{m >= 1} (c * delta^(r m))^exponent, exact geometric sum."""
        if self.degenerate or self.c == 0.0:
            return 0.0
        q = self.delta ** (r * exponent)
        if q >= 1.0:
            return math.inf
        return self.c**exponent * q / (1.0 - q)


def fit_envelope(alphas, phis=None) -> tuple[Envelope, int | None]:
    """Envelope (c, delta) with alpha(k) <= c delta^k exactly on the data,
    plus n0 = min{k: phi(k) < 1/2} when phi values are supplied.

    alphas maps k -> alpha(k) (dict or sequence of (k, value)).  Least-squares
    on log alpha over the positive entries fixes delta, then c is inflated so
    the envelope dominates every computed point.
    """
    items = sorted(dict(alphas).items())
    if not items:
        raise ChainConfigError("no alpha values to fit")
    ks = np.array([k for k, _ in items], dtype=float)
    vals = np.array([v for _, v in items], dtype=float)
    nonmono = bool(np.any(np.diff(vals) > 1e-12))

    pos = vals > 0
    if pos.sum() == 0:
        env = Envelope(c=0.0, delta=0.5, degenerate=True, nonmonotone=nonmono)
    else:
        if pos.sum() >= 2:
            slope, intercept = np.polyfit(ks[pos], np.log(vals[pos]), 1)
            delta = min(float(np.exp(slope)), 1.0 - 1e-15)
        else:
            delta = 0.5
            intercept = math.log(vals[pos][0]) - math.log(delta) * ks[pos][0]
        c = float(np.exp(intercept))
        # sup-correct: a true envelope, not a regression
        c = max(c, float(np.max(vals / delta**ks)))
        degenerate = bool(pos.sum() < 3)
        env = Envelope(c=c, delta=delta, degenerate=degenerate, nonmonotone=nonmono)

    n0 = None
    if phis is not None:
        for k, v in sorted(dict(phis).items()):
            if v < 0.5:
                n0 = k
                break
    return env, n0


# ---------------------------------------------------------------------------
# condition (H) spot check


def condition_h_gap(chain: ChainSpec, group1, group2, t_values) -> float:
    """|E e^{i(sum both groups)} - E e^{i(group1)} E e^{i(group2)}|, exact.

    Each group is a list of blocks (start, end, t_index): the block sum
    sum_{l=start}^{end} X_l enters the phase with frequency vector
    t_values[t_index].  Computed by a complex forward pass over the chain.
    """
    t_values = [np.atleast_1d(np.asarray(t, dtype=float)) for t in t_values]

    def char(groups) -> complex:
        phase: dict[int, np.ndarray] = {}
        for (s0, s1, ti) in groups:
            if s1 < s0:
                raise ChainConfigError(f"bad block [{s0}, {s1}]")
            t = t_values[ti]
            for l in range(s0, s1 + 1):
                phase[l] = phase.get(l, 0.0) + t
        lo, hi = min(phase), max(phase)
        w = chain.marginal(lo).astype(complex)
        for l in range(lo, hi + 1):
            t = phase.get(l)
            if t is not None:
                w = w * np.exp(1j * (chain.obs(l) @ t))
            if l < hi:
                w = w @ chain.kernel(l)
        return complex(w.sum())

    e_joint = char(list(group1) + list(group2))
    e1 = char(list(group1))
    e2 = char(list(group2))
    return abs(e_joint - e1 * e2)


def default_eps0(chain: ChainSpec, max_block_len: int) -> float:
    """Frequency cap keeping block phases nondegenerate."""
    return math.pi / (2.0 * chain.L * max_block_len)


@dataclass
class ConditionHProfile:
    gaps: list  # (k, gap)
    c_prime: float | None
    big_c: float | None
    eps0: float
    all_zero: bool

    @property
    def decays(self) -> bool:
        return self.all_zero or (self.c_prime is not None and self.c_prime > 0)


def condition_h_profile(
    chain: ChainSpec,
    k_values=range(1, 13),
    base: int = 1,
    block_len: int = 2,
    eps0: float | None = None,
) -> ConditionHProfile:
    """Gap-vs-separation profile with a fitted envelope gap <= C' e^{-c' k}.

    Group one is two adjacent blocks of block_len starting at `base`; group
    two is a single index shifted k past group one, matching the
    factorization condition's shifted-window structure.
    """
    if eps0 is None:
        eps0 = default_eps0(chain, block_len)
    end1 = base + 2 * block_len - 1
    rows = []
    for k in k_values:
        g1 = [(base, base + block_len - 1, 0), (base + block_len, end1, 1)]
        g2 = [(end1 + k + 1, end1 + k + 1, 2)]
        d = chain.d
        ts = [np.full(d, eps0), np.full(d, -eps0), np.full(d, eps0)]
        rows.append((int(k), condition_h_gap(chain, g1, g2, ts)))
    gaps = np.array([g for _, g in rows])
    ks = np.array([float(k) for k, _ in rows])
    if np.all(gaps == 0.0):
        return ConditionHProfile(rows, None, None, eps0, all_zero=True)
    pos = gaps > 0
    if pos.sum() >= 2:
        slope, intercept = np.polyfit(ks[pos], np.log(gaps[pos]), 1)
        c_prime = -float(slope)
        big_c = float(np.exp(intercept))
    else:
        c_prime, big_c = None, None
    return ConditionHProfile(rows, c_prime, big_c, eps0, all_zero=False)


# ---------------------------------------------------------------------------
# report


@dataclass
class MixingReport:
    ks: list
    alpha: list
    phi: list
    pi: list  # per-time pi(Q_j) over the probed range
    rho: list
    delta_pi: float
    rho_sup: float
    envelope: Envelope
    n0: int | None
    j_probe: list = field(default_factory=list)

    def check_identities(self, atol: float = 1e-10):
        """Raises AssertionError on any violated structural identity."""
        for a, p in zip(self.alpha, self.phi):
            assert a <= p + 1e-15, f"alpha {a} > phi {p}"
        for a1, a2 in zip(self.alpha, self.alpha[1:]):
            assert a2 <= a1 + 1e-12, "alpha not nonincreasing"
        for p1, p2 in zip(self.phi, self.phi[1:]):
            assert p2 <= p1 + 1e-12, "phi not nonincreasing"
        for r, p in zip(self.rho, self.pi):
            assert r <= math.sqrt(p) + atol, f"rho {r} > sqrt(pi) {math.sqrt(p)}"
        for k, a in zip(self.ks, self.alpha):
            assert a <= self.envelope.value(k) + 0.0, "envelope not dominating"


def mixing_report(
    chain: ChainSpec, k_max: int = 12, j_probe=None
) -> MixingReport:
    """alpha/phi over k = 1..k_max, per-time contraction coefficients, and the
    fitted envelope.  j_probe defaults to a horizon-aware window of start
    times (enough to see a full period for periodic schedules)."""
    if j_probe is None:
        horizon = chain.max_time
        top = min(horizon - k_max, 8) if horizon else 8
        j_probe = list(range(1, max(top, 1) + 1))
    j_probe = list(j_probe)
    alphas = {}
    phis = {}
    for k in range(1, k_max + 1):
        a, p = alpha_phi(chain, k, j_probe)
        alphas[k] = a
        phis[k] = p
    pis = [dobrushin_coefficient(chain, j) for j in j_probe]
    rhos = [rho_coefficient(chain, j) for j in j_probe]
    env, n0 = fit_envelope(alphas, phis)
    return MixingReport(
        ks=list(alphas),
        alpha=list(alphas.values()),
        phi=list(phis.values()),
        pi=pis,
        rho=rhos,
        delta_pi=max(pis) if pis else 0.0,
        rho_sup=max(rhos) if rhos else 0.0,
        envelope=env,
        n0=n0,
        j_probe=j_probe,
    )
