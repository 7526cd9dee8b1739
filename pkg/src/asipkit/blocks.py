"""Separated block partitions of the time axis.

Parameter selection (separation r, amplitude A), the greedy block
construction driven by exact variances, and exact verification of the
partition inequalities: the prefix/suffix norm chain, the variance-vs-block
count bracket, the half/three-halves sandwich for unions of blocks, the
block-vs-cover variance ratio, and the between-block covariance bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainConfigError, ChainSpec
from .mixing import Envelope, alpha_phi, mixing_report
from .moments import (
    ATOM_CAP_DEFAULT,
    GRID_DEFAULT,
    LpNorm,
    MomentEngine,
    SupportOverflow,
    _dyadic_scale,
    _VarSweep,
    engine_for,
)
from .util import direction_grid

SEPARATION_MAX = 100_000


# ---------------------------------------------------------------------------
# parameter selection


def select_separation(
    envelope: Envelope, p: float, c_p: float = 8.0, r_max: int = SEPARATION_MAX
) -> tuple[int, float]:
    """Minimal separation r with sum_m alpha(rm)^(1-2/p) < 1/(32 c_p).

    The sum is the envelope's exact geometric tail.  Returns (r, achieved
    sum).  A degenerate (all-zero alpha) envelope gives r = 1.
    """
    if p <= 2:
        raise ChainConfigError(f"need p > 2, got {p}")
    if envelope.delta >= 1.0 and not envelope.degenerate and envelope.c > 0:
        raise ChainConfigError("no exponential envelope: delta >= 1")
    threshold = 1.0 / (32.0 * c_p)
    e = 1.0 - 2.0 / p
    for r in range(1, r_max + 1):
        tail = envelope.geometric_tail(r, e)
        if tail < threshold:
            return r, tail
    raise ChainConfigError(f"no separation r <= {r_max} meets the tail bound")


def _q_zero(
    r: int, p: float, big_l: float, envelope: Envelope,
    c_p: float = 8.0, exponent: str = "2-2/p",
) -> float:
    if exponent == "2-2/p":
        e = 2.0 - 2.0 / p
    elif exponent == "1-2/p":
        e = 1.0 - 2.0 / p
    else:
        raise ChainConfigError(f"unknown Q exponent switch {exponent!r}")
    # tail over every gap m >= 1 (separation enters the prefactor only)
    tail = envelope.geometric_tail(1, e)
    return 2.0 * c_p * (1.0 + r * big_l) * (1.0 + big_l) * tail


def compute_q(
    amplitude: float, r: int, p: float, big_l: float, envelope: Envelope,
    c_p: float = 8.0, exponent: str = "2-2/p",
) -> tuple[float, float]:
    """(Q0, Q(A)) with Q(A) = Q0 + 2 sqrt(3 A Q0).

    Q0 = 2 c_p (1 + r L)(1 + L) sum_m alpha(m)^e; the exponent defaults to
    the printed 2 - 2/p and can be switched to 1 - 2/p.
    """
    q0 = _q_zero(r, p, big_l, envelope, c_p, exponent)
    return q0, q_of_amplitude(amplitude, q0)


def q_of_amplitude(amplitude: float, q0: float) -> float:
    return q0 + 2.0 * math.sqrt(3.0 * amplitude * q0)


def select_amplitude(q0: float) -> tuple[float, float]:
    """Minimal A >= 1 with A >= 4 Q(A) + 1, plus the certificate value.

    Closed form from the quadratic in sqrt(A), confirmed by bisection on the
    certificate A - 4 Q(A) - 1.
    """
    if q0 < 0:
        raise ChainConfigError(f"Q0 must be nonnegative, got {q0}")
    if q0 == 0.0:
        return 1.0, 0.0
    root = 4.0 * math.sqrt(3.0 * q0) + math.sqrt(52.0 * q0 + 1.0)
    a = max(1.0, root * root)

    def cert(x: float) -> float:
        return x - 4.0 * q_of_amplitude(x, q0) - 1.0

    c = cert(a)
    if c < 0.0:
        # float slop on the closed form; nudge up to certified territory
        hi = a
        while cert(hi) < 0.0:
            hi *= 1.0 + 1e-12
        a, c = hi, cert(hi)
    # bisection cross-check: certificate must change sign just below a
    lo, hi = max(1.0, 0.5 * a), a
    if cert(lo) < 0.0:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if cert(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        if not math.isclose(hi, a, rel_tol=1e-9):
            raise RuntimeError("amplitude bisection disagrees with closed form")
    return a, c


# ---------------------------------------------------------------------------
# partition


class VarianceStarvedError(RuntimeError):
    """The greedy scan could not close a block before the horizon."""

    def __init__(self, index: int):
        super().__init__(f"variance starved at index {index}")
        self.index = index


@dataclass
class BlockPartition:
    """Greedy r-separated blocks M_j = [a_j, b_j] with covers I_j = [a_j, b_j + r].

    The I_j are disjoint and tile [1, cover_end]; k_of(n) counts the complete
    covers inside [1, n].  norms[j] is the exact L2 norm of S(M_j) . u0 and
    theta_cov[j] the exact d x d covariance of the cover sum S(I_j).
    """

    u0: np.ndarray
    p: float
    r: int
    amplitude: float
    blocks: list
    norms: np.ndarray
    theta_cov: list
    horizon: int
    q0: float | None = None
    q_at_a: float | None = None
    r_certified: bool = False
    a_certified: bool = False

    @property
    def count(self) -> int:
        return len(self.blocks)

    @property
    def i_blocks(self) -> list:
        return [(a, b + self.r) for a, b in self.blocks]

    @property
    def i_ends(self) -> np.ndarray:
        return np.array([b + self.r for _, b in self.blocks], dtype=np.int64)

    @property
    def cover_end(self) -> int:
        return self.blocks[-1][1] + self.r

    def k_of(self, n: int) -> int:
        """Number of complete covers I_j inside [1, n]."""
        return int(np.searchsorted(self.i_ends, n, side="right"))

    def k_array(self, n_max: int) -> np.ndarray:
        """k_of(n) for n = 1..n_max as a vector."""
        return np.searchsorted(self.i_ends, np.arange(1, n_max + 1), side="right")

    def theta_var(self, u: np.ndarray | None = None) -> np.ndarray:
        u = self.u0 if u is None else np.asarray(u, dtype=float)
        return np.array([float(u @ c @ u) for c in self.theta_cov])

    def to_doc(self) -> dict:
        return {
            "r": self.r,
            "amplitude": self.amplitude,
            "p": self.p,
            "u0": [float(x) for x in np.atleast_1d(self.u0)],
            "blocks": [[int(a), int(b)] for a, b in self.blocks],
            "block_l2_norms": [float(x) for x in self.norms],
            "theta_variance": [float(v) for v in self.theta_var()],
            "cover_end": int(self.cover_end),
            "horizon": int(self.horizon),
            "q0": self.q0,
            "q_at_amplitude": self.q_at_a,
            "certified": bool(self.r_certified and self.a_certified),
        }


def _default_u0(chain: ChainSpec) -> np.ndarray:
    u = np.zeros(chain.d)
    u[0] = 1.0
    return u


def build_blocks(
    chain: ChainSpec,
    amplitude: float,
    r: int,
    horizon: int,
    u0: np.ndarray | None = None,
    p: float = 4.0,
    q0: float | None = None,
    q_at_a: float | None = None,
    r_certified: bool = False,
    a_certified: bool = False,
    engine: MomentEngine | None = None,
) -> BlockPartition:
    """Greedy construction: each block is the shortest interval starting
    r + 1 past the previous block with Var(S(M) . u0) >= amplitude.

    Raises VarianceStarvedError when not even one block closes with its cover
    inside the usable horizon.
    """
    if r < 1:
        raise ChainConfigError(f"separation must be >= 1, got {r}")
    if amplitude < 1.0:
        raise ChainConfigError(f"amplitude must be >= 1, got {amplitude}")
    eng = engine or engine_for(chain)
    u0 = _default_u0(chain) if u0 is None else np.asarray(u0, dtype=float)
    max_t = chain.max_time
    scan_top = horizon if max_t is None else min(horizon, max_t)

    blocks: list[tuple[int, int]] = []
    norms: list[float] = []
    a = 1
    while a <= scan_top:
        sweep = _VarSweep(chain.marginal(a), (eng.centered(a) @ u0)[:, None], 1)
        b = a
        var = float(sweep.var()[0])
        while var < amplitude and b < scan_top:
            sweep.step(chain.kernel(b), (eng.centered(b + 1) @ u0)[:, None])
            b += 1
            var = float(sweep.var()[0])
        if var < amplitude:
            break
        blocks.append((a, b))
        norms.append(math.sqrt(var))
        a = b + r + 1

    # covers must stay inside the chain's defined times
    while blocks and max_t is not None and blocks[-1][1] + r > max_t:
        blocks.pop()
        norms.pop()
    if not blocks:
        raise VarianceStarvedError(scan_top)

    # construction postcondition: sqrt(A) <= ||S(M_j)|| <= sqrt(A) + increment
    root_a = math.sqrt(amplitude)
    for (a_j, b_j), nrm in zip(blocks, norms):
        inc = max(
            float(np.max(np.abs(eng.centered(t) @ u0))) for t in range(a_j, b_j + 1)
        )
        if not (root_a <= nrm + 1e-9 and nrm <= root_a + inc + 1e-9):
            raise RuntimeError(
                f"block [{a_j}, {b_j}] norm {nrm} outside [sqrt(A), sqrt(A) + L]"
            )

    theta_cov = [eng.cov_partial_sum(a_j, b_j + r) for a_j, b_j in blocks]
    return BlockPartition(
        u0=u0, p=float(p), r=int(r), amplitude=float(amplitude),
        blocks=blocks, norms=np.array(norms), theta_cov=theta_cov,
        horizon=int(horizon), q0=q0, q_at_a=q_at_a,
        r_certified=r_certified, a_certified=a_certified,
    )


# ---------------------------------------------------------------------------
# verification


@dataclass
class BlockVerification:
    """Exact extrema realizing the partition inequalities over the tested
    horizon and direction grid.  Failures are findings, not errors."""

    a1: float
    a2: float
    c: float
    r1: float | None
    r2: float | None
    r1_witness: tuple | None
    r2_witness: tuple | None
    sandwich_min: float
    sandwich_max: float
    sandwich_pass: bool
    sandwich_gated: bool
    ratio_max_dev: float
    ratio_bound: float | None
    ratio_pass: bool | None
    ratio_hypotheses: bool
    separation_ok: bool
    norms_ok: bool
    coverage_ok: bool
    n_directions: int
    horizon: int
    per_block: list = field(default_factory=list)

    @property
    def structural_ok(self) -> bool:
        return self.separation_ok and self.norms_ok and self.coverage_ok

    def to_doc(self) -> dict:
        return {
            "a1": self.a1, "a2": self.a2, "c": self.c,
            "r1": self.r1, "r2": self.r2,
            "r1_witness": self.r1_witness, "r2_witness": self.r2_witness,
            "sandwich_min": self.sandwich_min, "sandwich_max": self.sandwich_max,
            "sandwich_pass": self.sandwich_pass, "sandwich_gated": self.sandwich_gated,
            "ratio_max_dev": self.ratio_max_dev, "ratio_bound": self.ratio_bound,
            "ratio_pass": self.ratio_pass, "ratio_hypotheses": self.ratio_hypotheses,
            "separation_ok": self.separation_ok, "norms_ok": self.norms_ok,
            "coverage_ok": self.coverage_ok, "structural_ok": self.structural_ok,
            "n_directions": self.n_directions, "horizon": self.horizon,
            "per_block": self.per_block,
        }


def _masked_prefix_vars(
    eng: MomentEngine, u0: np.ndarray, blocks, r: int, masked: bool
) -> np.ndarray:
    """Var of the union sum recorded at each block boundary.

    masked=True: gaps contribute nothing, recorded at the block ends b_j
    (variance of S(M^(k)) . u0).  masked=False: contiguous sum recorded at
    the cover ends b_j + r (variance of S(I^(k)) . u0).
    """
    a1 = blocks[0][0]
    stops = [b if masked else b + r for _, b in blocks]
    top = stops[-1]
    inside = np.zeros(top - a1 + 2, dtype=bool)
    for a, b in blocks:
        inside[a - a1 : (b if masked else min(b + r, top)) - a1 + 1] = True

    def node(t):
        return (eng.centered(t) @ u0)[:, None] if inside[t - a1] else None

    chain = eng.chain
    sweep = _VarSweep(chain.marginal(a1), node(a1), 1)
    out = np.empty(len(stops))
    k = 0
    t = a1
    if stops[0] == a1:
        out[0] = float(sweep.var()[0])
        k = 1
    while k < len(stops):
        sweep.step(chain.kernel(t), node(t + 1))
        t += 1
        if t == stops[k]:
            out[k] = float(sweep.var()[0])
            k += 1
    return out


def verify_partition(
    chain: ChainSpec,
    partition: BlockPartition,
    horizon: int | None = None,
    directions: np.ndarray | None = None,
    engine: MomentEngine | None = None,
) -> BlockVerification:
    """Exact evaluation of the partition inequalities over n <= horizon and a
    deterministic direction grid (d = 1 collapses to the single direction)."""
    eng = engine or engine_for(chain)
    part = partition
    horizon = part.cover_end if horizon is None else int(horizon)
    if chain.max_time is not None:
        horizon = min(horizon, chain.max_time)

    if directions is None:
        if chain.d == 1:
            directions = np.array([[1.0]])
        else:
            vn = eng.v_matrix(horizon)
            eig = np.linalg.eigh(vn).eigenvectors.T
            directions = direction_grid(chain.d, count=64, extra=eig)
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))

    # per block x direction: prefix norms over the cover, and suffix norms
    a1 = math.inf
    a2 = 0.0
    c = 0.0
    per_block = []
    for (a, b), nrm, tv in zip(part.blocks, part.norms, part.theta_var()):
        pv = eng.prefix_variances(a, b + part.r, dirs)
        sv = eng.suffix_variances(a, b + part.r, dirs)
        i_norm = math.sqrt(max(float(pv[-1].min()), 0.0))
        peak = math.sqrt(max(float(pv.max()), 0.0))
        s_peak = math.sqrt(max(float(sv.max()), 0.0))
        a1 = min(a1, i_norm)
        a2 = max(a2, peak)
        c = max(c, s_peak)
        per_block.append({
            "a": int(a), "b": int(b), "block_norm": float(nrm),
            "theta_variance": float(tv), "cover_norm_min": i_norm,
            "prefix_norm_max": peak, "suffix_norm_max": s_peak,
        })

    # Var(S_n . u) / k_n bracket over n <= horizon with k_n >= 1
    kn = part.k_array(horizon)
    r1 = r2 = None
    r1_wit = r2_wit = None
    live = kn >= 1
    if live.any():
        pv_full = eng.prefix_variances(1, horizon, dirs)
        ratios = pv_full[live] / kn[live, None].astype(float)
        flat_min = int(np.argmin(ratios))
        flat_max = int(np.argmax(ratios))
        ns = np.arange(1, horizon + 1)[live]
        r1 = float(ratios.ravel()[flat_min])
        r2 = float(ratios.ravel()[flat_max])
        r1_wit = (int(ns[flat_min // dirs.shape[0]]), int(flat_min % dirs.shape[0]))
        r2_wit = (int(ns[flat_max // dirs.shape[0]]), int(flat_max % dirs.shape[0]))

    # masked-variance sandwich and the block/cover ratio, both along u0
    var_m = _masked_prefix_vars(eng, part.u0, part.blocks, part.r, masked=True)
    var_i = _masked_prefix_vars(eng, part.u0, part.blocks, part.r, masked=False)
    sums = np.cumsum(part.norms**2)
    ratios_m = var_m / sums
    sandwich_min = float(ratios_m.min())
    sandwich_max = float(ratios_m.max())
    sandwich_pass = bool(0.5 - 1e-9 <= sandwich_min and sandwich_max <= 1.5 + 1e-9)
    sandwich_gated = bool(part.r_certified and float(part.norms.min()) >= 1.0 - 1e-12)

    dev = np.abs(var_m / var_i - 1.0)
    ratio_max_dev = float(dev.max())
    bound = None
    if part.q_at_a is not None:
        bound = 2.0 * part.q_at_a / part.amplitude
    block_vars = part.norms**2
    hyp = bool(
        part.r_certified and part.a_certified and part.amplitude > 1.0
        and np.all(block_vars >= part.amplitude - 1e-9)
        and np.all(block_vars <= 2.0 * part.amplitude + 1e-9)
    )
    ratio_pass = None if bound is None else bool(ratio_max_dev <= bound + 1e-12)

    root_a = math.sqrt(part.amplitude)
    seps = [n_a - b for (_, b), (n_a, _) in zip(part.blocks, part.blocks[1:])]
    separation_ok = all(s == part.r + 1 for s in seps)
    norms_ok = bool(
        np.all(part.norms >= root_a - 1e-9)
        and np.all(part.norms <= root_a + chain.L + 1e-9)
    )
    coverage_ok = part.blocks[0][0] == 1 and separation_ok

    return BlockVerification(
        a1=a1, a2=a2, c=c, r1=r1, r2=r2, r1_witness=r1_wit, r2_witness=r2_wit,
        sandwich_min=sandwich_min, sandwich_max=sandwich_max,
        sandwich_pass=sandwich_pass, sandwich_gated=sandwich_gated,
        ratio_max_dev=ratio_max_dev, ratio_bound=bound, ratio_pass=ratio_pass,
        ratio_hypotheses=hyp, separation_ok=separation_ok, norms_ok=norms_ok,
        coverage_ok=coverage_ok, n_directions=dirs.shape[0], horizon=horizon,
        per_block=per_block,
    )


# ---------------------------------------------------------------------------
# between-block covariance bound


@dataclass
class CovInequality:
    cov_abs: float
    bound: float
    passes: bool
    r: int
    alpha_r: float
    norm1: float
    norm2: float
    exact: bool


def _as_intervals(m) -> list:
    """Normalize an index set (iterable of ints or (a, b) pairs) to sorted
    disjoint intervals."""
    pts: set[int] = set()
    for item in m:
        if isinstance(item, (tuple, list)):
            a, b = int(item[0]), int(item[1])
            if b < a:
                raise ChainConfigError(f"bad interval [{a}, {b}]")
            pts.update(range(a, b + 1))
        else:
            pts.add(int(item))
    if not pts:
        raise ChainConfigError("empty index set")
    seq = sorted(pts)
    out = []
    a = prev = seq[0]
    for x in seq[1:]:
        if x == prev + 1:
            prev = x
            continue
        out.append((a, prev))
        a = prev = x
    out.append((a, prev))
    return out


def covariance_inequality_check(
    chain: ChainSpec,
    m1,
    m2,
    p: int = 4,
    u: np.ndarray | None = None,
    j_probe=None,
    atom_cap: int = ATOM_CAP_DEFAULT,
    mc: tuple[int, int] | None = None,
    engine: MomentEngine | None = None,
) -> CovInequality:
    """|Cov(S(M1) . u, S(M2) . u)| against 8 ||S(M1)||_p ||S(M2)||_p alpha(r)^(1-2/p).

    Both sides exact: the covariance by masked sweeps, the L^p norms by the
    distribution DP, alpha(r) by event enumeration at the separating gap r =
    min M2 - max M1.
    """
    eng = engine or engine_for(chain)
    u = _default_u0(chain) if u is None else np.asarray(u, dtype=float)
    segs1 = _as_intervals(m1)
    segs2 = _as_intervals(m2)
    r = segs2[0][0] - segs1[-1][1]
    if r < 1:
        raise ChainConfigError(f"index sets must be separated, got gap {r}")
    cov = abs(eng.cross_cov_segments(u, segs1, segs2))

    def lp(segs) -> LpNorm:
        return eng.lp_norm(
            segs[0][0], segs[-1][1], u, p, atom_cap=atom_cap, mc=mc, segments=segs
        )

    n1 = lp(segs1)
    n2 = lp(segs2)
    if j_probe is None:
        j_probe = range(1, min(segs2[-1][1], 24) + 1)
    alpha_r, _ = alpha_phi(chain, r, j_probe)
    bound = 8.0 * n1.value * n2.value * alpha_r ** (1.0 - 2.0 / p)
    return CovInequality(
        cov_abs=cov, bound=bound, passes=bool(cov <= bound + 1e-12), r=r,
        alpha_r=alpha_r, norm1=n1.value, norm2=n2.value,
        exact=bool(n1.exact and n2.exact),
    )


# ---------------------------------------------------------------------------
# gap-maximum statistics


@dataclass
class TailNorm:
    q: int
    value: float
    exact: bool
    method: str
    stderr: float | None = None


@dataclass
class TailStats:
    norms: list
    c_p: float
    all_exact: bool
    eps_maxima: dict
    mc_fallback: bool
    mc_paths: int
    mc_seed: int

    def to_doc(self) -> dict:
        return {
            "per_gap": [
                {"q": t.q, "value": t.value, "exact": t.exact,
                 "method": t.method, "stderr": t.stderr}
                for t in self.norms
            ],
            "c_p": self.c_p,
            "all_exact": self.all_exact,
            "eps_maxima": {str(k): v for k, v in self.eps_maxima.items()},
            "mc_fallback": self.mc_fallback,
            "mc_paths": self.mc_paths,
            "mc_seed": self.mc_seed,
        }


def _gap_lp_dp(
    chain: ChainSpec, eng: MomentEngine, b: int, r: int, p: int,
    atom_cap: int, grid: float,
) -> tuple[float, bool]:
    """Exact ||max_{0<=l<=r} |sum of X over (b, b+l]| ||_{L^p} by a DP over
    (state, accumulated vector, running max of the squared norm)."""
    tables = [eng.centered(b + s) for s in range(1, r + 1)]
    scale = _dyadic_scale([t.ravel() for t in tables], r)
    exact_keys = scale is not None
    if not exact_keys:
        scale = 1.0 / grid
    enc = [np.rint(t * scale).astype(np.int64) for t in tables]

    d = chain.d
    zero = (0,) * d
    atoms: dict[tuple, np.ndarray] = {(zero, 0): chain.marginal(b).astype(float)}
    for s in range(1, r + 1):
        kern = chain.kernel(b + s - 1)
        vals = enc[s - 1]
        nxt: dict[tuple, np.ndarray] = {}
        for (tvec, r2), pv in atoms.items():
            w = pv @ kern
            for x in range(vals.shape[0]):
                if w[x] == 0.0:
                    continue
                nt = tuple(int(a + v) for a, v in zip(tvec, vals[x]))
                n2 = sum(a * a for a in nt)
                key = (nt, max(r2, n2))
                slot = nxt.get(key)
                if slot is None:
                    slot = np.zeros(vals.shape[0])
                    nxt[key] = slot
                slot[x] += w[x]
        if len(nxt) > atom_cap:
            raise SupportOverflow(
                f"gap DP support {len(nxt)} exceeds cap {atom_cap}"
            )
        atoms = nxt
    inv2 = 1.0 / (scale * scale)
    moment = 0.0
    for (_, r2), pv in atoms.items():
        moment += (r2 * inv2) ** (p // 2) * float(pv.sum())
    return moment ** (1.0 / p), exact_keys


def _walk_gap(
    chain: ChainSpec, eng: MomentEngine, b: int, r: int, rng: np.random.Generator,
    n_paths: int,
) -> np.ndarray:
    """Max over 0 <= l <= r of |centered sum over (b, b+l]|_2, per sampled path.

    Paths start fresh from the exact marginal at time b."""
    start = np.cumsum(chain.marginal(b))
    states = np.searchsorted(start, rng.random(n_paths), side="right")
    states = np.minimum(states, start.shape[0] - 1)
    total = np.zeros((n_paths, chain.d))
    best = np.zeros(n_paths)
    for s in range(1, r + 1):
        kern_cum = np.cumsum(chain.kernel(b + s - 1), axis=1)
        draw = rng.random(n_paths)
        states = np.sum(kern_cum[states] <= draw[:, None], axis=1)
        states = np.minimum(states, kern_cum.shape[1] - 1)
        total += eng.centered(b + s)[states]
        np.maximum(best, np.einsum("ij,ij->i", total, total), out=best)
    return np.sqrt(best)


def tail_statistics(
    chain: ChainSpec,
    partition: BlockPartition,
    p: int = 4,
    atom_cap: int = ATOM_CAP_DEFAULT,
    grid: float = GRID_DEFAULT,
    eps: tuple = (0.1, 0.25),
    mc_paths: int = 512,
    mc_seed: int = 17,
    engine: MomentEngine | None = None,
) -> TailStats:
    """L^p norms of the between-block maxima D_q = max over the gap after
    block q of |S_n - S_{b_q}|, plus a Monte Carlo boundedness check of
    max_q D_q / q^eps.

    Exact DP per gap with a Monte Carlo fallback past the atom cap.  The
    Monte Carlo walks sample each gap independently from its exact entry
    marginal (cross-gap dependence dropped; per-gap laws exact).
    """
    p = int(p)
    if p < 2 or p % 2:
        raise ChainConfigError(f"p must be an even integer >= 2, got {p}")
    eng = engine or engine_for(chain)
    part = partition
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(mc_seed)))
    norms: list[TailNorm] = []
    fallback = False
    for q, (_, b) in enumerate(part.blocks, start=1):
        try:
            val, exact_keys = _gap_lp_dp(chain, eng, b, part.r, p, atom_cap, grid)
            norms.append(TailNorm(
                q=q, value=val, exact=True,
                method="dp-dyadic" if exact_keys else "dp-grid",
            ))
        except SupportOverflow:
            fallback = True
            draws = _walk_gap(chain, eng, b, part.r, rng, mc_paths)
            xp = draws**p
            mp = float(xp.mean())
            se_mp = float(xp.std(ddof=1) / math.sqrt(mc_paths))
            val = mp ** (1.0 / p)
            se = se_mp / (p * mp ** ((p - 1.0) / p)) if mp > 0 else se_mp
            norms.append(TailNorm(
                q=q, value=val, exact=False, method="monte-carlo", stderr=se,
            ))

    scores = {float(e): 0.0 for e in eps}
    per_gap = np.empty((part.count, mc_paths))
    for q, (_, b) in enumerate(part.blocks, start=1):
        per_gap[q - 1] = _walk_gap(chain, eng, b, part.r, rng, mc_paths)
    qs = np.arange(1, part.count + 1, dtype=float)
    for e in scores:
        scores[e] = float((per_gap / (qs[:, None] ** e)).max())

    return TailStats(
        norms=norms,
        c_p=max(t.value for t in norms),
        all_exact=not fallback,
        eps_maxima=scores,
        mc_fallback=fallback,
        mc_paths=mc_paths,
        mc_seed=mc_seed,
    )


# ---------------------------------------------------------------------------
# end-to-end planning


@dataclass
class PartitionPlan:
    envelope: Envelope
    n0: int | None
    r: int
    tail_sum: float
    q0: float
    q_at_a: float
    amplitude: float
    certificate: float
    horizon: int
    p: float = 4.0
    c_p: float = 8.0

    def to_doc(self) -> dict:
        return {
            "envelope_c": self.envelope.c,
            "envelope_delta": self.envelope.delta,
            "envelope_degenerate": self.envelope.degenerate,
            "n0": self.n0,
            "p": self.p,
            "c_p": self.c_p,
            "r": self.r,
            "tail_sum": self.tail_sum,
            "q0": self.q0,
            "q_at_amplitude": self.q_at_a,
            "amplitude": self.amplitude,
            "certificate": self.certificate,
            "horizon": self.horizon,
        }


def plan_partition(
    chain: ChainSpec,
    p: float = 4.0,
    c_p: float = 8.0,
    u0: np.ndarray | None = None,
    horizon: int | None = None,
    min_blocks: int = 3,
    k_max: int = 12,
    q_exponent: str = "2-2/p",
    horizon_cap: int = 500_000,
    engine: MomentEngine | None = None,
) -> tuple[BlockPartition, PartitionPlan]:
    """Full pipeline: mixing envelope -> separation -> amplitude -> blocks.

    The horizon, when not given, is sized from the exact variance growth rate
    so at least min_blocks blocks close, then doubled as needed up to
    horizon_cap."""
    eng = engine or engine_for(chain)
    u0 = _default_u0(chain) if u0 is None else np.asarray(u0, dtype=float)
    rep = mixing_report(chain, k_max=k_max)
    env = rep.envelope
    r, tail = select_separation(env, p, c_p)
    q0 = _q_zero(r, p, chain.L, env, c_p, q_exponent)
    amplitude, cert = select_amplitude(q0)
    q_at_a = q_of_amplitude(amplitude, q0)

    if horizon is None:
        probe = 256
        if chain.max_time is not None:
            probe = min(probe, chain.max_time - 1)
        rate = eng.var_window(1, probe, u0) / probe
        if rate <= 1e-12:
            raise VarianceStarvedError(probe)
        horizon = int(min_blocks * (amplitude / rate) * 1.4)
        horizon += (min_blocks + 1) * (r + 1) + 64
        horizon = max(2048, min(horizon, horizon_cap))

    while True:
        try:
            part = build_blocks(
                chain, amplitude, r, horizon, u0=u0, p=p, q0=q0, q_at_a=q_at_a,
                r_certified=True, a_certified=True, engine=eng,
            )
        except VarianceStarvedError:
            part = None
        if part is not None and part.count >= min_blocks:
            break
        if horizon >= horizon_cap or (
            chain.max_time is not None and horizon >= chain.max_time
        ):
            if part is None:
                raise VarianceStarvedError(horizon)
            break
        horizon = min(horizon * 2, horizon_cap)

    plan = PartitionPlan(
        envelope=env, n0=rep.n0, r=r, tail_sum=tail, q0=q0, q_at_a=q_at_a,
        amplitude=amplitude, certificate=cert, horizon=horizon, p=p, c_p=c_p,
    )
    return part, plan
