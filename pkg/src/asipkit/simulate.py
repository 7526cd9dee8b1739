"""Seeded Monte Carlo path sampling and distributional diagnostics.

Sampling is chunked: paths are grouped in fixed-size chunks, each chunk
drawing from its own PCG64 stream spawned as SeedSequence(seed, spawn_key=
(chunk,)).  Chunks write disjoint slices of preallocated arrays, so the
output is bit-identical for any worker count or scheduling order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .chain import ChainConfigError, ChainSpec
from .moments import MomentEngine, engine_for
from .util import worker_count

CHUNK = 1024
PSD_TOL = -1e-10
# std of the Kolmogorov distribution, for the asymptotic KS standard error
_KOLMOGOROV_STD = 0.26


# ---------------------------------------------------------------------------
# path sampling


@dataclass
class PathBatch:
    """Streamed centered partial sums at checkpoints (paths, checkpoints, d),
    plus per-path cover-block sums (paths, blocks, d) when a partition was
    supplied.  (seed, n_paths, n_max, chain) determine every sample."""

    seed: int
    n_paths: int
    n_max: int
    checkpoints: list
    sums: np.ndarray
    block_sums: np.ndarray | None = None
    block_covers: list | None = None

    def projected(self, u: np.ndarray) -> np.ndarray:
        """Checkpoint sums along a direction, shape (paths, checkpoints)."""
        return self.sums @ np.asarray(u, dtype=float)


def _kernel_cum(chain: ChainSpec, cache: dict, t: int) -> np.ndarray:
    k = chain.kernel(t)
    got = cache.get(id(k))
    if got is None:
        got = np.cumsum(k, axis=1)
        cache[id(k)] = got
    return got


def _cover_lut(covers, n_max: int) -> np.ndarray:
    """Time -> cover index lookup (1-based times; -1 between covers)."""
    lut = np.full(n_max + 1, -1, dtype=np.int64)
    for j, (a, b) in enumerate(covers):
        lut[a : b + 1] = j
    return lut


def _sample_chunk(
    chain: ChainSpec, eng: MomentEngine, n_max: int, seed: int, chunk_index: int,
    lo: int, hi: int, checkpoints: list, out: np.ndarray,
    cover_lut: np.ndarray | None, out_blocks: np.ndarray | None,
) -> None:
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,)))
    )
    n = hi - lo
    cache: dict = {}
    start = np.cumsum(chain.marginal(1))
    states = np.minimum(
        np.sum(start <= rng.random(n)[:, None], axis=1), start.shape[0] - 1
    )
    total = eng.centered(1)[states].copy()
    ck = {t: i for i, t in enumerate(checkpoints)}
    if cover_lut is not None and cover_lut[1] >= 0:
        out_blocks[lo:hi, cover_lut[1]] += total
    if 1 in ck:
        out[lo:hi, ck[1]] = total
    for t in range(2, n_max + 1):
        kern_cum = _kernel_cum(chain, cache, t - 1)
        draw = rng.random(n)
        states = np.minimum(
            np.sum(kern_cum[states] <= draw[:, None], axis=1), kern_cum.shape[1] - 1
        )
        vals = eng.centered(t)[states]
        total += vals
        if cover_lut is not None and cover_lut[t] >= 0:
            out_blocks[lo:hi, cover_lut[t]] += vals
        if t in ck:
            out[lo:hi, ck[t]] = total


def sample_paths(
    chain: ChainSpec,
    n_max: int,
    n_paths: int,
    seed: int,
    checkpoints,
    partition=None,
    engine: MomentEngine | None = None,
) -> PathBatch:
    """N independent chain trajectories, streamed to centered partial sums at
    the requested checkpoints (and per-cover block sums when a partition is
    given).  Bit-reproducible for fixed (seed, n_paths, n_max)."""
    if n_paths < 1:
        raise ChainConfigError(f"need at least one path, got {n_paths}")
    cps = sorted(set(int(t) for t in checkpoints))
    if cps and (cps[0] < 1 or cps[-1] > n_max):
        raise ChainConfigError(f"checkpoints must lie in [1, {n_max}]")
    covers = None
    if partition is not None:
        covers = partition.i_blocks
        if partition.cover_end > n_max:
            raise ChainConfigError(
                f"partition cover end {partition.cover_end} exceeds horizon {n_max}"
            )
    eng = engine or engine_for(chain)
    d = chain.d
    sums = np.zeros((n_paths, len(cps), d))
    blocks = np.zeros((n_paths, len(covers), d)) if covers is not None else None
    lut = _cover_lut(covers, n_max) if covers is not None else None

    jobs = []
    for c, lo in enumerate(range(0, n_paths, CHUNK)):
        jobs.append((c, lo, min(lo + CHUNK, n_paths)))
    workers = min(worker_count(), len(jobs)) or 1

    def run(job):
        c, lo, hi = job
        _sample_chunk(chain, eng, n_max, seed, c, lo, hi, cps, sums, lut, blocks)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(run, jobs))
    else:
        for job in jobs:
            run(job)
    return PathBatch(
        seed=int(seed), n_paths=int(n_paths), n_max=int(n_max), checkpoints=cps,
        sums=sums, block_sums=blocks, block_covers=covers,
    )


# ---------------------------------------------------------------------------
# Gaussian surrogate


@dataclass
class SurrogateBatch:
    """Independent Gaussians matched to the exact cover-sum covariances;
    cumulative sums along the block axis, shape (samples, blocks, d)."""

    seed: int
    n_samples: int
    cum_sums: np.ndarray
    clipped: int
    block_var: np.ndarray  # exact Var(Z_j . u0-free): d x d stack

    def projected(self, u: np.ndarray) -> np.ndarray:
        return self.cum_sums @ np.asarray(u, dtype=float)


def gaussian_surrogate(partition, n_samples: int, seed: int) -> SurrogateBatch:
    """Samples of the running sums of independent N(0, Cov(Theta_j)) vectors.

    Eigenvalues in [-1e-10, 0) are clipped to zero (counted); anything below
    that tolerance is treated as a moment-engine bug and raises.
    """
    covs = partition.theta_cov
    d = covs[0].shape[0]
    roots = []
    clipped = 0
    for j, c in enumerate(covs, start=1):
        vals, vecs = np.linalg.eigh(c)
        if vals.min() < PSD_TOL:
            raise ChainConfigError(
                f"cover covariance {j} is not PSD: min eigenvalue {vals.min()}"
            )
        neg = vals < 0
        clipped += int(neg.sum())
        vals = np.where(neg, 0.0, vals)
        roots.append(vecs * np.sqrt(vals)[None, :])
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed)))
    z = rng.standard_normal((n_samples, len(covs), d))
    samples = np.einsum("jdk,njk->njd", np.stack(roots), z)
    return SurrogateBatch(
        seed=int(seed), n_samples=int(n_samples),
        cum_sums=np.cumsum(samples, axis=1), clipped=clipped,
        block_var=np.stack(covs),
    )


# ---------------------------------------------------------------------------
# scalar statistics


def ks_statistic(standardized: np.ndarray) -> float:
    """Exact Kolmogorov-Smirnov distance of a sample to the standard normal."""
    x = np.sort(np.asarray(standardized, dtype=float))
    n = x.shape[0]
    cdf = ndtr(x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def w1_to_gaussian(samples: np.ndarray, sigma: float) -> float:
    """Exact W1 distance between the empirical law and N(0, sigma^2),
    by piecewise integration of |empirical CDF - Gaussian CDF|."""
    if sigma <= 0:
        raise ChainConfigError(f"need sigma > 0, got {sigma}")
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.shape[0]

    def big_g(v):  # antiderivative of Phi(x / sigma)
        u = v / sigma
        return v * ndtr(u) + sigma * np.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)

    total = float(big_g(x[0]))  # left tail: integral of Phi up to x_(1)
    u_n = x[-1] / sigma
    total += float(
        sigma * math.exp(-0.5 * u_n * u_n) / math.sqrt(2 * math.pi)
        - x[-1] * (1.0 - ndtr(u_n))
    )  # right tail: integral of 1 - Phi
    if n > 1:
        a, b = x[:-1], x[1:]
        c = np.arange(1, n) / n
        m = np.clip(sigma * ndtri(c), a, b)
        ga, gm, gb = big_g(a), big_g(m), big_g(b)
        total += float(np.sum(c * (m - a) - (gm - ga) + (gb - gm) - c * (b - m)))
    return total


def w1_two_sample(xs: np.ndarray, ys: np.ndarray) -> float:
    """Exact W1 distance between two empirical laws (integral of the CDF gap)."""
    xs = np.sort(np.asarray(xs, dtype=float))
    ys = np.sort(np.asarray(ys, dtype=float))
    grid = np.concatenate([xs, ys])
    grid.sort(kind="mergesort")
    fx = np.searchsorted(xs, grid[:-1], side="right") / xs.shape[0]
    fy = np.searchsorted(ys, grid[:-1], side="right") / ys.shape[0]
    return float(np.sum(np.abs(fx - fy) * np.diff(grid)))


def _bootstrap_se(values: np.ndarray, stat, n_boot: int, seed: int) -> float:
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(0xB007,)))
    )
    n = values.shape[0]
    reps = np.empty(n_boot)
    for i in range(n_boot):
        reps[i] = stat(values[rng.integers(0, n, n)])
    return float(reps.std(ddof=1))


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class KsPoint:
    n: int
    direction: int
    ks: float
    stderr: float
    variance: float
    skipped: bool = False
    reason: str | None = None


@dataclass
class KsCurve:
    points: list
    n_paths: int
    seed: int

    @property
    def max_ks(self) -> float | None:
        live = [p.ks for p in self.points if not p.skipped]
        return max(live) if live else None

    def to_rows(self) -> list:
        return [
            {"n": p.n, "direction_id": p.direction,
             "ks": None if p.skipped else p.ks,
             "stderr": p.stderr, "variance": p.variance,
             "skipped": p.skipped, "reason": p.reason}
            for p in self.points
        ]


def clt_diagnostic(
    batch: PathBatch,
    chain: ChainSpec,
    directions: np.ndarray | None = None,
    engine: MomentEngine | None = None,
) -> KsCurve:
    """KS distance of exact-variance-standardized checkpoint sums to the
    standard normal, per checkpoint and direction.  Zero-variance checkpoints
    are reported as skipped."""
    eng = engine or engine_for(chain)
    if directions is None:
        directions = np.eye(chain.d)[:1]
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    se = _KOLMOGOROV_STD / math.sqrt(batch.n_paths)
    points = []
    for i, n in enumerate(batch.checkpoints):
        for k, u in enumerate(dirs):
            var = eng.var_window(1, n, u)
            if var <= 0.0:
                points.append(KsPoint(
                    n=n, direction=k, ks=math.nan, stderr=se, variance=var,
                    skipped=True, reason="zero variance: cannot standardize",
                ))
                continue
            z = (batch.sums[:, i] @ u) / math.sqrt(var)
            points.append(KsPoint(
                n=n, direction=k, ks=ks_statistic(z), stderr=se, variance=var,
            ))
    return KsCurve(points=points, n_paths=batch.n_paths, seed=batch.seed)


@dataclass
class VarianceMatchPoint:
    k: int
    n: int  # cover end b_k + r
    gap: float
    normalizer: float
    ratio: float
    direction: int


@dataclass
class VarianceMatchCurve:
    points: list
    c_max: float
    delta: float

    def to_rows(self) -> list:
        return [
            {"k": p.k, "n": p.n, "gap": p.gap, "normalizer": p.normalizer,
             "ratio": p.ratio, "direction_id": p.direction}
            for p in self.points
        ]


def variance_matching_diagnostic(
    chain: ChainSpec,
    partition,
    delta: float = 0.1,
    directions: np.ndarray | None = None,
    engine: MomentEngine | None = None,
) -> VarianceMatchCurve:
    """Exact gap curve g(k) = |Var(S_{1..cover_k} . u) - sum_j Var(Theta_j . u)|
    against the normalizer s_n^(1/2+delta); no Monte Carlo involved.

    The reported constant is the max ratio over k and the direction grid.
    """
    eng = engine or engine_for(chain)
    if directions is None:
        directions = np.eye(chain.d)[:1]
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    ends = partition.i_ends
    pv = eng.prefix_variances(1, int(ends[-1]), dirs)[ends - 1]  # (K, n_dirs)
    theta = np.stack(partition.theta_cov)  # (K, d, d)
    tv = np.einsum("kd,jde,ke->jk", dirs, theta, dirs)  # (K, n_dirs)
    csum = np.cumsum(tv, axis=0)
    e = 0.5 + delta
    points = []
    c_max = 0.0
    for k in range(ends.shape[0]):
        s_n = eng.s_value(int(ends[k]))
        norm = s_n**e if s_n > 0 else math.inf
        for idx in range(dirs.shape[0]):
            gap = abs(float(pv[k, idx] - csum[k, idx]))
            ratio = gap / norm if norm > 0 else math.inf
            c_max = max(c_max, ratio)
            points.append(VarianceMatchPoint(
                k=k + 1, n=int(ends[k]), gap=gap, normalizer=float(norm),
                ratio=float(ratio), direction=idx,
            ))
    return VarianceMatchCurve(points=points, c_max=c_max, delta=delta)


@dataclass
class RatePoint:
    k: int
    n: int
    w1: float
    stderr: float
    normalizer: float
    ratio: float
    sigma: float


@dataclass
class RateCurve:
    """W1 proxy for the pathwise rate: the coupling statement is almost-sure
    and not directly testable; this compares laws at block checkpoints."""

    points: list
    delta: float
    proxy_note: str = (
        "distributional proxy: W1 between laws at cover checkpoints; the "
        "underlying statement is pathwise and not testable from samples"
    )

    def to_rows(self) -> list:
        return [
            {"k": p.k, "n": p.n, "w1": p.w1, "stderr": p.stderr,
             "normalizer": p.normalizer, "ratio": p.ratio, "sigma": p.sigma}
            for p in self.points
        ]

    @property
    def bounded(self) -> bool:
        if len(self.points) < 2:
            return True
        first = self.points[0].ratio
        return all(p.ratio <= max(first, 1e-12) * 4.0 + 1e-12 for p in self.points)


def rate_scaling_diagnostic(
    batch: PathBatch,
    chain: ChainSpec,
    partition,
    delta: float = 0.1,
    u: np.ndarray | None = None,
    surrogate: SurrogateBatch | None = None,
    n_boot: int = 16,
    k_values=None,
    engine: MomentEngine | None = None,
) -> RateCurve:
    """W1(empirical law of S at cover end k, law of the surrogate Gaussian sum)
    normalized by s_n^(1/4+delta).

    With surrogate=None the Gaussian side is exact N(0, sum_j u'Cov(Theta_j)u)
    and W1 is computed by exact CDF integration; a supplied surrogate batch is
    compared sample-to-sample instead.  k_values restricts to the given
    1-based block indices (default: every block)."""
    if batch.block_sums is None:
        raise ChainConfigError("batch was sampled without a partition")
    eng = engine or engine_for(chain)
    u = np.eye(chain.d)[0] if u is None else np.asarray(u, dtype=float)
    proj = np.cumsum(batch.block_sums @ u, axis=1)  # (paths, K)
    tvar = partition.theta_var(u)
    cum_var = np.cumsum(tvar)
    e = 0.25 + delta
    points = []
    if k_values is None:
        k_iter = range(proj.shape[1])
    else:
        k_iter = sorted({int(k) - 1 for k in k_values})
        if k_iter and (k_iter[0] < 0 or k_iter[-1] >= proj.shape[1]):
            raise ChainConfigError(f"k_values outside 1..{proj.shape[1]}")
    for k in k_iter:
        n = int(partition.i_ends[k])
        sigma = math.sqrt(max(cum_var[k], 0.0))
        xs = proj[:, k]
        if sigma <= 0:
            continue
        if surrogate is None:
            w1 = w1_to_gaussian(xs, sigma)
            se = _bootstrap_se(
                xs, lambda v: w1_to_gaussian(v, sigma), n_boot, batch.seed + k
            )
        else:
            ys = surrogate.projected(u)[:, k]
            w1 = w1_two_sample(xs, ys)
            se = _bootstrap_se(
                xs, lambda v: w1_two_sample(v, ys), n_boot, batch.seed + k
            )
        s_n = eng.s_value(n)
        norm = s_n**e if s_n > 0 else math.inf
        points.append(RatePoint(
            k=k + 1, n=n, w1=w1, stderr=se, normalizer=float(norm),
            ratio=float(w1 / norm), sigma=sigma,
        ))
    return RateCurve(points=points, delta=delta)


@dataclass
class LilReport:
    """Cross-path law of max_n |S_n . u| / sqrt(2 V_n log log V_n) over the
    checkpoints where V_n >= e^e."""

    quantiles: dict
    n_paths: int
    n_included: int
    first_n: int | None
    seed: int

    @property
    def median(self) -> float | None:
        return self.quantiles.get(0.5)


def lil_diagnostic(
    chain: ChainSpec,
    n_max: int,
    n_paths: int,
    seed: int,
    u: np.ndarray | None = None,
    engine: MomentEngine | None = None,
) -> LilReport:
    """Per-path running maximum of the iterated-logarithm ratio, streamed with
    the same chunked deterministic sampling as sample_paths."""
    eng = engine or engine_for(chain)
    u = np.eye(chain.d)[0] if u is None else np.asarray(u, dtype=float)
    v = eng.prefix_variances(1, n_max, u[None, :])[:, 0]
    gate = v >= math.exp(math.e)
    if not gate.any():
        return LilReport(
            quantiles={}, n_paths=n_paths, n_included=0, first_n=None, seed=seed,
        )
    norm = np.full(n_max, np.inf)
    lv = np.log(np.log(v, where=gate, out=np.ones_like(v)))
    norm[gate] = np.sqrt(2.0 * v[gate] * lv[gate])
    first_n = int(np.argmax(gate)) + 1

    best = np.zeros(n_paths)

    def run(job):
        c, lo, hi = job
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(c,)))
        )
        n = hi - lo
        cache: dict = {}
        start = np.cumsum(chain.marginal(1))
        states = np.minimum(
            np.sum(start <= rng.random(n)[:, None], axis=1), start.shape[0] - 1
        )
        vals = eng.centered(1) @ u
        total = vals[states].copy()
        acc = np.abs(total) / norm[0] if gate[0] else np.zeros(n)
        for t in range(2, n_max + 1):
            kern_cum = _kernel_cum(chain, cache, t - 1)
            draw = rng.random(n)
            states = np.minimum(
                np.sum(kern_cum[states] <= draw[:, None], axis=1),
                kern_cum.shape[1] - 1,
            )
            total += (eng.centered(t) @ u)[states]
            if gate[t - 1]:
                np.maximum(acc, np.abs(total) / norm[t - 1], out=acc)
        best[lo:hi] = acc

    jobs = [
        (c, lo, min(lo + CHUNK, n_paths))
        for c, lo in enumerate(range(0, n_paths, CHUNK))
    ]
    workers = min(worker_count(), len(jobs)) or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(run, jobs))
    else:
        for job in jobs:
            run(job)
    qs = (0.1, 0.25, 0.5, 0.75, 0.9)
    quantiles = {q: float(np.quantile(best, q)) for q in qs}
    return LilReport(
        quantiles=quantiles, n_paths=n_paths, n_included=int(gate.sum()),
        first_n=first_n, seed=seed,
    )
