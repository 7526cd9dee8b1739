"""Exact first and second moments of observable partial sums.

Everything here is computed from the chain's exact laws, not by simulation.
The workhorse is a forward recursion over (state, accumulated sum) moments
that yields window covariances in time linear in the window length; a
pairwise-covariance accumulation path is kept alongside as an independent
cross-check and for callers that want per-pair terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from weakref import WeakKeyDictionary

import numpy as np

from .chain import ChainConfigError, ChainSpec, pair_joint
from .util import dobrushin

TRUNCATION_DEFAULT = 1e-14
ATOM_CAP_DEFAULT = 100_000
GRID_DEFAULT = 1e-9
_DYADIC_MAX_DEN = 1 << 24


# ---------------------------------------------------------------------------
# forward sweeps


class _CovSweep:
    """Tracks exact E[T 1{state}] and E[T T' 1{state}] for a running sum T.

    T accumulates node values (s, C) at each time and optional edge values
    (s, s', C) across each transition.  All values must already be centered
    by the caller if a centered sum is wanted.
    """

    def __init__(self, p0: np.ndarray, node0: np.ndarray | None, channels: int):
        s = p0.shape[0]
        self.p = p0.astype(float)
        self.phi = np.zeros((s, channels))
        self.psi = np.zeros((s, channels, channels))
        if node0 is not None:
            self.phi = node0 * self.p[:, None]
            self.psi = node0[:, :, None] * node0[:, None, :] * self.p[:, None, None]

    def step(self, kernel: np.ndarray, node: np.ndarray | None, edge: np.ndarray | None):
        pt = kernel.T @ self.p
        if edge is None:
            phi_t = kernel.T @ self.phi
            psi_t = np.einsum("xy,xab->yab", kernel, self.psi)
        else:
            w = edge  # (s, s', C)
            kp = kernel * self.p[:, None]  # joint of (x, y)
            phi_t = kernel.T @ self.phi + np.einsum("xy,xyc->yc", kp, w)
            psi_t = (
                np.einsum("xy,xab->yab", kernel, self.psi)
                + np.einsum("xy,xya,xb->yab", kernel, w, self.phi)
                + np.einsum("xy,xa,xyb->yab", kernel, self.phi, w)
                + np.einsum("xy,xya,xyb->yab", kp, w, w)
            )
        if node is not None:
            psi_t = (
                psi_t
                + node[:, :, None] * phi_t[:, None, :]
                + phi_t[:, :, None] * node[:, None, :]
                + node[:, :, None] * node[:, None, :] * pt[:, None, None]
            )
            phi_t = phi_t + node * pt[:, None]
        self.p, self.phi, self.psi = pt, phi_t, psi_t

    def mean(self) -> np.ndarray:
        return self.phi.sum(axis=0)

    def cov(self) -> np.ndarray:
        m = self.mean()
        return self.psi.sum(axis=0) - np.outer(m, m)


class _VarSweep:
    """Per-channel variant of _CovSweep (no cross moments), for batches of
    projection directions."""

    def __init__(self, p0: np.ndarray, node0: np.ndarray | None, channels: int):
        s = p0.shape[0]
        self.p = p0.astype(float)
        self.phi = np.zeros((s, channels))
        self.psi = np.zeros((s, channels))
        if node0 is not None:
            self.phi = node0 * self.p[:, None]
            self.psi = node0 * node0 * self.p[:, None]

    def step(self, kernel: np.ndarray, node: np.ndarray | None):
        pt = kernel.T @ self.p
        phi_t = kernel.T @ self.phi
        psi_t = kernel.T @ self.psi
        if node is not None:
            psi_t = psi_t + 2.0 * node * phi_t + node * node * pt[:, None]
            phi_t = phi_t + node * pt[:, None]
        self.p, self.phi, self.psi = pt, phi_t, psi_t

    def var(self) -> np.ndarray:
        m = self.phi.sum(axis=0)
        return self.psi.sum(axis=0) - m * m


# ---------------------------------------------------------------------------
# results


@dataclass
class LpNorm:
    """L^p norm of a projected, centered partial sum."""

    value: float
    exact: bool
    method: str  # "dp-dyadic", "dp-grid", or "monte-carlo"
    atoms: int
    stderr: float | None = None

    def __float__(self) -> float:
        return self.value


@dataclass
class WindowEigen:
    n: int
    m: int
    l2: float  # sqrt(trace V_{n,m})
    eig_min: float
    eig_max: float
    ratio: float


@dataclass
class EigenRatioReport:
    c1: float
    windows: list
    skipped: list
    c2: float | None
    singular_witness: tuple | None

    @property
    def bounded(self) -> bool:
        return self.c2 is not None and math.isfinite(self.c2)


class SupportOverflow(RuntimeError):
    """Sum-support grew past the configured atom cap and Monte Carlo is off."""


# ---------------------------------------------------------------------------
# engine


class MomentEngine:
    """Exact moment computations for one chain, with memoized per-time data."""

    def __init__(self, chain: ChainSpec):
        self.chain = chain
        self.d = chain.d
        self._means: dict[int, np.ndarray] = {}
        self._centered: dict[int, np.ndarray] = {}
        self._vlist: list = [None, None]  # _vlist[n] = V_{1,n}, grown on demand
        self._vsweep: _CovSweep | None = None
        self._vtime = 0

    # -- per-time -----------------------------------------------------------

    def mean_obs(self, j: int) -> np.ndarray:
        m = self._means.get(j)
        if m is None:
            m = self.chain.marginal(j) @ self.chain.obs(j)
            self._means[j] = m
        return m

    def centered(self, j: int) -> np.ndarray:
        c = self._centered.get(j)
        if c is None:
            c = self.chain.obs(j) - self.mean_obs(j)
            self._centered[j] = c
        return c

    def projected_bound(self, u: np.ndarray, times) -> float:
        """sup over given times of max_x |f_j(x) . u| (uncentered values)."""
        return max(float(np.max(np.abs(self.chain.obs(j) @ u))) for j in times)

    # -- pairwise covariance path --------------------------------------------

    def cov_pair(self, i: int, j: int) -> np.ndarray:
        """Exact Cov(X_i, X_j), d x d, from the exact pair law."""
        if j < i:
            return self.cov_pair(j, i).T
        fi = self.chain.obs(i)
        fj = self.chain.obs(j)
        if i == j:
            w = self.chain.marginal(i)
            second = fi.T @ (w[:, None] * fi)
        else:
            joint = pair_joint(self.chain, i, j).matrix
            second = fi.T @ joint @ fj
        return second - np.outer(self.mean_obs(i), self.mean_obs(j))

    def cov_partial_sum_pairwise(
        self, n: int, m: int, truncate: float | None = TRUNCATION_DEFAULT
    ) -> tuple[np.ndarray, bool]:
        """V_{n,m} by accumulating cov_pair terms.

        When `truncate` is set and the window admits a verified geometric
        envelope (sup Dobrushin coefficient < 1), far pairs whose envelope
        bound falls below `truncate` are skipped and the exact flag clears.
        Quadratic in the window length; prefer cov_partial_sum for large
        windows.
        """
        if m < n:
            raise ChainConfigError(f"bad window [{n}, {m}]")
        delta = max((dobrushin(self.chain.kernel(t)) for t in range(n, m)), default=0.0)
        bounds = [float(np.max(np.abs(self.centered(j)))) for j in range(n, m + 1)]
        can_truncate = truncate is not None and delta < 1.0
        v = np.zeros((self.d, self.d))
        exact = True
        for i in range(n, m + 1):
            v += self.cov_pair(i, i)
            prod = None
            bi = bounds[i - n]
            for j in range(i + 1, m + 1):
                if can_truncate and bi * bounds[j - n] * 2.0 * delta ** (j - i) < truncate:
                    exact = False
                    break
                prod = self.chain.kernel(i) if prod is None else prod @ self.chain.kernel(j - 1)
                joint = self.chain.marginal(i)[:, None] * prod
                c = self.chain.obs(i).T @ joint @ self.chain.obs(j) - np.outer(
                    self.mean_obs(i), self.mean_obs(j)
                )
                v += c + c.T
        return v, exact

    # -- recursion path -------------------------------------------------------

    def cov_partial_sum(self, n: int, m: int) -> np.ndarray:
        """Exact V_{n,m} = Cov(S_{n,m}) by the forward recursion, O(m - n)."""
        if m < n:
            raise ChainConfigError(f"bad window [{n}, {m}]")
        sweep = _CovSweep(self.chain.marginal(n), self.centered(n), self.d)
        for t in range(n, m):
            sweep.step(self.chain.kernel(t), self.centered(t + 1), None)
        return sweep.cov()

    def v_matrix(self, n: int) -> np.ndarray:
        """V_n = V_{1,n}, resumable prefix sweep cached per n."""
        if n < 1:
            raise ChainConfigError("n must be >= 1")
        if n < len(self._vlist) and self._vlist[n] is not None:
            return self._vlist[n]
        if self._vsweep is None:
            self._vsweep = _CovSweep(self.chain.marginal(1), self.centered(1), self.d)
            self._vtime = 1
            self._vlist[1] = self._vsweep.cov()
        while self._vtime < n:
            t = self._vtime
            self._vsweep.step(self.chain.kernel(t), self.centered(t + 1), None)
            self._vtime += 1
            if len(self._vlist) <= self._vtime:
                self._vlist.append(None)
            self._vlist[self._vtime] = self._vsweep.cov()
        return self._vlist[n]

    def s_value(self, n: int) -> float:
        """s_n: smallest eigenvalue of V_n."""
        v = self.v_matrix(n)
        if self.d == 1:
            return float(v[0, 0])
        return float(np.linalg.eigvalsh(v)[0])

    def v_curve(self, horizon: int) -> np.ndarray:
        """V_n for every n in [1, horizon], shape (horizon, d, d).

        One prefix sweep over coordinate and coordinate-pair directions;
        off-diagonals recovered by polarization.
        """
        if horizon < 1:
            raise ChainConfigError("horizon must be >= 1")
        d = self.d
        dirs = [np.eye(d)[i] for i in range(d)]
        pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
        dirs += [np.eye(d)[i] + np.eye(d)[j] for i, j in pairs]
        pv = self.prefix_variances(1, horizon, np.array(dirs))
        v = np.zeros((horizon, d, d))
        for i in range(d):
            v[:, i, i] = pv[:, i]
        for idx, (i, j) in enumerate(pairs):
            c = 0.5 * (pv[:, d + idx] - pv[:, i] - pv[:, j])
            v[:, i, j] = c
            v[:, j, i] = c
        return v

    def s_curve(self, horizon: int) -> np.ndarray:
        """s_n for every n in [1, horizon] (one sweep, batched eigenvalues)."""
        v = self.v_curve(horizon)
        if self.d == 1:
            return v[:, 0, 0].copy()
        return np.linalg.eigvalsh(v)[:, 0]

    def var_window(self, n: int, m: int, u: np.ndarray) -> float:
        """Var(S_{n,m} . u) by a scalar recursion."""
        u = np.asarray(u, dtype=float)
        sweep = _VarSweep(self.chain.marginal(n), (self.centered(n) @ u)[:, None], 1)
        for t in range(n, m):
            sweep.step(self.chain.kernel(t), (self.centered(t + 1) @ u)[:, None])
        return float(sweep.var()[0])

    def var_segments(self, u: np.ndarray, segments) -> float:
        """Var of the sum of X_t . u over t in the union of [a, b] segments."""
        segs = sorted((int(a), int(b)) for a, b in segments)
        lo, hi = segs[0][0], max(b for _, b in segs)
        inside = _segment_mask(segs, lo, hi)
        u = np.asarray(u, dtype=float)

        def node(t):
            return (self.centered(t) @ u)[:, None] if inside[t - lo] else None

        sweep = _VarSweep(self.chain.marginal(lo), node(lo), 1)
        for t in range(lo, hi):
            sweep.step(self.chain.kernel(t), node(t + 1))
        return float(sweep.var()[0])

    def cov_segments_matrix(self, segments) -> np.ndarray:
        """Exact d x d covariance of the segment-masked partial sum."""
        segs = sorted((int(a), int(b)) for a, b in segments)
        lo, hi = segs[0][0], max(b for _, b in segs)
        inside = _segment_mask(segs, lo, hi)

        def node(t):
            return self.centered(t) if inside[t - lo] else None

        sweep = _CovSweep(self.chain.marginal(lo), node(lo), self.d)
        for t in range(lo, hi):
            sweep.step(self.chain.kernel(t), node(t + 1), None)
        return sweep.cov()

    def cross_cov_segments(self, u: np.ndarray, segs1, segs2) -> float:
        """Cov(sum over segs1 . u, sum over segs2 . u) by polarization."""
        both = list(segs1) + list(segs2)
        v_union = self.var_segments(u, both)
        return 0.5 * (v_union - self.var_segments(u, segs1) - self.var_segments(u, segs2))

    def prefix_variances(self, a: int, b: int, directions: np.ndarray) -> np.ndarray:
        """Var(S_{a,t} . u) for every t in [a, b] and every direction row.

        Returns shape (b - a + 1, n_directions).
        """
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        sweep = _VarSweep(self.chain.marginal(a), self.centered(a) @ dirs.T, dirs.shape[0])
        out = np.empty((b - a + 1, dirs.shape[0]))
        out[0] = sweep.var()
        for t in range(a, b):
            sweep.step(self.chain.kernel(t), self.centered(t + 1) @ dirs.T)
            out[t + 1 - a] = sweep.var()
        return out

    def suffix_variances(self, a0: int, b: int, directions: np.ndarray) -> np.ndarray:
        """Var(S_{a,b} . u) for every a in [a0, b] and every direction row.

        Returns shape (b - a0 + 1, n_directions); entry [a - a0, i] is the
        variance of the suffix sum starting at a.  Same reversed-kernel sweep
        as suffix_l2.
        """
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        margs = [self.chain.marginal(t) for t in range(a0, b + 1)]
        sweep = _VarSweep(margs[-1], self.centered(b) @ dirs.T, dirs.shape[0])
        out = np.empty((b - a0 + 1, dirs.shape[0]))
        out[b - a0] = sweep.var()
        for t in range(b - 1, a0 - 1, -1):
            fwd = self.chain.kernel(t)
            m_from = margs[t - a0]
            m_to = margs[t + 1 - a0]
            rev = (fwd * m_from[:, None]).T
            denom = np.where(m_to > 0, m_to, 1.0)
            rev = rev / denom[:, None]
            rev[m_to <= 0] = 0.0
            if rev.shape[1]:
                rev[m_to <= 0, 0] = 1.0
            sweep.step(rev, self.centered(t) @ dirs.T)
            out[t - a0] = sweep.var()
        return out

    def suffix_l2(self, a0: int, b: int) -> np.ndarray:
        """Vector L2 norms ||S_{a,b}||_{L2} = sqrt(trace V_{a,b}) for a in [a0, b].

        Runs one forward sweep over the time-reversed chain, so the cost is
        linear in the window length.  Entry [a - a0] corresponds to start a.
        """
        margs = [self.chain.marginal(t) for t in range(a0, b + 1)]
        sweep = _CovSweep(margs[-1], self.centered(b), self.d)
        out = np.empty(b - a0 + 1)
        out[b - a0] = math.sqrt(max(float(np.trace(sweep.cov())), 0.0))
        for t in range(b - 1, a0 - 1, -1):
            fwd = self.chain.kernel(t)  # (s_t, s_{t+1})
            m_from = margs[t - a0]
            m_to = margs[t + 1 - a0]
            rev = (fwd * m_from[:, None]).T  # (s_{t+1}, s_t), rows to renormalize
            denom = np.where(m_to > 0, m_to, 1.0)
            rev = rev / denom[:, None]
            rev[m_to <= 0] = 0.0
            if rev.shape[1]:
                rev[m_to <= 0, 0] = 1.0  # arbitrary valid row; carries zero mass
            sweep.step(rev, self.centered(t), None)
            out[t - a0] = math.sqrt(max(float(np.trace(sweep.cov())), 0.0))
        return out

    # -- pair observables -----------------------------------------------------

    def pair_mean(self, tables, j: int) -> np.ndarray:
        """E[f_j(xi_j, xi_{j+1})] for a transition observable table (s, s', d)."""
        w = np.asarray(tables(j), dtype=float)
        joint = self.chain.marginal(j)[:, None] * self.chain.kernel(j)
        return np.einsum("xy,xyc->c", joint, w)

    def pair_window_cov(self, tables, n: int, m: int) -> np.ndarray:
        """Cov of sum_{j=n}^{m} f_j(xi_j, xi_{j+1}) for transition observables."""
        sweep = _CovSweep(self.chain.marginal(n), None, np.asarray(tables(n)).shape[-1])
        for j in range(n, m + 1):
            w = np.asarray(tables(j), dtype=float) - self.pair_mean(tables, j)
            sweep.step(self.chain.kernel(j), None, w)
        return sweep.cov()

    # -- distribution-level: exact L^p ----------------------------------------

    def window_distribution(
        self, n: int, m: int, u: np.ndarray, atom_cap: int = ATOM_CAP_DEFAULT,
        grid: float = GRID_DEFAULT, segments=None,
    ) -> tuple[np.ndarray, np.ndarray, bool]:
        """Exact law of the centered projected sum over [n, m].

        Returns (values, probabilities, exact_keys).  Sums are keyed exactly
        on a common dyadic grid when all per-time values admit one (then
        exact_keys is True), otherwise on a `grid`-spaced lattice.  Raises
        SupportOverflow past `atom_cap` atoms.
        """
        u = np.asarray(u, dtype=float)
        inside = _segment_mask(sorted(segments), n, m) if segments else None

        def vals(j):
            if inside is not None and not inside[j - n]:
                return np.zeros(self.chain.state_size(j))
            return self.centered(j) @ u

        all_vals = [vals(j) for j in range(n, m + 1)]
        scale = _dyadic_scale(all_vals, m - n + 1)
        if scale is not None:
            enc = [np.rint(v * scale).astype(np.int64) for v in all_vals]
            dec = 1.0 / scale
            method_exact = True
        else:
            enc = [np.rint(v / grid).astype(np.int64) for v in all_vals]
            dec = grid
            method_exact = False

        keys = np.unique(enc[0])
        probs = np.zeros((keys.shape[0], enc[0].shape[0]))
        idx = np.searchsorted(keys, enc[0])
        probs[idx, np.arange(enc[0].shape[0])] = self.chain.marginal(n)
        for t in range(n, m):
            kernel = self.chain.kernel(t)
            trans = probs @ kernel  # (atoms, s')
            kv = enc[t + 1 - n]
            s_next = kv.shape[0]
            all_keys = (keys[:, None] + kv[None, :]).ravel()
            uniq, inv = np.unique(all_keys, return_inverse=True)
            if uniq.shape[0] > atom_cap:
                raise SupportOverflow(
                    f"support overflow: {uniq.shape[0]} atoms exceeds cap {atom_cap}"
                )
            new = np.zeros((uniq.shape[0], s_next))
            cols = np.tile(np.arange(s_next), keys.shape[0])
            np.add.at(new, (inv, cols), trans.ravel())
            keys, probs = uniq, new
        w = probs.sum(axis=1)
        return keys * dec, w, method_exact

    def lp_norm(
        self, n: int, m: int, u: np.ndarray, p: int,
        atom_cap: int = ATOM_CAP_DEFAULT, grid: float = GRID_DEFAULT,
        mc: tuple[int, int] | None = None, segments=None,
    ) -> LpNorm:
        """Exact ||S_{n,m} . u||_{L^p} for even integer p >= 2.

        Falls back to Monte Carlo (mc = (paths, seed)) only when the exact
        support overflows `atom_cap`; with mc=None that overflow raises.
        """
        p = int(p)
        if p < 2 or p % 2:
            raise ChainConfigError(f"p must be an even integer >= 2, got {p}")
        try:
            values, w, exact_keys = self.window_distribution(
                n, m, u, atom_cap=atom_cap, grid=grid, segments=segments
            )
            moment = float(np.sum(w * np.abs(values) ** p))
            return LpNorm(
                value=moment ** (1.0 / p),
                exact=True,
                method="dp-dyadic" if exact_keys else "dp-grid",
                atoms=int(values.shape[0]),
            )
        except SupportOverflow:
            if mc is None:
                raise
        paths, seed = mc
        sums = _mc_window_sums(self.chain, self, n, m, np.asarray(u, float), paths, seed, segments)
        xp = np.abs(sums) ** p
        mp = float(xp.mean())
        se_mp = float(xp.std(ddof=1) / math.sqrt(paths))
        value = mp ** (1.0 / p)
        se = se_mp / (p * mp ** ((p - 1.0) / p)) if mp > 0 else se_mp
        return LpNorm(value=value, exact=False, method="monte-carlo", atoms=0, stderr=se)

    def standardized_fourth_moment(self, n: int, u: np.ndarray, **kw) -> float:
        """E[(S_n . u)^4] / Var(S_n . u)^2; 3 for a Gaussian limit."""
        m4 = self.lp_norm(1, n, u, 4, **kw).value ** 4
        var = self.var_window(1, n, u)
        return m4 / var**2

    # -- eigenvalue structure ---------------------------------------------------

    def eigen_ratio_report(self, windows, c1: float = 1.0) -> EigenRatioReport:
        """Largest/smallest eigenvalue ratios of V_{n,m} over the given windows.

        Windows whose ||S_{n,m}||_{L2} = sqrt(trace V) falls below c1 are
        reported separately and excluded from the fitted constant.
        """
        rows, skipped = [], []
        c2 = None
        singular = None
        for (n, m) in windows:
            v = self.cov_partial_sum(n, m)
            l2 = math.sqrt(max(float(np.trace(v)), 0.0))
            if self.d == 1:
                emin = emax = float(v[0, 0])
                ratio = 1.0
            else:
                eig = np.linalg.eigvalsh(v)
                emin, emax = float(eig[0]), float(eig[-1])
                if emin <= 1e-14 * max(1.0, emax):
                    ratio = math.inf
                    singular = singular or (n, m)
                else:
                    ratio = emax / emin
            row = WindowEigen(n=n, m=m, l2=l2, eig_min=emin, eig_max=emax, ratio=ratio)
            if l2 < c1:
                skipped.append(row)
                continue
            rows.append(row)
            c2 = ratio if c2 is None else max(c2, ratio)
        return EigenRatioReport(
            c1=c1, windows=rows, skipped=skipped, c2=c2, singular_witness=singular
        )


# ---------------------------------------------------------------------------
# helpers


def _segment_mask(segs, lo: int, hi: int) -> np.ndarray:
    inside = np.zeros(hi - lo + 1, dtype=bool)
    for a, b in segs:
        if b < a:
            raise ChainConfigError(f"bad segment [{a}, {b}]")
        inside[max(a, lo) - lo : b - lo + 1] = True
    return inside


def _dyadic_scale(all_vals, length: int) -> float | None:
    """Common power-of-two scale keying every value exactly, or None."""
    max_den = 1
    max_abs = 0.0
    for v in all_vals:
        for x in v:
            if x != 0.0:
                den = Fraction(float(x)).denominator
                if den > _DYADIC_MAX_DEN:
                    return None
                max_den = max(max_den, den)
            max_abs = max(max_abs, abs(float(x)))
    if max_abs * max_den * length >= 2**62:
        return None
    return float(max_den)


def _mc_window_sums(chain, engine, n, m, u, paths, seed, segments=None):
    inside = _segment_mask(sorted(segments), n, m) if segments else None
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    vals = {}
    cums = {}
    for j in range(n, m + 1):
        vals[j] = engine.centered(j) @ u
        if inside is not None and not inside[j - n]:
            vals[j] = np.zeros_like(vals[j])
    state = rng.choice(chain.marginal(n).shape[0], size=paths, p=chain.marginal(n))
    total = vals[n][state].copy()
    for t in range(n, m):
        k = chain.kernel(t)
        cum = cums.get(t)
        if cum is None:
            cum = np.cumsum(k, axis=1)
            cums[t] = cum
        r = rng.random(paths)
        state = (r[:, None] > cum[state]).sum(axis=1)
        total += vals[t + 1][state]
    return total


_ENGINES: WeakKeyDictionary = WeakKeyDictionary()


def engine_for(chain: ChainSpec) -> MomentEngine:
    """Memoized engine per chain instance."""
    eng = _ENGINES.get(chain)
    if eng is None:
        eng = MomentEngine(chain)
        _ENGINES[chain] = eng
    return eng


# -- free-function API mirroring the engine ----------------------------------


def mean_obs(chain: ChainSpec, j: int) -> np.ndarray:
    return engine_for(chain).mean_obs(j)


def cov_pair(chain: ChainSpec, i: int, j: int) -> np.ndarray:
    return engine_for(chain).cov_pair(i, j)


def cov_partial_sum(chain: ChainSpec, n: int, m: int) -> np.ndarray:
    return engine_for(chain).cov_partial_sum(n, m)


def s_value(chain: ChainSpec, n: int) -> float:
    return engine_for(chain).s_value(n)


def lp_norm_partial_sum(chain: ChainSpec, n: int, m: int, u, p: int, **kw) -> LpNorm:
    return engine_for(chain).lp_norm(n, m, u, p, **kw)


def eigen_ratio_report(chain: ChainSpec, windows, c1: float = 1.0) -> EigenRatioReport:
    return engine_for(chain).eigen_ratio_report(windows, c1=c1)
