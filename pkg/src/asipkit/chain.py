"""Time-inhomogeneous finite-state Markov chains with bounded vector observables.

A chain is described by a per-time kernel schedule (explicit list, periodic
cycle, or a two-kernel mixture with time-varying weights), an initial law,
and a per-time observable table mapping states to vectors in R^d with a
declared uniform bound L.  Time indices are 1-based: ``kernel(j)`` is the
transition law from time j to time j+1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

STOCHASTIC_ATOL = 1e-12


class ChainConfigError(ValueError):
    """Raised when a chain document fails validation."""


def _as_matrix(obj, what: str) -> np.ndarray:
    m = np.asarray(obj, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ChainConfigError(f"{what}: expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ChainConfigError(f"{what}: non-finite entries")
    return m


def _check_stochastic(m: np.ndarray, what: str) -> np.ndarray:
    if np.any(m < -STOCHASTIC_ATOL):
        i = int(np.argwhere(m < -STOCHASTIC_ATOL)[0][0])
        raise ChainConfigError(f"{what}: row {i} has a negative entry")
    sums = m.sum(axis=1)
    bad = np.argwhere(np.abs(sums - 1.0) > STOCHASTIC_ATOL)
    if bad.size:
        i = int(bad[0][0])
        raise ChainConfigError(
            f"{what}: row {i} sum {sums[i]!r} != 1 (deficit {sums[i] - 1.0:+.3e})"
        )
    return np.clip(m, 0.0, None)


def _check_probability_vector(v, what: str) -> np.ndarray:
    p = np.asarray(v, dtype=float)
    if p.ndim != 1:
        raise ChainConfigError(f"{what}: expected a vector")
    if np.any(p < -STOCHASTIC_ATOL):
        raise ChainConfigError(f"{what}: negative mass")
    s = p.sum()
    if abs(s - 1.0) > STOCHASTIC_ATOL:
        raise ChainConfigError(f"{what}: mass {s!r} != 1 (deficit {s - 1.0:+.3e})")
    return np.clip(p, 0.0, None)


class KernelSchedule:
    """Base class; concrete schedules implement kernel(j) for 1-based step j."""

    n_steps: int | None = None  # None means unbounded

    def kernel(self, j: int) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError


class ExplicitKernels(KernelSchedule):
    def __init__(self, kernels: Sequence):
        self.kernels = [
            _check_stochastic(_as_matrix(k, f"kernel {t + 1}"), f"kernel {t + 1}")
            for t, k in enumerate(kernels)
        ]
        if not self.kernels:
            raise ChainConfigError("empty kernel list")
        for t in range(len(self.kernels) - 1):
            if self.kernels[t].shape[1] != self.kernels[t + 1].shape[0]:
                raise ChainConfigError(
                    f"kernel {t + 1} has {self.kernels[t].shape[1]} columns but "
                    f"kernel {t + 2} has {self.kernels[t + 1].shape[0]} rows"
                )
        self.n_steps = len(self.kernels)

    def kernel(self, j: int) -> np.ndarray:
        if not 1 <= j <= self.n_steps:
            raise ChainConfigError(f"kernel index {j} outside explicit horizon {self.n_steps}")
        return self.kernels[j - 1]


class PeriodicKernels(KernelSchedule):
    def __init__(self, kernels: Sequence):
        self.kernels = [
            _check_stochastic(_as_matrix(k, f"kernel {t + 1}"), f"kernel {t + 1}")
            for t, k in enumerate(kernels)
        ]
        if not self.kernels:
            raise ChainConfigError("empty periodic kernel list")
        p = len(self.kernels)
        for t in range(p):
            nxt = self.kernels[(t + 1) % p]
            if self.kernels[t].shape[1] != nxt.shape[0]:
                raise ChainConfigError(
                    f"periodic kernels {t + 1} -> {(t + 1) % p + 1} have incompatible shapes"
                )
        self.period = p

    def kernel(self, j: int) -> np.ndarray:
        if j < 1:
            raise ChainConfigError(f"kernel index {j} < 1")
        return self.kernels[(j - 1) % self.period]


class MixtureKernels(KernelSchedule):
    """P_j = (1 - w(j)) K0 + w(j) K1 with a deterministic weight rule."""

    def __init__(self, k0, k1, weight_rule: dict):
        self.k0 = _check_stochastic(_as_matrix(k0, "mixture base 0"), "mixture base 0")
        self.k1 = _check_stochastic(_as_matrix(k1, "mixture base 1"), "mixture base 1")
        if self.k0.shape != self.k1.shape or self.k0.shape[0] != self.k0.shape[1]:
            raise ChainConfigError("mixture bases must be square and same shape")
        self.rule = dict(weight_rule)
        kind = self.rule.get("kind")
        if kind not in ("constant", "linear", "cosine"):
            raise ChainConfigError(f"unknown mixture weight kind {kind!r}")
        self._cache: dict[int, np.ndarray] = {}

    def weight(self, j: int) -> float:
        r = self.rule
        if r["kind"] == "constant":
            w = float(r["value"])
        elif r["kind"] == "linear":
            # ramp from start to end over `length` steps, clipped beyond
            t = min(max(j - 1, 0), int(r["length"])) / float(r["length"])
            w = float(r["start"]) + (float(r["end"]) - float(r["start"])) * t
        else:  # cosine
            w = float(r.get("center", 0.5)) + float(r.get("amplitude", 0.5)) * math.cos(
                2.0 * math.pi * (j - 1) / float(r["period"])
            )
        if not 0.0 <= w <= 1.0:
            raise ChainConfigError(f"mixture weight {w!r} at step {j} outside [0, 1]")
        return w

    def kernel(self, j: int) -> np.ndarray:
        if j < 1:
            raise ChainConfigError(f"kernel index {j} < 1")
        k = self._cache.get(j)
        if k is None:
            w = self.weight(j)
            k = (1.0 - w) * self.k0 + w * self.k1
            self._cache[j] = k
        return k


class ObservableSchedule:
    """Per-time tables f_j: state -> R^d, shaped (state_size(j), d)."""

    def __init__(self, kind: str, tables: Sequence[np.ndarray]):
        self.kind = kind
        self.tables = tables

    @staticmethod
    def _normalize_table(tab, d_hint: int | None, what: str) -> np.ndarray:
        a = np.asarray(tab, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2:
            raise ChainConfigError(f"{what}: expected (states, d) table")
        if not np.all(np.isfinite(a)):
            raise ChainConfigError(f"{what}: non-finite values")
        if d_hint is not None and a.shape[1] != d_hint:
            raise ChainConfigError(f"{what}: value dimension {a.shape[1]} != declared d={d_hint}")
        return a

    @classmethod
    def constant(cls, table, d: int | None = None):
        return cls("constant", [cls._normalize_table(table, d, "observable")])

    @classmethod
    def periodic(cls, tables, d: int | None = None):
        if not tables:
            raise ChainConfigError("empty periodic observable list")
        return cls(
            "periodic",
            [cls._normalize_table(t, d, f"observable {i + 1}") for i, t in enumerate(tables)],
        )

    @classmethod
    def explicit(cls, tables, d: int | None = None):
        if not tables:
            raise ChainConfigError("empty observable list")
        return cls(
            "explicit",
            [cls._normalize_table(t, d, f"observable {i + 1}") for i, t in enumerate(tables)],
        )

    def table(self, j: int) -> np.ndarray:
        if j < 1:
            raise ChainConfigError(f"observable index {j} < 1")
        if self.kind == "constant":
            return self.tables[0]
        if self.kind == "periodic":
            return self.tables[(j - 1) % len(self.tables)]
        if j > len(self.tables):
            raise ChainConfigError(f"observable index {j} outside explicit horizon {len(self.tables)}")
        return self.tables[j - 1]

    @property
    def d(self) -> int:
        return self.tables[0].shape[1]


class ChainSpec:
    """A validated chain: kernel schedule, initial law, observable, bound L.

    Parameters
    ----------
    kernels : KernelSchedule
    observable : ObservableSchedule
    initial : array_like
        Law of the state at time 1.
    L : float
        Declared uniform sup-norm bound on observable values.
    name : str
        Label used in reports.
    """

    def __init__(self, kernels, observable, initial, L, name="chain"):
        self.kernels = kernels
        self.observable = observable
        self.initial = _check_probability_vector(initial, "initial law")
        self.L = float(L)
        if self.L <= 0:
            raise ChainConfigError("bound L must be positive")
        self.name = str(name)
        self.d = observable.d
        self._marginals: list[np.ndarray] = [self.initial]
        if self.initial.shape[0] != self.state_size(1):
            raise ChainConfigError(
                f"initial law has {self.initial.shape[0]} states, kernel 1 expects "
                f"{self.state_size(1)}"
            )
        self._validate_declared_tables()

    # -- structure ---------------------------------------------------------

    @property
    def max_time(self) -> int | None:
        """Largest addressable time index, or None when unbounded."""
        n = self.kernels.n_steps
        return None if n is None else n + 1

    def _check_time(self, j: int) -> None:
        if j < 1:
            raise ChainConfigError(f"time index {j} < 1")
        m = self.max_time
        if m is not None and j > m:
            raise ChainConfigError(f"time index {j} outside horizon {m}")

    def kernel(self, j: int) -> np.ndarray:
        return self.kernels.kernel(j)

    def state_size(self, j: int) -> int:
        self._check_time(j)
        m = self.max_time
        if m is not None and j == m:
            return self.kernel(j - 1).shape[1]
        return self.kernel(j).shape[0]

    def obs(self, j: int) -> np.ndarray:
        """Observable table at time j, shape (state_size(j), d)."""
        self._check_time(j)
        t = self.observable.table(j)
        if t.shape[0] != self.state_size(j):
            raise ChainConfigError(
                f"observable at time {j} has {t.shape[0]} rows, state space has "
                f"{self.state_size(j)}"
            )
        return t

    def _validate_declared_tables(self) -> None:
        for i, t in enumerate(self.observable.tables):
            if np.max(np.abs(t)) > self.L + 1e-12:
                raise ChainConfigError(
                    f"observable table {i + 1} exceeds declared bound L={self.L!r} "
                    f"(max |f| = {np.max(np.abs(t))!r})"
                )

    # -- exact laws --------------------------------------------------------

    def marginal(self, j: int) -> np.ndarray:
        """Exact law of the state at time j (forward propagation, memoized)."""
        self._check_time(j)
        while len(self._marginals) < j:
            t = len(self._marginals)  # have marginals for times 1..t
            nxt = self._marginals[-1] @ self.kernel(t)
            self._marginals.append(nxt)
        return self._marginals[j - 1]

    def step_matrix(self, i: int, j: int) -> np.ndarray:
        """Product P_i ... P_{j-1}; identity when i == j."""
        self._check_time(i)
        self._check_time(j)
        if j < i:
            raise ChainConfigError(f"step_matrix needs i <= j, got {i} > {j}")
        m = np.eye(self.state_size(i))
        for t in range(i, j):
            m = m @ self.kernel(t)
        return m


@dataclass
class JointLaw:
    """Exact joint law of (state at time i, state at time j)."""

    i: int
    j: int
    matrix: np.ndarray  # shape (|X_i|, |X_j|)
    marginal_i: np.ndarray
    marginal_j: np.ndarray


def pair_joint(chain: ChainSpec, i: int, j: int) -> JointLaw:
    """P(xi_i = x, xi_j = y) as diag(marginal(i)) @ P_i ... P_{j-1}."""
    if j < i:
        raise ChainConfigError(f"pair_joint needs i <= j, got {i} > {j}")
    mi = chain.marginal(i)
    mat = mi[:, None] * chain.step_matrix(i, j)
    return JointLaw(i=i, j=j, matrix=mat, marginal_i=mi, marginal_j=chain.marginal(j))


# -- uniform ellipticity ----------------------------------------------------


@dataclass
class EllipticityReport:
    eps0: float
    sup_density: float
    min_two_step: float
    passes_upper: bool  # sup p_i(x, y) <= 1 / eps0
    passes_lower: bool  # inf two-step density >= eps0
    witness_upper: tuple[int, int, int] | None  # (i, x, y)
    witness_lower: tuple[int, int, int] | None  # (i, x, z)

    @property
    def passes(self) -> bool:
        return self.passes_upper and self.passes_lower


def check_uniform_ellipticity(chain: ChainSpec, eps0: float, times) -> EllipticityReport:
    """Check sup p_i(x,y) <= 1/eps0 and the two-step lower bound >= eps0.

    Densities are with respect to counting measure, so one-step densities are
    kernel entries and the two-step density is the entry of P_i @ P_{i+1}.
    `times` lists the step indices i to scan.
    """
    if eps0 <= 0:
        raise ChainConfigError("eps0 must be positive")
    sup_d = -np.inf
    min_two = np.inf
    wit_u = wit_l = None
    times = list(times)
    if not times:
        raise ChainConfigError("empty time range")
    for i in times:
        k = chain.kernel(i)
        xy = np.unravel_index(int(np.argmax(k)), k.shape)
        if k[xy] > sup_d:
            sup_d = float(k[xy])
            wit_u = (i, int(xy[0]), int(xy[1]))
        two = k @ chain.kernel(i + 1)
        xz = np.unravel_index(int(np.argmin(two)), two.shape)
        if two[xz] < min_two:
            min_two = float(two[xz])
            wit_l = (i, int(xz[0]), int(xz[1]))
    return EllipticityReport(
        eps0=float(eps0),
        sup_density=sup_d,
        min_two_step=min_two,
        passes_upper=sup_d <= 1.0 / eps0 + 1e-15,
        passes_lower=min_two >= eps0 - 1e-15,
        witness_upper=wit_u,
        witness_lower=wit_l,
    )


# -- document parsing --------------------------------------------------------


def _parse_kernels(spec) -> KernelSchedule:
    if isinstance(spec, dict):
        if "periodic" in spec:
            return PeriodicKernels(spec["periodic"])
        if "mixture" in spec:
            mx = spec["mixture"]
            base = mx.get("base")
            if not isinstance(base, (list, tuple)) or len(base) != 2:
                raise ChainConfigError("mixture needs exactly two base kernels")
            return MixtureKernels(base[0], base[1], mx.get("weights", {}))
        raise ChainConfigError(f"unknown kernel schedule keys {sorted(spec)}")
    if isinstance(spec, (list, tuple)):
        return ExplicitKernels(spec)
    raise ChainConfigError("kernels must be a list of matrices or a schedule object")


def _parse_observable(spec, d: int | None) -> ObservableSchedule:
    if isinstance(spec, dict):
        if "constant" in spec:
            return ObservableSchedule.constant(spec["constant"], d)
        if "periodic" in spec:
            return ObservableSchedule.periodic(spec["periodic"], d)
        if "explicit" in spec:
            return ObservableSchedule.explicit(spec["explicit"], d)
        raise ChainConfigError(f"unknown observable keys {sorted(spec)}")
    if isinstance(spec, (list, tuple)):
        # bare list reads as one table per time
        return ObservableSchedule.explicit(spec, d)
    raise ChainConfigError("observable must be a table list or a schedule object")


def build_chain(doc) -> ChainSpec:
    """Build a ChainSpec from a dict, JSON string, or path to a JSON file.

    Recognized fields: states, kernels (list | {periodic} | {mixture}),
    initial, observable (list | {constant} | {periodic} | {explicit}),
    L, d, name.
    """
    if isinstance(doc, (str, Path)):
        p = Path(doc)
        if p.exists():
            doc = json.loads(p.read_text())
        else:
            try:
                doc = json.loads(str(doc))
            except json.JSONDecodeError as e:
                raise ChainConfigError(f"chain file not found: {doc}") from e
    if not isinstance(doc, dict):
        raise ChainConfigError("chain document must be a JSON object")
    missing = [k for k in ("kernels", "initial", "observable", "L") if k not in doc]
    if missing:
        raise ChainConfigError(f"chain document missing fields {missing}")
    kernels = _parse_kernels(doc["kernels"])
    d = int(doc["d"]) if "d" in doc else None
    observable = _parse_observable(doc["observable"], d)
    chain = ChainSpec(
        kernels=kernels,
        observable=observable,
        initial=doc["initial"],
        L=doc["L"],
        name=doc.get("name", "chain"),
    )
    if "states" in doc:
        declared = doc["states"]
        sizes = declared if isinstance(declared, (list, tuple)) else [declared]
        for j, s in enumerate(sizes, start=1):
            if chain.state_size(j) != int(s):
                raise ChainConfigError(
                    f"declared {s} states at time {j}, kernels imply {chain.state_size(j)}"
                )
    if "d" in doc and chain.d != int(doc["d"]):
        raise ChainConfigError(f"declared d={doc['d']}, observable has d={chain.d}")
    return chain
