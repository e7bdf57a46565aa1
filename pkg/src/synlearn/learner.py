"""Syndrome-class learning: partitions, design matrices, solvers and rate splitting."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import lsq_linear

from . import gf2
from .noise import NoiseModel, channel_probs_from_log_mu, mu_matrix, v_matrix
from .pauli import PauliOperator, local_index_raw, product, walsh_matrix
from .syndrome import error_patterns, log_expectations

log = logging.getLogger(__name__)


class LearningError(ValueError):
    pass


class InsufficientSamples(LearningError):
    """Empirical expectations are nonpositive or leave the design matrix rank deficient."""


# -- partition ---------------------------------------------------------------------------

@dataclass
class SyndromeClassPartition:
    """Errors grouped by syndrome pattern over the generators.

    ``patterns[c]`` is the int pattern of nontrivial class c (bit i = generator i);
    classes are ordered by pattern value. ``members[c]`` lists ErrorIndex values.
    """

    num_gens: int
    num_errors: int
    patterns: List[int]
    members: List[List[int]]
    trivial: List[int]
    error_pattern: List[int]

    @property
    def num_classes(self) -> int:
        return len(self.patterns)

    def class_of(self) -> np.ndarray:
        """Class id per error, -1 for the trivial class."""
        out = np.full(self.num_errors, -1, dtype=np.int64)
        for c, mem in enumerate(self.members):
            out[mem] = c
        return out

    def pattern_matrix(self) -> np.ndarray:
        """(num_classes, num_gens) 0/1 matrix of class patterns."""
        return _bits_matrix(self.patterns, self.num_gens)

    def class_sums(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return np.array([values[m].sum() for m in self.members])


def _bits_matrix(ints: Sequence[int], width: int) -> np.ndarray:
    out = np.zeros((len(ints), width), dtype=np.int64)
    for r, v in enumerate(ints):
        while v:
            low = v & -v
            out[r, low.bit_length() - 1] = 1
            v ^= low
    return out


def partition_classes(gens: Sequence[PauliOperator], model: NoiseModel) -> SyndromeClassPartition:
    if not gens:
        raise LearningError("no generators")
    if gf2.rank([g.symplectic() for g in gens]) != len(gens):
        raise LearningError("generators are dependent")
    pats = error_patterns(model, gens)
    groups: Dict[int, List[int]] = {}
    for e, s in enumerate(pats):
        groups.setdefault(s, []).append(e)
    trivial = groups.pop(0, [])
    keys = sorted(groups)
    return SyndromeClassPartition(len(gens), len(pats), keys, [groups[k] for k in keys], trivial, pats)


# -- stabilizer subsets and matrices ------------------------------------------------------

def correlation_graph(gens: Sequence[PauliOperator], model: NoiseModel) -> List[set]:
    """Adjacency sets: two generators are joined when some channel support meets both."""
    touching: Dict[int, List[int]] = {}
    for i, g in enumerate(gens):
        m = g.x | g.z
        while m:
            low = m & -m
            touching.setdefault(low.bit_length() - 1, []).append(i)
            m ^= low
    adj = [set() for _ in gens]
    for ch in model.channels:
        near = sorted({i for q in ch.support for i in touching.get(q, ())})
        for a, b in itertools.combinations(near, 2):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def connected_subgraphs(adj: Sequence[set], order: int, previous: Optional[List[Tuple[int, ...]]] = None):
    """Connected vertex sets of size ``order``, grown from those of size ``order - 1``."""
    if order == 1:
        return [(i,) for i in range(len(adj))]
    seen = set()
    out = []
    for S in previous:
        nb = set().union(*(adj[v] for v in S)) - set(S)
        for k in sorted(nb):
            T = tuple(sorted(S + (k,)))
            if T not in seen:
                seen.add(T)
                out.append(T)
    out.sort()
    return out


def d_prime_rows(masks: Sequence[int], partition: SyndromeClassPartition) -> np.ndarray:
    """D'[M, C] = parity of the overlap between M's generator mask and the class pattern."""
    R = _bits_matrix(masks, partition.num_gens)
    return (R @ partition.pattern_matrix().T) & 1


class _IncrementalRealRank:
    """Orthonormal row basis kept by two-pass Gram-Schmidt."""

    def __init__(self, dim: int, tol: float = 1e-8):
        self.Q = np.zeros((0, dim))
        self.tol = tol

    def residuals(self, rows: np.ndarray) -> np.ndarray:
        R = rows.astype(float)
        for _ in range(2):
            R = R - (R @ self.Q.T) @ self.Q
        return R

    def try_add(self, row: np.ndarray) -> bool:
        r = self.residuals(row[None, :])[0]
        nrm = np.linalg.norm(r)
        if nrm <= self.tol * max(1.0, np.linalg.norm(row)):
            return False
        self.Q = np.vstack([self.Q, r / nrm])
        return True

    @property
    def rank(self) -> int:
        return self.Q.shape[0]


def minimal_subset(
    gens: Sequence[PauliOperator], model: NoiseModel, partition: Optional[SyndromeClassPartition] = None,
    max_order: int = 8, batch: int = 4096,
) -> List[int]:
    """Generator-product masks whose D' rows reach rank |C*|, by connected subgraphs of growing order.

    Returns exactly |C*| masks; raises when ``max_order`` is exhausted first.
    """
    partition = partition or partition_classes(gens, model)
    target = partition.num_classes
    adj = correlation_graph(gens, model)
    basis = _IncrementalRealRank(target)
    chosen: List[int] = []
    level = None
    for v in range(1, max_order + 1):
        level = connected_subgraphs(adj, v, level)
        if not level:
            break
        masks = [sum(1 << i for i in S) for S in level]
        for start in range(0, len(masks), batch):
            chunk = masks[start : start + batch]
            rows = d_prime_rows(chunk, partition)
            # cheap prefilter: rows already in the span are skipped without a full update
            res = np.linalg.norm(basis.residuals(rows), axis=1)
            for m, row, r in zip(chunk, rows, res):
                if r <= basis.tol * max(1.0, np.linalg.norm(row)):
                    continue
                if basis.try_add(row):
                    chosen.append(m)
                    if len(chosen) == target:
                        return chosen
    raise LearningError(f"rank {len(chosen)} < |C*| = {target} after subgraphs of order {max_order}")


def analytic_subset(partition: SyndromeClassPartition) -> List[int]:
    """All nonempty sub-products of each class pattern; what the recursive solver consumes."""
    seen = set()
    for J in partition.patterns:
        s = J
        while s:
            seen.add(s)
            s = (s - 1) & J
    return sorted(seen)


def mask_operator(mask: int, gens: Sequence[PauliOperator]) -> PauliOperator:
    return product([g for i, g in enumerate(gens) if (mask >> i) & 1], gens[0].n)


def a_matrix(ops: Sequence[PauliOperator], model: NoiseModel) -> sparse.csr_matrix:
    """A[M, e] = 1 when M restricted to the support of e equals e's local Pauli."""
    offsets = model.channel_offsets()
    by_qubit: Dict[int, List[int]] = {}
    for c, ch in enumerate(model.channels):
        for q in ch.support:
            by_qubit.setdefault(q, []).append(c)
    rows, cols = [], []
    for r, M in enumerate(ops):
        m = M.x | M.z
        chans = set()
        while m:
            low = m & -m
            chans.update(by_qubit.get(low.bit_length() - 1, ()))
            m ^= low
        for c in sorted(chans):
            idx = local_index_raw(M.x, M.z, model.channels[c].support)
            if idx:
                rows.append(r)
                cols.append(offsets[c] + idx - 1)
    data = np.ones(len(rows))
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(ops), model.num_errors))


def d_matrix(masks: Sequence[int], partition: SyndromeClassPartition) -> np.ndarray:
    """D[M, e] = commutator of M with error e."""
    R = _bits_matrix(masks, partition.num_gens)
    E = _bits_matrix(partition.error_pattern, partition.num_gens)
    return (R @ E.T) & 1


def block_v_matrix(model: NoiseModel) -> sparse.csr_matrix:
    return sparse.block_diag([v_matrix(ch.k) for ch in model.channels], format="csr")


# -- learning problem -----------------------------------------------------------------------

@dataclass
class LearningProblem:
    gens: List[PauliOperator]
    model: NoiseModel
    partition: SyndromeClassPartition
    masks: List[int]
    subset_kind: str
    _ops: Optional[List[PauliOperator]] = field(default=None, repr=False)
    _A: Optional[sparse.csr_matrix] = field(default=None, repr=False)
    _Dp: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def operators(self) -> List[PauliOperator]:
        if self._ops is None:
            self._ops = [mask_operator(m, self.gens) for m in self.masks]
        return self._ops

    @property
    def A(self) -> sparse.csr_matrix:
        if self._A is None:
            self._A = a_matrix(self.operators, self.model)
        return self._A

    @property
    def D_prime(self) -> np.ndarray:
        if self._Dp is None:
            self._Dp = d_prime_rows(self.masks, self.partition)
        return self._Dp

    def D(self) -> np.ndarray:
        return d_matrix(self.masks, self.partition)

    def exact_log_expectations(self, true_model: NoiseModel) -> np.ndarray:
        return log_expectations(true_model, self.operators)

    def with_masks(self, masks: Sequence[int], kind: str) -> "LearningProblem":
        return LearningProblem(self.gens, self.model, self.partition, list(masks), kind)


def build_problem(
    gens: Sequence[PauliOperator], model: NoiseModel, stabilizer_set: str | Sequence[int] = "analytic"
) -> LearningProblem:
    """``stabilizer_set``: 'analytic', 'minimal', 'both' (union) or explicit generator masks."""
    gens = list(gens)
    part = partition_classes(gens, model)
    if isinstance(stabilizer_set, str):
        if stabilizer_set == "analytic":
            masks = analytic_subset(part)
        elif stabilizer_set == "minimal":
            masks = minimal_subset(gens, model, part)
        elif stabilizer_set == "both":
            masks = sorted(set(analytic_subset(part)) | set(minimal_subset(gens, model, part)))
        else:
            raise LearningError(f"unknown stabilizer set {stabilizer_set!r}")
        kind = stabilizer_set
    else:
        masks = [int(m) for m in stabilizer_set]
        kind = "custom"
    return LearningProblem(gens, model, part, masks, kind)


def empirical_log_expectations(problem: LearningProblem, dataset) -> Tuple[np.ndarray, np.ndarray]:
    """(log Lambda~, keep-mask) from a dataset tracking the generators; nonpositive rows are dropped."""
    lam = dataset.product_expectations(problem.masks)
    keep = lam > 0
    y = np.full(len(lam), np.nan)
    y[keep] = np.log(lam[keep])
    if not keep.all():
        log.warning("dropping %d stabilizer rows with nonpositive empirical expectation", int((~keep).sum()))
    return y, keep


# -- solvers for log nu -----------------------------------------------------------------------

def _submasks(J: int):
    s = J
    while s:
        yield s
        s = (s - 1) & J


def recursive_solve(y: Dict[int, float] | np.ndarray, partition: SyndromeClassPartition, masks: Optional[Sequence[int]] = None) -> np.ndarray:
    """log nu_C for every nontrivial class by inclusion-exclusion over sub-products.

    ``y`` maps generator masks to log Lambda (or is an array aligned with ``masks``;
    a 2-D array solves several right-hand sides at once). Classes are processed by
    decreasing pattern weight: X_C = -sum_{J(C') > J(C)} X_C' + 2^{1-|J|} sum_{S<=J} (-1)^{|S|-1} Y_S.
    """
    if not isinstance(y, dict):
        arr = np.asarray(y, dtype=float)
        if masks is None:
            raise LearningError("masks are required with an array of expectations")
        y = {int(m): arr[i] for i, m in enumerate(masks)}
    pats = partition.patterns
    sample = next(iter(y.values())) if y else 0.0
    shape = np.shape(sample)
    X = np.zeros((len(pats),) + shape)
    order = sorted(range(len(pats)), key=lambda c: -pats[c].bit_count())
    done: List[int] = []
    for c in order:
        J = pats[c]
        w = J.bit_count()
        acc = np.zeros(shape)
        for S in _submasks(J):
            if S not in y:
                raise LearningError(f"missing expectation for generator product {S:#x}")
            v = y[S]
            if np.any(np.isnan(v)):
                raise InsufficientSamples(f"expectation for product {S:#x} was dropped; the recursive solver needs it")
            acc = acc + (v if S.bit_count() & 1 else -v)
        val = acc * 2.0 ** (1 - w)
        for c2 in done:
            J2 = pats[c2]
            if J2 != J and (J2 & J) == J:
                val = val - X[c2]
        X[c] = val
        done.append(c)
    return X


def lsq_solve(y: np.ndarray, D_prime: np.ndarray) -> Tuple[np.ndarray, dict]:
    """Bounded least squares for log nu <= 0."""
    res = lsq_linear(D_prime.astype(float), y, bounds=(-np.inf, 0.0), method="bvls", tol=1e-14, lsmr_tol=None)
    return res.x, {"status": int(res.status), "cost": float(res.cost), "iterations": int(getattr(res, "nit", 0))}


def pinv_solve(y: np.ndarray, D_prime: np.ndarray) -> np.ndarray:
    return np.linalg.lstsq(D_prime.astype(float), y, rcond=None)[0]


# -- constraints --------------------------------------------------------------------------------

TYPED_KINDS = ("idle", "1q", "2q", "measure")


def strengths(model: NoiseModel, spec: str | Sequence[float] | np.ndarray = "uniform") -> np.ndarray:
    """Relative strength r(e) per error.

    'uniform' gives 1 everywhere. 'typed:a,b,c,d' gives channel totals a..d for
    idle / 1q / 2q / measure locations (prep uses the 1q value), spread evenly over
    the channel's components. An array is taken as r directly (e.g. the true rates).
    """
    if isinstance(spec, str):
        if spec == "uniform":
            return np.ones(model.num_errors)
        if spec.startswith("typed"):
            vals = [float(v) for v in spec.split(":", 1)[1].split(",")] if ":" in spec else [1, 3, 10, 20]
            if len(vals) != 4:
                raise LearningError("typed strengths need four values: idle, 1q, 2q, measure")
            table = dict(zip(TYPED_KINDS, vals))
            table.setdefault("prep", table["1q"])
            out = []
            for ch in model.channels:
                tot = table.get(ch.kind, table["1q"])
                out.extend([tot / (4**ch.k - 1)] * (4**ch.k - 1))
            return np.array(out)
        raise LearningError(f"unknown strength spec {spec!r}")
    r = np.asarray(spec, dtype=float)
    if r.shape != (model.num_errors,):
        raise LearningError("strength vector length does not match the error count")
    return r


def build_constraints(
    partition: SyndromeClassPartition,
    r: np.ndarray,
    modes: Sequence[str] = ("class_ratio", "trivial_average"),
    k_extra: int = 0,
    seed: int = 0,
) -> sparse.csr_matrix:
    """Rows of B with B p = 0 encoding the prior relative strengths.

    class_ratio: p_eC / r(e_C) = p_e' / r(e') inside each nontrivial class (lowest index is e_C).
    trivial_average: each trivial error tracks the r-weighted mean over detectable errors.
    intraclass_uniformity: ``k_extra`` random errors tied to the r-weighted mean of all others.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise LearningError("relative strengths must be positive")
    rows, cols, vals = [], [], []
    nrow = 0

    def add(entries):
        nonlocal nrow
        for j, v in entries:
            rows.append(nrow)
            cols.append(j)
            vals.append(v)
        nrow += 1

    if "class_ratio" in modes:
        for mem in partition.members:
            rep = min(mem)
            for e in sorted(mem):
                if e != rep:
                    add([(rep, 1.0), (e, -r[rep] / r[e])])
    if "trivial_average" in modes and partition.trivial:
        detectable = sorted(e for mem in partition.members for e in mem)
        nd = len(detectable)
        for e0 in partition.trivial:
            add([(e0, 1.0)] + [(j, -r[e0] / (nd * r[j])) for j in detectable])
    if "intraclass_uniformity" in modes and k_extra > 0:
        n_e = partition.num_errors
        picks = np.random.default_rng(seed).choice(n_e, size=min(k_extra, n_e), replace=False)
        for k in sorted(int(v) for v in picks):
            add([(k, 1.0)] + [(j, -r[k] / ((n_e - 2) * r[j])) for j in range(n_e) if j != k])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(nrow, partition.num_errors))


# -- splitting class eigenvalues into rates -----------------------------------------------------------

def split_log_nu(
    log_nu: np.ndarray, partition: SyndromeClassPartition, model: NoiseModel, r: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-error log mu and rates from class values, using the strengths r.

    Inside a class, log nu_C is shared in proportion to r; trivial errors take the
    r-weighted mean of the detectable ones. Each channel is then inverted exactly
    from its log mu vector, so singleton classes are reproduced without bias.
    """
    log_mu = np.zeros(partition.num_errors)
    for c, mem in enumerate(partition.members):
        w = r[mem] / r[mem].sum()
        log_mu[mem] = log_nu[c] * w
    if partition.trivial:
        det = np.concatenate([np.asarray(m) for m in partition.members]) if partition.members else np.zeros(0, int)
        mean = float(np.mean(log_mu[det] / r[det])) if det.size else 0.0
        log_mu[partition.trivial] = r[partition.trivial] * mean
    p = np.zeros(partition.num_errors)
    off = model.channel_offsets()
    for c, ch in enumerate(model.channels):
        probs = channel_probs_from_log_mu(log_mu[off[c] : off[c + 1]], ch.k)
        p[off[c] : off[c + 1]] = probs[1:]
    return log_mu, p


# -- nonlinear objective over p ----------------------------------------------------------------------

class _ChannelMaps:
    """Vectorized p -> log lambda for groups of equal-size channels."""

    def __init__(self, model: NoiseModel):
        off = model.channel_offsets()
        self.groups = []
        by_k: Dict[int, List[int]] = {}
        for c, ch in enumerate(model.channels):
            by_k.setdefault(ch.k, []).append(c)
        for k, chans in sorted(by_k.items()):
            idx = np.array([np.arange(off[c], off[c + 1]) for c in chans])
            W = walsh_matrix(k)
            self.groups.append((k, idx, W))

    def lam(self, p: np.ndarray) -> np.ndarray:
        out = np.empty_like(p)
        for k, idx, W in self.groups:
            P = p[idx]
            # lambda_O = 1 + sum_e (W[O, e] - 1) p_e
            out[idx] = 1.0 + P @ (W[1:, 1:] - 1.0).T
        return out

    def grad_from_log_lam(self, g_loglam: np.ndarray, lam: np.ndarray) -> np.ndarray:
        out = np.empty_like(g_loglam)
        for k, idx, W in self.groups:
            G = g_loglam[idx] / lam[idx]
            out[idx] = G @ (W[1:, 1:] - 1.0)
        return out

    def log_mu(self, lam: np.ndarray) -> np.ndarray:
        out = np.empty_like(lam)
        for k, idx, W in self.groups:
            out[idx] = np.log(lam[idx]) @ mu_matrix(k).T
        return out


@dataclass
class OptimizeResult:
    p: np.ndarray
    iterations: int
    objective: float
    converged: bool
    history: List[float] = field(default_factory=list)


def nonlinear_fit(
    y: np.ndarray,
    A: sparse.csr_matrix,
    B: sparse.csr_matrix,
    model: NoiseModel,
    p0: np.ndarray,
    max_iter: int = 100_000,
    tol: float = 1e-10,
    gtol: float = 1e-14,
    callback=None,
) -> OptimizeResult:
    """Projected gradient on min ||y - A log lambda(p)||^2 + ||B p||^2, p >= 0.

    Barzilai-Borwein step lengths with Armijo backtracking on the projected step;
    stops when the relative objective decrease stays below ``tol`` for ten steps,
    or when the projected gradient vanishes.
    """
    maps = _ChannelMaps(model)
    At = A.T.tocsr()
    Bt = B.T.tocsr()

    def f_and_grad(p):
        lam = maps.lam(p)
        if np.any(lam <= 0):
            return np.inf, None
        r = y - A @ np.log(lam)
        bp = B @ p
        f = float(r @ r + bp @ bp)
        g = maps.grad_from_log_lam(-2.0 * (At @ r), lam) + 2.0 * (Bt @ bp)
        return f, g

    p = np.clip(np.asarray(p0, dtype=float), 0.0, None)
    f, g = f_and_grad(p)
    if not np.isfinite(f):
        raise LearningError("initial point has a nonpositive eigenvalue")
    alpha = 1.0 / max(1.0, np.linalg.norm(g))
    history = [f]
    slow = 0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        step_ok = False
        a = alpha
        for _ in range(60):
            p_new = np.clip(p - a * g, 0.0, None)
            d = p_new - p
            f_new, g_new = f_and_grad(p_new)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * (g @ d):
                step_ok = True
                break
            a *= 0.5
        if not step_ok:
            converged = True
            break
        s = p_new - p
        yv = g_new - g
        dec = f - f_new
        p, f, g = p_new, f_new, g_new
        history.append(f)
        if callback is not None:
            callback(it, p)
        sy = float(s @ yv)
        alpha = float(s @ s) / sy if sy > 0 else a * 2.0
        pg = np.where((p <= 0) & (g > 0), 0.0, g)
        if np.linalg.norm(pg) <= gtol or f == 0.0:
            converged = True
            break
        slow = slow + 1 if dec <= tol * max(f, 1e-300) else 0
        if slow >= 10:
            converged = True
            break
    return OptimizeResult(p, it, f, converged, history)


def log_nu_from_rates(p: np.ndarray, partition: SyndromeClassPartition, model: NoiseModel) -> np.ndarray:
    maps = _ChannelMaps(model)
    lmu = maps.log_mu(maps.lam(np.asarray(p, dtype=float)))
    return np.array([lmu[m].sum() for m in partition.members])


def log_mu_from_rates(p: np.ndarray, model: NoiseModel) -> np.ndarray:
    maps = _ChannelMaps(model)
    return maps.log_mu(maps.lam(np.asarray(p, dtype=float)))


# -- top level ----------------------------------------------------------------------------------------

@dataclass
class LearnedRates:
    nu: np.ndarray
    p_hat: np.ndarray
    partition: SyndromeClassPartition
    diagnostics: dict = field(default_factory=dict)

    @property
    def class_rates(self) -> np.ndarray:
        return -np.log(self.nu) / 2.0

    @property
    def detector_rates(self) -> np.ndarray:
        return detector_error_rates(self.nu)

    def class_sums(self) -> np.ndarray:
        return self.partition.class_sums(self.p_hat)

    def model(self, skeleton: NoiseModel) -> NoiseModel:
        return skeleton.with_rates(self.p_hat)

    def to_dict(self) -> dict:
        return {
            "nu": self.nu.tolist(),
            "class_rates": self.class_rates.tolist(),
            "detector_rates": self.detector_rates.tolist(),
            "p_hat": self.p_hat.tolist(),
            "classes": [{"pattern": int(pat), "errors": list(map(int, m))} for pat, m in zip(self.partition.patterns, self.partition.members)],
            "trivial": list(map(int, self.partition.trivial)),
            "diagnostics": self.diagnostics,
        }


def detector_error_rates(nu: np.ndarray) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0) or np.any(nu > 1 + 1e-12):
        raise LearningError("nu must lie in (0, 1]")
    return (1.0 - nu) / 2.0


def optimize(
    problem: LearningProblem,
    y: np.ndarray,
    solver: str = "recursive",
    r: Optional[np.ndarray] = None,
    B: Optional[sparse.csr_matrix] = None,
    max_iter: int = 100_000,
    tol: float = 1e-10,
    p0: Optional[np.ndarray] = None,
) -> LearnedRates:
    """Learn class eigenvalues and per-error rates from log expectations ``y`` over ``problem.masks``.

    ``y`` may contain NaN for dropped rows. Solvers: 'recursive', 'linear_lsq',
    'nonlinear' (projected gradient over p, started from the linear solution
    unless ``p0`` is given; ``max_iter`` doubles as the early-stop point).
    """
    part = problem.partition
    r = np.ones(part.num_errors) if r is None else np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = ~np.isnan(y)
    diag: Dict[str, object] = {"solver": solver, "dropped_rows": int((~keep).sum())}
    Dp = problem.D_prime
    if not keep.all():
        rk = np.linalg.matrix_rank(Dp[keep].astype(float))
        if rk < part.num_classes:
            raise InsufficientSamples(
                f"after dropping {int((~keep).sum())} nonpositive expectations the rank is {rk} < {part.num_classes}; collect more samples"
            )
    if solver == "recursive":
        log_nu = recursive_solve(y, part, problem.masks)
        diag["iterations"] = 0
    elif solver in ("linear_lsq", "nonlinear"):
        if solver == "nonlinear" and p0 is not None:
            log_nu = None
        else:
            log_nu, info = lsq_solve(y[keep], Dp[keep])
            diag.update({"lsq_" + k: v for k, v in info.items()})
    else:
        raise LearningError(f"unknown solver {solver!r}")

    if solver != "nonlinear":
        log_nu = np.minimum(log_nu, 0.0) if solver == "linear_lsq" else log_nu
        _, p = split_log_nu(log_nu, part, problem.model, r)
        negative = int((p < 0).sum())
        p = np.clip(p, 0.0, None)
        diag["clipped_negative_rates"] = negative
        resid = y[keep] - Dp[keep] @ log_nu
        diag["residual"] = float(np.linalg.norm(resid))
        return LearnedRates(np.exp(log_nu), p, part, diag)

    if B is None:
        B = build_constraints(part, r)
    if p0 is None:
        _, p0 = split_log_nu(log_nu, part, problem.model, r)
    A = problem.A[keep]
    res = nonlinear_fit(y[keep], A, B, problem.model, np.clip(p0, 0.0, None), max_iter=max_iter, tol=tol)
    log_nu = log_nu_from_rates(res.p, part, problem.model)
    diag.update({"iterations": res.iterations, "objective": res.objective, "converged": res.converged})
    diag["residual"] = float(np.linalg.norm(y[keep] - Dp[keep] @ log_nu))
    return LearnedRates(np.exp(log_nu), res.p, part, diag)


def learn(
    gens: Sequence[PauliOperator],
    skeleton: NoiseModel,
    y_source,
    solver: str = "recursive",
    stabilizer_set: str = "analytic",
    r: Optional[np.ndarray] = None,
    **kw,
) -> LearnedRates:
    """Convenience wrapper: ``y_source`` is a true NoiseModel (exact inputs) or a SyndromeDataset."""
    prob = build_problem(gens, skeleton, stabilizer_set)
    if isinstance(y_source, NoiseModel):
        y = prob.exact_log_expectations(y_source)
    else:
        y, _ = empirical_log_expectations(prob, y_source)
    return optimize(prob, y, solver, r=r, **kw)


# -- early stopping --------------------------------------------------------------------------------------

def relative_class_error(p: np.ndarray, truth: np.ndarray, partition: SyndromeClassPartition) -> float:
    est = partition.class_sums(p)
    ref = partition.class_sums(truth)
    return float(np.mean(np.abs(est - ref) / ref))


def calibrate_early_stop(
    problem: LearningProblem,
    prior: NoiseModel,
    N: int,
    replicas: int = 20,
    seed: int = 0,
    max_iter: int = 2000,
    r: Optional[np.ndarray] = None,
) -> int:
    """Median iteration at which the mean relative class error stops improving.

    Each replica samples N shots at the prior rates and runs the nonlinear solver
    from a flat start at the prior's mean rate.
    """
    from .syndrome import sample_syndromes

    truth = prior.error_rates()
    part = problem.partition
    r = np.ones(part.num_errors) if r is None else r
    B = build_constraints(part, r)
    flat = np.full(part.num_errors, truth.mean())
    stops = []
    for k in range(replicas):
        ds = sample_syndromes(problem.gens, prior, N, seed=seed * 1000 + k, stream=7)
        y, keep = empirical_log_expectations(problem, ds)
        errs: List[float] = []
        nonlinear_fit(
            y[keep], problem.A[keep], B, problem.model, flat, max_iter=max_iter, tol=0.0,
            callback=lambda it, p: errs.append(relative_class_error(p, truth, part)),
        )
        stops.append(int(np.argmin(errs)) + 1 if errs else 1)
    return int(np.median(stops))


# -- per-layer aggregates ------------------------------------------------------------------------------------

def layer_averages(p_hat: np.ndarray, model: NoiseModel) -> Dict[Tuple[int, str], float]:
    """Mean total channel rate per (circuit layer, '1q' | '2q'); buckets without channels are absent."""
    off = model.channel_offsets()
    buckets: Dict[Tuple[int, str], List[float]] = {}
    for c, ch in enumerate(model.channels):
        if ch.layer is None:
            continue
        key = (int(ch.layer), "2q" if ch.k == 2 else "1q")
        buckets.setdefault(key, []).append(float(np.sum(p_hat[off[c] : off[c + 1]])))
    return {k: float(np.mean(v)) for k, v in sorted(buckets.items())}


# -- second-order bias of the class sums ---------------------------------------------------------------------

def class_sum_bias(problem: LearningProblem, true_model: NoiseModel, r: Optional[np.ndarray] = None, solver: str = "recursive") -> Tuple[np.ndarray, np.ndarray]:
    """(|learned - true| class sums from exact inputs, ||p restricted to touched channels||^2 per class)."""
    y = problem.exact_log_expectations(true_model)
    lr = optimize(problem, y, solver, r=r)
    truth = true_model.error_rates()
    part = problem.partition
    bias = np.abs(part.class_sums(lr.p_hat) - part.class_sums(truth))
    off = problem.model.channel_offsets()
    chan_of = np.searchsorted(off, np.arange(part.num_errors), side="right") - 1
    norms = []
    for mem in part.members:
        chans = set(chan_of[mem])
        sel = np.concatenate([np.arange(off[c], off[c + 1]) for c in sorted(chans)])
        norms.append(float(truth[sel] @ truth[sel]))
    return bias, np.array(norms)


def fit_second_order_constant(problem: LearningProblem, true_model: NoiseModel, r: Optional[np.ndarray] = None) -> float:
    """Smallest C with |bias_C| <= C ||p_C||^2 over all classes at the given rates."""
    bias, norms = class_sum_bias(problem, true_model, r)
    return float(np.max(bias / norms))
