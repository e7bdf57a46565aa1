"""Logical-class probabilities, decoders, logical failure rates and fidelity."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from .noise import NoiseModel
from .pauli import PauliOperator
from .syndrome import error_patterns, sample_packed, signature_table

log = logging.getLogger(__name__)

DENSE_BITS = 22


class BudgetExceeded(RuntimeError):
    """Exhaustive enumeration would be too large; use Monte Carlo instead."""


@dataclass(frozen=True)
class LogicalSignature:
    s: int
    l: int

    def __xor__(self, other: "LogicalSignature") -> "LogicalSignature":
        return LogicalSignature(self.s ^ other.s, self.l ^ other.l)


def split_signature(sig: int, m: int) -> LogicalSignature:
    return LogicalSignature(sig & ((1 << m) - 1), sig >> m)


def signature_of(e: PauliOperator, gens: Sequence[PauliOperator], logicals: Sequence[PauliOperator]) -> LogicalSignature:
    def bits(ops):
        v = 0
        for i, g in enumerate(ops):
            if ((e.x & g.z) ^ (e.z & g.x)).bit_count() & 1:
                v |= 1 << i
        return v

    return LogicalSignature(bits(gens), bits(logicals))


# -- class distribution ----------------------------------------------------------------------

@dataclass
class ClassDistribution:
    """P(s, l) over combined signatures ``s | l << m``; ``missing`` is unenumerated probability."""

    m: int
    L: int
    probs: Dict[int, float]
    method: str
    missing: float = 0.0

    def get(self, s: int, l: int) -> float:
        return self.probs.get(s | (l << self.m), 0.0)

    def items(self):
        for sig, p in self.probs.items():
            yield sig & ((1 << self.m) - 1), sig >> self.m, p


def _channel_terms(model: NoiseModel, sigs: Sequence[int]):
    off = model.channel_offsets()
    out = []
    for c, ch in enumerate(model.channels):
        out.append((float(ch.probs[0]), ch.probs[1:], sigs[off[c] : off[c + 1]]))
    return out


def _dense_distribution(terms, nbits: int) -> np.ndarray:
    dist = np.zeros(1 << nbits)
    dist[0] = 1.0
    idx = np.arange(1 << nbits)
    for pI, ps, sg in terms:
        new = pI * dist
        for p, s in zip(ps, sg):
            if p > 0:
                new += p * dist[idx ^ s]
        dist = new
    return dist


def _capped_distribution(terms, weight_cap: int) -> Tuple[Dict[int, float], float]:
    """Sum over fault sets with at most ``weight_cap`` faulty channels."""
    base_log = sum(np.log(pI) for pI, _, _ in terms)
    ratios, sigs, chans = [], [], []
    for c, (pI, ps, sg) in enumerate(terms):
        for p, s in zip(ps, sg):
            if p > 0:
                ratios.append(np.log(p / pI))
                sigs.append(s)
                chans.append(c)
    ratios = np.array(ratios)
    sigs = np.array(sigs, dtype=np.int64)
    chans = np.array(chans, dtype=np.int64)
    acc_sig = [np.zeros(1, dtype=np.int64)]
    acc_lr = [np.zeros(1)]
    cur_sig, cur_lr, cur_last = np.zeros(1, np.int64), np.zeros(1), np.full(1, -1, np.int64)
    for _ in range(weight_cap):
        ns, nl, nc = [], [], []
        for j in range(len(ratios)):
            sel = cur_last < chans[j]
            if not sel.any():
                continue
            ns.append(cur_sig[sel] ^ sigs[j])
            nl.append(cur_lr[sel] + ratios[j])
            nc.append(np.full(int(sel.sum()), chans[j], dtype=np.int64))
        if not ns:
            break
        cur_sig, cur_lr, cur_last = np.concatenate(ns), np.concatenate(nl), np.concatenate(nc)
        acc_sig.append(cur_sig)
        acc_lr.append(cur_lr)
        if cur_sig.size > 50_000_000:
            raise BudgetExceeded("weight-capped enumeration exceeds 5e7 fault sets")
    allsig = np.concatenate(acc_sig)
    allp = np.exp(np.concatenate(acc_lr) + base_log)
    keys, inv = np.unique(allsig, return_inverse=True)
    sums = np.bincount(inv, weights=allp)
    probs = {int(k): float(v) for k, v in zip(keys, sums)}
    return probs, max(0.0, 1.0 - float(sums.sum()))


def logical_class_probabilities(
    model: NoiseModel,
    gens: Sequence[PauliOperator],
    logicals: Sequence[PauliOperator],
    method: str = "exhaustive",
    weight_cap: Optional[int] = None,
    N_mc: int = 100_000,
    seed: int = 0,
) -> ClassDistribution:
    """P(s, l) = total probability of errors with syndrome s and logical bits l.

    Exhaustive: exact XOR convolution when the signature has at most 22 bits and no
    weight cap is given, otherwise the sum over fault sets of bounded size.
    Monte Carlo: frequencies from N_mc fast-sampled shots.
    """
    m, L = len(gens), len(logicals)
    ops = list(gens) + list(logicals)
    if method == "exhaustive":
        sigs = error_patterns(model, ops)
        terms = _channel_terms(model, sigs)
        if weight_cap is None:
            if m + L > DENSE_BITS:
                raise BudgetExceeded(f"{m + L} signature bits: pass weight_cap or use method='mc'")
            dist = _dense_distribution(terms, m + L)
            nz = np.flatnonzero(dist > 0)
            return ClassDistribution(m, L, {int(i): float(dist[i]) for i in nz}, "exhaustive")
        if m + L > 62:
            raise BudgetExceeded("signatures wider than 62 bits are only supported by Monte Carlo")
        probs, missing = _capped_distribution(terms, weight_cap)
        return ClassDistribution(m, L, probs, f"exhaustive_w{weight_cap}", missing)
    if method == "mc":
        sig = signature_table(model, ops)
        counts: Dict[int, int] = {}
        for block in sample_packed(model, sig, N_mc, seed, stream=5):
            keys = _packed_to_ints(block)
            uniq, cnt = np.unique(keys, return_counts=True)
            for k, c in zip(uniq.tolist(), cnt.tolist()):
                counts[int(k)] = counts.get(int(k), 0) + int(c)
        return ClassDistribution(m, L, {k: c / N_mc for k, c in counts.items()}, "monte_carlo")
    raise ValueError(f"unknown method {method!r}")


def _packed_to_ints(block: np.ndarray) -> np.ndarray:
    """(N, W) uint64 rows to Python-int signatures (object array when W > 1)."""
    if block.shape[1] == 1:
        return block[:, 0].astype(np.int64) if block.size and int(block.max()) < (1 << 63) else block[:, 0].astype(object)
    out = np.zeros(block.shape[0], dtype=object)
    for w in range(block.shape[1]):
        out = out + (block[:, w].astype(object) << (64 * w))
    return out


# -- decoders --------------------------------------------------------------------------------------

class Decoder:
    """Maps a syndrome to the logical class it corrects to."""

    name = "decoder"

    def decode(self, s: int) -> int:
        raise NotImplementedError


class TrivialDecoder(Decoder):
    name = "trivial"

    def decode(self, s: int) -> int:
        return 0


@dataclass
class LookupMLE(Decoder):
    """Most probable logical class per syndrome under a reference model; unseen syndromes decode to 0."""

    table: Dict[int, int]
    misses: int = 0
    name: str = "lookup_mle"

    @classmethod
    def from_distribution(cls, dist: ClassDistribution) -> "LookupMLE":
        best: Dict[int, Tuple[float, int]] = {}
        for s, l, p in dist.items():
            if s not in best or p > best[s][0] or (p == best[s][0] and l < best[s][1]):
                best[s] = (p, l)
        return cls({s: l for s, (p, l) in best.items()})

    @classmethod
    def from_model(cls, model: NoiseModel, gens, logicals, weight_cap: Optional[int] = None) -> "LookupMLE":
        return cls.from_distribution(logical_class_probabilities(model, gens, logicals, weight_cap=weight_cap))

    def decode(self, s: int) -> int:
        l = self.table.get(s)
        if l is None:
            self.misses += 1
            return 0
        return l


@dataclass
class MinWeight(Decoder):
    """Logical class of a minimum-size fault set with the syndrome; ties go to the likelier set."""

    table: Dict[int, int]
    name: str = "min_weight"

    @classmethod
    def from_model(cls, model: NoiseModel, gens, logicals, weight_cap: int = 3) -> "MinWeight":
        m = len(gens)
        sigs = error_patterns(model, list(gens) + list(logicals))
        terms = _channel_terms(model, sigs)
        best: Dict[int, Tuple[int, float, int]] = {0: (0, 0.0, 0)}
        cur = [(0, 0.0, -1)]
        for w in range(1, weight_cap + 1):
            nxt = []
            for sig, lp, last in cur:
                for c in range(last + 1, len(terms)):
                    pI, ps, sg = terms[c]
                    for p, s in zip(ps, sg):
                        if p <= 0:
                            continue
                        ns, nl = sig ^ s, lp + np.log(p / pI)
                        nxt.append((ns, nl, c))
                        key = ns & ((1 << m) - 1)
                        cand = (w, -nl, ns >> m)
                        if key not in best or cand < best[key]:
                            best[key] = cand
            cur = nxt
        return cls({s: v[2] for s, v in best.items()})

    def decode(self, s: int) -> int:
        return self.table.get(s, 0)


# -- failure distribution and reports ----------------------------------------------------------------

def wilson_interval(k: int, n: int, level: float = 0.95) -> Tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ci = binomtest(int(k), int(n)).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class LogicalErrorReport:
    p_fail: Dict[int, float]
    method: str
    L: int
    ci: Dict[int, Tuple[float, float]] = field(default_factory=dict)
    shots: int = 0
    identifiable: bool = True
    missing: float = 0.0

    def failure_probability(self) -> float:
        return float(sum(p for f, p in self.p_fail.items() if f))

    def to_dict(self) -> dict:
        return {
            "p_fail": {format(f, f"0{max(self.L, 1)}b"): p for f, p in sorted(self.p_fail.items())},
            "method": self.method,
            "ci95": {format(f, f"0{max(self.L, 1)}b"): list(v) for f, v in sorted(self.ci.items())},
            "shots": self.shots,
            "identifiability": self.identifiable,
            "unenumerated_mass": self.missing,
        }


def p_fail_from_distribution(dist: ClassDistribution, decoder: Decoder) -> Dict[int, float]:
    out: Dict[int, float] = {f: 0.0 for f in range(1 << dist.L)}
    for s, l, p in dist.items():
        f = l ^ decoder.decode(s)
        out[f] = out.get(f, 0.0) + p
    return out


def estimate_p_fail(
    model: NoiseModel,
    gens: Sequence[PauliOperator],
    logicals: Sequence[PauliOperator],
    decoder: Decoder,
    method: str = "exhaustive",
    N_mc: int = 100_000,
    seed: int = 0,
    weight_cap: Optional[int] = None,
) -> LogicalErrorReport:
    """P_fail(f) = sum_s P(s, f xor l_dec(s)) under ``model`` (typically learned rates)."""
    ft = check_fault_tolerance(model, gens, logicals)
    if method == "exhaustive":
        dist = logical_class_probabilities(model, gens, logicals, "exhaustive", weight_cap)
        pf = p_fail_from_distribution(dist, decoder)
        return LogicalErrorReport(pf, dist.method, len(logicals), identifiable=ft.tolerant, missing=dist.missing)
    if method == "mc":
        dist = logical_class_probabilities(model, gens, logicals, "mc", N_mc=N_mc, seed=seed)
        pf = p_fail_from_distribution(dist, decoder)
        ci = {f: wilson_interval(round(p * N_mc), N_mc) for f, p in pf.items()}
        return LogicalErrorReport(pf, "monte_carlo", len(logicals), ci, N_mc, ft.tolerant)
    raise ValueError(f"unknown method {method!r}")


# -- fault tolerance -----------------------------------------------------------------------------------

@dataclass
class FaultToleranceResult:
    tolerant: bool
    witness: Optional[Tuple[int, ...]] = None

    def __bool__(self) -> bool:
        return self.tolerant


def check_fault_tolerance(model: NoiseModel, gens: Sequence[PauliOperator], logicals: Sequence[PauliOperator]) -> FaultToleranceResult:
    """Undetectable single errors and equal-syndrome pairs must act trivially on the logicals.

    Returns the first violating error index (single) or index pair as the witness.
    """
    m = len(gens)
    if not model.channels:
        return FaultToleranceResult(True)
    sigs = error_patterns(model, list(gens) + list(logicals))
    first: Dict[int, Tuple[int, int]] = {}
    for e, sig in enumerate(sigs):
        s, l = sig & ((1 << m) - 1), sig >> m
        if s == 0 and l:
            return FaultToleranceResult(False, (e,))
        if s in first and first[s][1] != l:
            return FaultToleranceResult(False, (first[s][0], e))
        first.setdefault(s, (e, l))
    return FaultToleranceResult(True)


# -- fidelity ---------------------------------------------------------------------------------------------

def expectation_factor(p_fail: Dict[int, float], alpha: int) -> float:
    """sum_f (-1)^{alpha . f} P_fail(f): the damping of a logical observable."""
    return float(sum(p * (1 - 2 * ((alpha & f).bit_count() & 1)) for f, p in p_fail.items()))


def logical_fidelity(terms: Sequence[Tuple[Dict[int, float], int, float]], k: int) -> float:
    """F_L = 2^-k sum over terms of <L'>_ideal^2 times its damping factor.

    Each term is (P_fail, alpha, ideal expectation); the identity term is implicit.
    For a stabilizer target, ideal expectations are +-1 over the 2^k - 1 nontrivial
    stabilizers. Fewer terms than that gives a partial fidelity and a warning.
    """
    if len(terms) < (1 << k) - 1:
        log.warning("logical basis incomplete: %d of %d terms; fidelity is partial", len(terms), (1 << k) - 1)
    total = 1.0
    for pf, alpha, ideal in terms:
        total += expectation_factor(pf, alpha) * ideal * ideal
    return float(np.clip(total / (1 << k), 0.0, 1.0))


def fixed_logical_combinations(circuit, parity, logical_state: str = "zero") -> List[Tuple[int, int]]:
    """Nonempty combinations alpha of logical outcomes whose value the input state fixes.

    Returns (alpha, noiseless value) pairs with alpha a mask over ``parity.K_L``;
    the value is the alpha-parity of ``parity.logical_values`` in a noiseless run.
    """
    from .circuit import logical_content_is_fixed, run_circuit

    kl, content = parity.K_L, parity.K_L_content
    if len(kl) > 16:
        raise BudgetExceeded("more than 16 logical outcomes")
    vals = parity.logical_values(run_circuit(circuit, logical_state=logical_state))
    out = []
    for alpha in range(1, 1 << len(kl)):
        c = v = 0
        for j in range(len(kl)):
            if (alpha >> j) & 1:
                c ^= content[j]
                v ^= int(vals[j])
        if c and logical_content_is_fixed(c, parity.k0, logical_state):
            out.append((alpha, v))
    return out
