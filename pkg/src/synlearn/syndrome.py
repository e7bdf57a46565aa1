"""Exact and sampled syndrome expectations for a fixed set of tracked stabilizers."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import gf2, kernels
from .noise import NoiseModel, local_eigenvalues, sample_events
from .pauli import PauliOperator, embed, local_index_raw
from .rng import SHOT_BLOCK, block_rng, shot_blocks

log = logging.getLogger(__name__)

STREAMING_THRESHOLD = 1_000_000


class MembershipError(ValueError):
    """A requested operator is not in the measured stabilizer group."""


def check_membership(gens: Sequence[PauliOperator], ops: Sequence[PauliOperator]) -> None:
    basis = gf2.IncrementalBasis()
    for g in gens:
        basis.add(g.symplectic())
    for P in ops:
        if not basis.contains(P.symplectic()):
            raise MembershipError(f"{P.to_sparse()} is not generated by the measured generators")


def log_expectations(model: NoiseModel, ops: Sequence[PauliOperator]) -> np.ndarray:
    """log Lambda(O) for each O, as a sum of local log-eigenvalues over touched channels."""
    lams = [local_eigenvalues(ch) for ch in model.channels]
    masks = []
    for ch in model.channels:
        m = 0
        for q in ch.support:
            m |= 1 << q
        masks.append(m)
    out = np.zeros(len(ops))
    for i, O in enumerate(ops):
        supp = O.x | O.z
        acc = 0.0
        for c, ch in enumerate(model.channels):
            if supp & masks[c]:
                idx = local_index_raw(O.x, O.z, ch.support)
                if idx:
                    acc += np.log(lams[c][idx])
        out[i] = acc
    return out


def exact_expectations(gens: Sequence[PauliOperator], model: NoiseModel, subset: Sequence[PauliOperator]) -> np.ndarray:
    """Lambda(M) for elements M of the group generated by ``gens``, from the channel eigenvalues."""
    check_membership(gens, subset)
    return np.exp(log_expectations(model, subset))


# -- signatures -------------------------------------------------------------------------

def error_patterns(model: NoiseModel, ops: Sequence[PauliOperator]) -> List[int]:
    """Commutation pattern of every model error with ``ops`` as an int (bit i = ops[i])."""
    tx = [P.x for P in ops]
    tz = [P.z for P in ops]
    # operators touching each qubit, so each channel only visits its neighbours
    touching: Dict[int, List[int]] = {}
    for i in range(len(ops)):
        m = tx[i] | tz[i]
        while m:
            low = m & -m
            touching.setdefault(low.bit_length() - 1, []).append(i)
            m ^= low
    out = []
    for ch in model.channels:
        near = sorted({i for q in ch.support for i in touching.get(q, ())})
        for r in range(1, 4**ch.k):
            e = embed(r, ch.support, model.n)
            s = 0
            for i in near:
                if ((e.x & tz[i]) ^ (e.z & tx[i])).bit_count() & 1:
                    s |= 1 << i
            out.append(s)
    return out


def signature_table(model: NoiseModel, tracked: Sequence[PauliOperator]) -> np.ndarray:
    """(num_errors, W) packed commutation bits of each model error with each tracked operator."""
    return kernels.pack_rows(error_patterns(model, tracked), len(tracked))


def sample_block(model: NoiseModel, sig: np.ndarray, shots: int, seed: int, index: int, stream: int = 0) -> np.ndarray:
    """Packed tracked bits for one fixed shot block."""
    rng = block_rng(seed, index, stream)
    shot_idx, err_idx = sample_events(model, shots, rng)
    return kernels.xor_events(sig, shot_idx, err_idx, shots)


def sample_packed(model: NoiseModel, sig: np.ndarray, N: int, seed: int, stream: int = 0, threads: int = 1):
    """Yield packed tracked-bit blocks in shot order; output does not depend on ``threads``."""
    blocks = list(shot_blocks(N, SHOT_BLOCK))

    def job(b):
        start, stop, idx = b
        return sample_block(model, sig, stop - start, seed, idx, stream)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            # chunk so at most a few blocks are held in memory
            for i in range(0, len(blocks), threads):
                yield from ex.map(job, blocks[i : i + threads])
    else:
        for b in blocks:
            yield job(b)


# -- dataset ------------------------------------------------------------------------------

@dataclass
class SyndromeDataset:
    """Tracked-operator flips from N shots.

    ``bits`` holds the packed per-shot bits (kept for N up to the streaming
    threshold); ``product_counts`` holds flip counts of registered products of
    tracked operators, given as int masks over the tracked list.
    """

    tracked: List[PauliOperator]
    shots: int
    seed: int
    flip_counts: np.ndarray
    bits: Optional[np.ndarray] = None
    product_counts: Dict[int, int] = field(default_factory=dict)

    def _require_shots(self) -> None:
        if self.shots == 0:
            raise ValueError("empty dataset: expectations are undefined")

    def expectations(self) -> np.ndarray:
        self._require_shots()
        return 1.0 - 2.0 * self.flip_counts / self.shots

    def product_expectations(self, masks: Sequence[int]) -> np.ndarray:
        """Empirical Lambda of products of tracked operators (mask bit i = tracked[i])."""
        self._require_shots()
        masks = [int(m) for m in masks]
        missing = [m for m in masks if m not in self.product_counts]
        if missing:
            if self.bits is None:
                raise ValueError("product was not registered before streaming and no bit matrix was kept")
            packed = kernels.pack_rows(missing, len(self.tracked))
            for m, c in zip(missing, kernels.masked_parity_counts(self.bits, packed)):
                self.product_counts[m] = int(c)
        return np.array([1.0 - 2.0 * self.product_counts[m] / self.shots for m in masks])

    def bit_matrix(self) -> np.ndarray:
        if self.bits is None:
            raise ValueError("bit matrix not kept (streaming mode)")
        return kernels.unpack_bits(self.bits, len(self.tracked))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow([P.to_sparse() for P in self.tracked])
        for row in self.bit_matrix():
            w.writerow([int(b) for b in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "shots": self.shots,
            "seed": self.seed,
            "n": self.tracked[0].n if self.tracked else 0,
            "tracked": [
                {"stabilizer": P.to_sparse(), "flips": int(c), "N": self.shots}
                for P, c in zip(self.tracked, self.flip_counts)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "SyndromeDataset":
        n = int(data["n"])
        tracked = [PauliOperator.from_label(t["stabilizer"], n) for t in data["tracked"]]
        counts = np.array([int(t["flips"]) for t in data["tracked"]], dtype=np.int64)
        return cls(tracked, int(data["shots"]), int(data.get("seed", 0)), counts)


def sample_syndromes(
    gens: Sequence[PauliOperator],
    model: NoiseModel,
    N: int,
    tracked: Optional[Sequence[PauliOperator]] = None,
    seed: int = 0,
    products: Sequence[int] = (),
    keep_bits: Optional[bool] = None,
    threads: int = 1,
    stream: int = 0,
) -> SyndromeDataset:
    """Draw N errors and record the commutator of each with every tracked operator.

    ``tracked`` defaults to ``gens``. Products listed in ``products`` (masks over
    the tracked list) are counted while streaming.
    """
    tracked = list(gens if tracked is None else tracked)
    check_membership(gens, tracked)
    if N < 0:
        raise ValueError("N must be nonnegative")
    keep = N <= STREAMING_THRESHOLD if keep_bits is None else keep_bits
    sig = signature_table(model, tracked)
    counts = np.zeros(len(tracked), dtype=np.int64)
    prod = [int(m) for m in products]
    prod_packed = kernels.pack_rows(prod, len(tracked)) if prod else None
    prod_counts = np.zeros(len(prod), dtype=np.int64)
    kept = []
    for block in sample_packed(model, sig, N, seed, stream, threads):
        counts += kernels.unpack_bits(block, len(tracked)).sum(axis=0, dtype=np.int64)
        if prod:
            prod_counts += kernels.masked_parity_counts(block, prod_packed)
        if keep:
            kept.append(block)
    bits = np.concatenate(kept) if keep and kept else (np.zeros((0, sig.shape[1]), np.uint64) if keep else None)
    ds = SyndromeDataset(tracked, N, seed, counts, bits, dict(zip(prod, map(int, prod_counts))))
    return ds
