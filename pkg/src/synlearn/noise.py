"""Local Pauli channels, their eigenvalues, transformed eigenvalues and sampling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .pauli import (
    K_MAX_DEFAULT,
    DimensionError,
    PauliOperator,
    embed,
    local_from_label,
    local_index_raw,
    local_label,
    walsh_hadamard,
    walsh_matrix,
)
from .rng import block_rng


class AssumptionViolation(ValueError):
    """A channel has P(I) <= 1/2, a zero error component, or a nonpositive eigenvalue."""


@dataclass(frozen=True)
class LocalChannel:
    support: Tuple[int, ...]
    probs: np.ndarray
    kind: str = "generic"
    layer: Optional[int] = None

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        object.__setattr__(self, "support", support)
        if not support:
            raise ValueError("channel support must be nonempty")
        if len(set(support)) != len(support):
            raise ValueError("channel support has duplicate qubits")
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (4 ** len(support),):
            raise ValueError(f"expected {4 ** len(support)} probabilities, got {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("negative probability")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def k(self) -> int:
        return len(self.support)

    @property
    def error_rate(self) -> float:
        return float(1.0 - self.probs[0])

    def validate(self) -> None:
        if self.probs[0] <= 0.5:
            raise AssumptionViolation(f"P(I) = {self.probs[0]} <= 1/2 on support {self.support}")
        if np.any(self.probs[1:] <= 0):
            raise AssumptionViolation(f"zero error component on support {self.support}")


def local_eigenvalues(ch: LocalChannel, k_max: int = K_MAX_DEFAULT) -> np.ndarray:
    return walsh_hadamard(ch.probs, k_max)


def probs_from_eigenvalues(lam: np.ndarray) -> np.ndarray:
    # W^{-1} = W / 4^k
    return walsh_hadamard(lam) / lam.shape[0]


@dataclass
class NoiseModel:
    n: int
    channels: List[LocalChannel]

    def __post_init__(self):
        for ch in self.channels:
            if max(ch.support) >= self.n:
                raise ValueError(f"channel support {ch.support} exceeds n={self.n}")
        self.channels = sorted(self.channels, key=lambda c: c.support)
        self._errors: Optional[List[Tuple[int, int]]] = None

    # -- error indexing -------------------------------------------------

    @property
    def errors(self) -> List[Tuple[int, int]]:
        """ErrorIndex list: (channel id, nonidentity local rank), in channel order."""
        if self._errors is None:
            self._errors = [(c, r) for c, ch in enumerate(self.channels) for r in range(1, 4**ch.k)]
        return self._errors

    @property
    def num_errors(self) -> int:
        return sum(4**ch.k - 1 for ch in self.channels)

    def channel_offsets(self) -> np.ndarray:
        sizes = [4**ch.k - 1 for ch in self.channels]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    def error_pauli(self, index: int) -> PauliOperator:
        c, r = self.errors[index]
        return embed(r, self.channels[c].support, self.n)

    def error_paulis(self) -> List[PauliOperator]:
        return [embed(r, self.channels[c].support, self.n) for c, r in self.errors]

    def error_rates(self) -> np.ndarray:
        """Per-error probabilities p_e in ErrorIndex order."""
        if not self.channels:
            return np.zeros(0)
        return np.concatenate([ch.probs[1:] for ch in self.channels])

    def with_rates(self, p: Sequence[float]) -> "NoiseModel":
        """Same skeleton with per-error probabilities replaced."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.num_errors,):
            raise ValueError("rate vector length does not match the error count")
        offsets = self.channel_offsets()
        chans = []
        for c, ch in enumerate(self.channels):
            local = np.clip(p[offsets[c] : offsets[c + 1]], 0.0, None)
            probs = np.concatenate([[1.0 - local.sum()], local])
            chans.append(LocalChannel(ch.support, probs, ch.kind, ch.layer))
        return NoiseModel(self.n, chans)

    def validate(self) -> None:
        for ch in self.channels:
            ch.validate()

    # -- eigenvalues ----------------------------------------------------

    def local_eigenvalues(self) -> List[np.ndarray]:
        return [local_eigenvalues(ch) for ch in self.channels]

    def log_lambda(self) -> np.ndarray:
        """log of nonidentity local eigenvalues, in ErrorIndex order."""
        out = []
        for ch in self.channels:
            lam = local_eigenvalues(ch)[1:]
            if np.any(lam <= 0):
                raise AssumptionViolation(f"nonpositive eigenvalue on support {ch.support}")
            out.append(np.log(lam))
        return np.concatenate(out) if out else np.zeros(0)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "channels": [
                {
                    "support": list(ch.support),
                    "probs": [float(v) for v in ch.probs],
                    "kind": ch.kind,
                    **({"layer": ch.layer} if ch.layer is not None else {}),
                }
                for ch in self.channels
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        n = int(data["n"])
        chans = []
        for i, entry in enumerate(data.get("channels", [])):
            chans.append(channel_from_config(entry, n, default_seed=i))
        return cls(n, chans)


def total_eigenvalue(model: NoiseModel, O: PauliOperator) -> float:
    if O.n != model.n:
        raise DimensionError(f"operator on {O.n} qubits, model on {model.n}")
    val = 1.0
    for ch in model.channels:
        idx = local_index_raw(O.x, O.z, ch.support)
        if idx:
            val *= local_eigenvalues(ch)[idx]
    return val


def mu_matrix(k: int) -> np.ndarray:
    """Map log(lambda') -> log(mu) on one support: -2 (W^{-1})' with the identity row/column removed."""
    W = walsh_matrix(k)
    return -2.0 * W[1:, 1:] / 4**k


def v_matrix(k: int) -> np.ndarray:
    """Inverse of mu_matrix: log(lambda') = V log(mu), V = (J - W')/2."""
    W = walsh_matrix(k)
    return (1.0 - W[1:, 1:]) / 2.0


def log_mu_from_log_lambda(log_lam: np.ndarray, k: int) -> np.ndarray:
    return mu_matrix(k) @ log_lam


def transformed_eigenvalues_mu(model: NoiseModel, log: bool = False) -> np.ndarray:
    """Transformed eigenvalues mu_e over ErrorIndex (or log mu_e with ``log=True``)."""
    out = []
    for ch in model.channels:
        lam = local_eigenvalues(ch)[1:]
        if np.any(lam <= 0):
            raise AssumptionViolation(f"nonpositive eigenvalue on support {ch.support}")
        out.append(mu_matrix(ch.k) @ np.log(lam))
    log_mu = np.concatenate(out) if out else np.zeros(0)
    return log_mu if log else np.exp(log_mu)


def approximate_rates(model: NoiseModel) -> np.ndarray:
    """First-order rate estimate -log(mu_e)/2."""
    return -transformed_eigenvalues_mu(model, log=True) / 2.0


def channel_probs_from_log_mu(log_mu: np.ndarray, k: int) -> np.ndarray:
    """Exact inverse of the mu map on one support: probabilities from log mu."""
    lam = np.concatenate([[1.0], np.exp(v_matrix(k) @ log_mu)])
    return probs_from_eigenvalues(lam)


# -- sampling ----------------------------------------------------------------

def sample_error(model: NoiseModel, rng_seed: int, shot: int = 0) -> PauliOperator:
    """One Pauli drawn from the composed channel; deterministic given (seed, shot)."""
    rng = block_rng(rng_seed, shot, stream=1)
    x = z = 0
    for ch in model.channels:
        r = int(np.searchsorted(np.cumsum(ch.probs), rng.random(), side="right"))
        r = min(r, len(ch.probs) - 1)
        if r:
            p = embed(r, ch.support, model.n)
            x ^= p.x
            z ^= p.z
    return PauliOperator(model.n, x, z)


def sample_events(
    model: NoiseModel, shots: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw nonidentity events for ``shots`` independent shots.

    Returns ``(shot_index, error_index)`` arrays. Event positions per channel are
    drawn by geometric skipping so the cost scales with the number of events.
    """
    offsets = model.channel_offsets()
    shot_parts = []
    err_parts = []
    for c, ch in enumerate(model.channels):
        q = 1.0 - ch.probs[0]
        if q <= 0:
            continue
        if q >= 1.0:
            pos = np.arange(shots)
        else:
            expected = q * shots
            size = int(expected + 6 * np.sqrt(expected + 1) + 16)
            gaps = rng.geometric(q, size=size)
            pos = np.cumsum(gaps) - 1
            while pos[-1] < shots:
                more = rng.geometric(q, size=size)
                pos = np.concatenate([pos, pos[-1] + np.cumsum(more)])
            pos = pos[pos < shots]
        if pos.size == 0:
            continue
        cond = ch.probs[1:] / q
        local = rng.choice(len(cond), size=pos.size, p=cond)
        shot_parts.append(pos)
        err_parts.append(offsets[c] + local)
    if not shot_parts:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(shot_parts).astype(np.int64), np.concatenate(err_parts).astype(np.int64)


# -- presets and generators -------------------------------------------------------

def preset_probs(preset: str, k: int, rate: float, **kw: Any) -> np.ndarray:
    size = 4**k
    probs = np.zeros(size)
    if preset in ("depolarizing1", "depolarizing2", "depolarizing"):
        probs[1:] = rate / (size - 1)
    elif preset == "biased":
        if k != 1:
            raise ValueError("biased preset is single-qubit")
        eta = float(kw.get("eta", 10.0))
        probs[3] = rate * eta / (eta + 1)
        probs[1] = probs[2] = rate / (2 * (eta + 1))
    elif preset == "single_error":
        pauli = kw.get("pauli", "X" * k)
        probs[local_from_label(pauli)] = rate
    else:
        raise ValueError(f"unknown preset {preset!r}")
    probs[0] = 1.0 - probs[1:].sum()
    return probs


def gaussian_probs(
    k: int, mean: float, sigma: float, rng: np.random.Generator, floor: float = 1e-5
) -> np.ndarray:
    """Per-component rates drawn from N(mean, sigma); negatives clipped to ``floor``."""
    comp = rng.normal(mean, sigma, size=4**k - 1)
    comp = np.where(comp < 0, floor, comp)
    return np.concatenate([[1.0 - comp.sum()], comp])


def channel_from_config(entry: dict, n: int, default_seed: int = 0) -> LocalChannel:
    support = tuple(int(q) for q in entry["support"])
    k = len(support)
    kind = entry.get("kind", "generic")
    layer = entry.get("layer")
    if "probs" in entry:
        return LocalChannel(support, np.asarray(entry["probs"], dtype=float), kind, layer)
    preset = entry.get("preset")
    if preset is None:
        raise ValueError("channel entry needs 'probs' or 'preset'")
    rate = float(entry.get("rate", 0.0))
    sigma = entry.get("gaussian_sigma")
    if sigma:
        rng = np.random.default_rng(int(entry.get("seed", default_seed)))
        per = rate / (4**k - 1)
        probs = gaussian_probs(k, per, float(sigma), rng)
    else:
        extra = {key: entry[key] for key in ("eta", "pauli") if key in entry}
        probs = preset_probs(preset, k, rate, **extra)
    return LocalChannel(support, probs, kind, layer)


def single_qubit_model(n: int, probs_per_qubit: Sequence[Sequence[float]]) -> NoiseModel:
    return NoiseModel(n, [LocalChannel((q,), np.asarray(p)) for q, p in enumerate(probs_per_qubit)])


def gaussian_single_qubit_model(
    n: int, mean: float, sigma: float, seed: int, floor: float = 1e-5
) -> NoiseModel:
    """Independent single-qubit channels; every Pauli component ~ N(mean, sigma)."""
    rng = np.random.default_rng(seed)
    return NoiseModel(n, [LocalChannel((q,), gaussian_probs(1, mean, sigma, rng, floor)) for q in range(n)])


def load_noise(path: str) -> NoiseModel:
    with open(path) as fh:
        return NoiseModel.from_dict(json.load(fh))


def channel_label(ch: LocalChannel, rank: int) -> str:
    return local_label(rank, ch.k)
