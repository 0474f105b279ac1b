"""Bit-plane watermarking driven by the chaotic-iterations machinery.

The carrier is split into most/least significant bit planes (MSCs/LSCs).
The watermark is mixed by chaotic iterations keyed by two XORshift seeds,
then written into LSC addresses produced by the doubling recurrence

    U_0 = S_0 (mod M),   U_{k+1} = S_{k+1} + 2 U_k + k (mod M)

over the mixture-stage strategy sequence S. In authenticated mode the seeds
are first combined with a digest of the MSC planes, so any MSC change
re-keys both the mixture and the addresses and extraction collapses to
coin-flip similarity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generator import CiGenerator, XorShift32, seed_word
from .imaging import crop_attack, gaussian_noise_attack, jpeg_attack, rotate_attack

FOLD_INIT = 0x811C9DC5  # nonzero so the all-zero MSC plane still digests

_MASK32 = 0xFFFFFFFF


@dataclass(frozen=True)
class CoefficientSpec:
    """Which bit planes are authenticated content (MSCs) and which carry the
    payload (LSCs). Planes are bit indices, 7 = most significant."""

    msc_bits: tuple = (7, 6, 5, 4)
    lsc_bits: tuple = (2, 1, 0)

    def __post_init__(self):
        if set(self.msc_bits) & set(self.lsc_bits):
            raise ValueError("a bit plane cannot be both MSC and LSC")
        for b in self.msc_bits + self.lsc_bits:
            if not 0 <= b <= 7:
                raise ValueError("bit planes must be in [0, 7]")


@dataclass(frozen=True)
class EmbeddingKey:
    """Two 32-bit seeds plus the watermarking mode.

    mode "unauth": extraction depends on the seeds only.
    mode "auth":   seeds are folded with the MSC digest of the image.
    mix  "ci":     flip-parity mixture from chaotic iterations (default).
    mix  "xor":    bitwise XOR with the generator's keystream.
    repetition:    how many times the watermark is embedded (majority vote
                   on extraction).
    """

    seed1: int
    seed2: int
    mode: str = "unauth"
    mix: str = "ci"
    repetition: int = 1

    def __post_init__(self):
        if self.mode not in ("unauth", "auth"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mix not in ("ci", "xor"):
            raise ValueError(f"unknown mix {self.mix!r}")
        if self.repetition < 1:
            raise ValueError("repetition must be >= 1")


def _rotl32(v: int, k: int) -> int:
    k %= 32
    v &= _MASK32
    return ((v << k) | (v >> (32 - k))) & _MASK32


def split_coefficients(img, spec: CoefficientSpec = CoefficientSpec()):
    """Linearize the MSC and LSC planes: pixels in row-major order, selected
    bits most significant first within each pixel."""
    a = np.asarray(img)
    if a.ndim != 2 or a.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 image")
    flat = a.reshape(-1)

    def planes(bits):
        cols = [(flat >> np.uint8(b)) & np.uint8(1) for b in sorted(bits, reverse=True)]
        return np.stack(cols, axis=1).reshape(-1)

    return planes(spec.msc_bits), planes(spec.lsc_bits)


def merge_coefficients(msc, lsc, spec: CoefficientSpec, base):
    """Exact inverse of split_coefficients: writes the MSC/LSC planes back
    over `base`, whose untouched bit planes carry through unchanged."""
    a = np.asarray(base)
    h, w = a.shape
    keep = 0xFF
    for b in spec.msc_bits + spec.lsc_bits:
        keep &= ~(1 << b)
    out = a.reshape(-1) & np.uint8(keep)

    def scatter(seq, bits):
        cols = np.asarray(seq, dtype=np.uint8).reshape(h * w, len(bits))
        for i, b in enumerate(sorted(bits, reverse=True)):
            np.bitwise_or(out, cols[:, i] << np.uint8(b), out=out)

    scatter(msc, spec.msc_bits)
    scatter(lsc, spec.lsc_bits)
    return out.reshape(h, w)


def fold_digest(bits) -> int:
    """32-bit rotate-XOR fold of a bit sequence (packed to bytes first);
    flipping any single input bit changes the digest."""
    data = np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()
    digest = FOLD_INIT
    for byte in data:
        digest = _rotl32(digest, 5) ^ byte
    return digest


def derive_strategy_seed(key: EmbeddingKey, msc) -> tuple:
    """Seeds actually driving mixture and addressing. Unauthenticated mode
    passes the key seeds through; authenticated mode folds in the MSC
    digest so both seeds move when any MSC bit does."""
    if key.mode == "unauth":
        return seed_word(key.seed1), seed_word(key.seed2)
    digest = fold_digest(msc)
    # rotations chosen apart from the one in _strategy_seed so the digest
    # cannot cancel out of the combined strategy seed
    return (seed_word(key.seed1 ^ digest),
            seed_word(key.seed2 ^ _rotl32(digest, 7)))


def embedding_sequence(s_values, m_total: int, count: int) -> np.ndarray:
    """Exact doubling-recurrence evaluation: U_0 = S_0 mod M and
    U_{k+1} = (S_{k+1} + 2 U_k + k) mod M."""
    if m_total < 1:
        raise ValueError("M must be >= 1")
    s = np.asarray(s_values, dtype=np.int64)
    if s.size < count:
        raise ValueError("not enough strategy values")
    out = np.empty(count, dtype=np.int64)
    u = 0
    for k in range(count):
        if k == 0:
            u = int(s[0]) % m_total
        else:
            u = (int(s[k]) + 2 * u + (k - 1)) % m_total
        out[k] = u
    return out


def _strategy_seed(s1p: int, s2p: int) -> int:
    """Seed of the strategy source. Both key seeds feed it so a single
    flipped seed bit re-keys the mask and the addresses, not just the
    chunk-length draws."""
    return seed_word(s2p ^ _rotl32(s1p, 16))


class _KeyStream:
    """Derived-key material: mixture mask and distinct LSC addresses, both
    fed by the same strategy sequence."""

    def __init__(self, derived, n_mix: int, m_total: int, count: int):
        s1p, s2p = derived
        self.n_mix = n_mix
        c_mix = 3 * n_mix
        rounds = -(-4 * n_mix // c_mix)  # total flips ~ 4 per cell
        g1 = XorShift32(s1p)
        m_lengths = [(g1.next_word() & 1) + c_mix for _ in range(rounds)]
        total_flips = sum(m_lengths)
        self._gen2 = XorShift32(_strategy_seed(s1p, s2p))
        self._chain = self._gen2.fill(total_flips + count + count // 8 + 64)
        idx = self._chain % np.uint32(n_mix)
        flips = np.bincount(idx[:total_flips], minlength=n_mix)
        self.mix_mask = (flips & 1).astype(np.uint8)
        self.addresses = self._distinct_addresses(idx, m_total, count)

    def _distinct_addresses(self, idx, m_total, count):
        """First `count` distinct values of the doubling recurrence over the
        strategy sequence; revisited addresses are skipped so every payload
        bit owns one LSC."""
        if count > m_total:
            raise ValueError("payload exceeds LSC capacity")
        seen = np.zeros(m_total, dtype=bool)
        out = np.empty(count, dtype=np.int64)
        got = 0
        k = 0
        u = 0
        cap = 16 * count + 4096
        s = idx
        while got < count:
            if k >= s.size:
                more = self._gen2.fill(count + 4096)
                s = np.concatenate([s, more % np.uint32(self.n_mix)])
            if k > cap:
                raise RuntimeError("address generation did not converge")
            if k == 0:
                u = int(s[0]) % m_total
            else:
                u = (int(s[k]) + 2 * u + (k - 1)) % m_total
            if not seen[u]:
                seen[u] = True
                out[got] = u
                got += 1
            k += 1
        return out


def mix_watermark(wm_bits, key: EmbeddingKey, derived=None, rounds: int = None):
    """Invertible watermark mixture. "ci" XORs the flip-parity mask of the
    chaotic iteration run over the watermark cells (replaying the identical
    strategy restores the input); "xor" uses the generator keystream."""
    bits = np.asarray(wm_bits, dtype=np.uint8).reshape(-1)
    n = bits.size
    if derived is None:
        derived = (seed_word(key.seed1), seed_word(key.seed2))
    if key.mix == "xor":
        ks = CiGenerator.from_seeds(derived[0], derived[1]).bits(n)
        return bits ^ ks
    s1p, s2p = derived
    c_mix = 3 * n
    if rounds is None:
        rounds = -(-4 * n // c_mix)
    g1 = XorShift32(s1p)
    m_lengths = [(g1.next_word() & 1) + c_mix for _ in range(rounds)]
    total = sum(m_lengths)
    idx = XorShift32(_strategy_seed(s1p, s2p)).fill(total) % np.uint32(n)
    mask = (np.bincount(idx, minlength=n) & 1).astype(np.uint8)
    return bits ^ mask


def mix_with_strategy(wm_bits, strategy) -> np.ndarray:
    """Mixture primitive with an injected 1-based strategy: flip each named
    cell once per occurrence."""
    bits = np.asarray(wm_bits, dtype=np.uint8).copy()
    for s in strategy:
        s = int(s)
        if not 1 <= s <= bits.size:
            raise ValueError(f"strategy index {s} outside [1, {bits.size}]")
        bits[s - 1] ^= 1
    return bits


def embed(carrier, wm, key: EmbeddingKey,
          spec: CoefficientSpec = CoefficientSpec()) -> np.ndarray:
    """Write the mixed watermark into key-addressed LSCs. MSC planes are
    bit-identical to the carrier's afterwards."""
    wm_bits = np.asarray(wm, dtype=np.uint8).reshape(-1) & 1
    n = wm_bits.size
    msc, lsc = split_coefficients(carrier, spec)
    m_total = lsc.size
    r = key.repetition
    if r * n > m_total:
        raise ValueError(f"watermark needs {r * n} LSCs, image has {m_total}")
    derived = derive_strategy_seed(key, msc)
    stream = _KeyStream(derived, n, m_total, r * n)
    mixed = wm_bits ^ stream.mix_mask if key.mix == "ci" \
        else mix_watermark(wm_bits, key, derived)
    payload = np.tile(mixed, r)
    out_lsc = lsc.copy()
    out_lsc[stream.addresses] = payload
    return merge_coefficients(msc, out_lsc, spec, carrier)


def extract(img, key: EmbeddingKey, spec: CoefficientSpec = CoefficientSpec(),
            wm_dims: tuple = (64, 64)) -> np.ndarray:
    """Recover the watermark: re-derive the strategy from the image's MSCs,
    re-generate the addresses, read, majority-vote repeats, unmix."""
    h, w = wm_dims
    n = h * w
    msc, lsc = split_coefficients(img, spec)
    r = key.repetition
    derived = derive_strategy_seed(key, msc)
    stream = _KeyStream(derived, n, lsc.size, r * n)
    reads = lsc[stream.addresses].reshape(r, n)
    votes = reads.sum(axis=0)
    mixed = (2 * votes >= r).astype(np.uint8)
    if key.mix == "ci":
        bits = mixed ^ stream.mix_mask
    else:
        bits = mixed ^ mix_watermark(np.zeros(n, np.uint8), key, derived)
    return bits.reshape(h, w)


def similarity(a, b) -> float:
    """Percentage of matching bits between two binary images."""
    x = np.asarray(a)
    y = np.asarray(b)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return 100.0 * float((x == y).mean())


_ATTACKS = {
    "crop": lambda img, p, seed: crop_attack(img, int(p)),
    "rotate": lambda img, p, seed: rotate_attack(img, p),
    "jpeg": lambda img, p, seed: jpeg_attack(img, p),
    "noise": lambda img, p, seed: gaussian_noise_attack(img, p, seed),
}


def robustness_sweep(carrier, wm, seed1: int, seed2: int, attacks,
                     spec: CoefficientSpec = CoefficientSpec(),
                     noise_seed: int = 0x5EED) -> list:
    """Embed, attack, extract, and score every attack cell in both modes.

    `attacks` is an iterable of (kind, parameter); returns rows of
    (kind, parameter, mode, similarity). Deterministic given the seeds.
    """
    wm = np.asarray(wm, dtype=np.uint8) & 1
    rows = []
    for kind, param in attacks:
        if kind not in _ATTACKS:
            raise ValueError(f"unknown attack {kind!r}")
        for mode in ("unauth", "auth"):
            key = EmbeddingKey(seed1, seed2, mode=mode)
            marked = embed(carrier, wm, key, spec)
            attacked = _ATTACKS[kind](marked, param, noise_seed)
            recovered = extract(attacked, key, spec, wm.shape)
            rows.append((kind, param, mode, similarity(wm, recovered)))
    return rows
