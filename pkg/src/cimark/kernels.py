"""Hot inner loops: XORshift chains, chaotic-iteration rounds, GF(2) ranks.

Every kernel exists twice: a numba @njit version (default) and a pure-numpy
version. Set CIMARK_DISABLE_NUMBA=1 to force the numpy path; it is also
selected automatically when numba is not installed. Both paths produce
bit-identical output (cross-checked in the test suite).
"""

from __future__ import annotations

import os

import numpy as np

_MASK32 = 0xFFFFFFFF

_env = os.environ.get("CIMARK_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _env in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False


def xorshift_step(word: int) -> int:
    """One 32-bit shift-XOR round (shifts 13 left, 17 right, 5 left)."""
    word &= _MASK32
    word ^= (word << 13) & _MASK32
    word ^= word >> 17
    word ^= (word << 5) & _MASK32
    return word


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:

    @njit(cache=True)
    def _xorshift_fill_nb(state, out):
        x = np.uint64(state)
        mask = np.uint64(0xFFFFFFFF)
        for i in range(out.size):
            x ^= (x << np.uint64(13)) & mask
            x ^= x >> np.uint64(17)
            x ^= (x << np.uint64(5)) & mask
            out[i] = np.uint32(x)
        return x

    @njit(cache=True)
    def _ci_fill_nb(xbits, s1, s2, c, out):
        n = xbits.size
        rounds = out.size // n
        a = np.uint64(s1)
        b = np.uint64(s2)
        mask = np.uint64(0xFFFFFFFF)
        un = np.uint64(n)
        pos = 0
        for _ in range(rounds):
            a ^= (a << np.uint64(13)) & mask
            a ^= a >> np.uint64(17)
            a ^= (a << np.uint64(5)) & mask
            m = int(a & np.uint64(1)) + c
            for _ in range(m):
                b ^= (b << np.uint64(13)) & mask
                b ^= b >> np.uint64(17)
                b ^= (b << np.uint64(5)) & mask
                s = int(b % un)
                xbits[s] ^= 1
            for j in range(n):
                out[pos + j] = xbits[j]
            pos += n
        return a, b

    @njit(cache=True)
    def _xorshift_period_nb(seed):
        x = np.uint64(seed)
        mask = np.uint64(0xFFFFFFFF)
        start = x
        count = np.uint64(0)
        while True:
            x ^= (x << np.uint64(13)) & mask
            x ^= x >> np.uint64(17)
            x ^= (x << np.uint64(5)) & mask
            count += np.uint64(1)
            if x == start:
                return count

    @njit(cache=True)
    def _rank_batch_nb(rows, nrows, ncols, out):
        nmat = rows.shape[0]
        for k in range(nmat):
            r = 0
            for col in range(ncols):
                mask = np.uint64(1) << np.uint64(col)
                piv = -1
                for i in range(r, nrows):
                    if rows[k, i] & mask:
                        piv = i
                        break
                if piv < 0:
                    continue
                tmp = rows[k, r]
                rows[k, r] = rows[k, piv]
                rows[k, piv] = tmp
                prow = rows[k, r]
                for i in range(r + 1, nrows):
                    if rows[k, i] & mask:
                        rows[k, i] ^= prow
                r += 1
                if r == nrows:
                    break
            out[k] = r


# ---------------------------------------------------------------------------
# numpy fallbacks
#
# The XORshift round is linear over GF(2), so a block of the state chain can
# be advanced in lock-step: with T the round matrix and L the block length,
# [s_{k+L} .. s_{k+2L-1}] = T^L applied elementwise to [s_k .. s_{k+L-1}].
# Only the first block is generated serially.
# ---------------------------------------------------------------------------

_LANES = 1024


def _xs_columns():
    """Columns of the round matrix: image of each basis vector."""
    return [xorshift_step(1 << j) for j in range(32)]


def _mat_mul_gf2(a, b):
    out = []
    for j in range(32):
        v = b[j]
        acc = 0
        for i in range(32):
            if (v >> i) & 1:
                acc ^= a[i]
        out.append(acc)
    return out


def _mat_pow_gf2(a, e):
    result = [1 << j for j in range(32)]  # identity
    base = list(a)
    while e:
        if e & 1:
            result = _mat_mul_gf2(base, result)
        base = _mat_mul_gf2(base, base)
        e >>= 1
    return result


_TL_COLS = None  # lazily built uint32 columns of T^_LANES


def _apply_cols(cols, v):
    out = np.zeros_like(v)
    one = np.uint32(1)
    for j in range(32):
        bit = (v >> np.uint32(j)) & one
        out ^= bit * cols[j]
    return out


def _xorshift_fill_np(state, out):
    global _TL_COLS
    n = out.size
    if n == 0:
        return state
    head = min(n, _LANES)
    x = int(state)
    for i in range(head):
        x = xorshift_step(x)
        out[i] = x
    if n > head:
        if _TL_COLS is None:
            _TL_COLS = np.array(_mat_pow_gf2(_xs_columns(), _LANES), dtype=np.uint32)
        pos = head
        block = out[:head]
        while pos < n:
            take = min(_LANES, n - pos)
            block = _apply_cols(_TL_COLS, block)
            out[pos:pos + take] = block[:take]
            pos += take
    return int(out[n - 1])


def _ci_fill_np(xbits, s1, s2, c, out):
    n = xbits.size
    rounds = out.size // n
    if rounds == 0:
        return None, None, s1, s2
    a_chain = np.empty(rounds, dtype=np.uint32)
    s1 = _xorshift_fill_np(s1, a_chain)
    m = (a_chain & np.uint32(1)).astype(np.int64) + c
    total = int(m.sum())
    b_chain = np.empty(total, dtype=np.uint32)
    s2 = _xorshift_fill_np(s2, b_chain)
    idx = (b_chain % np.uint32(n)).astype(np.int64)
    round_id = np.repeat(np.arange(rounds, dtype=np.int64), m)
    counts = np.bincount(round_id * n + idx, minlength=rounds * n)
    parity = np.cumsum(counts.reshape(rounds, n), axis=0) & 1
    states = parity.astype(np.uint8) ^ xbits[None, :]
    out[:] = states.reshape(-1)
    xbits[:] = states[-1]
    return a_chain, b_chain, s1, s2


def _rank_batch_np(rows, nrows, ncols):
    nmat = rows.shape[0]
    m = rows
    rank = np.zeros(nmat, dtype=np.int64)
    ptr = np.zeros(nmat, dtype=np.int64)
    lanes = np.arange(nmat)
    rowidx = np.arange(nrows)[None, :]
    for col in range(ncols):
        mask = np.uint64(1 << col)
        cand = ((m & mask) != 0) & (rowidx >= ptr[:, None])
        piv = np.argmax(cand, axis=1)
        found = cand[lanes, piv]
        # swap pivot row up where found; exhausted lanes index a dummy row
        p = np.minimum(ptr, nrows - 1)
        src = np.where(found, piv, p)
        tmp = m[lanes, src].copy()
        m[lanes, src] = m[lanes, p]
        m[lanes, p] = tmp
        # eliminate the bit everywhere below the pivot row
        prow = np.where(found, tmp, np.uint64(0))
        hit = ((m & mask) != 0) & (rowidx > p[:, None]) & found[:, None]
        m ^= hit * prow[:, None]
        ptr += found
        rank += found
        if (ptr >= nrows).all():
            break
    return rank


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def xorshift_fill(state: int, n: int) -> tuple[np.ndarray, int]:
    """Next n words of the XORshift chain starting after `state`."""
    out = np.empty(n, dtype=np.uint32)
    if NUMBA_ENABLED:
        new = _xorshift_fill_nb(state, out) if n else np.uint64(state)
        return out, int(new)
    new = _xorshift_fill_np(state, out)
    return out, int(new)


def ci_fill(xbits: np.ndarray, s1: int, s2: int, c: int, rounds: int) -> tuple[np.ndarray, int, int]:
    """Run `rounds` generator rounds, mutating xbits in place.

    Returns (emitted bits as uint8 array of rounds*n entries, new s1, new s2).
    """
    out = np.empty(rounds * xbits.size, dtype=np.uint8)
    if NUMBA_ENABLED:
        a, b = _ci_fill_nb(xbits, s1, s2, c, out)
        return out, int(a), int(b)
    _, _, s1, s2 = _ci_fill_np(xbits, s1, s2, c, out)
    return out, s1, s2


def rank_batch(rows: np.ndarray, nrows: int, ncols: int) -> np.ndarray:
    """GF(2) ranks of a batch of bit-packed matrices (one uint64 per row)."""
    work = rows.copy()
    if NUMBA_ENABLED:
        out = np.empty(work.shape[0], dtype=np.int64)
        _rank_batch_nb(work, nrows, ncols, out)
        return out
    return _rank_batch_np(work, nrows, ncols)


def xorshift_cycle_length(seed: int) -> int:
    """Steps until the chain returns to `seed` (full walk; needs the
    compiled kernel to finish in seconds)."""
    if NUMBA_ENABLED:
        return int(_xorshift_period_nb(seed))
    x = xorshift_step(seed)
    count = 1
    while x != seed:
        x = xorshift_step(x)
        count += 1
    return count
