"""Numba-compiled amplitude kernels.

Every kernel works in place on a 1-D complex128 shard and releases the GIL,
so rank threads can run them concurrently. Bit arguments are local bit
positions (already mapped through the qubit permutation by the caller).
"""
import numpy as np
from numba import njit

_OPTS = dict(nogil=True, cache=True)


@njit(inline="always")
def _insert_zero(r, p):
    return ((r >> p) << (p + 1)) | (r & ((1 << p) - 1))


@njit(**_OPTS)
def apply_1q(amps, bit, u00, u01, u10, u11):
    n = amps.shape[0]
    s = 1 << bit
    for base in range(0, n, 2 * s):
        for i in range(base, base + s):
            a0 = amps[i]
            a1 = amps[i + s]
            amps[i] = u00 * a0 + u01 * a1
            amps[i + s] = u10 * a0 + u11 * a1


@njit(**_OPTS)
def phase_1q(amps, bit, ph):
    n = amps.shape[0]
    s = 1 << bit
    for base in range(s, n, 2 * s):
        for i in range(base, base + s):
            amps[i] *= ph


@njit(**_OPTS)
def apply_c1q(amps, ctrl, tgt, u00, u01, u10, u11):
    lo = min(ctrl, tgt)
    hi = max(ctrl, tgt)
    cmask = 1 << ctrl
    tmask = 1 << tgt
    for r in range(amps.shape[0] >> 2):
        i = _insert_zero(_insert_zero(r, lo), hi) | cmask
        j = i | tmask
        a0 = amps[i]
        a1 = amps[j]
        amps[i] = u00 * a0 + u01 * a1
        amps[j] = u10 * a0 + u11 * a1


@njit(**_OPTS)
def cnot(amps, ctrl, tgt):
    lo = min(ctrl, tgt)
    hi = max(ctrl, tgt)
    cmask = 1 << ctrl
    tmask = 1 << tgt
    for r in range(amps.shape[0] >> 2):
        i = _insert_zero(_insert_zero(r, lo), hi) | cmask
        j = i | tmask
        t = amps[i]
        amps[i] = amps[j]
        amps[j] = t


@njit(**_OPTS)
def cphase(amps, ctrl, tgt, ph):
    lo = min(ctrl, tgt)
    hi = max(ctrl, tgt)
    mask = (1 << ctrl) | (1 << tgt)
    for r in range(amps.shape[0] >> 2):
        i = _insert_zero(_insert_zero(r, lo), hi) | mask
        amps[i] *= ph


@njit(**_OPTS)
def toffoli(amps, c1, c2, tgt):
    b0 = min(c1, c2, tgt)
    b2 = max(c1, c2, tgt)
    b1 = c1 + c2 + tgt - b0 - b2
    cmask = (1 << c1) | (1 << c2)
    tmask = 1 << tgt
    for r in range(amps.shape[0] >> 3):
        i = _insert_zero(_insert_zero(_insert_zero(r, b0), b1), b2) | cmask
        j = i | tmask
        t = amps[i]
        amps[i] = amps[j]
        amps[j] = t


@njit(**_OPTS)
def norm_sq(amps):
    acc = 0.0
    for i in range(amps.shape[0]):
        a = amps[i]
        acc += a.real * a.real + a.imag * a.imag
    return acc


@njit(**_OPTS)
def bit_probs(amps, bits):
    """Probability mass with each listed bit set, one pass over the shard."""
    out = np.zeros(bits.shape[0])
    for i in range(amps.shape[0]):
        a = amps[i]
        p = a.real * a.real + a.imag * a.imag
        if p == 0.0:
            continue
        for b in range(bits.shape[0]):
            if (i >> bits[b]) & 1:
                out[b] += p
    return out


@njit(**_OPTS)
def gather(amps, addrs, out):
    for i in range(addrs.shape[0]):
        out[i] = amps[addrs[i]]


@njit(**_OPTS)
def scatter(amps, addrs, buf):
    for i in range(addrs.shape[0]):
        amps[addrs[i]] = buf[i]


@njit(**_OPTS)
def pattern_addresses(m, positions, pattern, out):
    """Ascending addresses in [0, 2^m) whose bits at `positions` spell `pattern`.

    `positions` must be sorted ascending; bit i of `pattern` belongs to positions[i].
    """
    fixed = 0
    for i in range(positions.shape[0]):
        if (pattern >> i) & 1:
            fixed |= 1 << positions[i]
    for r in range(out.shape[0]):
        a = r
        for i in range(positions.shape[0]):
            a = _insert_zero(a, positions[i])
        out[r] = a | fixed


@njit(**_OPTS)
def logical_indices(rank, m, pos_to_qubit, start, out):
    """Logical basis index of local addresses start .. start+len(out)-1."""
    high = 0
    for p in range(m, pos_to_qubit.shape[0]):
        if (rank >> (p - m)) & 1:
            high |= 1 << pos_to_qubit[p]
    for i in range(out.shape[0]):
        a = start + i
        g = high
        for p in range(m):
            if (a >> p) & 1:
                g |= 1 << pos_to_qubit[p]
        out[i] = g


@njit(**_OPTS)
def prefix_masses(amps, rank, m, pos_to_qubit, shift, width, active, out):
    """Probability mass per (active prefix, next `width` bits) of the logical index.

    The prefix is g >> (shift + width); `active` is sorted and out has shape
    (len(active), 2^width).
    """
    high = 0
    for p in range(m, pos_to_qubit.shape[0]):
        if (rank >> (p - m)) & 1:
            high |= 1 << pos_to_qubit[p]
    dmask = (1 << width) - 1
    for a in range(amps.shape[0]):
        v = amps[a]
        prob = v.real * v.real + v.imag * v.imag
        if prob == 0.0:
            continue
        g = high
        for p in range(m):
            if (a >> p) & 1:
                g |= 1 << pos_to_qubit[p]
        prefix = g >> (shift + width)
        j = np.searchsorted(active, prefix)
        if j < active.shape[0] and active[j] == prefix:
            out[j, (g >> shift) & dmask] += prob


@njit(**_OPTS)
def modexp_fill(amps, rank, m, pos_to_qubit, x_bits, table, amp):
    """Write amp where the f-field of the logical index equals table[x-field], else 0."""
    high = 0
    for p in range(m, pos_to_qubit.shape[0]):
        if (rank >> (p - m)) & 1:
            high |= 1 << pos_to_qubit[p]
    xmask = (1 << x_bits) - 1
    for a in range(amps.shape[0]):
        g = high
        for p in range(m):
            if (a >> p) & 1:
                g |= 1 << pos_to_qubit[p]
        if (g >> x_bits) == table[g & xmask]:
            amps[a] = amp
        else:
            amps[a] = 0.0
