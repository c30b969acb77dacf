"""Pure-numpy fallback for the amplitude kernels.

Same signatures and semantics as the numba path. Index sets are built
chunk by chunk so temporaries stay bounded by CHUNK elements regardless of
shard size.
"""
import numpy as np

CHUNK = 1 << 16


def _bases(start, stop, positions):
    r = np.arange(start, stop, dtype=np.int64)
    for p in positions:
        r = ((r >> p) << (p + 1)) | (r & ((1 << p) - 1))
    return r


def _chunks(count):
    for start in range(0, count, CHUNK):
        yield start, min(count, start + CHUNK)


def apply_1q(amps, bit, u00, u01, u10, u11):
    s = 1 << bit
    for lo, hi in _chunks(amps.shape[0] >> 1):
        i0 = _bases(lo, hi, (bit,))
        i1 = i0 | s
        a0 = amps[i0]
        a1 = amps[i1]
        amps[i0] = u00 * a0 + u01 * a1
        amps[i1] = u10 * a0 + u11 * a1


def phase_1q(amps, bit, ph):
    s = 1 << bit
    for lo, hi in _chunks(amps.shape[0] >> 1):
        i1 = _bases(lo, hi, (bit,)) | s
        amps[i1] *= ph


def apply_c1q(amps, ctrl, tgt, u00, u01, u10, u11):
    bits = sorted((ctrl, tgt))
    for lo, hi in _chunks(amps.shape[0] >> 2):
        i0 = _bases(lo, hi, bits) | (1 << ctrl)
        i1 = i0 | (1 << tgt)
        a0 = amps[i0]
        a1 = amps[i1]
        amps[i0] = u00 * a0 + u01 * a1
        amps[i1] = u10 * a0 + u11 * a1


def cnot(amps, ctrl, tgt):
    bits = sorted((ctrl, tgt))
    for lo, hi in _chunks(amps.shape[0] >> 2):
        i0 = _bases(lo, hi, bits) | (1 << ctrl)
        i1 = i0 | (1 << tgt)
        amps[i0], amps[i1] = amps[i1], amps[i0]


def cphase(amps, ctrl, tgt, ph):
    bits = sorted((ctrl, tgt))
    mask = (1 << ctrl) | (1 << tgt)
    for lo, hi in _chunks(amps.shape[0] >> 2):
        amps[_bases(lo, hi, bits) | mask] *= ph


def toffoli(amps, c1, c2, tgt):
    bits = sorted((c1, c2, tgt))
    cmask = (1 << c1) | (1 << c2)
    for lo, hi in _chunks(amps.shape[0] >> 3):
        i0 = _bases(lo, hi, bits) | cmask
        i1 = i0 | (1 << tgt)
        amps[i0], amps[i1] = amps[i1], amps[i0]


def norm_sq(amps):
    total = 0.0
    for lo, hi in _chunks(amps.shape[0]):
        block = amps[lo:hi]
        total += float(np.vdot(block, block).real)
    return total


def bit_probs(amps, bits):
    out = np.zeros(len(bits))
    for lo, hi in _chunks(amps.shape[0]):
        p = amps[lo:hi].real ** 2 + amps[lo:hi].imag ** 2
        idx = np.arange(lo, hi, dtype=np.int64)
        for b, bit in enumerate(bits):
            out[b] += p[(idx >> bit) & 1 == 1].sum()
    return out


def gather(amps, addrs, out):
    out[:] = amps[addrs]


def scatter(amps, addrs, buf):
    amps[addrs] = buf


def pattern_addresses(m, positions, pattern, out):
    fixed = 0
    for i, p in enumerate(positions):
        if (pattern >> i) & 1:
            fixed |= 1 << int(p)
    for lo, hi in _chunks(out.shape[0]):
        out[lo:hi] = _bases(lo, hi, [int(p) for p in positions]) | fixed


def _high_bits(rank, m, pos_to_qubit):
    high = 0
    for p in range(m, len(pos_to_qubit)):
        if (rank >> (p - m)) & 1:
            high |= 1 << int(pos_to_qubit[p])
    return high


def _decode_block(lo, hi, high, m, pos_to_qubit):
    a = np.arange(lo, hi, dtype=np.int64)
    g = np.full(hi - lo, high, dtype=np.int64)
    for p in range(m):
        g |= ((a >> p) & 1) << int(pos_to_qubit[p])
    return g


def logical_indices(rank, m, pos_to_qubit, start, out):
    high = _high_bits(rank, m, pos_to_qubit)
    for lo, hi in _chunks(out.shape[0]):
        out[lo:hi] = _decode_block(start + lo, start + hi, high, m, pos_to_qubit)


def prefix_masses(amps, rank, m, pos_to_qubit, shift, width, active, out):
    high = _high_bits(rank, m, pos_to_qubit)
    dmask = (1 << width) - 1
    flat = out.reshape(-1)
    for lo, hi in _chunks(amps.shape[0]):
        block = amps[lo:hi]
        prob = block.real**2 + block.imag**2
        g = _decode_block(lo, hi, high, m, pos_to_qubit)
        prefix = g >> (shift + width)
        j = np.minimum(np.searchsorted(active, prefix), len(active) - 1)
        hit = active[j] == prefix
        keys = j[hit] * (dmask + 1) + ((g[hit] >> shift) & dmask)
        flat += np.bincount(keys, weights=prob[hit], minlength=flat.shape[0])


def modexp_fill(amps, rank, m, pos_to_qubit, x_bits, table, amp):
    high = _high_bits(rank, m, pos_to_qubit)
    xmask = (1 << x_bits) - 1
    for lo, hi in _chunks(amps.shape[0]):
        g = _decode_block(lo, hi, high, m, pos_to_qubit)
        amps[lo:hi] = np.where((g >> x_bits) == table[g & xmask], amp, 0.0)
