"""Amplitude shards and the gate kernels that act on their local bits."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, LocalityError
from .layout import QubitPermutation, locate

AMP_DTYPE = np.complex128

_SQ = 1 / math.sqrt(2)


@dataclass(frozen=True)
class Gate2x2:
    u00: complex
    u01: complex
    u10: complex
    u11: complex

    def __post_init__(self):
        m = self.matrix
        err = np.abs(m.conj().T @ m - np.eye(2)).max()
        if not err < 1e-12:
            raise DomainError(f"matrix is not unitary (max |U^dagger U - I| = {err:.3g})")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.u00, self.u01], [self.u10, self.u11]], dtype=AMP_DTYPE)

    def dagger(self) -> "Gate2x2":
        c = lambda z: complex(z).conjugate()  # noqa: E731
        return Gate2x2(c(self.u00), c(self.u10), c(self.u01), c(self.u11))


# Amplitude rules exactly as used by the simulator: a0' = u00 a0 + u01 a1, a1' = u10 a0 + u11 a1.
HADAMARD = Gate2x2(_SQ, _SQ, _SQ, -_SQ)
X_HALF = Gate2x2(_SQ, 1j * _SQ, 1j * _SQ, _SQ)
Y_HALF = Gate2x2(_SQ, _SQ, -_SQ, _SQ)
X_HALF_DAG = X_HALF.dagger()
Y_HALF_DAG = Y_HALF.dagger()

SINGLE_QUBIT_GATES = {
    "H": HADAMARD,
    "X": X_HALF,
    "Y": Y_HALF,
    "XDAG": X_HALF_DAG,
    "YDAG": Y_HALF_DAG,
}


def phase_angle(k: int) -> float:
    """Angle 2*pi/2^|k|, negated for negative k (inverse rotations)."""
    phi = 2 * math.pi / 2.0 ** abs(k)
    return -phi if k < 0 else phi


def controlled_v_matrix(phi: float) -> Gate2x2:
    e = cmath.exp(1j * phi)
    return Gate2x2((1 + e) / 2, (1 - e) / 2, (1 - e) / 2, (1 + e) / 2)


@dataclass
class StateShard:
    """One rank's contiguous block of 2^m amplitudes."""

    m: int
    rank: int = 0
    amps: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.amps is None:
            self.amps = np.zeros(1 << self.m, dtype=AMP_DTYPE)
        elif self.amps.shape != (1 << self.m,) or self.amps.dtype != AMP_DTYPE:
            raise DomainError(f"shard must hold 2^{self.m} complex128 amplitudes")

    def copy(self) -> "StateShard":
        return StateShard(self.m, self.rank, self.amps.copy())


def _check_bits(shard: StateShard, *bits: int) -> None:
    for b in bits:
        if not 0 <= b < shard.m:
            raise LocalityError(f"bit {b} is not local to a shard with m={shard.m}")
    if len(set(bits)) != len(bits):
        raise LocalityError(f"gate bits must be distinct, got {bits}")


def init_shard_basis(shard: StateShard, sigma: QubitPermutation, index: int) -> None:
    """Zero the shard, then place amplitude 1 if `index` lives on this rank."""
    if not 0 <= index < 1 << sigma.l:
        raise DomainError(f"basis index {index} outside [0, 2^{sigma.l})")
    shard.amps[:] = 0
    rank, address = locate(sigma, index)
    if rank == shard.rank:
        shard.amps[address] = 1.0


def init_basis_state(shards: Sequence[StateShard], sigma: QubitPermutation, index: int) -> None:
    if len(shards) != sigma.n_ranks:
        raise DomainError(f"expected {sigma.n_ranks} shards, got {len(shards)}")
    for shard in shards:
        init_shard_basis(shard, sigma, index)


def apply_single_qubit(shard: StateShard, local_bit: int, u: Gate2x2) -> None:
    _check_bits(shard, local_bit)
    kernels.apply_1q(shard.amps, local_bit, u.u00, u.u01, u.u10, u.u11)


def apply_phase_shift(shard: StateShard, local_bit: int, phi: float) -> None:
    _check_bits(shard, local_bit)
    kernels.phase_1q(shard.amps, local_bit, cmath.exp(1j * phi))


def apply_cnot(shard: StateShard, control_bit: int, target_bit: int) -> None:
    _check_bits(shard, control_bit, target_bit)
    kernels.cnot(shard.amps, control_bit, target_bit)


def apply_controlled_phase(shard: StateShard, control_bit: int, target_bit: int, phi: float) -> None:
    _check_bits(shard, control_bit, target_bit)
    kernels.cphase(shard.amps, control_bit, target_bit, cmath.exp(1j * phi))


def apply_controlled_v(shard: StateShard, control_bit: int, target_bit: int, phi: float) -> None:
    _check_bits(shard, control_bit, target_bit)
    v = controlled_v_matrix(phi)
    kernels.apply_c1q(shard.amps, control_bit, target_bit, v.u00, v.u01, v.u10, v.u11)


def apply_toffoli(shard: StateShard, control1: int, control2: int, target_bit: int) -> None:
    _check_bits(shard, control1, control2, target_bit)
    kernels.toffoli(shard.amps, control1, control2, target_bit)


def partial_expectation(shard: StateShard, local_bit: int) -> float:
    """This rank's share of P(bit = 1); the caller reduces across ranks."""
    _check_bits(shard, local_bit)
    return float(kernels.bit_probs(shard.amps, np.array([local_bit], dtype=np.int64))[0])


def partial_expectations(shard: StateShard, local_bits: Iterable[int]) -> np.ndarray:
    bits = np.asarray(list(local_bits), dtype=np.int64)
    for b in bits:
        _check_bits(shard, int(b))
    if bits.size == 0:
        return np.zeros(0)
    return kernels.bit_probs(shard.amps, bits)


def norm_squared(shard: StateShard) -> float:
    return float(kernels.norm_sq(shard.amps))
