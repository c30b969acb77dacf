"""Qubit permutation, global-index placement and K-pair exchange planning.

Bit position p of an amplitude's storage index holds logical qubit
``pos_to_qubit[p]``. Positions below m form the local address, positions
m..l-1 form the rank id.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .errors import CapacityError, DomainError, LocalityError


@dataclass(frozen=True)
class QubitPermutation:
    pos_to_qubit: tuple[int, ...]
    m: int
    qubit_to_pos: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        l = len(self.pos_to_qubit)
        if sorted(self.pos_to_qubit) != list(range(l)):
            raise DomainError(f"not a permutation of 0..{l - 1}: {self.pos_to_qubit}")
        if not 0 <= self.m <= l:
            raise DomainError(f"local qubit count m={self.m} outside [0, {l}]")
        inv = [0] * l
        for p, q in enumerate(self.pos_to_qubit):
            inv[q] = p
        object.__setattr__(self, "pos_to_qubit", tuple(self.pos_to_qubit))
        object.__setattr__(self, "qubit_to_pos", tuple(inv))

    @classmethod
    def identity(cls, l: int, m: int) -> "QubitPermutation":
        return cls(tuple(range(l)), m)

    @classmethod
    def from_columns(cls, qubits_high_to_low: Sequence[int], m: int) -> "QubitPermutation":
        """Build from the bottom row of the two-row notation (positions l-1 .. 0)."""
        return cls(tuple(reversed(qubits_high_to_low)), m)

    @property
    def l(self) -> int:
        return len(self.pos_to_qubit)

    @property
    def n_ranks(self) -> int:
        return 1 << (self.l - self.m)

    def position(self, qubit: int) -> int:
        return self.qubit_to_pos[qubit]

    def is_local(self, qubit: int) -> bool:
        return self.qubit_to_pos[qubit] < self.m

    def local_qubits(self) -> tuple[int, ...]:
        return self.pos_to_qubit[: self.m]

    def transpose(self, position_pairs: Iterable[tuple[int, int]]) -> "QubitPermutation":
        p2q = list(self.pos_to_qubit)
        for a, b in position_pairs:
            p2q[a], p2q[b] = p2q[b], p2q[a]
        return QubitPermutation(tuple(p2q), self.m)

    def columns(self) -> tuple[int, ...]:
        return tuple(reversed(self.pos_to_qubit))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.pos_to_qubit, dtype=np.int64)


def locate(sigma: QubitPermutation, global_bits: int) -> tuple[int, int]:
    """(rank, address) holding the amplitude of logical basis state `global_bits`."""
    if not 0 <= global_bits < 1 << sigma.l:
        raise DomainError(f"basis index {global_bits} outside [0, 2^{sigma.l})")
    address = 0
    rank = 0
    for p, q in enumerate(sigma.pos_to_qubit):
        bit = (global_bits >> q) & 1
        if p < sigma.m:
            address |= bit << p
        else:
            rank |= bit << (p - sigma.m)
    return rank, address


def logical_index(sigma: QubitPermutation, rank: int, address: int) -> int:
    g = 0
    for p, q in enumerate(sigma.pos_to_qubit):
        bit = (address >> p) & 1 if p < sigma.m else (rank >> (p - sigma.m)) & 1
        g |= bit << q
    return g


def shard_logical_indices(sigma: QubitPermutation, rank: int) -> np.ndarray:
    out = np.empty(1 << sigma.m, dtype=np.int64)
    kernels.logical_indices(rank, sigma.m, sigma.as_array(), 0, out)
    return out


EvictionPolicy = Callable[[QubitPermutation, int, frozenset], list]


def evict_lowest(sigma: QubitPermutation, count: int, protected: frozenset = frozenset()) -> list[int]:
    """Lowest local positions whose qubit is not protected, ascending."""
    picked = [p for p in range(sigma.m) if sigma.pos_to_qubit[p] not in protected][:count]
    if len(picked) < count:
        raise CapacityError(f"only {len(picked)} evictable local positions, need {count}")
    return picked


def evict_highest(sigma: QubitPermutation, count: int, protected: frozenset = frozenset()) -> list[int]:
    picked = [p for p in reversed(range(sigma.m)) if sigma.pos_to_qubit[p] not in protected][:count]
    if len(picked) < count:
        raise CapacityError(f"only {len(picked)} evictable local positions, need {count}")
    return picked


@dataclass(frozen=True)
class ExchangePlan:
    """Swap local_positions[i] with rank_positions[i] for every i, simultaneously."""

    l: int
    m: int
    local_positions: tuple[int, ...]
    rank_positions: tuple[int, ...]
    chunk_count: int = 4

    def __post_init__(self):
        k = len(self.local_positions)
        if k != len(self.rank_positions) or k == 0:
            raise DomainError("an exchange needs matching, non-empty position lists")
        if k > min(self.m, self.l - self.m):
            raise CapacityError(f"K={k} exceeds min(m, l-m)={min(self.m, self.l - self.m)}")
        if len(set(self.local_positions)) != k or not all(0 <= p < self.m for p in self.local_positions):
            raise LocalityError(f"local positions must be distinct and < m: {self.local_positions}")
        if len(set(self.rank_positions)) != k or not all(self.m <= p < self.l for p in self.rank_positions):
            raise LocalityError(f"rank positions must be distinct and in [m, l): {self.rank_positions}")
        if self.chunk_count < 1:
            raise DomainError("chunk_count must be positive")

    @property
    def k(self) -> int:
        return len(self.local_positions)

    @property
    def retained_slots(self) -> int:
        return 1 << (self.m - self.k)

    @property
    def sent_slots(self) -> int:
        return ((1 << self.k) - 1) << (self.m - self.k)

    def apply(self, sigma: QubitPermutation) -> QubitPermutation:
        return sigma.transpose(zip(self.local_positions, self.rank_positions))


def plan_exchange(
    sigma: QubitPermutation,
    qubits_needed: Sequence[int],
    eviction_policy: EvictionPolicy = evict_lowest,
    chunk_count: int = 4,
    protected: Iterable[int] = (),
) -> tuple[ExchangePlan, QubitPermutation]:
    """Make every qubit in `qubits_needed` local with a single K-pair exchange.

    The i-th needed qubit trades places with the i-th position returned by the
    eviction policy. Qubits in `protected` (e.g. other operands of the gate)
    are never evicted.
    """
    needed = list(qubits_needed)
    for q in needed:
        if sigma.is_local(q):
            raise LocalityError(f"qubit {q} is already local")
    if len(set(needed)) != len(needed):
        raise DomainError(f"duplicate qubits in {needed}")
    if len(needed) > min(sigma.m, sigma.l - sigma.m):
        raise CapacityError(
            f"cannot localize {len(needed)} qubits at once with m={sigma.m}, l={sigma.l}"
        )
    evicted = eviction_policy(sigma, len(needed), frozenset(protected) | frozenset(needed))
    plan = ExchangePlan(
        sigma.l,
        sigma.m,
        tuple(evicted),
        tuple(sigma.position(q) for q in needed),
        chunk_count,
    )
    return plan, plan.apply(sigma)


def plan_from_pairs(
    sigma: QubitPermutation, pairs: Sequence[tuple[int, int]], chunk_count: int = 4
) -> tuple[ExchangePlan, QubitPermutation]:
    """Plan for an explicit swap command; each pair must join one local and one nonlocal qubit."""
    local_pos, rank_pos = [], []
    for a, b in pairs:
        la, lb = sigma.is_local(a), sigma.is_local(b)
        if la == lb:
            kind = "local" if la else "nonlocal"
            raise LocalityError(f"swap pair ({a}, {b}) joins two {kind} qubits")
        if not la:
            a, b = b, a
        local_pos.append(sigma.position(a))
        rank_pos.append(sigma.position(b))
    plan = ExchangePlan(sigma.l, sigma.m, tuple(local_pos), tuple(rank_pos), chunk_count)
    return plan, plan.apply(sigma)


def slot_addresses(m: int, positions: Sequence[int], pattern: int) -> np.ndarray:
    """Ascending local addresses whose bits at positions[i] equal bit i of pattern."""
    order = sorted(range(len(positions)), key=lambda i: positions[i])
    sorted_pos = np.asarray([positions[i] for i in order], dtype=np.int64)
    sorted_pattern = 0
    for j, i in enumerate(order):
        sorted_pattern |= ((pattern >> i) & 1) << j
    out = np.empty(1 << (m - len(positions)), dtype=np.int64)
    kernels.pattern_addresses(m, sorted_pos, sorted_pattern, out)
    return out


def rank_pattern(plan: ExchangePlan, rank: int) -> int:
    c = 0
    for i, p in enumerate(plan.rank_positions):
        c |= ((rank >> (p - plan.m)) & 1) << i
    return c


def partner_rank(plan: ExchangePlan, rank: int, pattern: int) -> int:
    r = rank
    for i, p in enumerate(plan.rank_positions):
        bit = 1 << (p - plan.m)
        r = (r | bit) if (pattern >> i) & 1 else (r & ~bit)
    return r


def exchange_slots(plan: ExchangePlan, my_rank: int) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Partners of `my_rank` in ascending order with the addresses traded with each.

    The slot spelling pattern b on the rank spelling c moves to the slot
    spelling c on the rank spelling b, so a rank sends and receives through
    the same address set: the one spelling the partner's pattern.
    """
    c = rank_pattern(plan, my_rank)
    out = []
    for b in range(1 << plan.k):
        if b == c:
            continue
        addrs = slot_addresses(plan.m, plan.local_positions, b)
        out.append((partner_rank(plan, my_rank, b), addrs, addrs))
    out.sort(key=lambda t: t[0])
    return out


def retained_addresses(plan: ExchangePlan, my_rank: int) -> np.ndarray:
    return slot_addresses(plan.m, plan.local_positions, rank_pattern(plan, my_rank))
