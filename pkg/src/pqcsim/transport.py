"""In-process SPMD rank engine.

Each rank runs the same function in its own thread and talks to the others
only through a :class:`Comm`: synchronous pairwise exchanges over
single-slot rendezvous queues, and collectives built on a barrier. All
reductions accumulate in rank order, so results are bit-reproducible no
matter how the threads are scheduled.
"""
from __future__ import annotations

import logging
import os
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import kernels
from .errors import DeadlockError, DomainError, ProtocolError, ResourceError, SimulatorError

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0
_POLL = 0.05


class RankAborted(SimulatorError):
    """Raised in surviving ranks after another rank failed."""

    category = "aborted"


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class RankTopology:
    l: int
    m: int

    def __post_init__(self):
        if not 0 <= self.m <= self.l:
            raise DomainError(f"local qubit count m={self.m} outside [0, {self.l}]")

    @property
    def n_ranks(self) -> int:
        return 1 << (self.l - self.m)

    @classmethod
    def from_ranks(cls, l: int, n_ranks: int) -> "RankTopology":
        if not is_power_of_two(n_ranks):
            raise DomainError(f"rank count must be a power of two, got {n_ranks}")
        log2n = n_ranks.bit_length() - 1
        if log2n > l:
            raise DomainError(f"{n_ranks} ranks exceed 2^{l} amplitudes")
        return cls(l, l - log2n)


@dataclass
class ExchangeStats:
    n_ranks: int
    amplitudes_sent: list = field(default=None)
    messages_sent: list = field(default=None)

    def __post_init__(self):
        self.reset()

    def reset(self) -> None:
        self.amplitudes_sent = [0] * self.n_ranks
        self.messages_sent = [0] * self.n_ranks

    def as_dict(self) -> dict:
        return {"amplitudes_sent": list(self.amplitudes_sent), "messages_sent": list(self.messages_sent)}


def available_memory() -> int:
    """Bytes of physical memory currently available, or total memory if unknown."""
    try:
        with open("/proc/meminfo") as fh:
            for line in fh:
                if line.startswith("MemAvailable:"):
                    return int(line.split()[1]) * 1024
    except OSError:
        pass
    return os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")


def ensure_fits(l: int, bytes_per_amp: int = 16, headroom: float = 0.8) -> None:
    """Refuse to allocate a 2^l state that would not fit in available memory."""
    need = (1 << l) * bytes_per_amp
    limit = int(os.environ.get("PQCSIM_MAX_STATE_BYTES", 0)) or int(available_memory() * headroom)
    if need > limit:
        raise ResourceError(
            f"state of {l} qubits needs {need / 2**30:.1f} GiB, only {limit / 2**30:.1f} GiB usable"
        )


class World:
    """Shared rendezvous state for one SPMD run."""

    def __init__(self, n_ranks: int, timeout: float = DEFAULT_TIMEOUT):
        if not is_power_of_two(n_ranks):
            raise DomainError(f"rank count must be a power of two, got {n_ranks}")
        self.n_ranks = n_ranks
        self.timeout = timeout
        self.stats = ExchangeStats(n_ranks)
        self._queues: dict[tuple[int, int], queue.Queue] = {}
        self._qlock = threading.Lock()
        self._barrier = threading.Barrier(n_ranks)
        self._slots: list[Any] = [None] * n_ranks
        self._aborted = threading.Event()

    def channel(self, src: int, dst: int) -> queue.Queue:
        key = (src, dst)
        with self._qlock:
            q = self._queues.get(key)
            if q is None:
                q = self._queues[key] = queue.Queue(maxsize=1)
            return q

    def abort(self) -> None:
        self._aborted.set()
        self._barrier.abort()

    @property
    def aborted(self) -> bool:
        return self._aborted.is_set()

    def comm(self, rank: int) -> "Comm":
        return Comm(self, rank)


class Comm:
    """A rank's handle on the world: pairwise exchange and collectives."""

    def __init__(self, world: World, rank: int):
        self.world = world
        self.rank = rank

    @property
    def size(self) -> int:
        return self.world.n_ranks

    @property
    def stats(self) -> ExchangeStats:
        return self.world.stats

    def _deadline_loop(self, op: Callable[[float], Any], what: str):
        deadline = time.monotonic() + self.world.timeout
        while True:
            if self.world.aborted:
                raise RankAborted(f"rank {self.rank}: run aborted while waiting on {what}")
            try:
                return op(_POLL)
            except (queue.Empty, queue.Full):
                if time.monotonic() > deadline:
                    raise DeadlockError(
                        f"rank {self.rank}: no rendezvous on {what} within {self.world.timeout:g} s"
                    ) from None

    def sendrecv(self, partner: int, buf: np.ndarray, total: int | None = None) -> np.ndarray:
        """One message each way. `total` is the full exchange length, checked against the partner's."""
        if partner == self.rank or not 0 <= partner < self.size:
            raise ProtocolError(f"rank {self.rank}: invalid partner {partner}")
        header = (len(buf), len(buf) if total is None else total)
        out_q = self.world.channel(self.rank, partner)
        in_q = self.world.channel(partner, self.rank)
        self._deadline_loop(lambda t: out_q.put((header, buf), timeout=t), f"send to {partner}")
        their_header, data = self._deadline_loop(lambda t: in_q.get(timeout=t), f"recv from {partner}")
        if their_header != header:
            raise ProtocolError(
                f"rank {self.rank} <-> {partner}: buffer lengths differ "
                f"(mine {header[1]}/{header[0]}, theirs {their_header[1]}/{their_header[0]})"
            )
        self.stats.amplitudes_sent[self.rank] += len(buf)
        self.stats.messages_sent[self.rank] += 1
        return data

    def exchange(self, partner: int, out_buffer: np.ndarray, chunk_count: int = 4) -> np.ndarray:
        """Swap whole buffers with `partner`, split into at most chunk_count messages."""
        n = len(out_buffer)
        if n == 0:
            return out_buffer[:0].copy()
        pieces = np.array_split(out_buffer, min(chunk_count, n))
        return np.concatenate([self.sendrecv(partner, np.array(p, copy=True), n) for p in pieces])

    def exchange_inplace(self, partner: int, amps: np.ndarray, addrs: np.ndarray, chunk_count: int = 4) -> None:
        """Trade amps[addrs] with the partner's matching slots, one chunk buffer at a time."""
        n = len(addrs)
        if n == 0:
            return
        for piece in np.array_split(addrs, min(chunk_count, n)):
            buf = np.empty(len(piece), dtype=amps.dtype)
            kernels.gather(amps, piece, buf)
            kernels.scatter(amps, piece, self.sendrecv(partner, buf, n))

    def barrier(self) -> None:
        if self.size == 1:
            return
        try:
            self.world._barrier.wait(timeout=self.world.timeout)
        except threading.BrokenBarrierError:
            if self.world.aborted:
                raise RankAborted(f"rank {self.rank}: run aborted at barrier") from None
            raise DeadlockError(f"rank {self.rank}: barrier timed out") from None

    def all_reduce_sum(self, value):
        """Sum of `value` over ranks, accumulated in rank order; identical on every rank."""
        if self.size == 1:
            return value
        w = self.world
        w._slots[self.rank] = value
        self.barrier()
        total = w._slots[0]
        total = total.copy() if isinstance(total, np.ndarray) else total
        for r in range(1, self.size):
            total = total + w._slots[r]
        self.barrier()
        return total

    def all_gather(self, value) -> list:
        if self.size == 1:
            return [value]
        w = self.world
        w._slots[self.rank] = value
        self.barrier()
        out = list(w._slots)
        self.barrier()
        return out


def spawn(
    topology: RankTopology | int,
    rank_main: Callable[[Comm], Any],
    timeout: float = DEFAULT_TIMEOUT,
    world: World | None = None,
) -> list:
    """Run `rank_main(comm)` on every rank and return the per-rank results in rank order.

    A single-rank run executes inline. If any rank raises, the world is
    aborted and the first non-abort exception is re-raised.
    """
    n = topology.n_ranks if isinstance(topology, RankTopology) else int(topology)
    world = world or World(n, timeout)
    if n == 1:
        return [rank_main(world.comm(0))]

    results: list[Any] = [None] * n
    errors: list[BaseException | None] = [None] * n

    def target(r: int) -> None:
        try:
            results[r] = rank_main(world.comm(r))
        except BaseException as exc:  # noqa: BLE001 - re-raised by the caller
            errors[r] = exc
            world.abort()

    threads = [threading.Thread(target=target, args=(r,), name=f"rank-{r}", daemon=True) for r in range(n)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    failures = [(r, e) for r, e in enumerate(errors) if e is not None]
    if failures:
        primary = next(((r, e) for r, e in failures if not isinstance(e, RankAborted)), failures[0])
        log.debug("rank %d failed first: %r", *primary)
        raise primary[1]
    return results


def exchange(comm: Comm, partner_rank: int, out_buffer: np.ndarray, chunk_count: int = 4) -> np.ndarray:
    return comm.exchange(partner_rank, out_buffer, chunk_count)


def all_reduce_sum(comm: Comm, value):
    return comm.all_reduce_sum(value)


def run_all_reduce(values: Sequence, timeout: float = DEFAULT_TIMEOUT) -> list:
    """Each rank contributes values[rank] to one all_reduce_sum; returns what every rank saw."""
    return spawn(len(values), lambda c: c.all_reduce_sum(values[c.rank]), timeout)
