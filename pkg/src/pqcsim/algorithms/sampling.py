"""Drawing basis states from a distributed state vector.

Two collective samplers share one seeded uniform stream:

* ``logical`` (default) inverts the cumulative distribution in logical index
  order, refining ``PREFIX_BITS`` bits of the index per pass. Each pass is a
  local scan plus one all-reduce, so the draws do not depend on the rank
  count or on the current qubit permutation.
* ``route`` routes each draw to a rank by the cumulative shard masses and
  lets that rank invert its local cumulative in storage order. One pass, but
  the draws change with the layout.
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import DomainError, StateError
from ..layout import QubitPermutation, logical_index
from ..statevec import StateShard, norm_squared
from ..transport import Comm, spawn

NORM_TOL = 1e-6
PREFIX_BITS = 8
METHODS = ("logical", "route")


def draw_uniforms(seed: int, count: int) -> np.ndarray:
    """The shared uniform stream; every rank derives the same draws from the seed alone."""
    return np.random.Generator(np.random.Philox(seed)).random(count)


def _pick(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """First index whose cumulative exceeds each u, never past the last cell with mass."""
    last = int(np.flatnonzero(np.diff(cum, prepend=0.0) > 0)[-1])
    return np.minimum(np.searchsorted(cum, u, side="right"), last)


def _groups(keys: np.ndarray):
    """(key, member indices) for each distinct key."""
    order = np.argsort(keys, kind="stable")
    bounds = np.flatnonzero(np.diff(keys[order])) + 1
    for members in np.split(order, bounds):
        yield keys[members[0]], members


def _checked_total(comm: Comm, shard: StateShard) -> np.ndarray:
    masses = np.asarray(comm.all_gather(norm_squared(shard)), dtype=np.float64)
    total = masses.sum()
    if not abs(total - 1.0) <= NORM_TOL:
        raise StateError(f"cannot sample: state norm is {total!r}")
    return masses


def _sample_logical(comm, shard, sigma, u) -> np.ndarray:
    l = sigma.l
    p2q = sigma.as_array()
    prefixes = np.zeros(len(u), dtype=np.int64)
    resid = u.copy()
    done = 0
    while done < l:
        width = min(PREFIX_BITS, l - done)
        shift = l - done - width
        active = np.unique(prefixes)
        local = np.zeros((len(active), 1 << width))
        kernels.prefix_masses(shard.amps, shard.rank, sigma.m, p2q, shift, width, active, local)
        masses = comm.all_reduce_sum(local)
        cum = np.cumsum(masses, axis=1)
        rows = np.searchsorted(active, prefixes)
        for row, members in _groups(rows):
            digits = _pick(cum[row], resid[members])
            below = np.concatenate(([0.0], cum[row]))[digits]
            resid[members] -= below
            prefixes[members] = (prefixes[members] << width) | digits
        done += width
    return prefixes


def _sample_route(comm, shard, sigma, u, masses) -> np.ndarray:
    cum = np.cumsum(masses)
    owner = _pick(cum, u)
    out = np.zeros(len(u), dtype=np.int64)
    mine = np.flatnonzero(owner == comm.rank)
    if mine.size:
        local_cum = np.cumsum(np.abs(shard.amps) ** 2)
        offset = cum[comm.rank - 1] if comm.rank else 0.0
        for i, a in zip(mine, _pick(local_cum, u[mine] - offset)):
            out[i] = logical_index(sigma, comm.rank, int(a))
    return comm.all_reduce_sum(out)


def sample_on_rank(
    comm: Comm,
    shard: StateShard,
    sigma: QubitPermutation,
    count: int,
    seed: int,
    method: str = "logical",
) -> list[int]:
    """Collective: every rank returns the same `count` logical basis indices."""
    if count < 0:
        raise DomainError("sample count must be non-negative")
    if method not in METHODS:
        raise DomainError(f"unknown sampling method {method!r}")
    masses = _checked_total(comm, shard)
    if count == 0:
        return []
    u = draw_uniforms(seed, count) * masses.sum()
    if method == "route":
        drawn = _sample_route(comm, shard, sigma, u, masses)
    else:
        drawn = _sample_logical(comm, shard, sigma, u)
    return [int(v) for v in drawn]


def sample_states(state, count: int, seed: int = 0, method: str = "logical", timeout: float = 30.0) -> list[int]:
    """Draw `count` basis indices with probability |<x|state>|^2.

    `state` is a DistributedState; one SPMD pass over its shards does the work.
    """
    shards = state.shards

    def rank_main(comm: Comm) -> list[int]:
        return sample_on_rank(comm, shards[comm.rank], state.sigma, count, seed, method)

    return spawn(len(shards), rank_main, timeout)[0]
