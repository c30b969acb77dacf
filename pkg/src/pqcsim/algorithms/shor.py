"""Shor period finding: register sizing, the modular-exponentiation oracle,
the simulated pipeline, and the closed-form distribution it must reproduce.

The x-register is qubits 0..X-1 and the f-register qubits X..L-1, so a
logical basis index g splits as x = g mod 2^X, f = g >> X. After the Fourier
transform, bit i of the frequency k sits on qubit X-1-i.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .. import kernels
from ..circuit import BeginMeasurement, DoMeasurement, EndMeasurement, Gate, InitialState, compile_instructions
from ..errors import DomainError, StateError
from ..layout import QubitPermutation, logical_index
from ..runner import RankContext, RunReport
from ..statevec import StateShard
from ..transport import DEFAULT_TIMEOUT, Comm, RankTopology, World, ensure_fits, spawn
from .generators import gen_qft
from .sampling import sample_on_rank

MAX_X_BITS = 30  # keeps k*r and 2^(X+1) comfortably inside int64


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def multiplicative_order(y: int, g: int) -> int:
    """Classical order of y mod g (used only to choose a default base and by tests)."""
    if math.gcd(y, g) != 1:
        raise DomainError(f"{y} is not coprime to {g}")
    r, v = 1, y % g
    while v != 1:
        v = v * y % g
        r += 1
    return r


def default_base(g: int) -> int:
    """Smallest y whose period is even with y^(r/2) != -1 mod g."""
    for y in range(2, g):
        if math.gcd(y, g) != 1:
            continue
        r = multiplicative_order(y, g)
        if r % 2 == 0 and pow(y, r // 2, g) != g - 1:
            return y
    raise DomainError(f"no usable base for {g}")


@dataclass(frozen=True)
class ShorParams:
    g: int
    y: int
    x_bits: int
    f_bits: int

    def __post_init__(self):
        g, X = self.g, self.x_bits
        if not 1 < self.y < g:
            raise DomainError(f"base y={self.y} must satisfy 1 < y < {g}")
        if not g * g <= 1 << X <= 2 * g * g:
            raise DomainError(f"2^{X} violates G^2 <= 2^X <= 2G^2 for G={g}")
        if 1 << self.f_bits <= g:
            raise DomainError(f"f-register of {self.f_bits} qubits cannot hold residues mod {g}")

    @property
    def l(self) -> int:
        return self.x_bits + self.f_bits


def choose_registers(g: int, l: int | None = None, y: int | None = None) -> ShorParams:
    """Smallest x-register with 2^X >= G^2 and an f-register of bit_length(G) qubits.

    If `l` is given, any qubits beyond X + F go to the f-register.
    """
    if g < 4 or is_prime(g) or g & (g - 1) == 0:
        raise DomainError(f"{g} is not a composite that is not a power of two")
    x_bits = (g * g - 1).bit_length()
    f_bits = g.bit_length()
    if l is not None:
        if l < x_bits + f_bits:
            raise DomainError(f"{g} needs at least {x_bits + f_bits} qubits, got {l}")
        f_bits = l - x_bits
    return ShorParams(g, default_base(g) if y is None else y, x_bits, f_bits)


def modexp_table(params: ShorParams) -> np.ndarray:
    """table[x] = y^x mod G for every x-register value."""
    n = 1 << params.x_bits
    table = np.empty(n, dtype=np.int64)
    v = 1
    for x in range(n):
        table[x] = v
        v = v * params.y % params.g
    return table


def check_uniform_x(shard: StateShard, sigma: QubitPermutation, params: ShorParams, probes: int = 64) -> None:
    """Spot-check that the shard looks like the uniform x-superposition with f = 0."""
    amp = 2.0 ** (-params.x_bits / 2)
    for a in np.linspace(0, len(shard.amps) - 1, min(probes, len(shard.amps))).astype(np.int64):
        g = logical_index(sigma, shard.rank, int(a))
        want = amp if g >> params.x_bits == 0 else 0.0
        if abs(shard.amps[a] - want) > 1e-9:
            raise StateError(
                f"oracle precondition failed at basis index {g}: amplitude {shard.amps[a]!r}, expected {want}"
            )


def apply_modexp_oracle(
    shard: StateShard,
    sigma: QubitPermutation,
    params: ShorParams,
    table: np.ndarray | None = None,
    check: bool = True,
) -> None:
    """Write 2^(-X/2) where f == y^x mod G and 0 elsewhere, slot by slot through sigma."""
    if check:
        check_uniform_x(shard, sigma, params)
    if table is None:
        table = modexp_table(params)
    kernels.modexp_fill(
        shard.amps, shard.rank, sigma.m, sigma.as_array(), params.x_bits, table, 2.0 ** (-params.x_bits / 2)
    )


# ---------------------------------------------------------------- closed forms


def _pk_array(r: int, x_bits: int, k: np.ndarray) -> np.ndarray:
    n = 1 << x_bits
    s, d = divmod(n, r)
    kr = (k.astype(np.int64) * r) % (2 * n)
    theta = np.pi * kr / n
    singular = kr % n == 0
    sin_t = np.where(singular, 1.0, np.sin(theta))
    a = np.where(singular, float(s) ** 2, (np.sin(s * theta) / sin_t) ** 2)
    b = np.where(singular, 2.0 * s + 1, np.sin((2 * s + 1) * theta) / sin_t)
    return (r * a + d * b) / float(n) ** 2


def _check_pk_args(r: int, x_bits: int) -> None:
    if r < 1:
        raise DomainError("period must be positive")
    if not 1 <= x_bits <= MAX_X_BITS:
        raise DomainError(f"x_bits must lie in [1, {MAX_X_BITS}]")


def analytic_pk(r: int, x_bits: int, k: int) -> float:
    """Probability of observing frequency k after the transform, for period r.

    With s = floor(2^X / r), d = 2^X - r s and theta = pi k r / 2^X:
    p = [r (sin s theta / sin theta)^2 + d sin((2s+1) theta) / sin theta] / 2^(2X),
    taking the limits s^2 and 2s+1 where sin theta vanishes.
    """
    _check_pk_args(r, x_bits)
    if not 0 <= k < 1 << x_bits:
        raise DomainError(f"k={k} outside [0, 2^{x_bits})")
    return float(_pk_array(r, x_bits, np.array([k]))[0])


def analytic_pk_all(r: int, x_bits: int) -> np.ndarray:
    _check_pk_args(r, x_bits)
    return _pk_array(r, x_bits, np.arange(1 << x_bits))


def analytic_expectations(r: int, x_bits: int, chunk: int = 1 << 20) -> np.ndarray:
    """<Q_i> = sum_k p_k(r) * bit_i(k) for i < X."""
    _check_pk_args(r, x_bits)
    out = np.zeros(x_bits)
    n = 1 << x_bits
    for start in range(0, n, chunk):
        k = np.arange(start, min(start + chunk, n), dtype=np.int64)
        p = _pk_array(r, x_bits, k)
        for i in range(x_bits):
            out[i] += p[(k >> i) & 1 == 1].sum()
    return out


def analytic_expectation(r: int, x_bits: int, i: int) -> float:
    if not 0 <= i < x_bits:
        raise DomainError(f"qubit index {i} outside [0, {x_bits})")
    return float(analytic_expectations(r, x_bits)[i])


def convergents(num: int, den: int) -> Iterable[tuple[int, int]]:
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    while den:
        a, (num, den) = num // den, (den, num % den)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield h1, k1


def recover_order(k: int, x_bits: int, g: int) -> int | None:
    """Denominator of the first convergent p/q of k/2^X with q < G and |k/2^X - p/q| <= 2^-(X+1)."""
    n = 1 << x_bits
    if not 0 <= k < n:
        raise DomainError(f"k={k} outside [0, 2^{x_bits})")
    if k == 0:
        return None
    for p, q in convergents(k, n):
        if q >= g:
            break
        if 2 * abs(k * q - p * n) <= q:
            return q
    return None


def reduce_order(r: int, y: int, g: int) -> int:
    """Strip prime factors from a multiple of the order while y^r stays 1."""
    p = 2
    m = r
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            while r % p == 0 and pow(y, r // p, g) == 1:
                r //= p
        p += 1
    if m > 1 and r % m == 0 and pow(y, r // m, g) == 1:
        r //= m
    return r


def frequency_of(index: int, x_bits: int) -> int:
    """Read k from a sampled logical index: bit i of k is x-register qubit X-1-i."""
    x = index & ((1 << x_bits) - 1)
    return int(format(x, f"0{x_bits}b")[::-1], 2)


# ---------------------------------------------------------------- pipeline


@dataclass
class PeriodResult:
    r: int | None
    s: int | None
    factors: tuple[int, int] | None
    expectations: np.ndarray
    samples: list = field(default_factory=list)
    frequencies: list = field(default_factory=list)
    retry: str | None = None
    report: RunReport | None = None

    def __post_init__(self):
        if self.factors is not None:
            p, q = self.factors
            if not (p > 1 and q > 1):
                raise DomainError(f"trivial factors {self.factors}")


def immediate_factor(params: ShorParams) -> PeriodResult | None:
    """A base sharing a factor with G already factors it."""
    c = math.gcd(params.y, params.g)
    if c == 1:
        return None
    return PeriodResult(None, None, tuple(sorted((c, params.g // c))), np.zeros(0), retry=None)


def factors_from_period(r: int, y: int, g: int) -> tuple[tuple[int, int] | None, str | None]:
    if r % 2:
        return None, f"period {r} is odd; repeat with another base"
    h = pow(y, r // 2, g)
    if h == g - 1:
        return None, f"y^(r/2) = -1 mod {g}; repeat with another base"
    for c in (math.gcd(h - 1, g), math.gcd(h + 1, g)):
        if 1 < c < g:
            return tuple(sorted((c, g // c))), None
    return None, f"gcd test gave only trivial divisors of {g}"


def period_from_frequencies(ks: Sequence[int], params: ShorParams) -> int | None:
    """Find the order from sampled frequencies, combining candidates by lcm when one alone falls short."""
    seen: list[int] = []
    for k in ks:
        c = recover_order(k, params.x_bits, params.g)
        if c is None:
            continue
        for cand in [c] + [math.lcm(c, d) for d in seen]:
            if cand < params.g and pow(params.y, cand, params.g) == 1:
                return reduce_order(cand, params.y, params.g)
        seen.append(c)
    return None


def shor_segments(params: ShorParams, m: int, k_max: int = 1):
    """Compiled instruction lists before and after the oracle, for m local qubits."""
    X = params.x_bits
    sigma = QubitPermutation.identity(params.l, m)
    prep = [InitialState(0)] + [Gate("H", (q,)) for q in range(X)]
    xreg = list(range(X))
    post = gen_qft(xreg) + [BeginMeasurement(), DoMeasurement(tuple(xreg)), EndMeasurement()]
    prep_c, sigma = compile_instructions(prep, sigma, k_max)
    post_c, _ = compile_instructions(post, sigma, k_max)
    return prep_c, post_c


def run_shor(
    params: ShorParams,
    n_ranks: int = 1,
    seed: int = 0,
    samples: int = 16,
    k_max: int = 1,
    chunk_count: int = 4,
    timeout: float = DEFAULT_TIMEOUT,
) -> PeriodResult:
    """Hadamards on the x-register, oracle, Fourier transform, expectations, samples, order, factors."""
    early = immediate_factor(params)
    if early is not None:
        return early

    topo = RankTopology.from_ranks(params.l, n_ranks)
    ensure_fits(params.l)
    prep, post = shor_segments(params, topo.m, k_max)
    table = modexp_table(params)
    world = World(topo.n_ranks, timeout)

    def rank_main(comm: Comm) -> RankContext:
        ctx = RankContext(comm, QubitPermutation.identity(params.l, topo.m), chunk_count)
        ctx.run(prep)
        ctx.timed(lambda: apply_modexp_oracle(ctx.shard, ctx.sigma, params, table))
        ctx.check_norm()
        ctx.run(post)
        if samples:
            ctx.samples = ctx.timed(lambda: sample_on_rank(comm, ctx.shard, ctx.sigma, samples, seed))
        return ctx

    t0 = time.perf_counter()
    contexts = spawn(topo.n_ranks, rank_main, timeout, world)
    wall = time.perf_counter() - t0

    head = contexts[0]
    X = params.x_bits
    # index i is bit i of k, which sits on qubit X-1-i
    expectations = np.array([head.expectations[X - 1 - i] for i in range(X)])
    drawn = head.samples or []
    ks = [frequency_of(s, X) for s in drawn]
    report = RunReport(
        l=params.l,
        n_ranks=topo.n_ranks,
        k_max=k_max,
        n_ops=sum(isinstance(i, Gate) for i in prep + post),
        wall_time_seconds=wall,
        cpu_time_seconds=sum(c.busy for c in contexts),
        expectations=dict(head.expectations),
        samples=list(drawn) if samples else None,
        exchange_stats=world.stats.as_dict(),
        chunk_count=chunk_count,
        seed=seed,
    )

    r = period_from_frequencies(ks, params)
    if r is None:
        return PeriodResult(None, None, None, expectations, drawn, ks, "order not recovered from samples", report)
    factors, retry = factors_from_period(r, params.y, params.g)
    return PeriodResult(r, (1 << X) // r, factors, expectations, drawn, ks, retry, report)
