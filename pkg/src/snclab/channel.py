"""The symmetric network coding channel SNC(lambda, omega).

A length-N packet scheme with l = lambda*N payload rows of m = N - l symbols
each; the channel adds a uniformly random rank-s perturbation, s = omega*l.
Rate parameters are carried as exact fractions end to end so the integrality
constraints (l = lambda*N, s = omega*l) are checked exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .kernels import DTYPE
from .linalg import (
    FieldSpec,
    Subspace,
    as_matrix,
    gaussian_binomial,
    random_rank_matrix,
    rank_mod,
    row_space,
)

BRUTE_FORCE_LIMIT = 1 << 24


def _as_fraction(x, name: str) -> Fraction:
    if isinstance(x, float):
        raise TypeError(f"{name} must be an exact rational, not float")
    return Fraction(x)


@dataclass(frozen=True)
class SncParams:
    """Validated channel parameters; construct via validate_params."""

    field: FieldSpec
    N: int
    l: int
    m: int
    lam: Fraction
    omega: Fraction
    s: int

    @property
    def q(self) -> int:
        return self.field.q


def validate_params(field, N: int, lam, omega) -> SncParams:
    """Check every integrality and range constraint, exactly."""
    if not isinstance(field, FieldSpec):
        field = FieldSpec(int(field))
    lam = _as_fraction(lam, "lambda")
    omega = _as_fraction(omega, "omega")
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if not 0 < lam < 1:
        raise ValueError(f"lambda must satisfy 0 < lambda < 1, got {lam}")
    if not 0 <= omega <= 1:
        raise ValueError(f"omega must satisfy 0 <= omega <= 1, got {omega}")
    l_frac = lam * N
    if l_frac.denominator != 1:
        raise ValueError(f"l = lambda*N = {l_frac} is not an integer")
    l = int(l_frac)
    m = N - l
    s_frac = omega * l
    if s_frac.denominator != 1:
        raise ValueError(f"s = omega*l = {s_frac} is not an integer")
    s = int(s_frac)
    if s > min(l, m):
        raise ValueError(f"error weight s={s} exceeds min(l, m)={min(l, m)}")
    return SncParams(field=field, N=N, l=l, m=m, lam=lam, omega=omega, s=s)


# ---------------------------------------------------------------------------
# information-theoretic quantities
# ---------------------------------------------------------------------------


def capacity(lam, omega) -> Fraction:
    """Channel capacity 1 - lambda - omega + lambda*omega^2, in q-ary symbols
    per channel symbol."""
    lam = _as_fraction(lam, "lambda")
    omega = _as_fraction(omega, "omega")
    if not 0 < lam < 1:
        raise ValueError(f"lambda must be in (0, 1), got {lam}")
    if not 0 <= omega <= 1:
        raise ValueError(f"omega must be in [0, 1], got {omega}")
    return 1 - lam - omega + lam * omega * omega


def singleton_bound(lam, omega) -> Fraction:
    """Rank-metric Singleton-type rate limit (1 - lambda)(1 - 2*omega)."""
    lam = _as_fraction(lam, "lambda")
    omega = _as_fraction(omega, "omega")
    if not 0 < lam < 1:
        raise ValueError(f"lambda must be in (0, 1), got {lam}")
    if not 0 <= omega <= Fraction(1, 2):
        raise ValueError(f"omega must be in [0, 1/2], got {omega}")
    return (1 - lam) * (1 - 2 * omega)


def achievable_k(lam, omega) -> Optional[int]:
    """k = (1 - lambda)/(lambda*omega) when it is a positive integer.

    These are the (lambda, omega) points where the scalar recursion applies
    and the iterative construction reaches capacity.
    """
    lam = _as_fraction(lam, "lambda")
    omega = _as_fraction(omega, "omega")
    if not 0 < lam < 1:
        raise ValueError(f"lambda must be in (0, 1), got {lam}")
    if not 0 < omega <= 1:
        return None
    k = (1 - lam) / (lam * omega)
    if k.denominator == 1 and k >= 1:
        return int(k)
    return None


def exact_rank_count(s: int, l: int, m: int, q: int) -> int:
    """Number A(s, l, m) of l x m matrices over F_q of rank exactly s."""
    if not 0 <= s <= min(l, m):
        raise ValueError(f"rank s={s} out of range for shape {l}x{m}")
    count = gaussian_binomial(l, s, q)
    for i in range(s):
        count *= q**m - q**i
    return count


def brute_force_rank_count(s: int, l: int, m: int, q: int) -> int:
    """Count rank-s matrices by enumerating all q^(l*m); oracle for
    exact_rank_count."""
    if not 0 <= s <= min(l, m):
        raise ValueError(f"rank s={s} out of range for shape {l}x{m}")
    total = q ** (l * m)
    if total > BRUTE_FORCE_LIMIT:
        raise ValueError(f"q^(l*m) = {total} exceeds enumeration guard {BRUTE_FORCE_LIMIT}")
    count = 0
    a = np.zeros((l, m), dtype=DTYPE)
    for idx in range(total):
        x = idx
        for pos in range(l * m):
            a[pos // m, pos % m] = x % q
            x //= q
        if rank_mod(a, q) == s:
            count += 1
    return count


def asymptotic_noise_entropy(lam, omega) -> Fraction:
    """Per-(N*l) noise entropy omega - lambda*omega^2 in q-ary units.

    Consistent with log_q A(s, l, m) ~ s(l + m - s) and with the capacity
    formula via C = 1 - lambda - H(Z)/(N*l).
    """
    lam = _as_fraction(lam, "lambda")
    omega = _as_fraction(omega, "omega")
    return omega - lam * omega * omega


# ---------------------------------------------------------------------------
# transmission
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelTruth:
    """Simulator-side ground truth, for scoring only."""

    x: np.ndarray
    z: np.ndarray
    noise_space: Subspace


@dataclass(frozen=True)
class ChannelOutput:
    y: np.ndarray
    truth: Optional[ChannelTruth]


def transmit(x: np.ndarray, params: SncParams, rng: np.random.Generator) -> ChannelOutput:
    """y = x + z with z uniform over rank-s l x m matrices."""
    q = params.q
    x = as_matrix(x, q)
    if x.shape != (params.l, params.m):
        raise ValueError(f"codeword must be {params.l}x{params.m}, got {x.shape}")
    z = random_rank_matrix(params.l, params.m, params.s, q, rng)
    y = (x + z) % q
    y.setflags(write=False)
    z.setflags(write=False)
    truth = ChannelTruth(x=x, z=z, noise_space=row_space(z, q))
    return ChannelOutput(y=y, truth=truth)
