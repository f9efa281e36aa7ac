"""Check-node degree distributions, node and edge perspective.

Coefficients are exact fractions.  The star family rho_star(k, b) puts mass
(k-1)/((i-1)(i-2)) on degrees i = k+1..b and the remaining mass on degree k;
its truncations drive the scalar density-evolution recursion to zero at
rates approaching capacity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping


def _validated_coeffs(coeffs: Mapping[int, Fraction], min_degree: int) -> Dict[int, Fraction]:
    out: Dict[int, Fraction] = {}
    for deg, mass in coeffs.items():
        deg = int(deg)
        mass = Fraction(mass)
        if deg < min_degree:
            raise ValueError(f"degree {deg} below minimum {min_degree}")
        if mass < 0:
            raise ValueError(f"negative mass {mass} at degree {deg}")
        if mass > 0:
            out[deg] = mass
    if sum(out.values(), Fraction(0)) != 1:
        raise ValueError(f"masses must sum to 1, got {sum(out.values(), Fraction(0))}")
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class NodeDegreeDistribution:
    """P(x) = sum_i P_i x^i: fraction of check nodes of each degree."""

    coeffs: tuple

    def __init__(self, coeffs: Mapping[int, Fraction]):
        object.__setattr__(self, "coeffs", tuple(_validated_coeffs(coeffs, 0).items()))

    def as_dict(self) -> Dict[int, Fraction]:
        return dict(self.coeffs)

    @property
    def support(self) -> tuple:
        return tuple(d for d, _ in self.coeffs)

    @property
    def max_degree(self) -> int:
        return self.support[-1]

    def mass(self, degree: int) -> Fraction:
        return self.as_dict().get(degree, Fraction(0))

    def derivative_at_one(self) -> Fraction:
        """P'(1) = sum_i i*P_i, the average check degree."""
        return sum((Fraction(d) * p for d, p in self.coeffs), Fraction(0))

    def second_derivative_at_one(self) -> Fraction:
        """P''(1) = sum_i i*(i-1)*P_i."""
        return sum((Fraction(d * (d - 1)) * p for d, p in self.coeffs), Fraction(0))


@dataclass(frozen=True)
class EdgeDegreeDistribution:
    """rho_n: degree law seen from a uniformly random edge."""

    coeffs: tuple

    def __init__(self, coeffs: Mapping[int, Fraction]):
        object.__setattr__(self, "coeffs", tuple(_validated_coeffs(coeffs, 1).items()))

    def as_dict(self) -> Dict[int, Fraction]:
        return dict(self.coeffs)

    @property
    def support(self) -> tuple:
        return tuple(d for d, _ in self.coeffs)

    @property
    def max_degree(self) -> int:
        return self.support[-1]

    @property
    def min_degree(self) -> int:
        return self.support[0]

    def mass(self, degree: int) -> Fraction:
        return self.as_dict().get(degree, Fraction(0))


@dataclass(frozen=True)
class TruncatedRhoStar:
    k: int
    b: int
    dist: EdgeDegreeDistribution


def rho_star_coefficient(k: int, i: int) -> Fraction:
    """Untruncated family coefficient (k-1)/((i-1)(i-2)) for i >= k+1."""
    if i < k + 1:
        raise ValueError(f"rho*_k is supported on degrees >= k+1, got {i}")
    return Fraction(k - 1, (i - 1) * (i - 2))


def rho_star(k: int, b: int) -> TruncatedRhoStar:
    """Truncation at degree b: tail coefficients for k+1..b, remainder on k."""
    if k < 2:
        raise ValueError(
            f"rho_star requires k >= 2 (the (k-1) factor vanishes at k=1), got {k}"
        )
    if b < k + 1:
        raise ValueError(f"need b >= k+1, got b={b}, k={k}")
    coeffs = {i: rho_star_coefficient(k, i) for i in range(k + 1, b + 1)}
    coeffs[k] = 1 - sum(coeffs.values(), Fraction(0))
    return TruncatedRhoStar(k=k, b=b, dist=EdgeDegreeDistribution(coeffs))


def integral_rho(rho: EdgeDegreeDistribution) -> Fraction:
    """Integral of rho(x) over [0,1]: sum_i rho_i / i, exactly."""
    return sum((p / d for d, p in rho.coeffs), Fraction(0))


def edge_to_node(rho: EdgeDegreeDistribution) -> NodeDegreeDistribution:
    """P_n proportional to rho_n / n."""
    total = integral_rho(rho)
    return NodeDegreeDistribution({d: (p / d) / total for d, p in rho.coeffs})


def node_to_edge(p: NodeDegreeDistribution) -> EdgeDegreeDistribution:
    """rho_n proportional to n * P_n."""
    total = p.derivative_at_one()
    if total == 0:
        raise ValueError("cannot convert the distribution concentrated on degree 0")
    return EdgeDegreeDistribution({d: (Fraction(d) * m) / total for d, m in p.coeffs if d > 0})


def design_rate(lam, omega, p: NodeDegreeDistribution) -> Fraction:
    """(1 - lambda)(1 - omega)(1 - 2/P'(1)); requires P'(1) > 2."""
    lam = Fraction(lam)
    omega = Fraction(omega)
    avg = p.derivative_at_one()
    if avg <= 2:
        raise ValueError(f"average check degree P'(1)={avg} must exceed 2 for positive rate")
    return (1 - lam) * (1 - omega) * (1 - Fraction(2) / avg)
