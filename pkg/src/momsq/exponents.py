"""Exponent sequences p_n, their even companions, and the index rule n_p.

Everything here is exact integer/rational arithmetic (fractions.Fraction);
boundary cases like p / p_tilde == 2 must not depend on a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]


def critical_exponent(n: int) -> Fraction:
    """Largest Lebesgue exponent with an R^eps square-function bound in dimension n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Fraction(n * (n + 1), 2) + 1


def even_exponent(n: int) -> int:
    """Even companion of critical_exponent: 2 for n=1, then the mod-4 case formula."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n == 1:
        return 2
    s = n * (n + 1) // 2
    if n % 4 in (1, 2):
        return s + 1
    return s


def next_even_index(p: Rational, l_max: int = 10_000) -> int:
    """Smallest l >= 2 with 1 <= p / even_exponent(l-1) <= 2.

    Raises ValueError if no admissible l exists below l_max (e.g. p < 2).
    """
    p = Fraction(p)
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    for l in range(2, l_max + 1):
        q = p / even_exponent(l - 1)
        if 1 <= q <= 2:
            return l
    raise ValueError(f"no admissible l <= {l_max} for p = {p}")


@dataclass
class ExponentTable:
    """Tabulated p_n and even p_tilde_n up to n_max, with exact entries."""

    n_max: int
    p: list = field(init=False)
    p_tilde: list = field(init=False)

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        self.p = [critical_exponent(n) for n in range(1, self.n_max + 1)]
        self.p_tilde = [even_exponent(n) for n in range(1, self.n_max + 1)]

    def rows(self):
        for i in range(self.n_max):
            yield i + 1, self.p[i], self.p_tilde[i]


@dataclass
class PropertyCheck:
    name: str
    witnesses: list          # (indices, lhs-vs-rhs description) for failures
    checked: int

    @property
    def passed(self) -> bool:
        return not self.witnesses


def verify_pprops(n_max: int) -> list[PropertyCheck]:
    """Exhaustively check the four sequence properties for 2 <= n <= n_max.

    (1) 2 <= p_tilde_n <= p_n
    (2) p_tilde_n <= p_tilde_{n+1}
    (3) p_tilde_n / p_tilde_{n-1} <= 2
    (4) for 1 <= k <= n: p_n / p_tilde_k > 2 implies p_n / p_tilde_k <= p_{n-k}

    Failures are reported as witnesses rather than raised, to aid debugging
    of table construction.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    tab = ExponentTable(n_max)
    pt = {n: tab.p_tilde[n - 1] for n in range(1, n_max + 1)}
    pp = {n: tab.p[n - 1] for n in range(1, n_max + 1)}

    checks = []

    w, c = [], 0
    for n in range(2, n_max + 1):
        c += 1
        if not (2 <= pt[n] <= pp[n]):
            w.append((n, f"p_tilde={pt[n]} outside [2, {pp[n]}]"))
    checks.append(PropertyCheck("bounds 2 <= p_tilde_n <= p_n", w, c))

    w, c = [], 0
    for n in range(2, n_max):
        c += 1
        if not (pt[n] <= pt[n + 1]):
            w.append((n, f"{pt[n]} > {pt[n + 1]}"))
    checks.append(PropertyCheck("monotone p_tilde_n <= p_tilde_{n+1}", w, c))

    w, c = [], 0
    for n in range(2, n_max + 1):
        c += 1
        if Fraction(pt[n], pt[n - 1]) > 2:
            w.append((n, f"ratio {Fraction(pt[n], pt[n - 1])} > 2"))
    checks.append(PropertyCheck("doubling p_tilde_n / p_tilde_{n-1} <= 2", w, c))

    w, c = [], 0
    for n in range(2, n_max + 1):
        for k in range(1, n + 1):
            c += 1
            q = pp[n] / pt[k]
            if q > 2 and not (n - k >= 1 and q <= pp[n - k]):
                w.append(((n, k), f"p_n/p_tilde_k = {q} exceeds p_(n-k)"))
    checks.append(PropertyCheck("gap p_n/p_tilde_k > 2 => <= p_{n-k}", w, c))

    return checks
