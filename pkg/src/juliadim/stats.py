"""Multiplier statistics: census, counting function, and reality tests.

A census collects the multipliers of all primitive repelling cycles up
to a period bound, sorted by modulus.  Counting queries against the
offset logarithmic integral Li(T^delta) probe the asymptotic law for the
number of cycles with |multiplier| < T; annulus occupancy counts moduli
in [T, T+S).  Both enforce an honest completeness guard: counts are only
answered for thresholds below the smallest modulus at the next period,
since deeper cycles would otherwise be silently missing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import N_CAP, PolyMap, periodic_cycles
from .errors import DomainError

_REALITY_SNAP = 1e-12


@dataclass(frozen=True, eq=False)
class MultiplierCensus:
    """All primitive repelling multipliers of period <= n_max, sorted."""

    entries: tuple               # ((period, multiplier, modulus), ...) ascending modulus
    n_max: int
    map_fingerprint: str
    completeness_bound: float    # min modulus among period n_max+1 cycles
    source: PolyMap

    @property
    def moduli(self) -> np.ndarray:
        return np.array([m for _, _, m in self.entries])

    def count_below(self, T: float) -> int:
        """Number of stored entries with modulus strictly below T.

        Complete (equal to the count over all periods) only for
        T <= completeness_bound; the asymptotic comparisons enforce that
        guard, raw step-function queries do not.
        """
        return int(np.searchsorted(self.moduli, T, side="left"))

    def counts_per_period(self) -> dict:
        out: dict = {}
        for period, _, _ in self.entries:
            out[period] = out.get(period, 0) + 1
        return out


def census(pm: PolyMap, n_max: int) -> MultiplierCensus:
    """Collect all primitive repelling cycles of period <= n_max."""
    if not 1 <= n_max <= N_CAP - 1:
        raise ValueError(f"n_max must be in 1..{N_CAP - 1} "
                         "(one extra period is enumerated for the guard)")
    rows = []
    for n in range(1, n_max + 1):
        for cy in periodic_cycles(pm, n, julia_only=True):
            lam = cy.multiplier
            rows.append((n, lam, abs(lam)))
    rows.sort(key=lambda r: (r[2], r[0], r[1].real, r[1].imag))
    guard_cycles = periodic_cycles(pm, n_max + 1, julia_only=True)
    bound = min(abs(cy.multiplier) for cy in guard_cycles)
    return MultiplierCensus(tuple(rows), n_max, repr(pm.coeffs), float(bound), pm)


def li_offset(x: float) -> float:
    """Offset logarithmic integral: integral of dt/log t from 2 to x.

    Composite Simpson on the substitution t = e^u, with the panel count
    doubled until two successive refinements agree to 1e-8 absolutely.
    """
    if x < 2.0:
        raise DomainError("the offset logarithmic integral needs x >= 2")
    if x == 2.0:
        return 0.0
    lo, hi = math.log(2.0), math.log(x)

    def simpson(panels: int) -> float:
        u = np.linspace(lo, hi, 2 * panels + 1)
        g = np.exp(u) / u
        h = (hi - lo) / (2 * panels)
        return float(h / 3.0 * (g[0] + g[-1] + 4.0 * g[1::2].sum()
                                + 2.0 * g[2:-1:2].sum()))

    prev = simpson(8)
    panels = 16
    while panels <= 2 ** 22:
        cur = simpson(panels)
        if abs(cur - prev) <= 1e-8:
            return cur
        prev = cur
        panels *= 2
    raise DomainError("logarithmic integral did not reach 1e-8 accuracy")


def li_count_ratio(cns: MultiplierCensus, delta: float, T_list) -> list:
    """Ratios N(T) / Li(T^delta) for the counting function comparison.

    Monomial maps are excluded (their multiplier counting degenerates);
    every threshold must sit inside the census's complete range.
    """
    if cns.source.is_monomial_like():
        raise DomainError("excluded: monomial")
    out = []
    for T in T_list:
        if T >= cns.completeness_bound:
            raise DomainError(
                f"T={T} is beyond the census completeness bound "
                f"{cns.completeness_bound:.6g}"
            )
        x = T ** delta
        if x <= 2.0:
            raise DomainError(f"T={T} too small: T^delta must exceed 2")
        out.append(cns.count_below(T) / li_offset(x))
    return out


def annulus_occupancy(cns: MultiplierCensus, T: float, S: float) -> int:
    """Exact count of stored moduli in [T, T+S)."""
    if S < 0:
        raise ValueError("S must be nonnegative")
    if T + S > cns.completeness_bound:
        raise DomainError(
            f"annulus [{T}, {T + S}) exceeds the completeness bound "
            f"{cns.completeness_bound:.6g}"
        )
    m = cns.moduli
    return int(np.searchsorted(m, T + S, side="left")
               - np.searchsorted(m, T, side="left"))


def reality_defect(cns: MultiplierCensus) -> float:
    """Largest relative imaginary part |Im lam| / |lam| over the census.

    Zero exactly when every multiplier is real to machine precision; a
    positive value certifies nonreal multipliers (the Julia set is not
    contained in a circle).
    """
    if not cns.entries:
        raise ValueError("census is empty")
    worst = max(abs(lam.imag) / mod for _, lam, mod in cns.entries)
    return 0.0 if worst <= _REALITY_SNAP else float(worst)


def census_csv(cns: MultiplierCensus) -> str:
    """CSV rendering: period, re/im of the multiplier, modulus (17 digits)."""
    lines = ["period,re_lambda,im_lambda,modulus"]
    for period, lam, mod in cns.entries:
        lines.append(f"{period},{lam.real:.17g},{lam.imag:.17g},{mod:.17g}")
    return "\n".join(lines) + "\n"


def write_census_csv(cns: MultiplierCensus, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(census_csv(cns))
