"""Discretized thermodynamics on the Julia set.

Two independent pressure estimators are provided.  The matrix route
builds a disk cover of the Julia set from backward-orbit trees ("Markov
cover"), weights its edge graph by |f'|^(-s) sampled at pulled-back cell
centers, and takes the log spectral radius by power iteration.  The orbit
route sums |(f^n)'|^(-s) over repelling fixed points of f^n.  Both
converge to the topological pressure of -s log|f'|; the Hausdorff
dimension of the Julia set is the root of the pressure in s (Bowen's
equation), solved by bracketing plus secant with depth refinement.

Equilibrium states are realized as weighted collections of periodic
cycles, and the dynamical variance of log|f'| comes from a second
difference of the orbit pressure in s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .dynamics import (
    N_CAP,
    Cycle,
    PolyMap,
    _cached_critical_report,
    _preimages,
    iterate_with_derivative,
    periodic_cycles,
    poly_roots,
)
from .errors import DomainError, NumericsError

_POWER_TOL = 1e-12
_POWER_MAX_ITER = 100_000
_RADIUS_SAFETY = 1.5
_DEPTH_SCHEDULE = (7, 9, 11, 13, 15)


# ---------------------------------------------------------------------------
# Markov covers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MarkovCover:
    """Disk cover of the Julia set with transition structure.

    Cells are indexed by backward-orbit words of length ``depth``; cell i
    maps over cell j exactly when j extends the shifted word of i, which
    makes the adjacency the full-shift edge structure on inverse-branch
    labels.  ``deriv_sample[i, t]`` holds |f'| at the preimage of cell
    succ[i, t]'s center that lies inside cell i.
    """

    centers: np.ndarray          # (N,) complex, points on the Julia set
    radii: np.ndarray            # (N,) float
    succ: np.ndarray             # (N, d) int, successor cell indices
    deriv_sample: np.ndarray     # (N, d) float
    depth: int
    degree: int

    @property
    def n_cells(self) -> int:
        return int(self.centers.size)

    @property
    def cells(self):
        return [(complex(c), float(r)) for c, r in zip(self.centers, self.radii)]

    @property
    def adjacency(self):
        """0/1 adjacency as a sparse matrix (cell i -> cell j)."""
        n, d = self.succ.shape
        rows = np.repeat(np.arange(n), d)
        cols = self.succ.ravel()
        data = np.ones(n * d)
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def _repelling_fixed_point(pm: PolyMap) -> complex:
    fixed = list(pm.coeffs)
    fixed[1] = fixed[1] - 1.0
    cands = poly_roots(fixed)
    best = None
    for z in cands:
        mod = abs(pm.deriv(z))
        if mod > 1.0 + 1e-8 and (best is None or mod > best[0]):
            best = (mod, z)
    if best is None:
        raise DomainError("no repelling fixed point found; map not in expected regime")
    return complex(best[1])


def build_markov_cover(pm: PolyMap, depth: int) -> MarkovCover:
    """Cover the Julia set by pulling a seed disk through inverse branches.

    Cell centers are the depth-fold preimages of a repelling fixed point,
    hence genuine Julia-set points; radii contract the seed radius by the
    derivative along the forward orbit (with a distortion safety factor).
    Raises when a critical value lands inside a cell at the requested
    depth, which would break injectivity of the restricted branches.
    """
    if depth < 1 or depth > 16:
        raise ValueError("depth must be in 1..16")
    d = pm.degree
    if d ** (depth + 1) > 2 ** 18:
        raise ValueError("cover too large for this degree and depth")
    z_fix = _repelling_fixed_point(pm)

    levels = [np.array([z_fix], dtype=complex)]
    if pm.family_param is not None:
        c = pm.family_param
        for _ in range(depth + 1):
            w = np.sqrt(levels[-1] - c)
            nxt = np.empty(2 * levels[-1].size, dtype=complex)
            nxt[0::2] = w
            nxt[1::2] = -w
            levels.append(nxt)
    else:
        for _ in range(depth + 1):
            nxt = []
            for y in levels[-1]:
                nxt.extend(_preimages(pm, y))
            levels.append(np.array(nxt, dtype=complex))

    centers = levels[depth]
    children = levels[depth + 1]
    n = centers.size

    # cumulative |(f^depth)'| along each backward word gives the contraction
    deriv_cum = np.ones(1)
    for lev in range(1, depth + 1):
        parent_deriv = np.repeat(deriv_cum, d)
        deriv_cum = parent_deriv * np.abs(pm.deriv(levels[lev]))
    seed_radius = pm.escape_radius() + abs(z_fix)
    radii = _RADIUS_SAFETY * seed_radius / deriv_cum

    succ = (np.arange(n)[:, None] // d) + (d ** (depth - 1)) * np.arange(d)[None, :]

    # sample point for edge (i, j): the preimage of center_j closest to center_i
    cand = children[(d * succ)[:, :, None] + np.arange(d)[None, None, :]]
    dist = np.abs(cand - centers[:, None, None])
    pick = np.argmin(dist, axis=2)
    samples = np.take_along_axis(cand, pick[:, :, None], axis=2)[:, :, 0]
    deriv_sample = np.abs(pm.deriv(samples))

    for cv in [pm(cp) for cp in pm.critical_points()]:
        if np.any(np.abs(centers - cv) <= radii):
            raise DomainError(
                "cover crosses critical value; increase depth or reject map"
            )
    return MarkovCover(centers, radii, succ.astype(np.int64), deriv_sample,
                       depth, d)


@lru_cache(maxsize=256)
def _cached_cover(pm: PolyMap, depth: int) -> MarkovCover:
    return build_markov_cover(pm, depth)


# ---------------------------------------------------------------------------
# Pressure estimators
# ---------------------------------------------------------------------------

def pressure_matrix(cover: MarkovCover, s: float) -> float:
    """log spectral radius of the |f'|^(-s)-weighted transition matrix.

    Power iteration on the nonnegative edge-weighted graph; the Perron
    eigenvalue estimate stops once successive Rayleigh quotients differ
    by at most 1e-12 relatively.
    """
    if not 0.0 <= s <= 4.0:
        raise ValueError("s must lie in [0, 4]")
    weights = cover.deriv_sample ** (-s)
    succ = cover.succ
    n = cover.n_cells
    x = np.full(n, 1.0 / n)
    lam_prev = np.inf
    for it in range(_POWER_MAX_ITER):
        y = (weights * x[succ]).sum(axis=1)
        lam = y.sum()  # x is L1-normalized and nonnegative
        y /= lam
        if abs(lam - lam_prev) <= _POWER_TOL * lam:
            return float(np.log(lam))
        lam_prev = lam
        x = y
    raise NumericsError(
        f"power iteration did not converge in {_POWER_MAX_ITER} iterations "
        f"(n={n}, s={s}, last eigenvalue estimate {lam_prev:.6e})"
    )


def _orbit_pressure_terms(pm: PolyMap, n: int):
    """(moduli, point multiplicities) of |(f^n)'| over repelling Fix(f^n)."""
    mods = []
    counts = []
    for m in range(1, n + 1):
        if n % m:
            continue
        for cy in periodic_cycles(pm, m, julia_only=True):
            mods.append(abs(cy.multiplier) ** (n // m))
            counts.append(m)
    return np.array(mods), np.array(counts, dtype=float)


def pressure_orbits(pm: PolyMap, s: float, n: int, with_gap: bool = False):
    """Pressure estimate from repelling fixed points of f^n.

    P_n(s) = (1/n) log sum |(f^n)'(x)|^(-s) over all repelling solutions
    of f^n(x) = x (periods dividing n included).  With ``with_gap`` the
    difference against the horizon n-1 estimate is returned alongside as
    an empirical error indicator.
    """
    if not 1 <= n <= N_CAP:
        raise ValueError(f"n must be in 1..{N_CAP}")
    mods, counts = _orbit_pressure_terms(pm, n)
    if mods.size == 0:
        raise DomainError("no repelling periodic points found")
    value = float(np.log((counts * mods ** (-s)).sum()) / n)
    if not with_gap:
        return value
    prev = pressure_orbits(pm, s, n - 1) if n > 1 else value
    return value, abs(value - prev)


# ---------------------------------------------------------------------------
# Dimension via the pressure root
# ---------------------------------------------------------------------------

def _pressure_root(pressure, lo: float = 0.0, hi: float = 2.0,
                   p_tol: float = 1e-13, max_iter: int = 80) -> float:
    """Root of a decreasing pressure function by bracketed secant."""
    p_lo = pressure(lo)
    p_hi = pressure(hi)
    if not (p_lo > 0.0 > p_hi):
        raise DomainError("map not in expected regime: no pressure sign change")
    a, pa, b, pb = lo, p_lo, hi, p_hi
    s, ps = b, pb
    for _ in range(max_iter):
        s_new = b - pb * (b - a) / (pb - pa)
        if not a < s_new < b:
            s_new = 0.5 * (a + b)
        ps = pressure(s_new)
        if abs(ps) <= p_tol or (b - a) < 1e-14:
            return s_new
        if ps > 0:
            a, pa = s_new, ps
        else:
            b, pb = s_new, ps
        s = s_new
    return s


def hausdorff_dimension(pm: PolyMap, tol: float = 1e-4) -> float:
    """Julia set dimension as the Bowen root of the matrix pressure.

    The root of s -> pressure_matrix(cover, s) is refined over deepening
    covers until two successive depths agree within tol.
    """
    delta, _, _ = hausdorff_dimension_detailed(pm, tol)
    return delta


@lru_cache(maxsize=4096)
def _dimension_cached(pm: PolyMap, tol: float, depths: tuple):
    prev = None
    gap = math.inf
    for depth in depths:
        cover = _cached_cover(pm, depth)
        delta = _pressure_root(lambda s: pressure_matrix(cover, s))
        if prev is not None:
            gap = abs(delta - prev)
            if gap < tol:
                return delta, gap, depth
        prev = delta
    if len(depths) < 3:
        # fixed two-depth evaluation mode: report the finest value and gap
        return prev, gap, depths[-1]
    raise NumericsError(
        f"dimension did not stabilize to {tol:g} by depth {depths[-1]} "
        f"(last change {gap:.3e})"
    )


def hausdorff_dimension_detailed(pm: PolyMap, tol: float = 1e-4,
                                 depths: tuple = _DEPTH_SCHEDULE):
    """(delta, last depth-to-depth change, final depth) for diagnostics."""
    if tol < 1e-6:
        raise ValueError("tol must be at least 1e-6")
    delta, gap, depth = _dimension_cached(pm, float(tol), tuple(depths))
    if not 0.0 < delta < 2.0:
        raise NumericsError(f"dimension estimate {delta} outside (0, 2)")
    return delta, gap, depth


# ---------------------------------------------------------------------------
# Orbit measures and equilibrium states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrbitMeasure:
    """Normalized weighted collection of repelling cycles.

    A primitive orbit measure is the one-atom, weight-one special case.
    ``base_param`` records the family parameter the cycles live at so the
    measure can be transported to nearby parameters by continuation.
    """

    atoms: tuple                # ((Cycle, weight), ...)
    period_horizon: int
    base_param: complex | None = None

    def __post_init__(self):
        total = 0.0
        for cyc, w in self.atoms:
            if w < 0:
                raise ValueError("weights must be nonnegative")
            if not cyc.is_repelling():
                raise ValueError("orbit measures are supported on repelling cycles")
            total += w
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, not 1")

    @classmethod
    def primitive(cls, cycle: Cycle, base_param: complex | None = None):
        return cls(((cycle, 1.0),), cycle.period, base_param)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @property
    def cycles(self):
        return [cyc for cyc, _ in self.atoms]


def equilibrium_orbit_measure(pm: PolyMap, delta: float, n: int) -> OrbitMeasure:
    """Periodic-orbit approximation of the dimension equilibrium state.

    Each exact-period-n repelling cycle gets weight proportional to
    n |(f^n)'|^(-delta), normalized to total mass one.
    """
    cycles = periodic_cycles(pm, n, julia_only=True)
    if not cycles:
        raise DomainError(f"no repelling period-{n} cycles found")
    raw = np.array([n * abs(cy.multiplier) ** (-delta) for cy in cycles])
    w = raw / raw.sum()
    atoms = tuple((cy, float(wi)) for cy, wi in zip(cycles, w))
    return OrbitMeasure(atoms, n, pm.family_param)


def lyapunov(measure: OrbitMeasure, pm: PolyMap) -> float:
    """Average expansion rate of the measure: sum of w * (1/k) log|multiplier|."""
    for cyc, _ in measure.atoms[:1]:
        z = cyc.points[0]
        if abs(pm(z) - cyc.points[1 % cyc.period]) > 1e-6 * (1 + abs(z)):
            raise ValueError("measure atoms are not cycles of this map")
    return float(sum(w * cyc.log_abs_multiplier_rate for cyc, w in measure.atoms))


# ---------------------------------------------------------------------------
# Variance of the expansion observable
# ---------------------------------------------------------------------------

def variance(pm: PolyMap, base_delta: float, scale: float, n: int,
             step: float = 0.25) -> float:
    """Dynamical variance of scale * (log|f'| - mean) under the equilibrium.

    Computed as the second central difference of the orbit pressure along
    s -> base_delta + s * scale, normalized by scale^2; zero exactly when
    the centered observable is a coboundary (constant |f'| on the Julia
    set, for instance).
    """
    if scale == 0.0:
        return 0.0
    if step < 1e-4:
        raise NumericsError(
            "step too small: second difference would drown in rounding noise; "
            "increase step or the observable scale"
        )
    q_plus = pressure_orbits(pm, base_delta + step * scale, n)
    q_mid = pressure_orbits(pm, base_delta, n)
    q_minus = pressure_orbits(pm, base_delta - step * scale, n)
    var = (q_plus - 2.0 * q_mid + q_minus) / (step * step * scale * scale)
    if var < -1e-8:
        raise NumericsError(f"variance estimate {var:.3e} is negative beyond noise")
    return max(var, 0.0)
