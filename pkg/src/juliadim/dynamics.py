"""Polynomial maps, periodic cycles, multipliers, and parameter continuation.

The workhorse objects are ``PolyMap`` (a degree-d polynomial, with a fast
path for the quadratic family z^2 + c) and ``Cycle`` (an exact-period
periodic orbit together with its multiplier).  Periodic points are found
by seeding Newton's method on f^n(z) = z with backward-orbit trees, which
stays accurate at periods where the expanded coefficients of f^n would
overflow, and the enumeration is certified by an exact count of the
solution set.  Cycles are moved between parameters with Newton
continuation, which realizes the conjugacy on periodic points inside a
hyperbolic component.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache, cached_property

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, EscapeError, NumericsError

# Hard cap on the period for exhaustive enumeration (2^14 = 16384 points).
N_CAP = 14

# Cycle closure residual after polishing.
RESIDUAL_TOL = 1e-10

# Half-width of the band around |multiplier| = 1 treated as indifferent.
INDIFFERENT_BAND = 1e-8

# A periodic cycle counts as Julia (repelling) when |multiplier| > 1 + this.
JULIA_MARGIN = 1e-8

# Relative clustering tolerance for grouping roots into orbits.
CLUSTER_TOL = 1e-8

# Overflow guard for iteration.
ESCAPE_GUARD = 1e150

# Distance at which two continued cycle points are considered merged.
COLLISION_TOL = 1e-9

_NEWTON_TOL = 1e-13
_CAPTURE_TOL = 1e-7


@dataclass(frozen=True)
class PolyMap:
    """A polynomial map with complex coefficients, ascending powers.

    ``family_param`` is set when the map is a member of the quadratic
    family z^2 + c; several operations have closed-form fast paths in
    that case.
    """

    coeffs: tuple
    family_param: complex | None = None

    def __post_init__(self):
        coeffs = tuple(complex(a) for a in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) < 3:
            raise ValueError("degree must be at least 2")
        if abs(coeffs[-1]) == 0.0:
            raise ValueError("leading coefficient must be nonzero")
        if self.family_param is not None:
            c = complex(self.family_param)
            object.__setattr__(self, "family_param", c)
            if coeffs != (c, 0j, 1 + 0j):
                raise ValueError("family_param set but coeffs are not (c, 0, 1)")

    @classmethod
    def quadratic(cls, c) -> "PolyMap":
        c = complex(c)
        return cls((c, 0j, 1 + 0j), family_param=c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @cached_property
    def deriv_coeffs(self) -> tuple:
        return tuple(k * a for k, a in enumerate(self.coeffs) if k >= 1)

    def __call__(self, z):
        return _horner(self.coeffs, z)

    def deriv(self, z):
        return _horner(self.deriv_coeffs, z)

    def escape_radius(self) -> float:
        """Radius beyond which orbits provably escape to infinity."""
        if self.family_param is not None:
            return max(2.0, abs(self.family_param)) + 1.0
        lead = abs(self.coeffs[-1])
        return max(2.0, (1.0 + sum(abs(a) for a in self.coeffs[:-1])) / lead)

    def critical_points(self) -> tuple:
        if self.family_param is not None:
            return (0j,)
        return tuple(poly_roots(self.deriv_coeffs))

    def is_monomial_like(self) -> bool:
        """True when the map is a pure monomial a*z^d (conjugate to z^d)."""
        return all(abs(a) == 0.0 for a in self.coeffs[:-1])


def _horner(coeffs, z):
    acc = np.zeros_like(z) if isinstance(z, np.ndarray) else 0j
    for a in reversed(coeffs):
        acc = acc * z + a
    return acc


@dataclass(frozen=True)
class Cycle:
    """An exact-period periodic orbit with its multiplier."""

    points: tuple
    period: int
    multiplier: complex
    stability: str  # "attracting" | "repelling" | "indifferent"

    @property
    def log_abs_multiplier_rate(self) -> float:
        """Per-iterate expansion rate (1/k) log |multiplier|."""
        return math.log(abs(self.multiplier)) / self.period

    def is_repelling(self) -> bool:
        return self.stability == "repelling"


def _canonical_rotation(points):
    """Rotate an orbit so it starts at its lexicographically least point."""
    start = min(range(len(points)), key=lambda i: (points[i].real, points[i].imag))
    return tuple(points[start:] + points[:start])


def cycle_from_orbit(pm: PolyMap, points, residual_tol: float = RESIDUAL_TOL) -> Cycle:
    """Build a Cycle from an ordered orbit, validating closure and exact period."""
    pts = [complex(z) for z in points]
    k = len(pts)
    for i in range(k):
        if abs(pm(pts[i]) - pts[(i + 1) % k]) > residual_tol * (1.0 + abs(pts[i])):
            raise NumericsError(f"orbit does not close to {residual_tol:g}")
    for m in _proper_divisors(k):
        img, _ = iterate_with_derivative(pm, pts[0], m)
        if abs(img - pts[0]) <= residual_tol * (1.0 + abs(pts[0])):
            raise NumericsError(f"orbit has exact period {m}, not {k}")
    lam = complex(np.prod([pm.deriv(z) for z in pts]))
    mod = abs(lam)
    if abs(mod - 1.0) <= INDIFFERENT_BAND:
        raise DomainError("non-hyperbolic cycle")
    stability = "repelling" if mod > 1.0 else "attracting"
    return Cycle(_canonical_rotation(pts), k, lam, stability)


def _proper_divisors(n: int):
    return [m for m in range(1, n) if n % m == 0]


def iterate_with_derivative(pm: PolyMap, z0: complex, n: int):
    """Return (f^n(z0), (f^n)'(z0)) by chain-rule accumulation.

    Raises EscapeError when an intermediate modulus exceeds the overflow
    guard, so callers never see a garbage overflowed value.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    z = complex(z0)
    d = 1 + 0j
    for step in range(n):
        if abs(z) > ESCAPE_GUARD:
            raise EscapeError(step, abs(z))
        d *= pm.deriv(z)
        z = pm(z)
    return z, d


def _iterate_vec(pm: PolyMap, z: np.ndarray, n: int):
    """Vectorized f^n and (f^n)' over an array of points (no escape guard)."""
    z = z.astype(complex)
    d = np.ones_like(z)
    if pm.family_param is not None:
        c = pm.family_param
        for _ in range(n):
            d *= 2.0 * z
            z = z * z + c
    else:
        for _ in range(n):
            d *= _horner(pm.deriv_coeffs, z)
            z = _horner(pm.coeffs, z)
    return z, d


def _iterate_vec_bounded(pm: PolyMap, z: np.ndarray, n: int, bound: float):
    """Like _iterate_vec but also reports whether each orbit stayed bounded.

    A genuine periodic point keeps its whole orbit inside the escape
    radius; points in the basin of infinity can fool a pure Newton-step
    test because the derivative of the iterate along an escaping orbit is
    astronomically large.
    """
    z = z.astype(complex)
    d = np.ones_like(z)
    ok = np.abs(z) <= bound
    if pm.family_param is not None:
        c = pm.family_param
        for _ in range(n):
            d *= 2.0 * z
            z = z * z + c
            ok &= np.abs(z) <= bound
    else:
        for _ in range(n):
            d *= _horner(pm.deriv_coeffs, z)
            z = _horner(pm.coeffs, z)
            ok &= np.abs(z) <= bound
    return z, d, ok


# ---------------------------------------------------------------------------
# Polynomial root finding (simultaneous iteration with Newton polishing)
# ---------------------------------------------------------------------------

def poly_roots(coeffs, max_sweeps: int = 500):
    """All complex roots of a polynomial via Aberth-Ehrlich iteration.

    Returns the roots (with multiplicity, as clusters for multiple roots)
    sorted by (real, imag).  Each root is Newton-polished; residuals are
    checked against 1e-10 times the coefficient magnitude scale.
    """
    c = np.asarray([complex(a) for a in coeffs], dtype=complex)
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
    n = len(c) - 1
    if n < 1:
        raise ValueError("degree must be at least 1")
    if n == 1:
        return [complex(-c[0] / c[1])]
    monic = c / c[-1]
    dmonic = monic[1:] * np.arange(1, n + 1)

    radius = 1.0 + float(np.max(np.abs(monic[:-1])))
    angles = 2.0 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)

    for _ in range(max_sweeps):
        p = _horner(monic, z)
        dp = _horner(dmonic, z)
        dp = np.where(dp == 0, 1e-30, dp)
        w = p / dp
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        s = (1.0 / diff).sum(axis=1)
        denom = 1.0 - w * s
        denom = np.where(np.abs(denom) < 1e-30, 1e-30, denom)
        step = w / denom
        z = z - step
        if np.max(np.abs(step)) <= 1e-14 * (1.0 + np.max(np.abs(z))):
            break

    for _ in range(3):
        p = _horner(monic, z)
        dp = _horner(dmonic, z)
        safe = np.abs(dp) > 1e-30
        z = np.where(safe, z - p / np.where(safe, dp, 1.0), z)

    scale = float(np.max(np.abs(c)))
    resid = np.abs(_horner(c, z)) / (scale * np.maximum(1.0, np.abs(z)) ** n)
    if np.max(resid) > 1e-10:
        raise NumericsError(
            f"root finder stalled on degree {n} polynomial {list(c)}: "
            f"worst residual {np.max(resid):.3e}"
        )
    order = np.lexsort((z.imag, z.real))
    return [complex(v) for v in z[order]]


# ---------------------------------------------------------------------------
# Critical orbits and the hyperbolicity witness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalOrbitFate:
    """Fate of one critical point under iteration."""

    critical_point: complex
    classification: str  # "escapes" | "attracted" | "undecided"
    period: int | None
    cycle: Cycle | None
    iterations_used: int


@dataclass(frozen=True)
class CriticalOrbitReport:
    """Per-critical-point classification for a map."""

    fates: tuple
    escape_radius: float
    max_iter: int

    def all_resolved(self) -> bool:
        return all(f.classification != "undecided" for f in self.fates)

    def is_hyperbolic_witness(self) -> bool:
        """True when every critical orbit escaped or was captured."""
        return self.all_resolved()

    def attracting_cycle(self) -> Cycle | None:
        for f in self.fates:
            if f.classification == "attracted":
                return f.cycle
        return None


def _polish_attracting_cycle(pm: PolyMap, z0: complex, period: int) -> Cycle | None:
    """Newton-polish a near-periodic point into an exact attracting cycle."""
    z = complex(z0)
    for _ in range(60):
        v, d = iterate_with_derivative(pm, z, period)
        p = v - z
        if abs(p) <= 1e-14 * (1.0 + abs(z)):
            break
        denom = d - 1.0
        if abs(denom) < 1e-12:
            return None
        z = z - p / denom
    else:
        return None
    orbit = [z]
    for _ in range(period - 1):
        orbit.append(pm(orbit[-1]))
    # reduce to exact period
    exact = period
    for m in sorted(_proper_divisors(period)):
        img, _ = iterate_with_derivative(pm, z, m)
        if abs(img - z) <= 1e-10 * (1.0 + abs(z)):
            exact = m
            break
    orbit = orbit[:exact]
    try:
        return cycle_from_orbit(pm, orbit)
    except (NumericsError, DomainError):
        return None


def classify_critical_orbits(pm: PolyMap, max_iter: int = 2000) -> CriticalOrbitReport:
    """Classify every critical orbit as escaping, attracted, or undecided.

    Serves as the hyperbolicity witness: a map with all critical orbits
    resolved (escaped or captured by an attracting cycle) is treated as
    hyperbolic by the rest of the toolkit.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    radius = pm.escape_radius()
    fates = []
    for cp in pm.critical_points():
        fate = _classify_one_orbit(pm, cp, radius, max_iter)
        fates.append(fate)
    return CriticalOrbitReport(tuple(fates), radius, max_iter)


def _classify_one_orbit(pm, cp, radius, max_iter):
    z = complex(cp)
    history = []
    window = 64
    for it in range(1, max_iter + 1):
        try:
            z = pm(z)
            if abs(z) > ESCAPE_GUARD:
                raise EscapeError(it, abs(z))
        except (OverflowError, EscapeError):
            return CriticalOrbitFate(cp, "escapes", None, None, it)
        if abs(z) > radius:
            return CriticalOrbitFate(cp, "escapes", None, None, it)
        history.append(z)
        if it >= 16:
            for p in range(1, min(window, len(history) - 1) + 1):
                prev = history[-1 - p]
                if abs(z - prev) < _CAPTURE_TOL:
                    cyc = _polish_attracting_cycle(pm, z, p)
                    if cyc is not None and abs(cyc.multiplier) < 1.0 - INDIFFERENT_BAND:
                        return CriticalOrbitFate(cp, "attracted", cyc.period, cyc, it)
    return CriticalOrbitFate(cp, "undecided", None, None, max_iter)


@lru_cache(maxsize=512)
def _cached_critical_report(pm: PolyMap) -> CriticalOrbitReport:
    return classify_critical_orbits(pm)


# ---------------------------------------------------------------------------
# Periodic point enumeration
# ---------------------------------------------------------------------------

def _deterministic_signs(count: int, seed: int):
    """Reproducible +-1 pattern from a small multiplicative hash."""
    state = 0x9E3779B9 ^ (seed * 0x85EBCA6B + 1)
    out = []
    for _ in range(count):
        state = (state * 1664525 + 1013904223) % (1 << 32)
        out.append(1.0 if (state >> 16) & 1 else -1.0)
    return out


def _backward_leaves_quadratic(c: complex, n: int, seed: int) -> np.ndarray:
    """All 2^n backward images of a point near the Julia set of z^2 + c."""
    z = complex(max(2.0, abs(c)) + 1.0)
    for s in _deterministic_signs(48, seed):
        z = s * np.sqrt(complex(z - c))
    level = np.array([z], dtype=complex)
    for _ in range(n):
        w = np.sqrt(level - c)
        nxt = np.empty(2 * level.size, dtype=complex)
        nxt[0::2] = w
        nxt[1::2] = -w
        level = nxt
    return level


def _backward_leaves_generic(pm: PolyMap, n: int, seed: int) -> np.ndarray:
    """Backward-orbit tree for a generic polynomial via per-node root solves."""
    d = pm.degree
    if d ** n > 2 ** N_CAP:
        raise ValueError("period too large for exhaustive enumeration")
    z = complex(pm.escape_radius())
    signs = _deterministic_signs(40, seed)
    for s in signs:
        pre = _preimages(pm, z)
        z = pre[0] if s > 0 else pre[-1]
    level = [z]
    for _ in range(n):
        nxt = []
        for y in level:
            nxt.extend(_preimages(pm, y))
        level = nxt
    return np.array(level, dtype=complex)


def _preimages(pm: PolyMap, y: complex):
    shifted = list(pm.coeffs)
    shifted[0] = shifted[0] - y
    return poly_roots(shifted)


def _newton_on_iterate(pm: PolyMap, z: np.ndarray, n: int, iters: int = 60):
    """Vectorized Newton for f^n(z) = z; returns converged points only.

    Convergence is judged by the Newton step |p / p'| rather than the raw
    residual |f^n(z) - z|, which is inflated by the (often enormous)
    derivative of the iterate at a repelling point.  Only unconverged
    points stay in the active set.
    """
    radius = 2.0 * pm.escape_radius()
    z = z.copy()
    active = np.ones(z.size, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(iters):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            za = z[idx]
            v, d = _iterate_vec(pm, za, n)
            p = v - za
            denom = d - 1.0
            ok_den = np.abs(denom) > 1e-14
            step = np.where(ok_den, p / np.where(ok_den, denom, 1.0), 0.0)
            step_mod = np.abs(step)
            step = np.where(step_mod > 0.5, 0.5 * step / np.maximum(step_mod, 1e-300), step)
            znew = za - step
            diverged = ~np.isfinite(znew) | (np.abs(znew) > radius) | ~ok_den
            znew = np.where(diverged, np.nan, znew)
            z[idx] = znew
            converged = (step_mod <= 1e-12 * (1.0 + np.abs(za))) & ~diverged
            active[idx] = ~(converged | diverged)
        good = np.isfinite(z)
        zg = z[good]
        if zg.size == 0:
            return zg
        v, d, bounded = _iterate_vec_bounded(pm, zg, n, pm.escape_radius() + 1.0)
        denom = d - 1.0
        ok = (np.abs(denom) > 1e-14) & bounded
        step = np.abs(np.where(ok, (v - zg) / np.where(ok, denom, 1.0), np.inf))
        keep = ok & (step <= 1e-11 * (1.0 + np.abs(zg)))
    return zg[keep]


def _dedupe_points(points: np.ndarray, tol_abs: float) -> np.ndarray:
    """Cluster points within tol_abs; returns one representative per cluster."""
    if points.size == 0:
        return points
    points = np.unique(points)  # collapse exact duplicates cheaply
    coords = np.column_stack([points.real, points.imag])
    tree = cKDTree(coords)
    pairs = tree.query_pairs(r=tol_abs)
    parent = list(range(points.size))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra
    reps = {}
    for i in range(points.size):
        r = find(i)
        reps.setdefault(r, []).append(i)
    out = np.array([points[idx].mean() for idx in reps.values()])
    order = np.lexsort((out.imag, out.real))
    return out[order]


def _fixed_points_of_iterate(pm: PolyMap, n: int, assume_hyperbolic: bool):
    """All solutions of f^n(z) = z, certified by an exact count.

    Newton on f^n(z) - z is seeded from the leaves of a backward-orbit
    tree a few levels deeper than n, which spread densely over the Julia
    set so that every repelling solution has seeds inside its Newton
    basin.  Any attracting cycle (whose points are not near the Julia
    set) is appended from the critical-orbit classification.  The total
    must come out to exactly degree^n, otherwise the enumeration fails
    loudly instead of returning a silently incomplete set.
    """
    report = _cached_critical_report(pm)
    if not assume_hyperbolic and not report.all_resolved():
        raise DomainError(
            "map not certified hyperbolic by critical-orbit classification"
        )
    attracting = report.attracting_cycle()
    expected = pm.degree ** n
    extra = []
    if attracting is not None and n % attracting.period == 0:
        extra = list(attracting.points)

    radius = pm.escape_radius()
    d = pm.degree
    pad_cap = max(0, int(math.floor(math.log(2 ** 17, d))) - n)
    # Newton duplicates across seed batches agree to ~1e-11 scale while
    # genuine root separations can shrink toward ~radius * expansion^-n,
    # so the clustering tolerance is searched on a ladder and certified
    # by the exact count of solutions of f^n(z) = z.
    base_tol = 3e-11 * (1.0 + radius)
    ladder = [base_tol * (4.0 ** j) for j in range(9)]
    raw = np.array(list({complex(z) for z in extra}), dtype=complex)
    last_count = 0
    for seed, pad in ((0, min(4, pad_cap)), (1, min(5, pad_cap)),
                      (2, min(6, pad_cap))):
        if pm.family_param is not None:
            leaves = _backward_leaves_quadratic(pm.family_param, n + pad, seed)
        else:
            leaves = _backward_leaves_generic(pm, n + pad, seed)
        polished = _newton_on_iterate(pm, leaves, n)
        raw = _dedupe_points(np.concatenate([raw, polished]), base_tol)
        for tol in ladder:
            total = _dedupe_points(raw, tol)
            last_count = total.size
            if total.size == expected:
                return total
            if total.size < expected:
                break  # larger tolerances merge even more
    raise NumericsError(
        f"periodic point enumeration found {last_count} of {expected} "
        f"solutions of f^{n}(z) = z"
    )


def _group_into_orbits(pm: PolyMap, points: np.ndarray):
    """Partition the solution set of f^n(z) = z into orbits of the map."""
    coords = np.column_stack([points.real, points.imag])
    tree = cKDTree(coords)
    images = _iterate_vec(pm, points, 1)[0]
    dist, idx = tree.query(np.column_stack([images.real, images.imag]), k=1)
    tol = CLUSTER_TOL * (1.0 + np.abs(images))
    if np.any(dist > tol * 50):
        raise NumericsError("orbit matching failed: image not among roots")
    perm = idx
    seen = np.zeros(points.size, dtype=bool)
    orbits = []
    for start in range(points.size):
        if seen[start]:
            continue
        orbit = [start]
        seen[start] = True
        cur = perm[start]
        while cur != start:
            if seen[cur]:
                raise NumericsError("orbit matching produced a non-permutation")
            orbit.append(cur)
            seen[cur] = True
            cur = perm[cur]
        orbits.append([complex(points[i]) for i in orbit])
    return orbits


@lru_cache(maxsize=4096)
def _periodic_cycles_cached(pm: PolyMap, n: int, assume_hyperbolic: bool):
    points = _fixed_points_of_iterate(pm, n, assume_hyperbolic)
    orbits = _group_into_orbits(pm, points)
    cycles = []
    for orbit in orbits:
        if len(orbit) != n:
            continue  # exact period is a proper divisor of n
        cycles.append(cycle_from_orbit(pm, orbit))
    cycles.sort(key=lambda cy: (cy.points[0].real, cy.points[0].imag))
    return tuple(cycles)


def periodic_cycles(pm: PolyMap, n: int, julia_only: bool = False,
                    assume_hyperbolic: bool = False):
    """All cycles of exact period n, optionally restricted to the Julia set.

    For hyperbolic maps every non-attracting cycle is repelling and lies
    on the Julia set, so ``julia_only`` filters by |multiplier| > 1.
    Encountering an indifferent cycle raises DomainError, since the
    toolkit's setting is hyperbolic.
    """
    if not 1 <= n <= N_CAP:
        raise ValueError(f"period must be in 1..{N_CAP}")
    cycles = _periodic_cycles_cached(pm, n, assume_hyperbolic)
    if julia_only:
        return [c for c in cycles if abs(c.multiplier) > 1.0 + JULIA_MARGIN]
    return list(cycles)


# ---------------------------------------------------------------------------
# Quadratic-family continuation and multiplier derivatives
# ---------------------------------------------------------------------------

def _cyclic_newton_delta(z: np.ndarray, g: np.ndarray):
    """Solve the linearized cyclic system for a batch of quadratic cycles.

    For each row, unknowns D_i satisfy  2 z_i D_i - D_{i+1} = -g_i  with
    cyclic indexing.  Forward substitution leaves one unknown D_0 fixed by
    the closure condition D_k = D_0, which is solvable while the cycle
    multiplier stays away from 1.
    """
    a = 2.0 * z
    m, k = z.shape
    lam = np.prod(a, axis=1)
    if np.any(np.abs(lam - 1.0) < 1e-9):
        raise DomainError("continuation left hyperbolic regime")
    # suffix[j] = prod_{i=j+1}^{k-1} a_i
    suffix = np.ones((m, k), dtype=complex)
    for j in range(k - 2, -1, -1):
        suffix[:, j] = suffix[:, j + 1] * a[:, j + 1]
    b = (suffix * g).sum(axis=1)
    d0 = b / (1.0 - lam)
    delta = np.empty_like(z)
    delta[:, 0] = d0
    for i in range(k - 1):
        delta[:, i + 1] = a[:, i] * delta[:, i] + g[:, i]
    return delta


def _cycle_residual(z: np.ndarray, c: complex):
    return z * z + c - np.roll(z, -1, axis=1)


def _newton_correct(z: np.ndarray, c: complex, tol: float = 1e-12):
    # the cyclic solver returns delta with J delta = -G, so z moves by +delta
    for _ in range(30):
        g = _cycle_residual(z, c)
        if np.max(np.abs(g)) <= tol * (1.0 + np.max(np.abs(z))):
            # one extra quadratically-convergent step pushes the residual
            # to rounding level, which downstream difference quotients need
            delta = _cyclic_newton_delta(z, g)
            if np.all(np.isfinite(delta)):
                z = z + delta
            return z, True
        delta = _cyclic_newton_delta(z, g)
        if not np.all(np.isfinite(delta)):
            return z, False
        z = z + delta
    g = _cycle_residual(z, c)
    return z, bool(np.max(np.abs(g)) <= tol * (1.0 + np.max(np.abs(z))))


def _min_gap(z: np.ndarray):
    """Per-row minimum pairwise distance (inf for period-1 rows)."""
    m, k = z.shape
    if k == 1:
        return np.full(m, np.inf)
    diff = np.abs(z[:, :, None] - z[:, None, :])
    diff[:, np.arange(k), np.arange(k)] = np.inf
    return diff.min(axis=(1, 2))


def _continue_batch(z0: np.ndarray, c_from: complex, c_to: complex,
                    steps: int, track_log: bool = False,
                    max_splits: int = 14):
    """Continue a batch of same-period cycles along a parameter segment.

    Steps are bisected adaptively when Newton stalls, when a point moves
    by more than half the minimum gap inside its cycle, or (with
    ``track_log``) when a multiplier rotates by more than pi/2 in one
    step, which pins the continuous branch of log(multiplier).
    """
    z = z0.astype(complex).copy()
    lam = np.prod(2.0 * z, axis=1)
    log_lam = np.log(np.abs(lam)) + 1j * np.angle(lam)

    def advance(za, ca, cb, depth):
        nonlocal log_lam
        lam_a = np.prod(2.0 * za, axis=1)
        zb, ok = _newton_correct(za.copy(), cb)
        if ok:
            moved = np.max(np.abs(zb - za), axis=1)
            gap = _min_gap(za)
            ok = bool(np.all(moved < 0.5 * gap))
        if ok and track_log:
            lam_b = np.prod(2.0 * zb, axis=1)
            rot = np.angle(lam_b / lam_a)
            ok = bool(np.all(np.abs(rot) <= 0.5 * np.pi))
        if not ok:
            if depth >= max_splits:
                if track_log:
                    raise NumericsError(
                        "multiplier branch refinement floor reached"
                    )
                raise DomainError("continuation left hyperbolic regime")
            cm = 0.5 * (ca + cb)
            za = advance(za, ca, cm, depth + 1)
            return advance(za, cm, cb, depth + 1)
        if track_log:
            lam_b = np.prod(2.0 * zb, axis=1)
            log_lam = log_lam + np.log(np.abs(lam_b / lam_a)) \
                + 1j * np.angle(lam_b / lam_a)
        if np.any(_min_gap(zb) < COLLISION_TOL):
            raise DomainError("continuation left hyperbolic regime")
        return zb

    for i in range(steps):
        ca = c_from + (c_to - c_from) * (i / steps)
        cb = c_from + (c_to - c_from) * ((i + 1) / steps)
        z = advance(z, ca, cb, 0)
    lam_final = np.prod(2.0 * z, axis=1)
    return z, lam_final, log_lam


def default_continuation_steps(c_from: complex, c_to: complex) -> int:
    return max(4, int(math.ceil(abs(c_to - c_from) / 0.02)))


def continue_cycle(cycle: Cycle, c_from: complex, c_to: complex,
                   steps: int | None = None) -> Cycle:
    """Move a quadratic-family cycle from parameter c_from to c_to.

    Both parameters must lie in one hyperbolic component; leaving it
    surfaces as Newton divergence or a period collision.
    """
    c_from = complex(c_from)
    c_to = complex(c_to)
    pm_from = PolyMap.quadratic(c_from)
    for i, z in enumerate(cycle.points):
        nxt = cycle.points[(i + 1) % cycle.period]
        if abs(pm_from(z) - nxt) > 1e-8 * (1.0 + abs(z)):
            raise ValueError("cycle does not belong to the starting parameter")
    if steps is None:
        steps = default_continuation_steps(c_from, c_to)
    if c_from == c_to:
        steps = 1
    z0 = np.array([cycle.points], dtype=complex)
    z, _, _ = _continue_batch(z0, c_from, c_to, steps)
    return cycle_from_orbit(PolyMap.quadratic(c_to), [complex(v) for v in z[0]])


def multiplier_derivative(c0: complex, cycle: Cycle) -> complex:
    """d(multiplier)/dc at c0 for a quadratic-family cycle.

    Implicit differentiation of the cycle equations z_{i+1} = z_i^2 + c:
    the point velocities u_i solve a cyclic linear system, and the
    multiplier lambda = prod 2 z_i gives dlambda/dc = lambda * sum u_i/z_i.
    """
    c0 = complex(c0)
    lam = cycle.multiplier
    if abs(lam - 1.0) < 1e-8:
        raise DomainError("multiplier too close to 1: implicit system singular")
    z = np.array([cycle.points], dtype=complex)
    if np.any(np.abs(z) < 1e-14):
        raise DomainError("cycle passes through the critical point")
    ones = np.ones_like(z)
    u = _cyclic_newton_delta(z, ones)
    return complex(lam * (u / z).sum())


def multiplier_derivative_fd(c0: complex, cycle: Cycle, h: float = 1e-5) -> complex:
    """Finite-difference cross-check of the multiplier derivative."""
    c0 = complex(c0)
    plus = continue_cycle(cycle, c0, c0 + h, steps=2)
    minus = continue_cycle(cycle, c0, c0 - h, steps=2)
    # match orientation: continued cycles are canonically rotated, and the
    # multiplier is rotation-invariant, so the difference is well-defined
    return (plus.multiplier - minus.multiplier) / (2.0 * h)
