"""Multiplier functions, the entropy functional, and its Hessian metrics.

The central objects: given a base parameter c0 in a hyperbolic component
of the quadratic family and an orbit-measure approximation of the
dimension equilibrium state, the multiplier function M(c) transports the
measure to nearby parameters by cycle continuation and averages the
per-cycle expansion rates.  The entropy functional G(c) = delta(c) M(c)
is minimized at c0, so its Hessian defines a quadratic form on the
parameter plane; dividing by G(c0) gives the pressure form.

All dimension factors inside these evaluations use the Bowen root of the
truncated orbit pressure at the same period horizon as the measure.  At
a matched horizon the truncated system is itself a finite thermodynamic
system: the gradient of G vanishes at c0 and the minimum inequality and
variance identity hold exactly, not just in the infinite-period limit.
That keeps finite-difference Hessians well conditioned.  The standalone
transfer-matrix dimension is reported alongside for reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import (
    Cycle,
    PolyMap,
    _continue_batch,
    cycle_from_orbit,
    default_continuation_steps,
    multiplier_derivative,
    periodic_cycles,
)
from .errors import DomainError, NumericsError
from .thermo import OrbitMeasure, equilibrium_orbit_measure, lyapunov

DEFAULT_HORIZON = 10
DEFAULT_STEP = 1e-2


@dataclass(frozen=True)
class TangentVector:
    """A direction in the parameter plane at a base point."""

    base: complex
    v: tuple  # (re, im)

    @property
    def as_complex(self) -> complex:
        return complex(self.v[0], self.v[1])

    @property
    def norm(self) -> float:
        return math.hypot(self.v[0], self.v[1])


@dataclass(frozen=True)
class MetricTensor:
    """Symmetric 2x2 form on the tangent plane of the c-parameter."""

    g11: float
    g12: float
    g22: float
    base: complex
    kind: str            # "G-metric" | "pressure-metric" | "delta-hessian"
    step: float
    richardson_rel: float | None = None
    route_agreement_rel: float | None = None

    def eigenvalues(self):
        tr = self.g11 + self.g22
        disc = math.sqrt((self.g11 - self.g22) ** 2 + 4.0 * self.g12 ** 2)
        return (0.5 * (tr - disc), 0.5 * (tr + disc))

    def norm_sq(self, v) -> float:
        """Quadratic form v^T g v for v = (re, im) or complex."""
        if isinstance(v, complex):
            vx, vy = v.real, v.imag
        else:
            vx, vy = float(v[0]), float(v[1])
        return (self.g11 * vx * vx + 2.0 * self.g12 * vx * vy
                + self.g22 * vy * vy)

    def is_positive_definite(self, tol: float = 0.0) -> bool:
        lo, _ = self.eigenvalues()
        return lo > tol

    def scaled(self, factor: float, kind: str) -> "MetricTensor":
        return MetricTensor(self.g11 * factor, self.g12 * factor,
                            self.g22 * factor, self.base, kind, self.step,
                            self.richardson_rel, self.route_agreement_rel)


@dataclass(frozen=True)
class EntropyFunctionalRecord:
    """Frozen ingredients of the entropy functional at a base parameter."""

    base: complex
    delta0: float        # Bowen root of the horizon-truncated orbit pressure
    lyap0: float         # expansion average of the measure at the base
    measure: OrbitMeasure
    G0: float            # delta0 * lyap0


# ---------------------------------------------------------------------------
# Transported multiplier data
# ---------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def _continued_data(measure: OrbitMeasure, c: complex):
    """Multipliers (and path-tracked complex logs) of all atoms moved to c.

    Atoms are grouped by period and continued in a single Newton batch
    along the straight segment from the measure's base parameter; the
    branch of log(multiplier) starts from the principal argument at the
    base and accumulates the per-step rotation, with automatic step
    refinement capping each rotation at pi/2.
    """
    base = measure.base_param
    if base is None:
        raise ValueError("measure carries no base parameter for continuation")
    cycles = measure.cycles
    if c == base:
        lam = np.array([cy.multiplier for cy in cycles])
        return lam, np.log(np.abs(lam)) + 1j * np.angle(lam)
    steps = default_continuation_steps(base, c)
    lam_out = np.empty(len(cycles), dtype=complex)
    log_out = np.empty(len(cycles), dtype=complex)
    by_period = {}
    for idx, cy in enumerate(cycles):
        by_period.setdefault(cy.period, []).append(idx)
    for period, idxs in by_period.items():
        z0 = np.array([cycles[i].points for i in idxs], dtype=complex)
        _, lam, log_lam = _continue_batch(z0, base, c, steps, track_log=True)
        lam_out[idxs] = lam
        log_out[idxs] = log_lam
    return lam_out, log_out


def transport_measure(measure: OrbitMeasure, c: complex) -> OrbitMeasure:
    """Push the measure to parameter c along the cycle continuation."""
    base = measure.base_param
    if base is None:
        raise ValueError("measure carries no base parameter for continuation")
    steps = default_continuation_steps(base, c)
    pm_c = PolyMap.quadratic(c)
    atoms = []
    for cy, w in measure.atoms:
        z0 = np.array([cy.points], dtype=complex)
        z, _, _ = _continue_batch(z0, base, c, steps)
        atoms.append((cycle_from_orbit(pm_c, [complex(v) for v in z[0]]), w))
    return OrbitMeasure(tuple(atoms), measure.period_horizon, complex(c))


def multiplier_function(measure: OrbitMeasure, c: complex) -> float:
    """Average expansion rate of the transported measure at parameter c."""
    lam, _ = _continued_data(measure, complex(c))
    periods = np.array([cy.period for cy in measure.cycles], dtype=float)
    return float((measure.weights * np.log(np.abs(lam)) / periods).sum())


def complex_multiplier_function(measure: OrbitMeasure, c: complex) -> complex:
    """Complex-log version of the multiplier function, branch-continuous.

    Its real part equals multiplier_function exactly; holomorphy in c is
    inherited from the holomorphic motion of each cycle.
    """
    _, log_lam = _continued_data(measure, complex(c))
    periods = np.array([cy.period for cy in measure.cycles], dtype=float)
    return complex((measure.weights * log_lam / periods).sum())


# ---------------------------------------------------------------------------
# Horizon-matched dimension and the entropy functional
# ---------------------------------------------------------------------------

def _horizon_root(moduli: np.ndarray, n: int, s_init: float = 1.0) -> float:
    """Root in s of n * sum |lambda|^(-s) = 1 over exact-period-n cycles."""
    log_mod = np.log(moduli)

    def phi(s):
        terms = np.exp(-s * log_mod)
        total = n * terms.sum()
        dtotal = -n * (log_mod * terms).sum()
        return math.log(total), dtotal / total

    s = s_init
    for _ in range(80):
        val, dval = phi(s)
        step = val / dval
        s_new = s - step
        if s_new <= 0.0:
            s_new = 0.5 * s
        if abs(s_new - s) < 1e-14:
            return s_new
        s = s_new
    raise NumericsError("horizon pressure root did not converge")


def make_entropy_record(pm: PolyMap, horizon: int = DEFAULT_HORIZON) -> EntropyFunctionalRecord:
    """Build the entropy-functional record at a base parameter.

    Weights each exact-period-``horizon`` repelling cycle by
    n |multiplier|^(-delta) with delta the matched truncated Bowen root,
    so the weights normalize to one by construction.
    """
    if pm.family_param is None:
        raise ValueError("entropy records require a quadratic-family map")
    base = pm.family_param
    cycles = periodic_cycles(pm, horizon, julia_only=True)
    if not cycles:
        raise DomainError(f"no repelling period-{horizon} cycles at {base}")
    moduli = np.array([abs(cy.multiplier) for cy in cycles])
    delta0 = _horizon_root(moduli, horizon)
    measure = equilibrium_orbit_measure(pm, delta0, horizon)
    lyap0 = lyapunov(measure, pm)
    return EntropyFunctionalRecord(base, delta0, lyap0, measure,
                                   delta0 * lyap0)


@lru_cache(maxsize=65536)
def _delta_at(record: EntropyFunctionalRecord, c: complex) -> float:
    """Truncated Bowen root at parameter c along the transported cycles."""
    lam, _ = _continued_data(record.measure, c)
    return _horizon_root(np.abs(lam), record.measure.period_horizon,
                         s_init=record.delta0)


def entropy_functional(record: EntropyFunctionalRecord, c: complex) -> float:
    """G(c) = delta(c) * M(c) with the base measure transported to c.

    Minimized at the record's base parameter; the matched-horizon
    dimension factor makes the minimum exact for the truncated system.
    """
    c = complex(c)
    return _delta_at(record, c) * multiplier_function(record.measure, c)


def entropy_gradient(record: EntropyFunctionalRecord, h: float):
    """Central-difference gradient of G at the base; O(h^2) at the minimum."""
    c0 = record.base
    gx = (entropy_functional(record, c0 + h)
          - entropy_functional(record, c0 - h)) / (2.0 * h)
    gy = (entropy_functional(record, c0 + 1j * h)
          - entropy_functional(record, c0 - 1j * h)) / (2.0 * h)
    return gx, gy


# ---------------------------------------------------------------------------
# Hessian tensors
# ---------------------------------------------------------------------------

def _second_difference(fn, c0: complex, v: complex, h: float) -> float:
    return (fn(c0 + h * v) - 2.0 * fn(c0) + fn(c0 - h * v)) / (h * h)


def _hessian_entries(fn, c0: complex, h: float):
    s11 = _second_difference(fn, c0, 1.0 + 0j, h)
    s22 = _second_difference(fn, c0, 1j, h)
    sdiag = _second_difference(fn, c0, 1.0 + 1j, h)
    g12 = 0.5 * (sdiag - s11 - s22)
    return s11, g12, s22


def _stencil_hessian(fn, c0: complex, h: float, kind: str, base: complex):
    try:
        coarse = _hessian_entries(fn, c0, h)
        fine = _hessian_entries(fn, c0, 0.5 * h)
    except DomainError as exc:
        raise DomainError(f"stencil leaves the component: {exc}; reduce h") from exc
    scale = max(abs(fine[0]) + abs(fine[2]), 1e-30)
    rich = max(abs(a - b) / max(abs(b), 0.02 * scale)
               for a, b in zip(coarse, fine))
    return MetricTensor(fine[0], fine[1], fine[2], base, kind, h,
                        richardson_rel=float(rich))


def g_metric(record: EntropyFunctionalRecord, h: float = DEFAULT_STEP) -> MetricTensor:
    """Hessian form of the entropy functional at the record's base.

    Entries come from central second differences at steps h and h/2; the
    finer tensor is returned with the relative entrywise change recorded
    as the Richardson diagnostic.
    """
    if not 1e-4 <= h <= 1e-1:
        raise ValueError("h must lie in [1e-4, 1e-1]")
    fn = lambda c: entropy_functional(record, c)
    return _stencil_hessian(fn, record.base, h, "G-metric", record.base)


def delta_hessian(record: EntropyFunctionalRecord, h: float = DEFAULT_STEP) -> MetricTensor:
    """Hessian of the dimension itself on the same stencil as g_metric."""
    if not 1e-4 <= h <= 1e-1:
        raise ValueError("h must lie in [1e-4, 1e-1]")
    fn = lambda c: _delta_at(record, c)
    return _stencil_hessian(fn, record.base, h, "delta-hessian", record.base)


def _variance_route_norm_sq(record: EntropyFunctionalRecord, v: complex,
                            h: float) -> float:
    """Pressure-form value of a direction via the dynamical variance.

    The derivative of the pressure-zero potential along the direction has
    cycle averages -(1/n)(delta'(v) log|lam| + delta0 Re(v dlam/dc / lam));
    its variance under the equilibrium weights, divided by delta0*lyap0,
    is the pressure form.
    """
    measure = record.measure
    n = measure.period_horizon
    c0 = record.base
    dplus = _delta_at(record, c0 + h * v)
    dminus = _delta_at(record, c0 - h * v)
    ddelta = (dplus - dminus) / (2.0 * h)
    lam = np.array([cy.multiplier for cy in measure.cycles])
    dlam = np.array([multiplier_derivative(c0, cy) for cy in measure.cycles])
    psi = -(record.delta0 * np.real(v * dlam / lam)
            + ddelta * np.log(np.abs(lam))) / n
    w = measure.weights
    mean = (w * psi).sum()
    var = n * ((w * psi * psi).sum() - mean * mean)
    return float(var / record.G0)


def pressure_metric(record: EntropyFunctionalRecord, h: float = DEFAULT_STEP) -> MetricTensor:
    """Pressure form: the G Hessian divided by delta0 * lyap0.

    Cross-checked against the variance route; disagreement beyond 25%
    entrywise (on the trace scale) flags a discretization problem.
    """
    gt = g_metric(record, h)
    pt = gt.scaled(1.0 / record.G0, "pressure-metric")
    q11 = _variance_route_norm_sq(record, 1.0 + 0j, h)
    q22 = _variance_route_norm_sq(record, 1j, h)
    qdiag = _variance_route_norm_sq(record, 1.0 + 1j, h)
    q12 = 0.5 * (qdiag - q11 - q22)
    scale = max(abs(pt.g11) + abs(pt.g22), 1e-30)
    agree = max(
        abs(pt.g11 - q11) / max(abs(q11), 0.02 * scale),
        abs(pt.g12 - q12) / max(abs(q12), 0.02 * scale),
        abs(pt.g22 - q22) / max(abs(q22), 0.02 * scale),
    )
    if agree > 0.25:
        raise NumericsError(
            f"pressure-form routes disagree by {agree:.1%}: "
            "discretization problem (horizon or step)"
        )
    return MetricTensor(pt.g11, pt.g12, pt.g22, record.base,
                        "pressure-metric", h,
                        richardson_rel=gt.richardson_rel,
                        route_agreement_rel=float(agree))


def pressure_metric_variance_tensor(record: EntropyFunctionalRecord,
                                    h: float = DEFAULT_STEP) -> MetricTensor:
    """The variance-route pressure tensor alone (for diagnostics/tests)."""
    q11 = _variance_route_norm_sq(record, 1.0 + 0j, h)
    q22 = _variance_route_norm_sq(record, 1j, h)
    qdiag = _variance_route_norm_sq(record, 1.0 + 1j, h)
    return MetricTensor(q11, 0.5 * (qdiag - q11 - q22), q22, record.base,
                        "pressure-metric", h)


# ---------------------------------------------------------------------------
# Harmonicity
# ---------------------------------------------------------------------------

def five_point_laplacian(fn, c0: complex, h: float) -> float:
    """Discrete Laplacian [f(c+h)+f(c-h)+f(c+ih)+f(c-ih)-4f(c)] / h^2."""
    return (fn(c0 + h) + fn(c0 - h) + fn(c0 + 1j * h) + fn(c0 - 1j * h)
            - 4.0 * fn(c0)) / (h * h)


def harmonicity_residual(measure: OrbitMeasure, h: float) -> float:
    """Laplacian residual of the multiplier function at the measure's base.

    The multiplier function is a weighted sum of log|multiplier(c)| over
    holomorphically moving cycles, hence harmonic; the residual measures
    only the stencil truncation and shrinks like h^2.
    """
    if measure.base_param is None:
        raise ValueError("measure carries no base parameter")
    fn = lambda c: multiplier_function(measure, c)
    return float(five_point_laplacian(fn, measure.base_param, h))
