"""Scale sweeps, power-law fits, and the dyadic slice-bound algebra.

The object of study is the growth in R of the ratio

    N(R) = || max along curve |u| ||_{l2(B_R)} / ||f||_2

for band-limited data regenerated at each scale with period P = 2R (which
keeps the flat generators' norms essentially scale-free, so the fitted
exponent measures the maximal operator, not the datum).  The reference
critical exponent is max{(1-2*alpha)/2, n/(2(n+1))}.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .cubes import CubeSet, ball_density, dyadic_range, is_dyadic
from .curves import ModelCurve, RescaledCurve
from .errors import DomainError, ValidationError
from .fields import FieldSpec, PeriodicBandLimitedField, evaluate_points, generate, norm_l2, spec_hash
from .scan import DEFAULT_ROW_BUDGET, lattice_l2, norm_ratio, scan

SWEEP_REGIMES = ("early", "late", "total")


def critical_exponent(n: int, alpha: float) -> float:
    """max{(1-2*alpha)/2, n/(2(n+1))} on the admissible range 0 < alpha < 1/2."""
    if n < 1 or int(n) != n:
        raise DomainError("n must be a positive integer")
    if not (0.0 < alpha < 0.5):
        raise DomainError("alpha must lie in (0, 1/2)")
    return max((1.0 - 2.0 * alpha) / 2.0, n / (2.0 * (n + 1.0)))


@dataclass(frozen=True)
class SweepRecord:
    n: int
    exponents: tuple
    R: float
    regime: str
    ratio: float
    tol: float
    seed: int
    field_hash: str
    wall_ms: float


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float  # max |log N - fit| over the records
    R_range: tuple
    reference: float | None = None
    points: int = 0


def auto_tol(field: PeriodicBandLimitedField) -> float:
    """Default scan resolution for slope experiments: a fixed fraction of the
    coefficient norm, which tracks the typical size of |u| for every
    generator and keeps the relative discretization error scale-free."""
    return 0.25 * field.coefficient_norm()


def run_sweep(
    spec: FieldSpec,
    exponents,
    R_values,
    tol,
    regime: str,
    *,
    budget: int = DEFAULT_ROW_BUDGET,
) -> list:
    """One SweepRecord per R, deterministic given the spec's seed.

    R values must be dyadic, strictly increasing; the field is regenerated
    at each scale with period P = 2R.  tol may be a float or "auto".
    """
    if regime not in SWEEP_REGIMES:
        raise ValidationError(f"regime must be one of {SWEEP_REGIMES}")
    base = ModelCurve(tuple(exponents))
    if not (base.alpha < 0.5):
        raise ValidationError("tangential experiments need alpha = min exponent < 1/2")
    Rs = [float(R) for R in R_values]
    if not Rs:
        raise ValidationError("R list must be nonempty")
    if any(not is_dyadic(R) for R in Rs):
        raise ValidationError("R values must be dyadic and >= 1")
    if any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise ValidationError("R values must be strictly increasing")
    records = []
    for R in Rs:
        period = 2.0 * R
        field = generate(spec, base.dimension, period)
        if norm_l2(field) == 0.0:
            raise DomainError("zero field rejected")
        tol_r = auto_tol(field) if tol == "auto" else float(tol)
        curve = RescaledCurve(base, R)
        start = time.perf_counter()
        if regime == "total":
            value = norm_ratio(field, curve, tol_r, budget=budget).total
        else:
            # single-regime sweeps scan only their own interval
            profile = scan(field, curve, regime, tol_r, budget=budget)
            value = lattice_l2(profile, R) / norm_l2(field)
        wall_ms = (time.perf_counter() - start) * 1e3
        records.append(
            SweepRecord(
                n=base.dimension,
                exponents=base.exponents,
                R=R,
                regime=regime,
                ratio=value,
                tol=tol_r,
                seed=spec.seed,
                field_hash=spec_hash(spec, base.dimension, period),
                wall_ms=wall_ms,
            )
        )
    return records


def fit_power_law(records, reference: float | None = None) -> ExponentFit:
    """Ordinary least squares of log N against log R; needs >= 4 records."""
    pairs = sorted((float(r.R), float(r.ratio)) for r in records)
    if len(pairs) < 4:
        raise ValidationError("power-law fit needs at least 4 records")
    Rs = np.array([p[0] for p in pairs])
    Ns = np.array([p[1] for p in pairs])
    if np.any(Ns <= 0):
        raise DomainError("ratios must be positive for a log-log fit")
    logR, logN = np.log(Rs), np.log(Ns)
    slope, intercept = np.polyfit(logR, logN, 1)
    residual = float(np.abs(logN - (slope * logR + intercept)).max())
    return ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=residual,
        R_range=(float(Rs[0]), float(Rs[-1])),
        reference=reference,
        points=len(pairs),
    )


def slice_bound(n: int, alpha: float, R: float, time_scale: float, overlap: float) -> float:
    """Per-slice bound value of the dyadic reduction:

        overlap^(1/2 - 1/(n+1))
        * (overlap^-1 * max{1, R^(1-2a) * scale^(a-1)})^(1/(n+1))
        * scale^(n / (2(n+1))).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if not (0.0 < alpha < 0.5):
        raise DomainError("alpha must lie in (0, 1/2)")
    if not (1.0 <= time_scale <= R):
        raise DomainError("need 1 <= time_scale <= R")
    if overlap < 1.0:
        raise DomainError("overlap must be >= 1")
    envelope = max(1.0, R ** (1.0 - 2.0 * alpha) * time_scale ** (alpha - 1.0))
    return (
        overlap ** (0.5 - 1.0 / (n + 1.0))
        * (envelope / overlap) ** (1.0 / (n + 1.0))
        * time_scale ** (n / (2.0 * (n + 1.0)))
    )


def slice_bound_max(n: int, alpha: float, R: float) -> float:
    """Maximum of slice_bound over the admissible dyadic (scale, overlap) grid.

    Admissible overlaps at a given scale run over dyadic values up to
    max{1, R^(1-2a) * scale^(a-1)}: larger classes are empty.
    """
    best = 0.0
    for lam in dyadic_range(R):
        env = max(1.0, R ** (1.0 - 2.0 * alpha) * lam ** (alpha - 1.0))
        for eta in dyadic_range(env):
            best = max(best, slice_bound(n, alpha, R, lam, eta))
    return best


def density_restriction_ratio(
    field: PeriodicBandLimitedField,
    cube_set: CubeSet,
    beta: float,
    R: float,
    tol: float = 1e-6,
    *,
    base_nodes: int = 8,
) -> float:
    """Measured quotient of the density-weighted restriction inequality:

        ||u||_{L2 over the cubes} / (phi^(1/(n+1)) R^(beta/(2(n+1))) ||f||_2)

    The left side integrates |u|^2 cube by cube with a tensor Gauss rule
    (>= 8 nodes/axis, doubled until two refinements agree within tol).
    Returns 0 for an empty cube set.  Reported, never asserted at a value.
    """
    if cube_set.size == 0:
        return 0.0
    n = field.dimension
    if cube_set.spacetime_dim != n + 1:
        raise DomainError("cube set dimension must match the field")
    left_sq = _cube_quadrature(field, cube_set, base_nodes)
    nodes = base_nodes
    while nodes < 32:
        refined = _cube_quadrature(field, cube_set, nodes * 2)
        if abs(np.sqrt(refined) - np.sqrt(left_sq)) <= tol * max(1.0, np.sqrt(refined)):
            left_sq = refined
            break
        left_sq = refined
        nodes *= 2
    phi = ball_density(cube_set, beta=beta, r_cap=R).phi
    right = phi ** (1.0 / (n + 1.0)) * R ** (beta / (2.0 * (n + 1.0))) * norm_l2(field)
    return float(np.sqrt(left_sq) / right)


def _cube_quadrature(field: PeriodicBandLimitedField, cube_set: CubeSet, nodes: int) -> float:
    """Integral of |u|^2 over the union of cubes by a tensor Gauss rule."""
    d = cube_set.spacetime_dim
    g, w = leggauss(nodes)
    g01 = 0.5 * (g + 1.0)
    w01 = 0.5 * w
    axes = np.stack(np.meshgrid(*([g01] * d), indexing="ij"), axis=-1).reshape(-1, d)
    wts = np.stack(np.meshgrid(*([w01] * d), indexing="ij"), axis=-1).reshape(-1, d).prod(axis=1)
    total = 0.0
    for corner in cube_set.corners:
        pts = corner.astype(float)[None, :] + axes
        vals = np.abs(evaluate_points(field, pts[:, :-1], pts[:, -1]))
        total += float((wts * vals**2).sum())
    return total
