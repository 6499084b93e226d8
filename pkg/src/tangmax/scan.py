"""Tangential maximal function over lattice points with certified grid error.

For each lattice point j in Z^n with |j| <= R the scan computes

    M_j = max over a time grid of |u(j + theta(t), t)|,

where the grid step obeys the worst-case Lipschitz budget

    step(t) * (4*pi^2*A + 2*pi*A*|theta'(t)|) <= tol,   A = sum |a_k|,

so the true supremum over the regime interval lies in [M_j, M_j + tol].
The grid is the set of times where the integrated budget crosses integer
multiples of tol; halving tol therefore produces a strict superset of grid
points (refinement can only raise M_j, by at most the old tol).

Two regimes are scanned: "early" is the open-left interval (0, 1] handled in
the tamed variable u = t^alpha (the curve speed is integrable at 0, so the
grid accumulates but stays finite and the t = 0 endpoint is never needed);
"late" is [1, R].

Evaluation engines (cross-checked by tests, all agreeing to ~1e-12):
  * n = 1, integer period, dense consecutive atoms: numba chirp recurrence
    plus batched FFT over folded residues -- the fast path;
  * integer period, any n: numpy phases + residue folding + FFT;
  * otherwise: direct summation matrix products.
Reported maxima are re-evaluated by direct summation at their witness times,
so |u(j + theta(t_j), t_j)| equals M_j exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from . import _kernels
from .curves import RescaledCurve
from .errors import BudgetError, DomainError, StructuralError
from .fields import FOUR_PI_SQ, TWO_PI, PeriodicBandLimitedField, evaluate, norm_l2
from .runtime import get_workers

REGIMES = ("early", "late")
DEFAULT_ROW_BUDGET = 10_000_000


@dataclass(frozen=True)
class MaximalProfile:
    """Per-lattice-point maxima of |u| along the rescaled curve."""

    regime: str
    R: float
    lattice: np.ndarray  # (nlat, n) int64
    values: np.ndarray  # (nlat,) float64, exact |u| at the witness
    arg_times: np.ndarray  # (nlat,) float64 witness times
    error_bound: float  # uniform certified gap: sup <= value + error_bound
    rows_used: int
    interval: tuple

    def __post_init__(self):
        for name in ("lattice", "values", "arg_times"):
            getattr(self, name).setflags(write=False)

    @property
    def size(self) -> int:
        return self.lattice.shape[0]

    def entry(self, j) -> tuple:
        """(value, arg_time, error_bound) at lattice point j."""
        jv = np.atleast_1d(np.asarray(j, dtype=np.int64))
        hit = np.where(np.all(self.lattice == jv, axis=1))[0]
        if hit.size == 0:
            raise StructuralError(f"lattice point {j} not covered by profile")
        i = int(hit[0])
        return float(self.values[i]), float(self.arg_times[i]), self.error_bound


def ball_lattice_points(n: int, R: float) -> np.ndarray:
    """Z^n intersected with the closed Euclidean ball of radius R."""
    r = int(np.floor(R + 1e-9))
    if n == 1:
        return np.arange(-r, r + 1, dtype=np.int64).reshape(-1, 1)
    axes = [np.arange(-r, r + 1, dtype=np.int64)] * n
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    return grid[(grid.astype(float) ** 2).sum(axis=1) <= R**2 + 1e-9]


class _StepBudget:
    """Integrated Lipschitz budget N(t) = D(t)/tol in the variable u = t^alpha.

    D(t) = A*(4*pi^2*(t - t_lo) + 2*pi*sum_j c_j*(t^{a_j} - t_lo^{a_j}))
    dominates the integral of the time-plus-curve Lipschitz bound, with
    c_j = R^(1-2*a_j) the component prefactors.  Strictly increasing, so the
    grid {N = integer} is found by bisection in u.  All arithmetic is kept
    identical across tolerances so that halving tol exactly doubles N and
    the bisection paths (hence the grids) nest.
    """

    def __init__(self, field: PeriodicBandLimitedField, curve: RescaledCurve, t_lo: float, t_hi: float, tol: float):
        self.alpha = curve.alpha
        self.exps = np.array(curve.base.exponents) / curve.alpha
        self.coef = curve.coefficients
        self.amp = field.amplitude_sum()
        self.t_lo = t_lo
        self.t_hi = t_hi
        self.u_lo = t_lo**self.alpha
        self.u_hi = t_hi**self.alpha
        # tiny shave keeps the certificate valid after ~1e-12 kernel drift
        self.tol = tol * (1.0 - 1e-6)

    def n_of_u(self, u):
        u = np.asarray(u, dtype=float)
        t_term = FOUR_PI_SQ * (u ** (1.0 / self.alpha) - self.t_lo)
        c_term = TWO_PI * (self.coef * (np.power(u[..., None], self.exps) - self.u_lo**self.exps)).sum(axis=-1)
        return self.amp * (t_term + c_term) / self.tol

    @property
    def total(self) -> float:
        return float(self.n_of_u(np.array(self.u_hi)))

    def times_for_targets(self, targets: np.ndarray) -> np.ndarray:
        """Invert N at integer targets with fixed-iteration bisection in u."""
        lo = np.full(targets.shape, self.u_lo)
        hi = np.full(targets.shape, self.u_hi)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.n_of_u(mid) < targets
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return np.clip(hi ** (1.0 / self.alpha), self.t_lo, self.t_hi)


def _fold_columns(lattice: np.ndarray, P: int) -> np.ndarray:
    """Residue column index of each lattice point in the folded P^n array."""
    n = lattice.shape[1]
    cols = np.zeros(lattice.shape[0], dtype=np.int64)
    for d in range(n):
        cols = cols * P + np.mod(lattice[:, d], P)
    return cols


def _dense_1d_atoms(field: PeriodicBandLimitedField):
    """(kmin, amps) if atoms are consecutive integers, else None."""
    ks = field.indices[:, 0]
    if ks.size == int(ks[-1] - ks[0]) + 1:
        return int(ks[0]), field.amplitudes
    return None


def scan(
    field: PeriodicBandLimitedField,
    curve: RescaledCurve,
    regime: str,
    tol: float,
    *,
    budget: int = DEFAULT_ROW_BUDGET,
    chunk_rows: int = 2048,
    engine: str = "auto",
) -> MaximalProfile:
    """Scan one regime; see the module docstring for the guarantee.

    Raises BudgetError (with the required budget) if the certified grid would
    exceed `budget` rows; every row evaluates all lattice points at once.
    engine: "auto" picks the FFT path for integer periods; "direct" forces
    plain summation (slow, used for cross-checks).
    """
    if regime not in REGIMES:
        raise DomainError(f"regime must be one of {REGIMES}")
    if engine not in ("auto", "direct"):
        raise DomainError("engine must be auto or direct")
    if not (tol > 0):
        raise DomainError("tol must be positive")
    if field.dimension != curve.dimension:
        raise DomainError("field and curve dimensions disagree")
    R = curve.R
    t_lo, t_hi = (0.0, min(1.0, R)) if regime == "early" else (1.0, R)
    grid = _StepBudget(field, curve, t_lo, t_hi, tol)
    total = grid.total
    if not np.isfinite(total):
        raise DomainError("non-finite step budget; check field and curve")
    n_targets = int(np.floor(total))
    required = n_targets + 2
    if required > budget:
        raise BudgetError(
            f"scan needs {required} grid rows but budget is {budget}; "
            "raise the budget or loosen tol",
            required=required,
            budget=budget,
        )

    lattice = ball_lattice_points(field.dimension, R)
    n = field.dimension
    P_int = int(round(field.period))
    use_fft = abs(field.period - P_int) < 1e-12 and P_int >= 1 and engine == "auto"
    dense = _dense_1d_atoms(field) if (n == 1 and use_fft) else None
    ncols = P_int**n if use_fft else lattice.shape[0]
    # the forward DFT carries e^{-2*pi*i*mk/P}, so lattice point j sits at
    # output column (-j) mod P on each axis
    cols = _fold_columns(-lattice, P_int) if use_fft else np.arange(lattice.shape[0])

    best_sq = np.zeros(ncols, dtype=np.float64)
    best_row = np.zeros(ncols, dtype=np.int64)
    first_target = 1 if regime == "early" else 0  # t=0 excluded, t=1 included
    targets = np.arange(first_target, n_targets + 1, dtype=float)
    workers = get_workers()

    if use_fft and dense is not None:
        idx = np.mod(np.arange(dense[0], dense[0] + field.atom_count), P_int).astype(np.int64)
    elif use_fft:
        fold_idx = _fold_columns(field.indices, P_int)
    else:
        trans = np.exp(1j * TWO_PI * (field.indices @ lattice.T) / field.period)
    xi = field.indices / field.period
    disp = FOUR_PI_SQ * (xi**2).sum(axis=1)

    rows_used = 0
    row_base = 0
    for start in range(0, targets.size + 1, chunk_rows):
        chunk_targets = targets[start : start + chunk_rows]
        ts = grid.times_for_targets(chunk_targets) if chunk_targets.size else np.empty(0)
        if start + chunk_rows > targets.size:  # final chunk carries t_hi
            ts = np.append(ts, t_hi)
        if ts.size == 0:
            continue
        theta = curve.point(ts)
        if use_fft and dense is not None:
            buf = np.zeros((ts.size, P_int), dtype=np.complex128)
            _kernels.chirp_fold_rows_1d(ts, theta[:, 0], dense[1], dense[0], float(P_int), idx, buf)
            vals = sfft.fft(buf, axis=1, overwrite_x=True, workers=workers)
        elif use_fft:
            phases = TWO_PI * (theta @ xi.T) + ts[:, None] * disp[None, :]
            coeff = field.amplitudes[None, :] * np.exp(1j * phases)
            buf = np.zeros((ts.size, ncols), dtype=np.complex128)
            np.add.at(buf, (np.arange(ts.size)[:, None], fold_idx[None, :]), coeff)
            shaped = buf.reshape((ts.size,) + (P_int,) * n)
            vals = sfft.fftn(shaped, axes=tuple(range(1, n + 1)), overwrite_x=True, workers=workers)
            vals = vals.reshape(ts.size, ncols)
        else:
            phases = TWO_PI * (theta @ xi.T) + ts[:, None] * disp[None, :]
            coeff = field.amplitudes[None, :] * np.exp(1j * phases)
            vals = coeff @ trans
        _kernels.max_reduce(vals, row_base, best_sq, best_row)
        row_base += ts.size
        rows_used += ts.size

    # map residue columns back to lattice points and recompute witnesses with
    # the public evaluate(), so the stored maximum equals it bit-for-bit
    arg_rows = best_row[cols]
    witness_t = np.empty(arg_rows.size, dtype=float)
    is_final = arg_rows >= targets.size
    witness_t[is_final] = t_hi
    if np.any(~is_final):
        witness_t[~is_final] = grid.times_for_targets(targets[arg_rows[~is_final]])
    xs = lattice.astype(float) + curve.point(witness_t)
    values = np.array([abs(evaluate(field, x, t)) for x, t in zip(xs, witness_t)])

    return MaximalProfile(
        regime=regime,
        R=R,
        lattice=lattice,
        values=values,
        arg_times=witness_t,
        error_bound=tol,
        rows_used=rows_used,
        interval=(t_lo, t_hi),
    )


def lattice_l2(profile: MaximalProfile, R: float) -> float:
    """Unit-cell discretization of the L2(B_R) norm: sqrt(sum M_j^2).

    Requires the profile to cover exactly Z^n intersect B_R.
    """
    expected = ball_lattice_points(profile.lattice.shape[1], R)
    if expected.shape != profile.lattice.shape or not np.array_equal(expected, profile.lattice):
        raise StructuralError("profile does not cover the lattice ball B_R")
    return float(np.sqrt((profile.values**2).sum()))


@dataclass(frozen=True)
class NormRatios:
    """L2 maximal-to-data norm ratios per regime; total uses pointwise max."""

    early: float
    late: float
    total: float
    profile_early: MaximalProfile
    profile_late: MaximalProfile


def norm_ratio(
    field: PeriodicBandLimitedField,
    curve: RescaledCurve,
    tol: float,
    *,
    budget: int = DEFAULT_ROW_BUDGET,
) -> NormRatios:
    data_norm = norm_l2(field)
    if data_norm == 0.0:
        raise DomainError("norm ratio undefined for the zero field")
    early = scan(field, curve, "early", tol, budget=budget)
    late = scan(field, curve, "late", tol, budget=budget)
    combined = np.maximum(early.values, late.values)
    return NormRatios(
        early=lattice_l2(early, curve.R) / data_norm,
        late=lattice_l2(late, curve.R) / data_norm,
        total=float(np.sqrt((combined**2).sum())) / data_norm,
        profile_early=early,
        profile_late=late,
    )
