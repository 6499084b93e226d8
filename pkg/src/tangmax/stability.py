"""Audit of the locally-constant stability inequality.

For band-limited data, |u(x, t)| is controlled by the weighted sum of
|u_l(y, s)| over integer shifts l, with weights (1 + |l|)^-(n+1), whenever
|x - y| <= 8 and |t - s| <= 8.  Because frequency modulation by l is the
same as spatial translation by l, the shifted-field values are simply
u(y + l, s); the audit measures the empirical ratio

    |u(x, t)| / sum_{|l| <= L} (1 + |l|)^-(n+1) |u(y + l, s)|

and reports how it stabilizes as the truncation L grows.  The written
inequality carries no explicit constant, so nothing is asserted about the
ratio's absolute size; instances with ratio above 1 are simply flagged in
the sweep output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import polygamma

from .errors import DomainError
from .fields import PeriodicBandLimitedField, evaluate, evaluate_points, generate

POINTWISE_SEPARATION = 8.0
AVERAGED_SEPARATION = 4.0


@dataclass(frozen=True)
class StabilityInstance:
    field: PeriodicBandLimitedField
    x: tuple
    y: tuple
    t: float
    s: float
    p: float = 1.0
    truncation: int = 32

    def __post_init__(self):
        xv = np.asarray(self.x, dtype=float).ravel()
        yv = np.asarray(self.y, dtype=float).ravel()
        if xv.size != self.field.dimension or yv.size != self.field.dimension:
            raise DomainError("x and y must match the field dimension")
        if np.linalg.norm(xv - yv) > POINTWISE_SEPARATION + 1e-12:
            raise DomainError("need |x - y| <= 8")
        if abs(self.t - self.s) > POINTWISE_SEPARATION + 1e-12:
            raise DomainError("need |t - s| <= 8")
        if self.p < 1:
            raise DomainError("exponent p must be >= 1")
        if self.truncation < 0:
            raise DomainError("truncation must be >= 0")
        object.__setattr__(self, "x", tuple(float(v) for v in xv))
        object.__setattr__(self, "y", tuple(float(v) for v in yv))


def shift_table(n: int, L: int) -> tuple:
    """Integer shifts |l| <= L with weights (1+|l|)^-(n+1), sorted by |l|.

    The deterministic (radius, lexicographic) order makes cumulative sums by
    truncation radius exactly reproducible.
    """
    r = int(L)
    if n == 1:
        shifts = np.arange(-r, r + 1, dtype=np.int64).reshape(-1, 1)
    else:
        axes = [np.arange(-r, r + 1, dtype=np.int64)] * n
        shifts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    norms = np.sqrt((shifts.astype(float) ** 2).sum(axis=1))
    keep = norms <= L + 1e-9
    shifts, norms = shifts[keep], norms[keep]
    order = np.lexsort((*(shifts.T[::-1]), norms))
    shifts, norms = shifts[order], norms[order]
    weights = (1.0 + norms) ** (-(n + 1))
    return shifts, norms, weights


def tail_weight_bound(n: int, L: int) -> float:
    """Upper bound for sum over |l| > L of (1+|l|)^-(n+1)."""
    if n == 1:
        return float(2.0 * polygamma(1, L + 2))
    # count lattice points in annuli: #{|l| in [r, r+1)} <= 2*pi*(r+1) + 8
    radii = np.arange(L, L + 4096, dtype=float)
    annulus = 2.0 * np.pi * (radii + 1.0) + 8.0
    partial = float((annulus * (1.0 + radii) ** (-(n + 1))).sum())
    beyond = 2.0 * np.pi * (L + 4096.0) ** (-(n - 1)) if n > 1 else 0.0
    return partial + beyond


def _denominator_terms(field, y, s, L):
    shifts, norms, weights = shift_table(field.dimension, L)
    ys = np.asarray(y, dtype=float)[None, :] + shifts
    vals = np.abs(evaluate_points(field, ys, np.full(shifts.shape[0], float(s))))
    return norms, weights, vals


def stability_ratio(instance: StabilityInstance) -> float:
    """Empirical constant of the pointwise inequality at this instance."""
    norms, weights, vals = _denominator_terms(
        instance.field, instance.y, instance.s, instance.truncation
    )
    denom = float((weights * vals**instance.p).sum())
    if denom == 0.0:
        raise DomainError("degenerate instance: zero denominator")
    num = abs(evaluate(instance.field, instance.x, instance.t)) ** instance.p
    return num / denom


def ratio_by_truncation(instance: StabilityInstance, truncations) -> np.ndarray:
    """stability_ratio at several truncation radii, sharing one evaluation.

    Terms are accumulated in ascending |l| order, so the denominators are
    exactly nested partial sums and the ratios are nonincreasing in L.
    """
    Ls = sorted(int(v) for v in truncations)
    norms, weights, vals = _denominator_terms(instance.field, instance.y, instance.s, Ls[-1])
    num = abs(evaluate(instance.field, instance.x, instance.t)) ** instance.p
    csum = np.cumsum(weights * vals**instance.p)
    out = []
    for L in Ls:
        idx = np.searchsorted(norms, L + 1e-9, side="right") - 1
        denom = float(csum[idx]) if idx >= 0 else 0.0
        if denom == 0.0:
            raise DomainError("degenerate instance: zero denominator")
        out.append(num / denom)
    return np.array(out)


def averaged_stability_ratio(instance: StabilityInstance, nodes_per_axis: int = 16) -> float:
    """Averaged-form ratio: the denominator integrates |u_l|^p over the unit
    cell B_1(y) x [s, s+1] with a tensor Gauss rule (>= 16 nodes/axis).

    The averaged hypotheses are tighter: |x - y| <= 4 and |t - s| <= 4.
    """
    if nodes_per_axis < 16:
        raise DomainError("averaged form needs >= 16 nodes per axis")
    xv, yv = np.asarray(instance.x), np.asarray(instance.y)
    if np.linalg.norm(xv - yv) > AVERAGED_SEPARATION + 1e-12:
        raise DomainError("averaged form needs |x - y| <= 4")
    if abs(instance.t - instance.s) > AVERAGED_SEPARATION + 1e-12:
        raise DomainError("averaged form needs |t - s| <= 4")
    field = instance.field
    n = field.dimension
    shifts, _, weights = shift_table(n, instance.truncation)
    nodes, wts = leggauss(nodes_per_axis)
    t_nodes = instance.s + 0.5 * (nodes + 1.0)
    t_wts = 0.5 * wts
    if n == 1:
        x_nodes = yv[0] + nodes  # [-1, 1] is exactly B_1 here
        x_wts = wts
        gx, gt = np.meshgrid(x_nodes, t_nodes, indexing="ij")
        gw = np.outer(x_wts, t_wts).ravel()
        cell_pts = gx.ravel()[:, None]
        cell_ts = gt.ravel()
    else:
        # polar tensor rule on the unit disc (radial weight r): Gauss in the
        # radius, uniform midpoints in the periodic angular direction
        r_nodes = 0.5 * (nodes + 1.0)
        r_wts = 0.5 * wts * r_nodes
        a_nodes = 2.0 * np.pi * (np.arange(nodes_per_axis) + 0.5) / nodes_per_axis
        a_wts = np.full(nodes_per_axis, 2.0 * np.pi / nodes_per_axis)
        pr, pa, pt = np.meshgrid(r_nodes, a_nodes, t_nodes, indexing="ij")
        gw = (r_wts[:, None, None] * a_wts[None, :, None] * t_wts[None, None, :]).ravel()
        cell_pts = np.stack(
            [yv[0] + (pr * np.cos(pa)).ravel(), yv[1] + (pr * np.sin(pa)).ravel()], axis=1
        )
        cell_ts = pt.ravel()
    denom = 0.0
    for shift, w in zip(shifts, weights):
        vals = np.abs(evaluate_points(field, cell_pts + shift, cell_ts))
        denom += w * float((gw * vals**instance.p).sum())
    if denom == 0.0:
        raise DomainError("degenerate instance: zero denominator")
    num = abs(evaluate(field, instance.x, instance.t)) ** instance.p
    return num / denom


@dataclass(frozen=True)
class StabilitySweepRow:
    kind: str
    seed: int
    x: tuple
    y: tuple
    t: float
    s: float
    p: float
    truncation: int
    ratio: float
    tail_bound: float
    flagged_above_one: bool


@dataclass(frozen=True)
class StabilityReport:
    rows: tuple
    max_ratio: dict  # (p, L) -> max ratio
    relative_change: dict  # (p, L, 2L) -> |max_L - max_2L| / max_L
    monotone_in_truncation: bool
    degenerate_count: int


def stability_sweep(
    field_specs,
    p_grid,
    truncation_grid,
    seed: int,
    *,
    instances_per_spec: int = 100,
    time_range: tuple = (0.0, 8.0),
    x_range: tuple | None = None,
) -> StabilityReport:
    """Sample admissible instances and tabulate ratios across (p, L).

    field_specs: iterable of (FieldSpec, n, P).  Instances share the same
    random draws across all p and L values, so truncation monotonicity is
    checked per instance.  Degenerate denominators are flagged and skipped,
    never fatal.  x_range defaults to one full period; audits that probe
    concentrated data can narrow it to the region where |u| actually lives.
    """
    rng = np.random.default_rng(seed)
    Ls = sorted(int(v) for v in truncation_grid)
    ps = [float(v) for v in p_grid]
    rows = []
    monotone = True
    degenerate = 0
    tails = {L: None for L in Ls}
    for spec, n, P in field_specs:
        field = generate(spec, n, P)
        lo, hi = (-P / 2.0, P / 2.0) if x_range is None else x_range
        for _ in range(instances_per_spec):
            x = rng.uniform(lo, hi, size=n)
            off = rng.uniform(-1.0, 1.0, size=n)
            nrm = np.linalg.norm(off)
            if nrm > 0:
                off = off / nrm * rng.uniform(0.0, POINTWISE_SEPARATION)
            y = x + off
            t = rng.uniform(*time_range)
            # s stays inside the window and within the admissible separation
            s = rng.uniform(max(time_range[0], t - POINTWISE_SEPARATION),
                            min(time_range[1], t + POINTWISE_SEPARATION))
            for p in ps:
                inst = StabilityInstance(field, tuple(x), tuple(y), t, s, p=p, truncation=Ls[-1])
                try:
                    ratios = ratio_by_truncation(inst, Ls)
                except DomainError:
                    degenerate += 1
                    continue
                if np.any(np.diff(ratios) > 0):
                    monotone = False
                for L, ratio in zip(Ls, ratios):
                    if tails[L] is None:
                        tails[L] = tail_weight_bound(n, L)
                    rows.append(
                        StabilitySweepRow(
                            spec.kind, spec.seed, tuple(x), tuple(y), t, s, p, L,
                            float(ratio), tails[L], bool(ratio > 1.0),
                        )
                    )
    max_ratio = {}
    for row in rows:
        key = (row.p, row.truncation)
        max_ratio[key] = max(max_ratio.get(key, 0.0), row.ratio)
    rel_change = {}
    for p in ps:
        for L, L2 in zip(Ls, Ls[1:]):
            if L2 == 2 * L and (p, L) in max_ratio and max_ratio[(p, L)] > 0:
                rel_change[(p, L, L2)] = abs(max_ratio[(p, L)] - max_ratio[(p, L2)]) / max_ratio[(p, L)]
    return StabilityReport(tuple(rows), max_ratio, rel_change, monotone, degenerate)
