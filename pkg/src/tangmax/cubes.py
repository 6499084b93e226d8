"""Space-time lattice cubes hit by scan witnesses, and their density audits.

Each lattice point j contributes the unit cube (corner + [0,1)^{n+1})
containing its witness (j + theta(t_j), t_j); cubes are half-open so the
containing cube is unique.  The cube set is clipped to the window
B_R^n(0) x [1, R): a corner at time R would carry a measure-zero sliver of
the window, so it is dropped.

The ball density of a cube set is the maximum over examined balls of
(number of cubes inside) / radius^beta.  The examined family is dyadic radii
r in {1, 2, 4, ..., <= 2*r_cap} and half-integer centers c with
|c| <= r_cap - r; all containment tests are exact quarter-integer
comparisons, so the brute enumeration and the swept fast mode agree
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .errors import DomainError, StructuralError
from .scan import MaximalProfile

BRUTE_CAP_DEFAULT = 64  # audits use brute enumeration up to this r_cap


def is_dyadic(value: float) -> bool:
    v = float(value)
    return v >= 1 and v == 2 ** round(np.log2(v))


def dyadic_range(limit: float) -> list:
    """1, 2, 4, ... up to and including the largest power of two <= limit."""
    out = []
    v = 1
    while v <= limit + 1e-9:
        out.append(v)
        v *= 2
    return out


@dataclass(frozen=True)
class CubeSet:
    """Unit lattice cubes in R^(n+1) with per-cube witness multiplicities."""

    R: float
    corners: np.ndarray  # (m, n+1) int64, last axis is time
    counts: np.ndarray  # (m,) int64 multiplicities >= 1
    window: tuple = ()  # (time_scale, 2*time_scale) when sliced

    def __post_init__(self):
        corners = np.asarray(self.corners, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64).ravel()
        if corners.ndim != 2 or corners.shape[1] < 2:
            raise StructuralError("corners must be an (m, n+1) array")
        if corners.shape[0] != counts.shape[0]:
            raise StructuralError("corners and counts disagree")
        if np.any(counts < 1):
            raise StructuralError("multiplicities must be >= 1")
        order = np.lexsort(corners.T[::-1]) if corners.shape[0] else np.empty(0, np.int64)
        corners = np.ascontiguousarray(corners[order])
        counts = np.ascontiguousarray(counts[order])
        corners.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "corners", corners)
        object.__setattr__(self, "counts", counts)

    @property
    def size(self) -> int:
        return self.corners.shape[0]

    @property
    def spacetime_dim(self) -> int:
        return self.corners.shape[1]

    @property
    def total_multiplicity(self) -> int:
        return int(self.counts.sum())

    def translated(self, shift) -> "CubeSet":
        """Spatial translation X - (shift, 0)."""
        sv = np.asarray(shift, dtype=np.int64).ravel()
        if sv.size != self.spacetime_dim - 1:
            raise DomainError("shift must be spatial")
        corners = self.corners.copy()
        corners[:, :-1] -= sv
        return CubeSet(self.R, corners, self.counts, self.window)


def witness_cubes(profile: MaximalProfile, curve, R: float) -> CubeSet:
    """Collect the witness cubes of a late-regime profile, clipped to the window.

    Multiplicity of a cube counts every lattice point whose witness lands in
    it, before clipping; the returned set keeps cubes whose corner lies in
    B_R^n(0) x [1, R).
    """
    if profile.regime != "late":
        raise StructuralError("witness cubes are built from the late regime")
    # witnesses are exact maxima, so each dominates half its own maximum
    if np.any(profile.values < 0):
        raise StructuralError("profile values must be nonnegative")
    pts = np.hstack(
        [
            profile.lattice.astype(float) + _curve_points(curve, profile.arg_times),
            profile.arg_times[:, None],
        ]
    )
    corners_all = np.floor(pts).astype(np.int64)
    corners, counts = np.unique(corners_all, axis=0, return_counts=True)
    spatial = corners[:, :-1].astype(float)
    keep = ((spatial**2).sum(axis=1) <= R**2 + 1e-9) & (corners[:, -1] >= 1) & (corners[:, -1] < R)
    return CubeSet(R=float(R), corners=corners[keep], counts=counts[keep])


def _curve_points(curve, ts):
    return curve.point(np.asarray(ts, dtype=float))


def dyadic_slice(cube_set: CubeSet, time_scale: float, overlap: float) -> CubeSet:
    """Cubes with time corner in [time_scale, 2*time_scale) and multiplicity
    in [overlap, 2*overlap) -- the half-open dyadic class convention."""
    if not is_dyadic(time_scale) or time_scale > cube_set.R:
        raise DomainError("time_scale must be dyadic and <= R")
    if not is_dyadic(overlap):
        raise DomainError("overlap must be dyadic and >= 1")
    tc = cube_set.corners[:, -1]
    keep = (tc >= time_scale) & (tc < 2 * time_scale)
    keep &= (cube_set.counts >= overlap) & (cube_set.counts < 2 * overlap)
    return CubeSet(
        R=cube_set.R,
        corners=cube_set.corners[keep],
        counts=cube_set.counts[keep],
        window=(float(time_scale), 2.0 * float(time_scale)),
    )


@dataclass(frozen=True)
class DensityReport:
    """Result of a ball-density maximization over the examined family."""

    beta: float
    r_cap: float
    mode: str
    phi: float
    best_radius: float
    best_center: tuple
    best_count: int
    per_radius: tuple = dc_field(default=())  # ((r, best count or -1), ...)


def ball_density(cube_set: CubeSet, beta: float, r_cap: float, mode: str = "auto") -> DensityReport:
    """Maximize (#cubes inside B_r(c)) / r^beta over the examined family.

    mode: "brute" enumerates every admissible half-integer center; "fast"
    sweeps center rows with a difference array; "auto" picks brute up to
    r_cap = 64.  Both modes compute the exact same maximum.
    """
    d = cube_set.spacetime_dim
    if not (1 <= beta <= d):
        raise DomainError(f"beta must lie in [1, {d}]")
    if mode == "auto":
        mode = "brute" if r_cap <= BRUTE_CAP_DEFAULT else "fast"
    if mode not in ("brute", "fast"):
        raise DomainError("mode must be brute, fast or auto")
    if d not in (2, 3):
        raise DomainError("ball density supports spatial dimension 1 or 2")

    corners = cube_set.corners
    phi = 0.0
    best = (0.0, (), -1)
    per_radius = []
    for r in dyadic_range(2 * r_cap):
        rf = float(r)
        if mode == "brute":
            count, center = _brute_best(corners, rf, float(r_cap), d)
        else:
            count, center = _fast_best(corners, rf, float(r_cap), d)
        per_radius.append((rf, count))
        if count < 0:
            continue
        val = count / rf**beta
        if val > phi:
            phi = val
            best = (rf, center, count)
    return DensityReport(
        beta=float(beta),
        r_cap=float(r_cap),
        mode=mode,
        phi=phi,
        best_radius=best[0],
        best_center=best[1],
        best_count=best[2],
        per_radius=tuple(per_radius),
    )


def _brute_best(corners: np.ndarray, r: float, r_cap: float, d: int):
    E = int(np.floor(r_cap)) + 1
    ne = 2 * E
    shape = (ne,) * d
    counts = np.empty(shape, dtype=np.int64)
    if d == 2:
        _kernels.brute_density_counts_2d(corners, r, r_cap, counts)
    else:
        _kernels.brute_density_counts_3d(corners, r, r_cap, counts)
    best = int(counts.max())
    if best < 0:
        return -1, ()
    flat = int(np.argmax(counts))
    offs = np.unravel_index(flat, shape)
    center = tuple(float(o - ne // 2) + 0.5 for o in offs)
    return best, center


def _fast_best(corners: np.ndarray, r: float, r_cap: float, d: int):
    if d == 2:
        count, ex, et = _kernels.fast_density_best_2d(corners, r, r_cap)
        return (int(count), (ex + 0.5, et + 0.5)) if count >= 0 else (-1, ())
    count, ex, ey, et = _kernels.fast_density_best_3d(corners, r, r_cap)
    return (int(count), (ex + 0.5, ey + 0.5, et + 0.5)) if count >= 0 else (-1, ())


@dataclass(frozen=True)
class OverlapReport:
    """Worst dyadic-class statistic overlap * scale^(1-alpha) / R^(1-2*alpha)."""

    max_statistic: float
    worst_time_scale: float
    worst_overlap: float
    nonempty: tuple  # ((time_scale, overlap, cube count), ...)


def overlap_report(cube_set: CubeSet, alpha: float, R: float) -> OverlapReport:
    """Audit every nonempty (time_scale, overlap) class of the cube set.

    An empty cube set passes vacuously with statistic 0.
    """
    max_stat = 0.0
    worst = (0.0, 0.0)
    nonempty = []
    if cube_set.size:
        max_count = int(cube_set.counts.max())
        for lam in dyadic_range(R):
            for eta in dyadic_range(max_count):
                piece = dyadic_slice(cube_set, lam, eta)
                if piece.size == 0:
                    continue
                nonempty.append((lam, eta, piece.size))
                stat = eta * lam ** (1.0 - alpha) / R ** (1.0 - 2.0 * alpha)
                if stat > max_stat:
                    max_stat = stat
                    worst = (lam, eta)
    return OverlapReport(max_stat, worst[0], worst[1], tuple(nonempty))


@dataclass(frozen=True)
class DensityBoundRecord:
    time_scale: float
    overlap: float
    cube_count: int
    phi: float
    ratio: float
    mode: str


def density_bound_report(
    cube_set: CubeSet, alpha: float, R: float, time_scale: float, overlap: float, mode: str = "auto"
) -> DensityBoundRecord:
    """Ratio phi * overlap / max(1, R^(1-2a) * scale^(a-1)) for one slice."""
    piece = dyadic_slice(cube_set, time_scale, overlap)
    n = cube_set.spacetime_dim - 1
    if piece.size == 0:
        return DensityBoundRecord(time_scale, overlap, 0, 0.0, 0.0, mode)
    report = ball_density(piece, beta=float(n), r_cap=R, mode=mode)
    envelope = max(1.0, R ** (1.0 - 2.0 * alpha) * time_scale ** (alpha - 1.0))
    return DensityBoundRecord(
        time_scale, overlap, piece.size, report.phi, report.phi * overlap / envelope, report.mode
    )


def density_bound_sweep(cube_set: CubeSet, alpha: float, R: float, mode: str = "auto") -> list:
    """density_bound_report over every nonempty dyadic class."""
    out = []
    if cube_set.size == 0:
        return out
    for lam in dyadic_range(R):
        for eta in dyadic_range(int(cube_set.counts.max())):
            rec = density_bound_report(cube_set, alpha, R, lam, eta, mode=mode)
            if rec.cube_count:
                out.append(rec)
    return out


@dataclass(frozen=True)
class ShiftCheckResult:
    translated_phi: float
    doubled_cap_phi: float
    cap_phis: tuple  # ((cap, phi), ...) expected nondecreasing in cap

    @property
    def translation_ok(self) -> bool:
        return self.translated_phi <= self.doubled_cap_phi

    @property
    def radius_cap_ok(self) -> bool:
        vals = [p for _, p in self.cap_phis]
        return all(a <= b for a, b in zip(vals, vals[1:]))

    @property
    def ok(self) -> bool:
        return self.translation_ok and self.radius_cap_ok


def shift_invariance_checks(cube_set: CubeSet, shift, R: float, mode: str = "auto") -> ShiftCheckResult:
    """Verify the two density monotonicity facts on the examined family.

    Translation: the density of X - (shift, 0) capped at R never exceeds the
    density of X capped at 2R (needs |shift| <= R).  Radius cap: the density
    is nondecreasing in the cap.  Both are checked by explicit computation.
    """
    sv = np.asarray(shift, dtype=np.int64).ravel()
    if np.sqrt((sv.astype(float) ** 2).sum()) > R + 1e-9:
        raise DomainError("need |shift| <= R")
    n = cube_set.spacetime_dim - 1
    translated = ball_density(cube_set.translated(sv), beta=float(n), r_cap=R, mode=mode).phi
    doubled = ball_density(cube_set, beta=float(n), r_cap=2 * R, mode=mode).phi
    caps = [(cap, ball_density(cube_set, beta=float(n), r_cap=cap, mode=mode).phi) for cap in dyadic_range(R)]
    return ShiftCheckResult(translated_phi=translated, doubled_cap_phi=doubled, cap_phis=tuple(caps))
