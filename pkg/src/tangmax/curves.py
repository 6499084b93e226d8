"""Power model curves, their parabolic rescaling, arc length and lattice geometry.

The base curve has components t^a_j on [0, 1] with Holder index
alpha = min_j a_j.  Rescaling by a spatial scale R >= 1 produces

    theta(t) = (R^(1-2*a_1) t^a_1, ..., R^(1-2*a_n) t^a_n),   0 <= t <= R,

whose speed blows up like t^(alpha-1) at the origin; arc length and marching
steps therefore work in the tamed variable u = t^alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError


@dataclass(frozen=True)
class ModelCurve:
    """Component exponents a_j > 0; alpha is their minimum."""

    exponents: tuple

    def __post_init__(self):
        exps = tuple(float(a) for a in np.atleast_1d(self.exponents))
        if len(exps) == 0 or any(a <= 0 for a in exps):
            raise DomainError("all exponents must be positive")
        object.__setattr__(self, "exponents", exps)

    @property
    def dimension(self) -> int:
        return len(self.exponents)

    @property
    def alpha(self) -> float:
        return min(self.exponents)

    def point(self, t: float) -> np.ndarray:
        if t < 0 or t > 1:
            raise DomainError("base curve is defined on [0, 1]")
        return np.array([t**a for a in self.exponents])


@dataclass(frozen=True)
class RescaledCurve:
    base: ModelCurve
    R: float

    def __post_init__(self):
        if not (self.R >= 1):
            raise DomainError("scale R must be >= 1")

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def alpha(self) -> float:
        return self.base.alpha

    @property
    def coefficients(self) -> np.ndarray:
        """Per-component prefactors R^(1-2*a_j)."""
        return np.array([self.R ** (1.0 - 2.0 * a) for a in self.base.exponents])

    def point(self, t) -> np.ndarray:
        """theta(t) componentwise; scalar t gives shape (n,), array t (m, n)."""
        tv = np.asarray(t, dtype=float)
        if np.any(tv < 0) or np.any(tv > self.R):
            raise DomainError(f"t must lie in [0, {self.R}]")
        exps = np.array(self.base.exponents)
        out = self.coefficients * np.power(tv[..., None], exps)
        return out

    def velocity(self, t) -> np.ndarray:
        tv = np.asarray(t, dtype=float)
        if np.any(tv <= 0) or np.any(tv > self.R):
            raise DomainError("velocity defined on (0, R]")
        exps = np.array(self.base.exponents)
        return self.coefficients * exps * np.power(tv[..., None], exps - 1.0)

    def speed_bound_integral(self, a: float, b: float) -> float:
        """Exact value of sum_j integral_a^b |theta_j'(s)| ds.

        Componentwise closed form; dominates the Euclidean arc length and is
        what scan step budgets use.
        """
        if not (0 <= a <= b <= self.R):
            raise DomainError("need 0 <= a <= b <= R")
        exps = np.array(self.base.exponents)
        return float((self.coefficients * (b**exps - a**exps)).sum())


def arc_length(curve: RescaledCurve, a: float, b: float) -> float:
    """Euclidean arc length of theta over [a, b].

    n = 1 has the closed form R^(1-2*alpha) (b^alpha - a^alpha).  Otherwise
    substitute s = u^(1/alpha): the integrand becomes continuous on [0, b^alpha]
    (each component contributes u^((a_j-alpha)/alpha) with nonnegative power)
    and adaptive Gauss quadrature converges fast.
    """
    if not (0 <= a <= b <= curve.R):
        raise DomainError(f"need 0 <= a <= b <= {curve.R}")
    if a == b:
        return 0.0
    exps = np.array(curve.base.exponents)
    coef = curve.coefficients
    if curve.dimension == 1:
        return float(coef[0] * (b ** exps[0] - a ** exps[0]))
    alpha = curve.alpha
    amp = coef * exps / alpha  # |theta_j'| * ds/du collected per component

    def integrand(u):
        powers = amp * np.power(u, (exps - alpha) / alpha)
        return float(np.sqrt((powers**2).sum()))

    val, _ = integrate.quad(integrand, a**alpha, b**alpha, epsabs=0.0, epsrel=1e-10, limit=200)
    return float(val)


def holder_ratio(curve: ModelCurve, bound: float, samples: int, seed: int) -> tuple[bool, float]:
    """Sample worst |gamma(t)-gamma(t')| / |t-t'|^alpha over random pairs in [0,1].

    Returns (worst <= bound, worst).  Coincident pairs are resampled so the
    ratio is always well defined.
    """
    if bound < 1:
        raise DomainError("a Holder constant below 1 is never satisfiable here")
    rng = np.random.default_rng(seed)
    alpha = curve.alpha
    exps = np.array(curve.exponents)
    worst = 0.0
    remaining = samples
    while remaining > 0:
        batch = min(remaining, 65536)
        t = rng.uniform(0.0, 1.0, batch)
        s = rng.uniform(0.0, 1.0, batch)
        ok = t != s
        t, s = t[ok], s[ok]
        remaining -= int(ok.sum())
        diff = np.power(t[:, None], exps) - np.power(s[:, None], exps)
        ratios = np.sqrt((diff**2).sum(axis=1)) / np.abs(t - s) ** alpha
        if ratios.size:
            worst = max(worst, float(ratios.max()))
    return worst <= bound, worst


def _march_times(curve: RescaledCurve, t_lo: float, t_hi: float, max_move: float) -> np.ndarray:
    """Sample times so consecutive curve points move at most max_move.

    Uses the exact componentwise increments in u = t^alpha (theta_j is
    monotone, so the move over [t, t'] is at most the summed component spans).
    """
    alpha = curve.alpha
    exps = np.array(curve.base.exponents) / alpha
    coef = curve.coefficients
    u_lo, u_hi = t_lo**alpha, t_hi**alpha
    us = [u_lo]
    u = u_lo
    while u < u_hi:
        lo, hi = u, u_hi
        if (coef * (np.power(hi, exps) - np.power(u, exps))).sum() <= max_move:
            us.append(u_hi)
            break
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if (coef * (np.power(mid, exps) - np.power(u, exps))).sum() <= max_move:
                lo = mid
            else:
                hi = mid
        u = max(lo, np.nextafter(u, np.inf))
        us.append(u)
    return np.power(np.array(us), 1.0 / alpha)


def lattice_neighborhood(curve: RescaledCurve, t_lo: float, t_hi: float, radius: float = 1.0) -> np.ndarray:
    """Integer points within Euclidean `radius` of theta([t_lo, t_hi]).

    March t so each step moves the curve at most radius/4, then collect
    lattice points within `radius` of the sampled polyline.  For n = 1 the
    curve is the exact interval [theta(t_lo), theta(t_hi)], so the result is
    exact there.
    """
    if not (0 <= t_lo <= t_hi <= curve.R):
        raise DomainError("need 0 <= t_lo <= t_hi <= R")
    n = curve.dimension
    if n == 1:
        lo = curve.point(t_lo)[0] - radius
        hi = curve.point(t_hi)[0] + radius
        return np.arange(int(np.ceil(lo - 1e-12)), int(np.floor(hi + 1e-12)) + 1, dtype=np.int64).reshape(-1, 1)
    ts = _march_times(curve, t_lo, t_hi, max_move=radius / 4.0)
    pts = curve.point(ts)
    found: set[tuple] = set()
    r_int = int(np.ceil(radius))
    offsets = np.stack(
        np.meshgrid(*[np.arange(-r_int, r_int + 1)] * n, indexing="ij"), axis=-1
    ).reshape(-1, n)
    for seg_a, seg_b in zip(pts[:-1], pts[1:]):
        center = np.floor(0.5 * (seg_a + seg_b)).astype(np.int64)
        for k in center + offsets:
            key = tuple(int(v) for v in k)
            if key in found:
                continue
            if _segment_distance(k.astype(float), seg_a, seg_b) <= radius:
                found.add(key)
    if not found:  # degenerate single point
        p = curve.point(t_lo)
        for k in np.floor(p).astype(np.int64) + offsets:
            if np.linalg.norm(k - p) <= radius:
                found.add(tuple(int(v) for v in k))
    out = np.array(sorted(found), dtype=np.int64)
    return out.reshape(-1, n)


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    lam = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + lam * ab)))


def segment_tube_count(curve: RescaledCurve, t_lo: float, t_hi: float, radius: float) -> int:
    """Count of lattice points within `radius` of theta([t_lo, t_hi])."""
    return lattice_neighborhood(curve, t_lo, t_hi, radius).shape[0]
