"""Band-limited periodic fields and their free Schrodinger evolution.

A field is a finite set of plane-wave atoms on the frequency lattice k/P,
k in Z^n with |k| <= P, so every frequency lies in the closed unit ball.
Evolution multiplies each atom by a quadratic-in-frequency phase, which makes
time evolution exact: the solution at time t is

    u(x, t) = sum_k a_k exp(2*pi*i x.k/P) exp(4*pi^2 i t |k/P|^2).

Everything downstream (maximal scans, norm ratios, stability audits) relies
on this sum being evaluated either directly or through an equivalent FFT
path; the two must agree to 1e-10.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import DomainError, ValidationError

FIELD_KINDS = ("constant", "random_phase", "ball_indicator", "focusing_packet")

TWO_PI = 2.0 * np.pi
FOUR_PI_SQ = 4.0 * np.pi * np.pi


@dataclass(frozen=True)
class PeriodicBandLimitedField:
    """Immutable atom list: integer frequency indices and complex amplitudes.

    Indices are stored lexicographically sorted; amplitudes are parallel to
    them.  Both arrays are marked read-only after construction.
    """

    dimension: int
    period: float
    indices: np.ndarray  # (m, n) int64
    amplitudes: np.ndarray  # (m,) complex128

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError("dimension must be a positive integer")
        if not (self.period > 0):
            raise DomainError("period must be positive")
        ks = np.atleast_2d(np.asarray(self.indices, dtype=np.int64))
        amps = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if ks.shape[0] == 0:
            raise DomainError("field needs at least one atom")
        if ks.shape != (amps.shape[0], self.dimension):
            raise DomainError("indices and amplitudes shapes disagree")
        radii = np.sqrt((ks.astype(float) ** 2).sum(axis=1))
        if np.any(radii > self.period + 1e-9):
            raise DomainError("frequency |k|/P must lie in the closed unit ball")
        order = np.lexsort(ks.T[::-1])
        ks = np.ascontiguousarray(ks[order])
        amps = np.ascontiguousarray(amps[order])
        if ks.shape[0] > 1 and np.any(np.all(ks[1:] == ks[:-1], axis=1)):
            raise DomainError("duplicate frequency indices")
        ks.setflags(write=False)
        amps.setflags(write=False)
        object.__setattr__(self, "indices", ks)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def atom_count(self) -> int:
        return self.indices.shape[0]

    def amplitude_sum(self) -> float:
        """A = sum |a_k|, the Lipschitz budget used by scan step control."""
        return float(np.abs(self.amplitudes).sum())

    def coefficient_norm(self) -> float:
        """sqrt(sum |a_k|^2); norm_l2 is P^(n/2) times this."""
        return float(np.sqrt((np.abs(self.amplitudes) ** 2).sum()))


def norm_l2(field: PeriodicBandLimitedField) -> float:
    """Per-period L2 norm, (P^n * sum |a_k|^2)^(1/2), by Parseval."""
    return field.period ** (field.dimension / 2.0) * field.coefficient_norm()


def evaluate(field: PeriodicBandLimitedField, x, t: float) -> complex:
    """Evaluate u(x, t) by direct summation. Total function, exact sum."""
    xv = np.asarray(x, dtype=float).ravel()
    if xv.size != field.dimension:
        raise DomainError(f"x must have {field.dimension} coordinates")
    xi = field.indices / field.period
    phase = TWO_PI * (xi @ xv) + FOUR_PI_SQ * t * (xi**2).sum(axis=1)
    return complex((field.amplitudes * np.exp(1j * phase)).sum())


def evaluate_points(field: PeriodicBandLimitedField, xs, ts) -> np.ndarray:
    """Vectorized direct summation over point/time pairs.

    xs: (m, n) positions, ts: (m,) times. Returns (m,) complex values.
    Chunks the phase matrix so memory stays bounded.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ts = np.asarray(ts, dtype=float).ravel()
    if xs.shape != (ts.size, field.dimension):
        raise DomainError("xs must be (m, n) and ts (m,)")
    xi = field.indices / field.period
    disp = FOUR_PI_SQ * (xi**2).sum(axis=1)
    out = np.empty(ts.size, dtype=np.complex128)
    step = max(1, 2_000_000 // max(1, field.atom_count))
    for lo in range(0, ts.size, step):
        hi = min(lo + step, ts.size)
        phase = TWO_PI * (xs[lo:hi] @ xi.T) + ts[lo:hi, None] * disp[None, :]
        out[lo:hi] = np.exp(1j * phase) @ field.amplitudes
    return out


def evaluate_grid(field: PeriodicBandLimitedField, points_per_axis: int, t: float) -> np.ndarray:
    """FFT fast path: u at time t on the uniform grid x = g*P/G per axis.

    Folds atom indices modulo G, so it is exact (not an approximation) for
    any G >= 1; aliasing is impossible because the grid points are periodic
    lattice fractions.  Agrees with `evaluate` to rounding.
    """
    G = int(points_per_axis)
    if G < 1:
        raise DomainError("points_per_axis must be >= 1")
    n = field.dimension
    xi2 = ((field.indices / field.period) ** 2).sum(axis=1)
    coeffs = field.amplitudes * np.exp(1j * FOUR_PI_SQ * t * xi2)
    folded = np.zeros((G,) * n, dtype=np.complex128)
    np.add.at(folded, tuple(np.mod(field.indices[:, d], G) for d in range(n)), coeffs)
    return sfft.ifftn(folded, norm="forward")


def grid_norm_l2(field: PeriodicBandLimitedField, t: float, points_per_axis: int | None = None) -> float:
    """Quadrature L2 norm of u(., t) over one period cell.

    The default grid has 4*max|k_axis| points per axis, enough that the
    rectangle rule is exact for the trigonometric polynomial |u|^2.
    """
    if points_per_axis is None:
        kmax = int(np.abs(field.indices).max(initial=0))
        points_per_axis = max(4 * kmax, 8)
    u = evaluate_grid(field, points_per_axis, t)
    cell = (field.period / points_per_axis) ** field.dimension
    return float(np.sqrt((np.abs(u) ** 2).sum() * cell))


def modulate(field: PeriodicBandLimitedField, shift) -> PeriodicBandLimitedField:
    """Multiply each amplitude by exp(2*pi*i shift.k/P) for integer shift.

    Pointwise this is translation: the modulated field evaluates at x to the
    original field at x + shift.  Preserves norm_l2.
    """
    sv = np.asarray(shift, dtype=np.int64).ravel()
    if sv.size != field.dimension:
        raise DomainError(f"shift must have {field.dimension} integer coordinates")
    phase = TWO_PI * (field.indices @ sv) / field.period
    return PeriodicBandLimitedField(
        field.dimension, field.period, field.indices, field.amplitudes * np.exp(1j * phase)
    )


@dataclass(frozen=True)
class FieldSpec:
    """Generator spec; together with (n, P) it determines a field exactly."""

    kind: str
    seed: int = 0
    focus_x: tuple = ()
    focus_t: float = 0.0

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValidationError(f"unknown field kind {self.kind!r}; choose from {FIELD_KINDS}")
        if self.seed < 0:
            raise ValidationError("seed must be a nonnegative integer")
        object.__setattr__(self, "focus_x", tuple(float(v) for v in self.focus_x))


def _ball_lattice(n: int, radius: float) -> np.ndarray:
    """All k in Z^n with Euclidean |k| <= radius, lexicographically sorted."""
    r = int(np.floor(radius + 1e-9))
    if n == 1:
        return np.arange(-r, r + 1, dtype=np.int64).reshape(-1, 1)
    axes = [np.arange(-r, r + 1, dtype=np.int64)] * n
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    keep = (grid.astype(float) ** 2).sum(axis=1) <= radius**2 + 1e-9
    return grid[keep]


def generate(spec: FieldSpec, n: int, P: float) -> PeriodicBandLimitedField:
    """Instantiate a field from its spec on the frequency ball |k| <= P."""
    if not (P > 0):
        raise DomainError("period P must be positive")
    if n < 1:
        raise DomainError("dimension must be >= 1")
    if spec.kind == "constant":
        return PeriodicBandLimitedField(n, P, np.zeros((1, n), np.int64), np.ones(1, np.complex128))
    ks = _ball_lattice(n, P)
    if spec.kind == "random_phase":
        rng = np.random.default_rng(spec.seed)
        phases = rng.uniform(0.0, TWO_PI, size=ks.shape[0])
        return PeriodicBandLimitedField(n, P, ks, np.exp(1j * phases))
    flat = float(P) ** (-n)
    if spec.kind == "ball_indicator":
        return PeriodicBandLimitedField(n, P, ks, np.full(ks.shape[0], flat, np.complex128))
    # focusing_packet: conjugate phases so |u| peaks near (focus_x, focus_t)
    if not (0.0 <= spec.focus_t <= P):
        raise DomainError(f"focus time must lie in [0, {P}]")
    x0 = np.zeros(n) if not spec.focus_x else np.asarray(spec.focus_x, dtype=float)
    if x0.size != n:
        raise DomainError("focus_x must match the dimension")
    xi = ks / P
    phase = -TWO_PI * (xi @ x0) - FOUR_PI_SQ * spec.focus_t * (xi**2).sum(axis=1)
    return PeriodicBandLimitedField(n, P, ks, flat * np.exp(1j * phase))


def spec_text(spec: FieldSpec, n: int, P: float) -> str:
    """Flat key-value serialization; fields are regenerated, never stored."""
    lines = [f"kind = {spec.kind}", f"seed = {spec.seed}", f"n = {n}", f"P = {P!r}"]
    if spec.kind == "focusing_packet":
        lines.append("focus_x = " + ";".join(repr(v) for v in (spec.focus_x or (0.0,) * n)))
        lines.append(f"focus_t = {spec.focus_t!r}")
    return "\n".join(lines) + "\n"


def parse_spec_text(text: str) -> tuple[FieldSpec, int, float]:
    kv = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"bad spec line {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        kv[key] = val
    try:
        kind = kv.pop("kind")
        n = int(kv.pop("n"))
        P = float(kv.pop("P"))
        seed = int(kv.pop("seed", "0"))
        fx = tuple(float(v) for v in kv.pop("focus_x", "").split(";") if v)
        ft = float(kv.pop("focus_t", "0"))
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"invalid field spec text: {exc}") from exc
    if kv:
        raise ValidationError(f"unknown field spec keys: {sorted(kv)}")
    return FieldSpec(kind, seed, fx, ft), n, P


def spec_hash(spec: FieldSpec, n: int, P: float) -> str:
    return hashlib.sha256(spec_text(spec, n, P).encode()).hexdigest()[:12]
