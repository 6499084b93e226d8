import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangmax import (
    CubeSet,
    DomainError,
    FieldSpec,
    ModelCurve,
    RescaledCurve,
    StructuralError,
    ball_density,
    dyadic_range,
    dyadic_slice,
    generate,
    overlap_report,
    scan,
    shift_invariance_checks,
    witness_cubes,
)


def random_cube_set(rng, max_cubes=60, box=10, t_hi=12, R=12.0):
    m = int(rng.integers(1, max_cubes))
    corners = np.unique(
        np.column_stack([rng.integers(-box, box, m), rng.integers(1, t_hi, m)]), axis=0
    )
    counts = rng.integers(1, 9, corners.shape[0])
    return CubeSet(R, corners, counts)


class TestWitnessCubes:
    def test_constant_field_row_of_cubes(self, curve_quarter_16):
        # constant field: every witness at t = 1, cubes at (j + 4, 1)
        field = generate(FieldSpec("constant"), 1, 32.0)
        prof = scan(field, curve_quarter_16, "late", 1e-2)
        cubes = witness_cubes(prof, curve_quarter_16, 16.0)
        assert np.all(cubes.corners[:, 1] == 1)
        assert np.all(cubes.counts == 1)
        # j in [-16, 16] shifted by theta(1) = 4, clipped to |corner| <= 16
        assert cubes.size == 29

    def test_multiplicity_partition(self, random_field_small, curve_quarter_16):
        prof = scan(random_field_small, curve_quarter_16, "late", 1e-2)
        cubes = witness_cubes(prof, curve_quarter_16, 16.0)
        kept = 0
        for j, t in zip(prof.lattice, prof.arg_times):
            w = np.append(j + curve_quarter_16.point(t), t)
            corner = np.floor(w)
            if np.linalg.norm(corner[:-1]) <= 16.0 and 1 <= corner[-1] < 16.0:
                kept += 1
        assert cubes.total_multiplicity == kept

    def test_rejects_early_profile(self, random_field_small, curve_quarter_16):
        prof = scan(random_field_small, curve_quarter_16, "early", 1e-2)
        with pytest.raises(StructuralError):
            witness_cubes(prof, curve_quarter_16, 16.0)

    def test_single_point_profile(self):
        field = generate(FieldSpec("random_phase", seed=1), 1, 2.0)
        curve = RescaledCurve(ModelCurve((0.25,)), 2.0)
        prof = scan(field, curve, "late", 1e-2)
        cubes = witness_cubes(prof, curve, 2.0)
        assert cubes.total_multiplicity <= prof.size
        assert np.all(cubes.counts >= 1)


class TestSlices:
    def test_oversized_overlap_gives_empty(self, rng):
        cubes = random_cube_set(rng)
        top = 2.0 ** np.ceil(np.log2(cubes.counts.max() + 1))
        assert dyadic_slice(cubes, 1.0, top).size == 0

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_slices_partition_cube_set(self, seed):
        rng = np.random.default_rng(seed)
        cubes = random_cube_set(rng)
        seen = 0
        for lam in dyadic_range(cubes.R):
            for eta in dyadic_range(int(cubes.counts.max())):
                piece = dyadic_slice(cubes, lam, eta)
                seen += piece.size
        assert seen == cubes.size

    def test_rejects_non_dyadic(self, rng):
        cubes = random_cube_set(rng)
        with pytest.raises(DomainError):
            dyadic_slice(cubes, 3.0, 1.0)
        with pytest.raises(DomainError):
            dyadic_slice(cubes, 2.0, 0.5)


class TestBallDensity:
    def test_single_cube(self):
        one = CubeSet(8.0, np.array([[0, 1]]), np.array([1]))
        for mode in ("brute", "fast"):
            rep = ball_density(one, 1.0, 8.0, mode)
            assert rep.phi == 1.0
            assert rep.best_radius == 1.0

    def test_empty_set(self):
        empty = CubeSet(8.0, np.empty((0, 2), np.int64), np.empty(0, np.int64))
        assert ball_density(empty, 1.0, 8.0, "brute").phi == 0.0
        assert ball_density(empty, 1.0, 8.0, "fast").phi == 0.0

    def test_time_column_matches_hand_count(self):
        # m cubes stacked vertically: a radius-r ball centered on the column
        # holds the cubes whose offsets q obey (|q|+1/2)^2 + 1/4 <= r^2
        m = 9
        qs = np.arange(m) - m // 2
        corners = np.column_stack([np.zeros(m, np.int64), qs])
        col = CubeSet(16.0, corners, np.ones(m, np.int64))
        rep = ball_density(col, 1.0, 16.0, "brute")
        best = 0.0
        for r in dyadic_range(32.0):
            for c in range(-20, 21):
                if np.hypot(0.5, c + 0.5) > 16.0 - r:
                    continue
                cnt = sum(1 for q in qs if (abs(c - q) + 0.5) ** 2 + 0.25 <= r * r)
                best = max(best, cnt / r)
        assert rep.phi == pytest.approx(best)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), beta=st.floats(1.0, 2.0))
    def test_fast_equals_brute(self, seed, beta):
        rng = np.random.default_rng(seed)
        cubes = random_cube_set(rng)
        b = ball_density(cubes, beta, cubes.R, "brute")
        f = ball_density(cubes, beta, cubes.R, "fast")
        assert b.phi == f.phi
        assert b.per_radius == f.per_radius

    def test_fast_equals_brute_3d(self, rng):
        for _ in range(5):
            m = int(rng.integers(1, 40))
            corners = np.unique(
                np.column_stack(
                    [rng.integers(-5, 5, m), rng.integers(-5, 5, m), rng.integers(1, 6, m)]
                ),
                axis=0,
            )
            cubes = CubeSet(8.0, corners, np.ones(corners.shape[0], np.int64))
            b = ball_density(cubes, 2.0, 8.0, "brute")
            f = ball_density(cubes, 2.0, 8.0, "fast")
            assert b.phi == f.phi and b.per_radius == f.per_radius

    def test_monotone_under_inclusion(self, rng):
        cubes = random_cube_set(rng, max_cubes=40)
        sub = CubeSet(cubes.R, cubes.corners[::2], cubes.counts[::2])
        phi_sub = ball_density(sub, 1.0, cubes.R).phi
        phi_all = ball_density(cubes, 1.0, cubes.R).phi
        assert phi_sub <= phi_all

    def test_examined_ball_certificate(self, rng):
        cubes = random_cube_set(rng)
        rep = ball_density(cubes, 1.5, cubes.R, "brute")
        for r, count in rep.per_radius:
            if count >= 0:
                assert rep.phi >= count / r**1.5 - 1e-15

    def test_beta_domain(self, rng):
        cubes = random_cube_set(rng)
        with pytest.raises(DomainError):
            ball_density(cubes, 0.5, cubes.R)
        with pytest.raises(DomainError):
            ball_density(cubes, 2.5, cubes.R)


class TestShiftChecks:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_translation_and_cap_hold(self, seed):
        rng = np.random.default_rng(seed)
        cubes = random_cube_set(rng)
        shift = [int(rng.integers(-int(cubes.R), int(cubes.R) + 1))]
        result = shift_invariance_checks(cubes, shift, cubes.R)
        assert result.translation_ok
        assert result.radius_cap_ok

    def test_zero_shift_equality_case(self, rng):
        cubes = random_cube_set(rng)
        result = shift_invariance_checks(cubes, [0], cubes.R)
        assert result.translated_phi <= result.doubled_cap_phi

    def test_empty_set_vacuous(self):
        empty = CubeSet(8.0, np.empty((0, 2), np.int64), np.empty(0, np.int64))
        result = shift_invariance_checks(empty, [1], 8.0)
        assert result.ok
        assert result.translated_phi == 0.0

    def test_shift_bound_enforced(self, rng):
        cubes = random_cube_set(rng)
        with pytest.raises(DomainError):
            shift_invariance_checks(cubes, [int(cubes.R) + 5], cubes.R)


class TestOverlapReport:
    def test_empty_passes_vacuously(self):
        empty = CubeSet(8.0, np.empty((0, 2), np.int64), np.empty(0, np.int64))
        rep = overlap_report(empty, 0.25, 8.0)
        assert rep.max_statistic == 0.0
        assert rep.nonempty == ()

    def test_constant_field_statistic_is_finite(self, curve_quarter_16):
        field = generate(FieldSpec("constant"), 1, 32.0)
        prof = scan(field, curve_quarter_16, "late", 1e-2)
        cubes = witness_cubes(prof, curve_quarter_16, 16.0)
        rep = overlap_report(cubes, 0.25, 16.0)
        # all cubes sit at scale 1 with multiplicity 1: statistic = R^(-1/2)
        assert rep.max_statistic == pytest.approx(16.0 ** (-0.5))

    def test_ball_field_envelope(self):
        # derived bounds at alpha = 1/4, R = 256: every nonempty class obeys
        # overlap <= 10 R^(1/2) scale^(-3/4), and past the crossover scale
        # R^((1-2a)/(1-a)) only the smallest overlap class survives (up to
        # the dyadic convention factor)
        R = 256.0
        field = generate(FieldSpec("ball_indicator"), 1, 2 * R)
        curve = RescaledCurve(ModelCurve((0.25,)), R)
        prof = scan(field, curve, "late", 1e-2)
        cubes = witness_cubes(prof, curve, R)
        rep = overlap_report(cubes, 0.25, R)
        crossover = R ** ((1 - 2 * 0.25) / (1 - 0.25))
        assert rep.nonempty
        for lam, eta, _count in rep.nonempty:
            assert eta <= 10.0 * R**0.5 * lam ** (-0.75)
            if lam >= 2.0 * crossover:
                assert eta <= 2.0

    def test_single_cube_slice_ratio_equality_case(self):
        # one multiplicity-1 cube in a slice whose envelope is flat: the
        # density-bound ratio reduces to the cube's own ball density, 1
        from tangmax import density_bound_report

        R, alpha = 64.0, 0.4
        lam = 32.0
        cube = CubeSet(R, np.array([[0, int(lam)]]), np.array([1]))
        rec = density_bound_report(cube, alpha, R, lam, 1.0)
        assert max(1.0, R ** (1 - 2 * alpha) * lam ** (alpha - 1)) == 1.0
        assert rec.phi == 1.0
        assert rec.ratio == 1.0

    def test_empty_slice_ratio_is_zero(self):
        from tangmax import density_bound_report

        empty = CubeSet(16.0, np.empty((0, 2), np.int64), np.empty(0, np.int64))
        rec = density_bound_report(empty, 0.25, 16.0, 2.0, 1.0)
        assert rec.ratio == 0.0 and rec.cube_count == 0
