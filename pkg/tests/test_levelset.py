import numpy as np
import pytest

from flof import (
    SpaceTimeSDF,
    assemble_spacetime,
    extract_time_slice,
    iso_from_density,
    redistance,
    scale_for_flow,
)

from conftest import circle_sdf


class TestIsoFromDensity:
    def test_zero_crossing_at_fraction_of_peak(self):
        x = np.linspace(0, 1, 50)
        density = np.broadcast_to(x[:, None], (50, 8)).copy()  # peak 1.0
        ls = iso_from_density(density, 0.1)
        # negative where density > 0.1, positive below
        assert (ls[x > 0.12] < 0).all()
        assert (ls[x < 0.08] > 0).all()

    def test_binary_density_sign_flips_at_occupied_cells(self):
        density = np.zeros((6, 6))
        density[2:4, 2:4] = 1.0
        ls = iso_from_density(density, 0.5)
        np.testing.assert_array_equal(ls < 0, density == 1.0)

    def test_uniform_density_rejected(self):
        with pytest.raises(ValueError):
            iso_from_density(np.full((5, 5), 2.0))

    def test_all_zero_density_rejected(self):
        with pytest.raises(ValueError):
            iso_from_density(np.zeros((5, 5)))


class TestRedistance:
    def test_circle_indicator_against_analytic_distance(self):
        # oracle: point-to-circle distance |p - c| - r; the medial point at the
        # center is carved out, colliding fronts are the known first-order
        # weak spot
        center = (31.7, 32.3)
        analytic = circle_sdf((64, 64), center, 10.0)
        indicator = np.where(analytic < 0, -1.0, 1.0)
        out = redistance(indicator, gamma_max=20.0)
        gx, gy = np.meshgrid(np.arange(64.0), np.arange(64.0), indexing="ij")
        off_medial = np.hypot(gx - center[0], gy - center[1]) > 3.0
        band = (np.abs(analytic) < 10.0) & off_medial
        assert np.max(np.abs(out[band] - analytic[band])) < 0.5

    def test_valid_sdf_roundtrip(self):
        center = (23.6, 24.4)
        analytic = circle_sdf((48, 48), center, 9.0)
        sdf = np.clip(analytic, -12.0, 12.0)
        out = redistance(sdf, gamma_max=12.0)
        gx, gy = np.meshgrid(np.arange(48.0), np.arange(48.0), indexing="ij")
        off_medial = np.hypot(gx - center[0], gy - center[1]) > 2.0
        assert np.max(np.abs(out - sdf)[off_medial]) < 0.5

    def test_half_plane_sign_field_gives_unit_slope(self):
        sign = np.where(np.arange(40.0)[:, None] < 20, -1.0, 1.0) * np.ones((40, 8))
        out = redistance(sign, gamma_max=30.0)
        slopes = np.diff(out, axis=0)
        np.testing.assert_allclose(slopes, 1.0, atol=0.05)

    def test_requires_sign_change(self):
        with pytest.raises(ValueError):
            redistance(np.ones((8, 8)), 10.0)

    def test_truncation_saturates_exactly(self):
        analytic = circle_sdf((64, 64), (32.0, 32.0), 6.0)
        out = redistance(np.where(analytic < 0, -1.0, 1.0), gamma_max=8.0)
        assert out.max() == 8.0
        assert np.abs(out).max() == 8.0

    def test_eikonal_gradient_magnitude_in_band(self):
        from flof import grid

        analytic = circle_sdf((72, 72), (36.2, 35.7), 14.0)
        out = redistance(np.where(analytic < 0, -1.0, 1.0), gamma_max=16.0)
        g = grid.gradient(out)
        mag = np.linalg.norm(g, axis=-1)
        # one step away from the surface, off the medial center and plateau
        band = (np.abs(out) < 8.0) & (np.abs(out) > 1.0) & (analytic > -10.0)
        assert mag[band].min() > 0.8
        assert mag[band].max() < 1.2


class TestAssembleSpacetime:
    def test_static_circle_constant_along_time(self):
        frame = circle_sdf((40, 40), (20.0, 20.0), 8.0)
        st = assemble_spacetime([frame] * 6, gamma_max=10.0)
        band = np.abs(st.field[..., 0]) < 5.0
        for t in range(1, st.time_extent):
            np.testing.assert_allclose(
                st.field[..., t][band], st.field[..., 0][band], atol=0.05
            )

    def test_default_padding_and_repeats(self):
        frame = circle_sdf((40, 40), (20.0, 20.0), 8.0)
        st = assemble_spacetime([frame] * 4)
        assert st.frames_repeated == 5
        assert st.margin == 0.10
        assert st.time_extent == 9
        assert st.field.shape[:2] == (48, 48)  # 40 + 2 * round(0.1 * 40)

    def test_translating_circle_distance_is_spacetime(self):
        # oracle: brute-force distance to the sampled zero-crossing cloud in 3D
        dims = (28, 28)
        frames = [circle_sdf(dims, (8.0 + t, 14.0), 5.0) for t in range(8)]
        st = assemble_spacetime(frames, gamma_max=12.0, margin=0.0, repeat_first=0)
        vol = st.field

        crossings = []
        arr = np.stack(frames, axis=-1)
        for ax in range(3):
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[ax] = slice(0, -1)
            hi[ax] = slice(1, None)
            a, b = arr[tuple(lo)], arr[tuple(hi)]
            cross = (a < 0) != (b < 0)
            idx = np.argwhere(cross).astype(float)
            theta = (a[cross] / (a[cross] - b[cross]))[:, None]
            offset = np.zeros((1, 3))
            offset[0, ax] = 1.0
            crossings.append(idx + theta * offset)
        cloud = np.concatenate(crossings)

        rng = np.random.default_rng(7)
        cells = rng.integers(0, [28, 28, 8], size=(60, 3))
        for cell in cells:
            d = np.min(np.linalg.norm(cloud - cell, axis=1))
            got = abs(vol[tuple(cell)])
            if d < 10.0:
                assert got == pytest.approx(min(d, 12.0), abs=0.75)

    def test_signs_of_original_cells_preserved(self):
        frames = [circle_sdf((30, 30), (15.0 + t, 15.0), 6.0) for t in range(5)]
        st = assemble_spacetime(frames, gamma_max=10.0)
        pad = round(0.1 * 30)
        for t, frame in enumerate(frames):
            slab = st.field[pad:-pad, pad:-pad, st.frames_repeated + t]
            np.testing.assert_array_equal(slab < 0, frame < 0)

    def test_rejects_mismatched_frames(self):
        with pytest.raises(ValueError):
            assemble_spacetime([np.zeros((8, 8)), np.zeros((8, 9))])


class TestScaleAndSlice:
    def _st(self):
        frame = circle_sdf((32, 32), (16.0, 16.0), 7.0)
        return assemble_spacetime([frame] * 4, gamma_max=40.0)

    def test_scale_endpoints(self):
        field = np.array([[40.0, 0.0], [-40.0, 10.0]])[..., None] * np.ones(3)
        scaled = scale_for_flow(SpaceTimeSDF(field, 40.0, 0, 0.0))
        assert scaled[0, 0, 0] == pytest.approx(-0.2)
        assert scaled[0, 1, 0] == 0.0
        assert scaled[1, 0, 0] == pytest.approx(0.2)

    def test_scale_flips_sign_inside(self):
        st = self._st()
        scaled = scale_for_flow(st)
        inside = st.field < 0
        assert (scaled[inside] > 0).all()

    def test_integer_slice_and_midpoint_blend(self):
        st = self._st()
        s0 = extract_time_slice(st, 0)
        np.testing.assert_array_equal(s0, st.field[..., 0])
        blend = extract_time_slice(st, 2.5)
        np.testing.assert_allclose(blend, 0.5 * (st.field[..., 2] + st.field[..., 3]))

    def test_static_slices_identical(self):
        st = self._st()
        np.testing.assert_allclose(
            extract_time_slice(st, st.frames_repeated),
            extract_time_slice(st, st.time_extent - 1),
            atol=1e-9,
        )

    def test_out_of_range_rejected(self):
        st = self._st()
        with pytest.raises(ValueError):
            extract_time_slice(st, st.time_extent)
