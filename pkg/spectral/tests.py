import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from caputo.exceptions import DomainError, GridMismatch
from caputo.grids import SampledPath, TimeGrid

from .fields import GridField, Spectrum, TorusGrid, VectorField, cosine_series
from .operators import (
    dealias,
    dealiased,
    dealiased_product,
    divergence,
    energy,
    frac_laplacian,
    gradient,
    hs_seminorm,
    inner,
    laplacian,
    lp_norm,
    mean,
    positive_part,
)
from .snapshots import read_snapshot, write_snapshot


def _band_limited(rng, grid):
    """A random real field with every mode outside the two-thirds band removed."""
    return dealiased(GridField(grid, rng.standard_normal(grid.shape)))


class TorusGridTests(SimpleTestCase):
    def test_validation(self):
        for dim, points in ((0, 16), (4, 16), (1, 6), (2, 15)):
            with self.assertRaises(DomainError):
                TorusGrid(dim, points)

    def test_geometry(self):
        grid = TorusGrid(2, 16)
        self.assertEqual(grid.shape, (16, 16))
        self.assertAlmostEqual(grid.cell_volume * grid.size, grid.volume)
        x, y = grid.nodes()
        self.assertAlmostEqual(x[3, 0], 3 * 2 * math.pi / 16)
        self.assertEqual(y[0, 5], x[5, 0])

    def test_integer_wavenumbers(self):
        (n,) = TorusGrid(1, 8).wavenumbers
        assert_array_equal(n, [0, 1, 2, 3, -4, -3, -2, -1])
        (odd,) = TorusGrid(1, 8).odd_wavenumbers
        self.assertEqual(odd[4], 0.0)


class GridFieldTests(SimpleTestCase):
    def test_samples_are_read_only(self):
        field = GridField.constant(TorusGrid(1, 8), 1.0)
        with self.assertRaises(ValueError):
            field.samples[0] = 2.0

    def test_shape_mismatch(self):
        with self.assertRaises(GridMismatch):
            GridField(TorusGrid(1, 8), np.zeros(10))
        with self.assertRaises(GridMismatch):
            GridField.zeros(TorusGrid(1, 8)) + GridField.zeros(TorusGrid(1, 16))

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for dim, points in ((1, 64), (2, 16), (3, 8)):
            grid = TorusGrid(dim, points)
            field = GridField(grid, rng.standard_normal(grid.shape))
            back = field.spectrum.to_field()
            assert_allclose(back.samples, field.samples, rtol=0, atol=1e-12 * np.abs(field.samples).max())

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(1)
        grid = TorusGrid(2, 16)
        coeffs = GridField(grid, rng.standard_normal(grid.shape)).spectrum.coeffs
        index = (-np.arange(16)) % 16
        assert_allclose(coeffs[np.ix_(index, index)], np.conj(coeffs), atol=1e-15)

    def test_coefficients_of_cosine(self):
        grid = TorusGrid(1, 16)
        coeffs = cosine_series(grid, 2.0, [((3,), 1.0)]).spectrum.coeffs
        self.assertAlmostEqual(coeffs[0].real, 2.0, places=14)
        self.assertAlmostEqual(coeffs[3].real, 0.5, places=14)
        self.assertAlmostEqual(coeffs[-3].real, 0.5, places=14)

    def test_cosine_series_rejects_bad_mode(self):
        with self.assertRaises(GridMismatch):
            cosine_series(TorusGrid(2, 8), 1.0, [((1,), 0.5)])

    def test_vector_field_grids(self):
        with self.assertRaises(GridMismatch):
            VectorField((GridField.zeros(TorusGrid(2, 8)), GridField.zeros(TorusGrid(2, 16))))
        with self.assertRaises(GridMismatch):
            VectorField((GridField.zeros(TorusGrid(2, 8)),))

    def test_path_of_fields(self):
        rng = np.random.default_rng(2)
        grid = TorusGrid(1, 16)
        fields = [GridField(grid, rng.standard_normal(16)) for _ in range(5)]
        path = SampledPath.from_fields(TimeGrid(0.25, 4), fields)
        self.assertAlmostEqual(float(path.norm(path.values[3])), lp_norm(fields[3], 2))
        assert_array_equal(path.field(2, grid).samples, fields[2].samples)


class FractionalLaplacianTests(SimpleTestCase):
    def test_constant(self):
        field = GridField.constant(TorusGrid(2, 16), 3.0)
        assert_allclose(frac_laplacian(field, 0.4).samples, 0.0, atol=1e-14)

    def test_eigenfunctions(self):
        grid = TorusGrid(1, 32)
        cos1 = GridField.from_function(grid, np.cos)
        for s in (0.1, 0.5, 1.0):
            assert_allclose(frac_laplacian(cos1, s).samples, cos1.samples, atol=1e-12)
        cos2 = GridField.from_function(grid, lambda x: np.cos(2 * x))
        assert_allclose(frac_laplacian(cos2, 0.5).samples, 2.0 * cos2.samples, atol=1e-12)

    def test_two_dimensional_eigenfunction(self):
        grid = TorusGrid(2, 16)
        field = GridField.from_function(grid, lambda x, y: np.cos(x + 2 * y))
        assert_allclose(frac_laplacian(field, 0.75).samples, 5 ** 0.75 * field.samples, atol=1e-12)

    def test_order_range(self):
        field = GridField.zeros(TorusGrid(1, 8))
        for s in (0.0, -0.5, 1.5, float('nan')):
            with self.assertRaises(DomainError):
                frac_laplacian(field, s)

    def test_full_order_is_negative_laplacian(self):
        rng = np.random.default_rng(3)
        for grid in (TorusGrid(1, 64), TorusGrid(2, 16)):
            field = _band_limited(rng, grid)
            expected = -laplacian(field).samples
            scale = np.abs(expected).max()
            assert_allclose(frac_laplacian(field, 1.0).samples, expected, atol=1e-12 * scale)

    def test_multiplier_semigroup(self):
        rng = np.random.default_rng(4)
        grid = TorusGrid(2, 16)
        field = _band_limited(rng, grid)
        twice = frac_laplacian(frac_laplacian(field, 0.3), 0.4).spectrum.coeffs
        once = field.spectrum.coeffs * grid.k_squared ** 0.7
        assert_allclose(twice, once, atol=1e-12 * np.abs(once).max())

    def test_outputs_have_zero_mean(self):
        rng = np.random.default_rng(5)
        grid = TorusGrid(2, 16)
        field = GridField(grid, 1.0 + rng.standard_normal(grid.shape))
        for out in (frac_laplacian(field, 0.6), laplacian(field), divergence(gradient(field))):
            self.assertAlmostEqual(mean(out), 0.0, places=12)

    def test_self_adjoint(self):
        rng = np.random.default_rng(6)
        grid = TorusGrid(2, 16)
        f = _band_limited(rng, grid)
        g = _band_limited(rng, grid)
        s = 0.65
        left = inner(frac_laplacian(f, s), g)
        right = inner(f, frac_laplacian(g, s))
        split = inner(frac_laplacian(f, s / 2), frac_laplacian(g, s / 2))
        self.assertAlmostEqual(left, right, delta=1e-10 * abs(left))
        self.assertAlmostEqual(left, split, delta=1e-10 * abs(left))


class DerivativeTests(SimpleTestCase):
    def test_gradient_of_constant(self):
        for component in gradient(GridField.constant(TorusGrid(3, 8), 2.0)):
            assert_allclose(component.samples, 0.0, atol=1e-14)

    def test_gradient_of_sine(self):
        grid = TorusGrid(2, 16)
        dx, dy = gradient(GridField.from_function(grid, lambda x, y: np.sin(x) + 0 * y))
        x, _ = grid.nodes()
        assert_allclose(dx.samples, np.cos(x), atol=1e-13)
        assert_allclose(dy.samples, 0.0, atol=1e-13)

    def test_divergence_of_gradient(self):
        grid = TorusGrid(1, 32)
        cos1 = GridField.from_function(grid, np.cos)
        assert_allclose(divergence(gradient(cos1)).samples, -cos1.samples, atol=1e-13)
        rng = np.random.default_rng(7)
        field = _band_limited(rng, TorusGrid(2, 16))
        expected = laplacian(field).samples
        assert_allclose(divergence(gradient(field)).samples, expected, atol=1e-12 * np.abs(expected).max())

    def test_divergence_of_gradient_with_nyquist_content(self):
        rng = np.random.default_rng(10)
        for grid in (TorusGrid(1, 32), TorusGrid(2, 16)):
            field = GridField(grid, rng.standard_normal(grid.shape))
            expected = laplacian(field).samples
            assert_allclose(divergence(gradient(field)).samples, expected,
                            atol=1e-12 * np.abs(expected).max())
            assert_allclose(frac_laplacian(field, 1.0).samples, -expected,
                            atol=1e-12 * np.abs(expected).max())

    def test_nyquist_mode_is_in_every_kernel(self):
        grid = TorusGrid(1, 32)
        nyquist = GridField.from_function(grid, lambda x: np.cos(16 * x))
        assert_allclose(divergence(gradient(nyquist)).samples, 0.0, atol=1e-12)
        assert_allclose(laplacian(nyquist).samples, 0.0, atol=1e-12)
        assert_allclose(frac_laplacian(nyquist, 0.5).samples, 0.0, atol=1e-12)
        self.assertAlmostEqual(hs_seminorm(nyquist, 1.0), 0.0, places=12)


class NormTests(SimpleTestCase):
    def test_constant(self):
        field = GridField.constant(TorusGrid(1, 32), -1.5)
        self.assertAlmostEqual(lp_norm(field, 2), 1.5 * math.sqrt(2 * math.pi), places=12)
        self.assertAlmostEqual(lp_norm(field, 1), 1.5 * 2 * math.pi, places=12)
        self.assertAlmostEqual(lp_norm(field, 3), 1.5 * (2 * math.pi) ** (1 / 3), places=12)
        self.assertEqual(lp_norm(field, math.inf), 1.5)

    def test_cosine(self):
        cos1 = GridField.from_function(TorusGrid(1, 32), np.cos)
        self.assertAlmostEqual(lp_norm(cos1, 2), math.sqrt(math.pi), places=12)
        for s in (0.2, 0.5, 1.0):
            self.assertAlmostEqual(hs_seminorm(cos1, s), math.sqrt(math.pi), places=12)

    def test_seminorm_above_one(self):
        grid = TorusGrid(1, 32)
        cos3 = GridField.from_function(grid, lambda x: np.cos(3 * x))
        self.assertAlmostEqual(hs_seminorm(cos3, 1.5), 3 ** 1.5 * math.sqrt(math.pi), places=10)
        with self.assertRaises(DomainError):
            hs_seminorm(cos3, -1.0)

    def test_parseval(self):
        rng = np.random.default_rng(8)
        for grid in (TorusGrid(1, 64), TorusGrid(2, 16), TorusGrid(3, 8)):
            field = GridField(grid, rng.standard_normal(grid.shape))
            physical = lp_norm(field, 2) ** 2
            spectral = grid.volume * np.sum(np.abs(field.spectrum.coeffs) ** 2)
            self.assertAlmostEqual(physical, spectral, delta=1e-10 * physical)

    def test_bad_exponent(self):
        with self.assertRaises(DomainError):
            lp_norm(GridField.zeros(TorusGrid(1, 8)), 4)

    def test_positive_part(self):
        field = GridField.from_function(TorusGrid(1, 16), np.sin)
        part = positive_part(field)
        self.assertEqual(part.min(), 0.0)
        assert_array_equal(part.samples, np.maximum(field.samples, 0.0))


class EnergyTests(SimpleTestCase):
    def test_examples(self):
        grid = TorusGrid(1, 32)
        zero = GridField.zeros(grid)
        flat = GridField.constant(grid, 2.0)
        self.assertAlmostEqual(energy(zero, flat), 0.0)
        self.assertAlmostEqual(energy(GridField.constant(grid, 1.0), flat), 2 * math.pi, places=12)
        self.assertAlmostEqual(energy(zero, GridField.from_function(grid, np.cos)), 0.5 * math.pi, places=12)

    def test_grid_mismatch(self):
        with self.assertRaises(GridMismatch):
            energy(GridField.zeros(TorusGrid(1, 8)), GridField.zeros(TorusGrid(1, 16)))


class DealiasTests(SimpleTestCase):
    def test_band_limited_unchanged(self):
        grid = TorusGrid(2, 32)
        field = GridField.from_function(grid, lambda x, y: np.cos(10 * x) * np.sin(3 * y))
        assert_allclose(dealiased(field).samples, field.samples, atol=1e-13)

    def test_high_mode_removed(self):
        grid = TorusGrid(1, 32)
        field = GridField.from_function(grid, lambda x: np.cos(15 * x))
        assert_allclose(dealias(field.spectrum).coeffs, 0.0, atol=1e-15)

    def test_product_has_no_high_modes(self):
        grid = TorusGrid(1, 32)
        wave = GridField.from_function(grid, lambda x: np.cos(11 * x))
        coeffs = dealiased_product(wave, wave).spectrum.coeffs
        assert_allclose(coeffs[~grid.dealias_mask], 0.0, atol=1e-14)

    def test_spectrum_shape(self):
        with self.assertRaises(GridMismatch):
            Spectrum(TorusGrid(1, 8), np.zeros(9))


class SnapshotTests(SimpleTestCase):
    def test_write_and_read(self):
        rng = np.random.default_rng(9)
        grid = TorusGrid(2, 8)
        field = GridField(grid, rng.standard_normal(grid.shape))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_snapshot(Path(tmp) / 'u_3.fld', field, 0.1875)
            raw = path.read_bytes()
            self.assertTrue(raw.startswith(b'FLD1 d=2 M=8 t=0.1875\n'))
            self.assertEqual(len(raw), len(b'FLD1 d=2 M=8 t=0.1875\n') + 8 * 64)
            back, t = read_snapshot(path)
        self.assertEqual(t, 0.1875)
        self.assertEqual(back.grid, grid)
        assert_array_equal(back.samples, field.samples)

    def test_row_major_layout(self):
        grid = TorusGrid(2, 8)
        field = GridField(grid, np.arange(64, dtype=float).reshape(8, 8))
        with tempfile.TemporaryDirectory() as tmp:
            raw = write_snapshot(Path(tmp) / 'p.fld', field, 0.0).read_bytes()
        body = np.frombuffer(raw[raw.index(b'\n') + 1:], dtype='<f8')
        assert_array_equal(body, np.arange(64.0))

    def test_malformed_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            bad = Path(tmp) / 'bad.fld'
            bad.write_bytes(b'FLD2 d=1 M=8 t=0\n' + bytes(64))
            with self.assertRaises(DomainError):
                read_snapshot(bad)
            short = Path(tmp) / 'short.fld'
            short.write_bytes(b'FLD1 d=1 M=8 t=0\n' + bytes(40))
            with self.assertRaises(GridMismatch):
                read_snapshot(short)
