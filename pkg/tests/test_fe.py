import math

import numpy as np
import pytest

from latmech import sampling
from latmech.fe import (
    BeamMaterial,
    DisconnectedLatticeError,
    beam_stiffness,
    homogenize,
    homogenize_batch,
    homogenize_windowed,
)
from latmech.lattice import (
    Lattice,
    body_centred_cubic,
    diamond,
    perturb,
    rotate_lattice,
    simple_cubic,
    tessellate,
)
from latmech.tensor4 import (
    directional_modulus,
    kelvin_spectrum,
    rotate,
    to_mandel,
)


def block_rotation(r: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(4), r)


class TestBeamStiffness:
    def test_axial_entry(self):
        mat = BeamMaterial(youngs_modulus=2.0)
        k = beam_stiffness(1.5, 0.1, [1.0, 0.0, 0.0], mat)
        assert k[0, 0] == pytest.approx(2.0 * math.pi * 0.01 / 1.5, rel=1e-12)

    def test_symmetric(self, rng):
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        k = beam_stiffness(0.8, 0.03, axis, BeamMaterial())
        np.testing.assert_allclose(k, k.T, atol=1e-12)

    def test_rigid_body_nullity_six(self, rng):
        for _ in range(5):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            length = float(rng.uniform(0.3, 2.0))
            radius = float(rng.uniform(0.01, 0.1))
            k = beam_stiffness(length, radius, axis, BeamMaterial())
            eigvals = np.linalg.eigvalsh(k)
            scale = np.abs(eigvals).max()
            assert np.sum(np.abs(eigvals) < 1e-9 * scale) == 6

    def test_frame_rotation_oracle(self, rng):
        # Assembling in a rotated frame equals conjugating by the block
        # rotation; circular sections make this exact for any rotation.
        axis = np.array([1.0, 0.0, 0.0])
        r = sampling.random_rotation(3)
        k_base = beam_stiffness(1.2, 0.05, axis, BeamMaterial())
        k_rotated = beam_stiffness(1.2, 0.05, r @ axis, BeamMaterial())
        t = block_rotation(r)
        np.testing.assert_allclose(k_rotated, t @ k_base @ t.T, atol=1e-10)

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            beam_stiffness(0.0, 0.05, [1, 0, 0], BeamMaterial())
        with pytest.raises(ValueError):
            beam_stiffness(1.0, -0.05, [1, 0, 0], BeamMaterial())


class TestHomogenize:
    def test_simple_cubic_axial_limit(self):
        # Under unit axial strain only the aligned strut works; the energy
        # route gives C_1111 = E A / a^2 = pi r^2 exactly.
        res = homogenize(simple_cubic(radius=0.05))
        assert res.stiffness.components[0, 0, 0, 0] == pytest.approx(
            math.pi * 0.05**2, rel=1e-6
        )
        assert res.residual < 1e-8

    def test_raw_mandel_symmetric_without_postprocessing(self, catalogue_lattices):
        for lat in catalogue_lattices:
            m = to_mandel(homogenize(perturb_if_possible(lat)).stiffness).entries
            scale = np.abs(m).max()
            assert np.abs(m - m.T).max() <= 1e-9 * scale

    def test_kelvin_psd(self, catalogue_lattices):
        for lat in catalogue_lattices:
            spectrum = kelvin_spectrum(homogenize(lat).stiffness)
            floor = -1e-9 * spectrum.eigenvalues.max()
            assert spectrum.eigenvalues.min() >= floor

    def test_linear_in_modulus(self):
        lat = body_centred_cubic()
        c1 = to_mandel(homogenize(lat, BeamMaterial(youngs_modulus=1.0)).stiffness).entries
        c2 = to_mandel(homogenize(lat, BeamMaterial(youngs_modulus=2.0)).stiffness).entries
        np.testing.assert_allclose(c2, 2.0 * c1, rtol=1e-12)

    def test_tessellation_invariance(self, catalogue_lattices):
        for lat in catalogue_lattices:
            base = to_mandel(homogenize(lat).stiffness).entries
            doubled = to_mandel(homogenize(tessellate(lat, 2)).stiffness).entries
            rel = np.linalg.norm(base - doubled) / np.linalg.norm(base)
            assert rel < 1e-8

    def test_rotation_equivariance(self, catalogue_lattices):
        for lat in catalogue_lattices:
            for s in range(3):
                r = sampling.random_rotation(50 + s)
                direct = homogenize(rotate_lattice(lat, r)).stiffness.components
                conjugated = rotate(homogenize(lat).stiffness, r).components
                rel = np.linalg.norm(direct - conjugated) / np.linalg.norm(conjugated)
                assert rel < 1e-8

    def test_windowed_path_agrees(self, catalogue_lattices):
        for lat in catalogue_lattices:
            lat = perturb_if_possible(lat)
            fundamental = to_mandel(homogenize(lat).stiffness).entries
            windowed = to_mandel(homogenize_windowed(lat).stiffness).entries
            rel = np.linalg.norm(fundamental - windowed) / np.linalg.norm(fundamental)
            assert rel < 1e-9

    def test_windowed_path_agrees_with_loaded_self_edges(self):
        # Skewed cell and a diagonal self-strut: the corrector field is
        # nonzero, so the self-edge blocks must accumulate onto the shared
        # node (regression for the duplicate-index scatter).
        cell = np.array(
            [
                [0.6026923, -0.07450849, 0.12613357],
                [0.34081396, 1.03291192, -0.1657942],
                [-0.23543411, 0.22462373, 1.49043491],
            ]
        )
        lat = Lattice(
            "skew_loop",
            cell,
            [[0.6371322, 0.26105918, 0.4414528], [0.92676757, 0.85790985, 0.80980793]],
            [[0, 1, 0, 0, 0], [1, 0, 1, 0, 1], [0, 0, 1, 1, 1]],
            0.02,
        )
        fundamental = to_mandel(homogenize(lat).stiffness).entries
        windowed = to_mandel(homogenize_windowed(lat).stiffness).entries
        rel = np.linalg.norm(fundamental - windowed) / np.linalg.norm(fundamental)
        assert rel < 1e-9

    def test_disconnected_names_node(self):
        lat = Lattice(
            "split",
            np.eye(3),
            [[0.5, 0.5, 0.5], [0.25, 0.25, 0.25]],
            [[0, 0, 1, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1], [1, 1, 1, 0, 0]],
            0.05,
        )
        with pytest.raises(DisconnectedLatticeError, match="node 1"):
            homogenize(lat)

    def test_rejects_overdense(self):
        with pytest.raises(ValueError, match="density"):
            homogenize(simple_cubic(radius=0.4))

    def test_cubic_anisotropy_axis_vs_diagonal(self):
        c = homogenize(simple_cubic(radius=0.05)).stiffness
        axis_value = directional_modulus(c, [1.0, 0.0, 0.0])
        diag = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
        diag_value = directional_modulus(c, diag)
        assert axis_value > 1.2 * diag_value


def perturb_if_possible(lat: Lattice) -> Lattice:
    return perturb(lat, 0.05, seed=8) if lat.node_count >= 2 else lat


class TestHomogenizeBatch:
    def test_singleton_matches_direct(self):
        lat = simple_cubic()
        items = homogenize_batch([lat], [0.05])
        assert len(items) == 1
        direct = homogenize(lat)
        np.testing.assert_allclose(
            items[0].result.stiffness.components, direct.stiffness.components
        )

    def test_monotone_in_radius(self):
        items = homogenize_batch([simple_cubic()], [0.03, 0.05, 0.08])
        dirs = sampling.unit_directions(40, seed=2)
        previous = None
        for item in items:
            values = np.array(
                [directional_modulus(item.result.stiffness, d) for d in dirs]
            )
            if previous is not None:
                assert np.all(values >= previous - 1e-12)
            previous = values

    def test_collects_errors_without_aborting(self):
        bad = Lattice(
            "lonely",
            np.eye(3),
            [[0.5, 0.5, 0.5], [0.25, 0.25, 0.25]],
            [[0, 0, 1, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1], [1, 1, 1, 0, 0]],
            0.05,
        )
        items = homogenize_batch([simple_cubic(), bad, diamond()], [0.05])
        assert [item.error is None for item in items] == [True, False, True]
        assert "lonely" in items[1].name
        assert "unreachable" in items[1].error

    def test_threaded_matches_serial(self, catalogue_lattices):
        serial = homogenize_batch(catalogue_lattices, [0.04, 0.06], threads=1)
        threaded = homogenize_batch(catalogue_lattices, [0.04, 0.06], threads=4)
        for a, b in zip(serial, threaded):
            np.testing.assert_array_equal(
                a.result.stiffness.components, b.result.stiffness.components
            )


class TestBeamMaterial:
    def test_shear_modulus(self):
        assert BeamMaterial(1.0, 0.25).shear_modulus == pytest.approx(0.4)

    def test_rejects_bad_poisson(self):
        with pytest.raises(ValueError):
            BeamMaterial(poisson_ratio=0.6)

    def test_rejects_bad_modulus(self):
        with pytest.raises(ValueError):
            BeamMaterial(youngs_modulus=0.0)
