import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracwave.errors import InvalidArgument, InvalidMatrix
from fracwave.fem import assemble, build_uniform_mesh, check_spd, lumped_mass, point_source_vector


class TestMesh:
    def test_coordinates_and_spacing(self):
        mesh = build_uniform_mesh(2.0, 8)
        assert mesh.n_nodes == 9
        assert mesh.h == pytest.approx(0.25)
        assert mesh.node_coords[-1] == 2.0
        np.testing.assert_allclose(np.diff(mesh.node_coords), 0.25)

    @pytest.mark.parametrize("length,n", [(0.0, 10), (-1.0, 10), (np.inf, 10), (1.0, 1), (1.0, 2.5)])
    def test_rejects_bad_geometry(self, length, n):
        with pytest.raises(InvalidArgument):
            build_uniform_mesh(length, n)

    def test_rejects_unknown_boundary(self):
        with pytest.raises(InvalidArgument, match="boundary"):
            build_uniform_mesh(1.0, 4, ("fixed", "clamped"))

    def test_lumped_mass_sums_to_length(self):
        mesh = build_uniform_mesh(3.0, 7)
        m = lumped_mass(mesh)
        assert m.sum() == pytest.approx(3.0)
        assert m[0] == m[-1] == pytest.approx(mesh.h / 2)


class TestAssembly:
    def test_interior_stencil(self):
        mesh = build_uniform_mesh(1.0, 10)
        K = assemble(mesh).K
        h = mesh.h
        row = K[4, 3:6] * h**2
        np.testing.assert_allclose(row, [-1.0, 2.0, -1.0], rtol=1e-14)

    def test_fixed_fixed_eigenvalues(self):
        # [DERIVED] second-difference spectrum (4/h^2) sin^2(k pi / 2N), k = 1..N-1
        N = 40
        mesh = build_uniform_mesh(1.0, N)
        lam = np.linalg.eigvalsh(assemble(mesh).K)
        k = np.arange(1, N)
        expected = 4.0 / mesh.h**2 * np.sin(k * np.pi / (2 * N)) ** 2
        np.testing.assert_allclose(lam, expected, rtol=1e-12)

    def test_free_free_has_one_null_mode(self):
        K = assemble(build_uniform_mesh(1.0, 20, ("free", "free"))).K
        lam = np.linalg.eigvalsh(K)
        assert abs(lam[0]) < 1e-10 * lam[-1]
        assert lam[1] > 1.0

    def test_free_fixed_lowest_mode_is_quarter_wave(self):
        # continuum limit: omega_1 = pi / (2L)
        L = 2.0
        K = assemble(build_uniform_mesh(L, 400, ("free", "fixed"))).K
        w1 = np.sqrt(np.linalg.eigvalsh(K)[0])
        assert w1 == pytest.approx(np.pi / (2 * L), rel=1e-5)

    def test_fixed_nodes_are_eliminated(self):
        system = assemble(build_uniform_mesh(1.0, 10, ("fixed", "free")))
        assert system.n == 10
        assert system.dof_of(1) == 0
        with pytest.raises(InvalidArgument, match="fixed"):
            system.dof_of(0)
        with pytest.raises(InvalidArgument, match="outside"):
            system.dof_of(11)

    def test_point_source_scaling(self):
        system = assemble(build_uniform_mesh(1.0, 10))
        g = point_source_vector(system, 3)
        assert np.count_nonzero(g) == 1
        assert g[system.dof_of(3)] == pytest.approx(1.0 / np.sqrt(0.1))

    @given(n=st.integers(2, 60), length=st.floats(0.1, 10.0),
           left=st.sampled_from(["fixed", "free"]), right=st.sampled_from(["fixed", "free"]))
    def test_stiffness_is_symmetric_psd(self, n, length, left, right):
        K = assemble(build_uniform_mesh(length, n, (left, right))).K
        assert np.array_equal(K, K.T)
        check_spd(K)


class TestCheckSpd:
    def test_rejects_nonsymmetric(self):
        with pytest.raises(InvalidMatrix, match="symmetric"):
            check_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(InvalidMatrix, match="indefinite"):
            check_spd(np.diag([1.0, -1.0]))

    def test_rejects_nonsquare_and_nonfinite(self):
        with pytest.raises(InvalidMatrix):
            check_spd(np.ones((2, 3)))
        with pytest.raises(InvalidMatrix):
            check_spd(np.array([[np.nan]]))
