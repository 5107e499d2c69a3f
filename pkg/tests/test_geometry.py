import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smimu.exceptions import ConfigError, OddArraySize, UnpairedImu
from smimu.geometry import (
    FULL_3D,
    PLANAR_2D,
    ArrayGeometry,
    ImuPlacement,
    check_pairing,
    cube_array,
    design_matrix,
    mirror,
    octahedron_array,
    planar_array,
    validate_and_pair,
)

vec = arrays(np.float64, 3, elements=st.floats(-2, 2))


def _imus(*rhos, sigma=0.012):
    return [ImuPlacement(k, r, sigma_f=sigma) for k, r in enumerate(rhos)]


def test_pairing_examples():
    assert validate_and_pair(_imus((0.5, 0, 0), (-0.5, 0, 0)), FULL_3D, 1e-6).pairs == ((0, 1),)
    pr = validate_and_pair(_imus((0.1, 0.2, 0.05), (-0.1, -0.2, 0.05)), PLANAR_2D, 1e-6, axis="z")
    assert pr.pairs == ((0, 1),) and pr.planar
    with pytest.raises(UnpairedImu):
        validate_and_pair(_imus((0.5, 0, 0), (-0.4, 0, 0)), FULL_3D, 1e-3)


def test_pairing_errors():
    with pytest.raises(OddArraySize):
        validate_and_pair(_imus((0.5, 0, 0), (-0.5, 0, 0), (0, 1, 0)))
    with pytest.raises(ConfigError):
        validate_and_pair(_imus((0.5, 0, 0), (-0.5, 0, 0)), eps_sym=0.0)
    with pytest.raises(ConfigError):
        validate_and_pair(_imus((0.5, 0, 0), (-0.5, 0, 0)), mode="diagonal")


def test_pairing_is_greedy_and_prefers_smallest_residual():
    # IMU 0 has two candidates within eps; the exact mirror (id 2) wins
    imus = _imus((0.5, 0, 0), (-0.5, 0, 5e-5), (-0.5, 0, 0), (0.5, 0, 5e-5))
    assert validate_and_pair(imus, FULL_3D, 1e-4).pairs == ((0, 2), (1, 3))


def test_pairing_order_independent():
    imus = _imus((0.5, 0, 0), (0, 0.3, 0), (-0.5, 0, 0), (0, -0.3, 0))
    a = validate_and_pair(imus)
    b = validate_and_pair(list(reversed(imus)))
    assert a.pairs == b.pairs == ((0, 2), (1, 3))


def test_check_pairing():
    imus = _imus((0.5, 0, 0), (-0.5, 0, 0))
    assert check_pairing(imus, [(0, 1)]).pairs == ((0, 1),)
    with pytest.raises(UnpairedImu):
        check_pairing(_imus((0.5, 0, 0), (-0.4, 0, 0)), [(0, 1)])
    with pytest.raises(ConfigError):
        check_pairing(imus, [(0, 7)])


def test_placement_validation():
    with pytest.raises(ConfigError):
        ImuPlacement(0, (11.0, 0, 0))
    with pytest.raises(ConfigError):
        ImuPlacement(0, (1.0, 0, 0), sigma_f=0.0)
    with pytest.raises(ConfigError):
        ImuPlacement(0, (1.0, 0, 0), r_s_to_b=np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ConfigError):
        ArrayGeometry(_imus((1, 0, 0)) + _imus((2, 0, 0)))


def test_design_matrix_single_block():
    # the rate block is -[rho x], so that H w_dot = w_dot x rho
    h = design_matrix(np.array([[1.0, 0, 0]])).h
    np.testing.assert_array_equal(
        h, [[0, 0, 0, 1, 0, 0], [0, 0, 1, 0, 1, 0], [0, -1, 0, 0, 0, 1]]
    )
    np.testing.assert_array_equal(h[:, :3] @ [0, 0, 1.0], np.cross([0, 0, 1.0], [1.0, 0, 0]))


def test_design_matrix_rank():
    assert octahedron_array(0.5).design_matrix().rank == 6
    line = np.array([[x, 0, 0] for x in (-1.0, -0.5, 0.5, 1.0)])
    dm = design_matrix(line)
    assert dm.rank == 5
    assert np.linalg.matrix_rank(dm.h.T @ dm.h) == 5
    assert dm.cond > 1e12


@given(arrays(np.float64, (5, 3), elements=st.floats(-1, 1)), vec, vec)
def test_design_matrix_reproduces_model(rho, wd, c):
    h = design_matrix(rho).h
    expected = np.cross(wd, rho) + c
    np.testing.assert_allclose(h @ np.concatenate([wd, c]), expected.ravel(), atol=1e-12)


@pytest.mark.parametrize("geom", [cube_array(0.5), octahedron_array(0.3), cube_array(2.0)])
def test_full3d_arrays_sum_to_zero(geom):
    assert np.array_equal(geom.rho.sum(axis=0), np.zeros(3))
    assert len(geom.pairing.pairs) * 2 == len(geom)
    assert sorted(i for p in geom.pairing.pairs for i in p) == geom.ids
    for i, j in geom.pair_indices():
        np.testing.assert_array_equal(geom.rho[j], -geom.rho[i])


def test_cube_radius():
    g = cube_array(0.5)
    np.testing.assert_allclose(np.linalg.norm(g.rho, axis=1), 0.5)
    assert len(g) == 8


def test_planar_array_mirror():
    g = planar_array(0.4, n_pairs=3, height=0.05)
    assert g.pairing.planar and len(g) == 6
    for i, j in g.pair_indices():
        np.testing.assert_allclose(g.rho[j], mirror(g.rho[i], PLANAR_2D, 2), atol=1e-15)


def test_subset_and_index():
    g = cube_array()
    s = g.subset([3, 5])
    assert s.ids == [3, 5] and s.pairing is None
    assert g.index_of(5) == 5
    with pytest.raises(ConfigError):
        s.pair_indices()
