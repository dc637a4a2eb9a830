from itertools import combinations

import numpy as np
import pandas as pd
import pytest

from src.exceptions import MeshParseError, MeshValidationError, NonConformalMeshError
from src.mesh.boundaries import extract_boundaries
from src.mesh.constants import Fields
from src.mesh.grain_mesh import GrainMesh, centroids, element_volumes, load_mesh, make_mesh, save_mesh
from src.mesh.neighborhoods import build_neighborhoods
from src.mesh.observations import load_observations, save_observations

UNIT_TET = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]


def two_tet_mesh() -> GrainMesh:
    nodes = UNIT_TET + [[1.0, 1.0, 1.0]]
    return make_mesh(nodes, [[0, 1, 2, 3], [1, 2, 3, 4]], [1, 2])


def write_mesh_text(path, text: str):
    path.write_text(text, encoding='utf-8')
    return path


class TestLoadMesh:
    def test_single_tetrahedron(self, tmp_path):
        path = write_mesh_text(tmp_path / 'one.txt',
                               'nodes 4 elements 1 grains 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3 1\n')
        mesh = load_mesh(path)
        assert (mesh.M, mesh.G, mesh.n_nodes) == (1, 1, 4)

    def test_save_then_load_preserves_mesh(self, tmp_path, cartoon_mesh):
        save_mesh(cartoon_mesh, tmp_path / 'mesh.txt')
        loaded = load_mesh(tmp_path / 'mesh.txt')
        np.testing.assert_array_equal(loaded.nodes, cartoon_mesh.nodes)
        np.testing.assert_array_equal(loaded.elements, cartoon_mesh.elements)
        np.testing.assert_array_equal(loaded.grain_of_element, cartoon_mesh.grain_of_element)

    def test_dangling_node_index(self, tmp_path):
        coordinates = '\n'.join(f'{i} {i % 3} {i % 2}' for i in range(10))
        path = write_mesh_text(tmp_path / 'bad.txt', f'nodes 10 elements 1 grains 1\n{coordinates}\n0 1 2 99 1\n')
        with pytest.raises(MeshValidationError, match='node 99'):
            load_mesh(path)

    def test_bad_header(self, tmp_path):
        path = write_mesh_text(tmp_path / 'bad.txt', 'vertices 4\n0 0 0\n')
        with pytest.raises(MeshParseError, match='bad header'):
            load_mesh(path)

    def test_wrong_line_count(self, tmp_path):
        path = write_mesh_text(tmp_path / 'bad.txt', 'nodes 4 elements 1 grains 1\n0 0 0\n1 0 0\n0 1 2 3 1\n')
        with pytest.raises(MeshParseError, match='expected 4 node and 1 element lines'):
            load_mesh(path)

    def test_non_numeric_coordinate(self, tmp_path):
        path = write_mesh_text(tmp_path / 'bad.txt',
                               'nodes 4 elements 1 grains 1\n0 0 0\n1 x 0\n0 1 0\n0 0 1\n0 1 2 3 1\n')
        with pytest.raises(MeshParseError):
            load_mesh(path)


class TestValidateMesh:
    def test_repeated_node(self):
        with pytest.raises(MeshValidationError, match='repeats a node'):
            make_mesh(UNIT_TET, [[0, 1, 1, 3]], [1])

    def test_empty_grain(self):
        with pytest.raises(MeshValidationError, match='grain 2 has no elements'):
            make_mesh(UNIT_TET + [[1.0, 1.0, 1.0]], [[0, 1, 2, 3], [1, 2, 3, 4]], [1, 3])

    def test_zero_volume(self):
        flat = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]
        with pytest.raises(MeshValidationError, match='zero volume'):
            make_mesh(flat, [[0, 1, 2, 3]], [1])

    def test_synthetic_volumes_fill_the_box(self, cartoon_mesh):
        assert np.abs(element_volumes(cartoon_mesh)).sum() == pytest.approx(1000.0)


class TestCentroids:
    def test_unit_tetrahedron(self):
        mesh = make_mesh(UNIT_TET, [[0, 1, 2, 3]], [1])
        np.testing.assert_allclose(centroids(mesh)[0], [0.25, 0.25, 0.25])

    def test_translation_equivariance(self, cartoon_mesh):
        shift = np.array([1.5, -2.0, 0.25])
        moved = GrainMesh(cartoon_mesh.nodes + shift, cartoon_mesh.elements, cartoon_mesh.grain_of_element)
        np.testing.assert_allclose(centroids(moved), centroids(cartoon_mesh) + shift, atol=1e-12)

    def test_matches_brute_force(self, cartoon_mesh):
        element = cartoon_mesh.elements[0]
        expected = sum(cartoon_mesh.nodes[n] for n in element) / 4.0
        np.testing.assert_allclose(centroids(cartoon_mesh)[0], expected, atol=1e-12)


def brute_force_boundaries(mesh: GrainMesh):
    """Second-order (grain, node) pairs and third-order (grain, node) pairs by exhaustive enumeration."""
    faces = {}
    edges = {}
    for m, element in enumerate(mesh.elements):
        for face in combinations(sorted(element.tolist()), 3):
            faces.setdefault(face, []).append(mesh.grain_of_element[m])
        for edge in combinations(sorted(element.tolist()), 2):
            edges.setdefault(edge, set()).add(int(mesh.grain_of_element[m]))
    second = set()
    for face, grains in faces.items():
        if len(grains) == 2 and grains[0] != grains[1]:
            for g in grains:
                second.update((int(g), n) for n in face)
    third = set()
    for edge, grains in edges.items():
        if len(grains) >= 3:
            for g in grains:
                third.update((g, n) for n in edge)
    return second, third


class TestExtractBoundaries:
    def test_two_tetrahedra_share_an_interface(self):
        bg = extract_boundaries(two_tet_mesh())
        assert bg.dim_beta == 6
        assert bg.dim_gamma == 0
        np.testing.assert_array_equal(bg.beta.node, [1, 2, 3, 1, 2, 3])
        area = np.sqrt(3.0) / 2.0
        np.testing.assert_allclose(bg.delta_v, area / 3.0)

    def test_two_grain_slab_has_no_third_order_nodes(self, slab_bg):
        assert slab_bg.dim_gamma == 0
        # 3 x 3 interface nodes, present in both grains
        assert slab_bg.dim_beta == 18

    def test_weights_sum_to_interface_area(self, slab_bg):
        for grain in (1, 2):
            assert slab_bg.delta_v[slab_bg.beta.grain_slice(grain)].sum() == pytest.approx(100.0, rel=1e-12)
            assert slab_bg.total_second_order_area(grain) == pytest.approx(100.0, rel=1e-12)

    def test_cartoon_matches_brute_force(self, cartoon_mesh, cartoon_bg):
        second, third = brute_force_boundaries(cartoon_mesh)
        assert set(zip(cartoon_bg.beta.grain.tolist(), cartoon_bg.beta.node.tolist())) == second
        assert set(zip(cartoon_bg.gamma.grain.tolist(), cartoon_bg.gamma.node.tolist())) == third

    def test_triple_line_nodes_appear_in_three_grains(self, cartoon_bg):
        counts = pd.Series(cartoon_bg.gamma.node).value_counts()
        assert (counts == 3).all()
        # the vertical axis through the box center: 3 nodes at resolution 2
        assert counts.size == 3

    def test_third_order_subset_of_second_order(self, cartoon_bg):
        beta_pairs = set(zip(cartoon_bg.beta.grain.tolist(), cartoon_bg.beta.node.tolist()))
        assert set(zip(cartoon_bg.gamma.grain.tolist(), cartoon_bg.gamma.node.tolist())) <= beta_pairs
        for grain in (1, 2, 3):
            assert np.isin(cartoon_bg.C(grain), cartoon_bg.B(grain)).all()

    def test_third_order_weights_sum_to_edge_length(self, cartoon_bg):
        for grain in (1, 2, 3):
            assert cartoon_bg.delta_vprime[cartoon_bg.gamma.grain_slice(grain)].sum() == pytest.approx(10.0)

    def test_weights_positive_and_sorted(self, cartoon_bg):
        for layout in (cartoon_bg.beta, cartoon_bg.gamma):
            assert (layout.weight > 0).all()
            keys = layout.grain * cartoon_bg.n_nodes + layout.node
            assert (np.diff(keys) > 0).all()

    def test_invariant_to_element_order(self, cartoon_mesh, cartoon_bg):
        order = np.random.default_rng(3).permutation(cartoon_mesh.M)
        shuffled = make_mesh(cartoon_mesh.nodes, cartoon_mesh.elements[order], cartoon_mesh.grain_of_element[order])
        bg = extract_boundaries(shuffled)
        np.testing.assert_array_equal(bg.beta.node, cartoon_bg.beta.node)
        np.testing.assert_allclose(bg.delta_v, cartoon_bg.delta_v, rtol=1e-12)

    def test_non_conformal_interface_rejected(self):
        apex = [[1.0, 1.0, 1.0]]
        nodes = UNIT_TET + [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] + apex
        mesh = make_mesh(nodes, [[0, 1, 2, 3], [4, 5, 6, 7]], [1, 2])
        with pytest.raises(NonConformalMeshError):
            extract_boundaries(mesh)


class TestNeighborhoods:
    def test_symmetric_and_irreflexive(self, cartoon_mesh, cartoon_bg):
        for which in Fields.ALL:
            graph = build_neighborhoods(cartoon_mesh, cartoon_bg, which)
            for matrix in (graph.wgn, graph.bgn):
                assert (matrix != matrix.T).nnz == 0
                assert matrix.diagonal().sum() == 0
            assert graph.wgn.multiply(graph.bgn).nnz == 0

    def test_triple_junction_has_two_between_grain_neighbors(self, cartoon_mesh, cartoon_bg):
        graph = build_neighborhoods(cartoon_mesh, cartoon_bg, Fields.GAMMA)
        np.testing.assert_array_equal(graph.bgn_count, 2)

    def test_two_grain_interface_has_one_between_grain_neighbor(self, slab_mesh, slab_bg):
        graph = build_neighborhoods(slab_mesh, slab_bg, Fields.BETA)
        np.testing.assert_array_equal(graph.bgn_count, 1)

    def test_matches_pairwise_scan(self, cartoon_mesh, cartoon_bg):
        graph = build_neighborhoods(cartoon_mesh, cartoon_bg, Fields.BETA)
        layout = cartoon_bg.beta
        shared = set()
        for element in cartoon_mesh.elements:
            shared.update(combinations(sorted(element.tolist()), 2))
        for p in range(layout.dim):
            expected_within = [q for q in range(layout.dim) if q != p and layout.grain[q] == layout.grain[p]
                               and tuple(sorted((layout.node[p], layout.node[q]))) in shared]
            expected_between = [q for q in range(layout.dim)
                                if layout.grain[q] != layout.grain[p] and layout.node[q] == layout.node[p]]
            assert sorted(graph.within_grain_neighbors(p).tolist()) == expected_within
            assert sorted(graph.between_grain_neighbors(p).tolist()) == expected_between


class TestObservations:
    def test_any_row_order(self, tmp_path):
        path = tmp_path / 'y.csv'
        path.write_text('element_id,value\n2,20.5\n1,10.25\n3,30\n')
        np.testing.assert_array_equal(load_observations(path, 3), [10.25, 20.5, 30.0])

    def test_written_file_reads_back(self, tmp_path):
        y = np.array([1.0 / 3.0, 2.5, -7.125])
        save_observations(y, tmp_path / 'y.csv')
        np.testing.assert_array_equal(load_observations(tmp_path / 'y.csv', 3), y)

    def test_missing_element(self, tmp_path):
        path = tmp_path / 'y.csv'
        path.write_text('element_id,value\n1,1.0\n3,2.0\n')
        with pytest.raises(MeshParseError, match='exactly 1..3'):
            load_observations(path, 3)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / 'y.csv'
        path.write_text('id,stress\n1,1.0\n')
        with pytest.raises(MeshParseError, match='expected header'):
            load_observations(path, 1)
