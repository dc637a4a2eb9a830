import numpy as np
import pytest

from src.design import kernels
from src.design.kernels import apply, build_design, rebuild_for_phi, with_phi
from src.mesh.constants import Fields
from src.oracle.dense import dense_design
from src.utils.random import make_rng


@pytest.fixture(scope='module')
def design(cartoon_mesh, cartoon_bg):
    return build_design(cartoon_mesh, cartoon_bg, 0.9, 1.3)


class TestBuildDesign:
    @pytest.mark.parametrize('which, phi', [(Fields.BETA, 0.9), (Fields.GAMMA, 1.3)])
    def test_matches_dense_loops(self, design, cartoon_mesh, cartoon_bg, which, phi):
        np.testing.assert_allclose(design.X(which).toarray(), dense_design(cartoon_mesh, cartoon_bg, which, phi),
                                   rtol=1e-12, atol=1e-14)

    def test_block_diagonal_by_grain(self, design, cartoon_mesh, cartoon_bg):
        X = design.X_b.toarray()
        same_grain = cartoon_mesh.grain_of_element[:, None] == cartoon_bg.beta.grain[None, :]
        assert (X[~same_grain] == 0).all()
        assert (X[same_grain] > 0).all()

    def test_uncached_matches_cached(self, design, cartoon_mesh, cartoon_bg):
        uncached = build_design(cartoon_mesh, cartoon_bg, 0.9, 1.3, cache_distances=False)
        assert not uncached.cache.cached
        for which in Fields.ALL:
            np.testing.assert_array_equal(uncached.X(which).toarray(), design.X(which).toarray())

    def test_cache_cap_falls_back_to_recomputing(self, cartoon_mesh, cartoon_bg):
        capped = build_design(cartoon_mesh, cartoon_bg, 0.9, 1.3, max_cache_entries=10)
        assert not capped.cache.cached

    def test_truncation_zeroes_small_kernels(self, design, cartoon_mesh, cartoon_bg):
        truncated = build_design(cartoon_mesh, cartoon_bg, 0.9, 1.3, truncation=1e-2)
        full = design.X_b.toarray()
        kernel = full / cartoon_bg.beta.weight[None, :]
        expected = np.where(kernel < 1e-2, 0.0, full)
        np.testing.assert_allclose(truncated.X_b.toarray(), expected, rtol=1e-12)

    def test_phi_must_be_positive(self, cartoon_mesh, cartoon_bg):
        with pytest.raises(ValueError, match='phi values must be positive'):
            build_design(cartoon_mesh, cartoon_bg, 0.0, 1.0)

    def test_empty_gamma_field(self, slab_mesh, slab_bg):
        slab = build_design(slab_mesh, slab_bg, 1.0, 1.0)
        assert slab.X_c.shape == (slab_mesh.M, 0)
        np.testing.assert_array_equal(slab.apply_field(Fields.GAMMA, np.zeros(0)), np.zeros(slab_mesh.M))


class TestWithPhi:
    def test_does_not_recompute_distances(self, design, cartoon_mesh, cartoon_bg, monkeypatch):
        fresh = build_design(cartoon_mesh, cartoon_bg, 2.0, 1.3)

        def no_cdist(*args, **kwargs):
            raise AssertionError('distances recomputed')

        monkeypatch.setattr(kernels, 'cdist', no_cdist)
        updated = with_phi(design, Fields.BETA, 2.0)
        np.testing.assert_array_equal(updated.X_b.toarray(), fresh.X_b.toarray())
        assert updated.blocks_gamma is design.blocks_gamma

    def test_rebuild_equals_fresh_build(self, design, cartoon_mesh, cartoon_bg):
        rebuilt = rebuild_for_phi(design, 0.4, 2.2)
        fresh = build_design(cartoon_mesh, cartoon_bg, 0.4, 2.2)
        for which in Fields.ALL:
            np.testing.assert_array_equal(rebuilt.X(which).toarray(), fresh.X(which).toarray())

    def test_same_phi_returns_same_design(self, design):
        assert with_phi(design, Fields.GAMMA, 1.3) is design

    def test_original_is_unchanged(self, design, cartoon_mesh, cartoon_bg):
        before = design.X_b.toarray()
        with_phi(design, Fields.BETA, 3.0)
        np.testing.assert_array_equal(design.X_b.toarray(), before)
        assert design.phi_beta == 0.9


class TestApply:
    def test_matches_sparse_product(self, design, cartoon_bg):
        rng = make_rng(8)
        beta = rng.standard_normal(cartoon_bg.dim_beta)
        gamma = rng.standard_normal(cartoon_bg.dim_gamma)
        np.testing.assert_allclose(apply(design, beta, gamma), design.X_b @ beta + design.X_c @ gamma,
                                   rtol=1e-12, atol=1e-12)

    def test_wrong_length(self, design, cartoon_bg):
        with pytest.raises(ValueError, match='beta has dimension'):
            design.apply_field(Fields.BETA, np.zeros(cartoon_bg.dim_beta + 1))
