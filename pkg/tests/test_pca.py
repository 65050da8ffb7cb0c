import numpy as np
import pytest

from viclust import (
    DataError,
    DegenerateColumnError,
    fit_correlation_pca,
    fit_pca,
    index_skewness_report,
    jacobi_eigh,
    retain_components,
    retained_count,
    score,
    standardize,
    substantive_loadings,
)
from viclust.pca import IndexScores, PcaModel, skewness_band

from conftest import make_dataset, make_scores
from oracles import charpoly_eigenvalues

# Published eigenvalue spectrum of a 26-variable correlation PCA; the five
# leading values sit at or above 1 and the column sums to 26.00.
PUBLISHED_EIGENVALUES = [
    11.19, 3.28, 2.74, 1.43, 1.10, 0.89, 0.82, 0.69, 0.63, 0.59, 0.49, 0.45,
    0.35, 0.30, 0.23, 0.20, 0.17, 0.11, 0.10, 0.07, 0.05, 0.04, 0.04, 0.02,
    0.02, 0.00,
]

# Published weights of the first five components (rows follow VARIABLE_ORDER).
VARIABLE_ORDER = [
    "ERP", "PRIM", "CC", "HCC2", "DVH", "DVE", "DVS", "DVL", "DVC", "DVR",
    "DVI", "DVG", "SML", "SMO", "ANT", "A14", "A19", "A20", "BRTH", "M15",
    "M20", "IMM", "FRT", "MRT2", "ATT", "CORE",
]
PUBLISHED_WEIGHTS = np.array([
    # VI1    VI2    VI3    VI4    VI5
    [-0.18,  0.38,  0.10, -0.08,  0.16],  # ERP
    [-0.18,  0.37,  0.09, -0.06,  0.14],  # PRIM
    [-0.18,  0.39,  0.09, -0.01,  0.13],  # CC
    [ 0.05,  0.01,  0.12,  0.53, -0.36],  # HCC2
    [ 0.28,  0.14, -0.02, -0.11, -0.01],  # DVH
    [ 0.26,  0.13, -0.05, -0.05, -0.06],  # DVE
    [ 0.26,  0.19,  0.00, -0.14,  0.06],  # DVS
    [ 0.27,  0.13,  0.01,  0.02, -0.08],  # DVL
    [ 0.23,  0.27,  0.09, -0.13,  0.01],  # DVC
    [ 0.27,  0.13,  0.04,  0.07,  0.01],  # DVR
    [ 0.24,  0.05, -0.08, -0.23, -0.13],  # DVI
    [ 0.25,  0.03,  0.01, -0.13,  0.19],  # DVG
    [ 0.04,  0.33,  0.15,  0.13,  0.21],  # SML
    [ 0.27, -0.06,  0.03,  0.18,  0.12],  # SMO
    [-0.08,  0.15, -0.28, -0.18, -0.17],  # ANT
    [-0.03,  0.08, -0.56,  0.20,  0.18],  # A14
    [-0.03, -0.04,  0.50, -0.21,  0.00],  # A19
    [ 0.10, -0.11,  0.42, -0.10, -0.32],  # A20
    [ 0.23,  0.05, -0.03,  0.16,  0.01],  # BRTH
    [ 0.25,  0.01, -0.02,  0.23,  0.01],  # M15
    [ 0.26, -0.09, -0.03,  0.03,  0.08],  # M20
    [ 0.08, -0.19,  0.05,  0.08,  0.53],  # IMM
    [ 0.21, -0.24, -0.02, -0.05,  0.08],  # FRT
    [ 0.18,  0.28,  0.03,  0.16, -0.08],  # MRT2
    [ 0.06,  0.09, -0.32, -0.37, -0.38],  # ATT
    [ 0.11, -0.21, -0.02, -0.40,  0.28],  # CORE
])


def published_model() -> PcaModel:
    # pad the published 26x5 block to a square loading matrix; retention and
    # loading queries only touch the first five columns
    p = 26
    loadings = np.zeros((p, p))
    loadings[:, :5] = PUBLISHED_WEIGHTS
    lam = np.array(PUBLISHED_EIGENVALUES)
    return PcaModel(
        variable_order=tuple(VARIABLE_ORDER),
        means=np.zeros(p),
        sds=np.ones(p),
        loadings=loadings,
        eigenvalues=lam,
        variance_fraction=lam / p,
        retained=5,
    )


class TestStandardize:
    def test_unit_steps(self):
        z, means, sds = standardize(make_dataset([[1.0], [2.0], [3.0]]))
        assert np.allclose(z[:, 0], [-1.0, 0.0, 1.0])
        assert means[0] == 2.0 and sds[0] == 1.0

    def test_constant_column_rejected(self):
        with pytest.raises(DegenerateColumnError):
            standardize(make_dataset([[1.0], [1.0], [1.0]]))

    def test_post_hoc_mean_tiny(self):
        rng = np.random.default_rng(0)
        z, _, _ = standardize(make_dataset(rng.uniform(5, 9, (40, 3))))
        assert (np.abs(z.mean(axis=0)) < 1e-12).all()


class TestJacobi:
    def test_two_by_two_analytic(self):
        rng = np.random.default_rng(1)
        base = rng.standard_normal(60)
        other = 0.6 * base + 0.8 * rng.standard_normal(60)
        model, _ = fit_correlation_pca(make_dataset(np.column_stack([base, other])))
        z, _, _ = standardize(make_dataset(np.column_stack([base, other])))
        r = float((z[:, 0] * z[:, 1]).sum() / (len(base) - 1))
        assert model.eigenvalues == pytest.approx([1 + abs(r), 1 - abs(r)], abs=1e-12)
        expected = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert np.abs(model.loadings) == pytest.approx(np.abs(expected), abs=1e-10)

    def test_identity_correlation_all_ones(self):
        a = np.array([1.0, -1.0, 1.0, -1.0])
        b = np.array([1.0, 1.0, -1.0, -1.0])
        model, _ = fit_correlation_pca(make_dataset(np.column_stack([a, b])))
        assert model.eigenvalues == pytest.approx([1.0, 1.0])
        # equal eigenvalues: order falls back to the first nonzero entry
        assert np.allclose(np.abs(model.loadings), np.eye(2))

    def test_random_fixture_matches_charpoly_oracle(self):
        rng = np.random.default_rng(2)
        z, _, _ = standardize(make_dataset(rng.standard_normal((6, 4))))
        r = z.T @ z / 5.0
        lam, w = jacobi_eigh(r)
        order = np.argsort(lam)[::-1]
        assert lam[order] == pytest.approx(charpoly_eigenvalues(r), abs=1e-8)
        for j in range(4):
            assert np.linalg.norm(r @ w[:, j] - lam[j] * w[:, j]) < 1e-8

    def test_non_square_rejected(self):
        with pytest.raises(DataError):
            jacobi_eigh(np.ones((2, 3)))


class TestFit:
    def test_trace_equals_p(self):
        rng = np.random.default_rng(3)
        for p in (3, 8, 15):
            model, _ = fit_correlation_pca(make_dataset(rng.standard_normal((60, p))))
            assert float(model.eigenvalues.sum()) == pytest.approx(p, abs=1e-9)

    def test_orthonormal_loadings(self):
        rng = np.random.default_rng(4)
        model, _ = fit_correlation_pca(make_dataset(rng.standard_normal((50, 7))))
        gram = model.loadings.T @ model.loadings
        assert np.abs(gram - np.eye(7)).max() < 1e-8

    def test_sign_convention_largest_entry_positive(self):
        rng = np.random.default_rng(5)
        model, _ = fit_correlation_pca(make_dataset(rng.standard_normal((50, 6))))
        for j in range(6):
            col = model.loadings[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_bit_identical_refits(self):
        rng = np.random.default_rng(6)
        d = make_dataset(rng.standard_normal((40, 5)))
        m1, _ = fit_correlation_pca(d)
        m2, _ = fit_correlation_pca(d)
        assert np.array_equal(m1.loadings, m2.loadings)
        assert np.array_equal(m1.eigenvalues, m2.eigenvalues)

    def test_scale_invariance_of_scores(self):
        rng = np.random.default_rng(7)
        raw = rng.standard_normal((60, 4)) + 5.0
        m1, z1 = fit_correlation_pca(make_dataset(raw))
        scaled = raw.copy()
        scaled[:, 2] *= 37.5
        m2, z2 = fit_correlation_pca(make_dataset(scaled))
        s1 = score(retain_components(m1), z1, [f"R{i}" for i in range(60)])
        s2 = score(retain_components(m2), z2, [f"R{i}" for i in range(60)])
        assert np.abs(s1.scores - s2.scores).max() < 1e-8

    def test_variable_permutation_permutes_loadings(self):
        rng = np.random.default_rng(8)
        raw = rng.standard_normal((50, 5))
        names = [f"V{j}" for j in range(5)]
        m1, z1 = fit_correlation_pca(make_dataset(raw, names))
        perm = [3, 0, 4, 1, 2]
        m2, z2 = fit_correlation_pca(make_dataset(raw[:, perm], [names[j] for j in perm]))
        assert m2.eigenvalues == pytest.approx(m1.eigenvalues, abs=1e-8)
        assert np.abs(m2.loadings - m1.loadings[perm, :]).max() < 1e-8
        ids = [f"R{i}" for i in range(50)]
        s1 = score(retain_components(m1), z1, ids)
        s2 = score(retain_components(m2), z2, ids)
        assert np.abs(s1.scores - s2.scores).max() < 1e-8


class TestRetention:
    def test_published_spectrum_keeps_five(self):
        assert retained_count(PUBLISHED_EIGENVALUES) == 5

    def test_leading_variance_fraction_matches_published_percent(self):
        # 11.19 of 26 total -> 43.04%, the published table rounds to 43.05
        fraction = PUBLISHED_EIGENVALUES[0] / 26.0
        assert abs(fraction * 100.0 - 43.05) <= 0.05

    def test_model_variance_fraction_is_eigenvalue_over_p(self):
        rng = np.random.default_rng(20)
        model, _ = fit_correlation_pca(make_dataset(rng.standard_normal((40, 6))))
        assert np.allclose(model.variance_fraction, model.eigenvalues / 6.0)

    def test_cumulative_strategy_on_published_spectrum(self):
        assert retained_count(PUBLISHED_EIGENVALUES, "cumulative", 0.50) == 2

    def test_first_only(self):
        assert retained_count(PUBLISHED_EIGENVALUES, "first_only") == 1

    def test_kaiser_inclusive_at_exactly_one(self):
        assert retained_count([1.0, 1.0, 1.0]) == 3

    def test_retention_of_zero_aborts(self):
        rng = np.random.default_rng(9)
        model, _ = fit_correlation_pca(make_dataset(rng.standard_normal((30, 3))))
        with pytest.raises(DataError, match="keeps no component"):
            retain_components(model, threshold=100.0)


class TestScore:
    def test_single_variable_score_is_the_z_column(self):
        rng = np.random.default_rng(10)
        d = make_dataset(rng.uniform(0, 4, (20, 1)))
        model, z = fit_correlation_pca(d)
        s = score(retain_components(model), z, d.region_ids)
        assert np.allclose(s.scores[:, 0], z[:, 0])

    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(11)
        d = make_dataset(rng.standard_normal((40, 6)))
        model, z = fit_correlation_pca(d)
        model = retain_components(model, threshold=0.0)  # keep everything
        s = score(model, z, d.region_ids)
        assert np.abs(s.scores @ model.loadings.T - z).max() < 1e-8

    def test_score_variance_equals_eigenvalue(self):
        rng = np.random.default_rng(12)
        d = make_dataset(rng.standard_normal((200, 5)))
        model, z = fit_correlation_pca(d)
        s = score(retain_components(model), z, d.region_ids)
        for j in range(s.k):
            assert float(s.scores[:, j].var(ddof=1)) == pytest.approx(
                float(model.eigenvalues[j]), abs=1e-6
            )
            assert abs(float(s.scores[:, j].mean())) < 1e-9

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(13)
        d = make_dataset(rng.standard_normal((30, 4)))
        model, z = fit_correlation_pca(d)
        with pytest.raises(DataError):
            score(retain_components(model), z[:, :3], d.region_ids)


class TestSubstantiveLoadings:
    def test_first_component_membership(self):
        named = substantive_loadings(published_model())[0]
        names = [n for n, _, _ in named]
        for expected in ("DVH", "SMO", "DVL", "DVR"):
            assert expected in names
        assert "ERP" not in names  # |-0.18| sits below the 0.20 cutoff
        assert named[0][0] == "DVH"  # largest magnitude first

    def test_fifth_component_membership(self):
        named = substantive_loadings(published_model())[4]
        assert [n for n, _, _ in named][:3] == ["IMM", "ATT", "HCC2"]
        signs = {n: s for n, _, s in named}
        assert signs["IMM"] == 1 and signs["ATT"] == -1 and signs["HCC2"] == -1

    def test_threshold_above_unit_weight_empties_lists(self):
        lists = substantive_loadings(published_model(), threshold=1.1)
        assert all(component == [] for component in lists)


class TestIndexSkewness:
    def test_symmetric_index_is_low_band(self):
        rng = np.random.default_rng(14)
        s = make_scores(rng.standard_normal((500, 1)))
        report = index_skewness_report(s)
        assert report[0].band == "low" and report[0].acceptable

    def test_published_value_banding(self):
        band, acceptable = skewness_band(-1.42)
        assert band == "medium" and acceptable
        band, acceptable = skewness_band(-0.68)
        assert band == "low" and acceptable

    def test_extreme_skew_flagged(self):
        band, acceptable = skewness_band(2.5)
        assert band == "high" and not acceptable
