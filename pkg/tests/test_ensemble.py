import numpy as np
import pytest

from rankone_nnls.ensemble import (
    MeasurementEnsemble,
    SparseNonnegSignal,
    SubgaussianLaw,
    adjoint,
    build_phi,
    forward,
    gram_column,
    gram_matrix,
    load_ensemble,
    regenerate_vector,
    sample_ensemble,
    save_ensemble,
)
from rankone_nnls.errors import DimensionError, ParameterError
from rankone_nnls.numerics import p_vectorize

COMPLEX_LAWS = ["complex-gaussian", "complex-rademacher", "uniform-symmetric"]


class TestSampling:
    def test_deterministic_regeneration(self):
        a = sample_ensemble(4, 8, law=SubgaussianLaw.gaussian(), seed=7)
        b = sample_ensemble(4, 8, law=SubgaussianLaw.gaussian(), seed=7)
        assert np.array_equal(a.vectors, b.vectors)

    def test_per_vector_purity(self):
        e = sample_ensemble(5, 12, law=SubgaussianLaw.gaussian(), seed=99)
        for i in (0, 3, 11):
            np.testing.assert_array_equal(regenerate_vector(e, i), e.vectors[i])

    @pytest.mark.parametrize("kind", COMPLEX_LAWS)
    def test_law_moments(self, kind):
        # E[Re] = E[Im] = 0 and E[Re^2] = E[Im^2] = 1/2, within 4 standard errors
        law = SubgaussianLaw.named(kind)
        e = sample_ensemble(8, 20_000, law=law, seed=5)
        parts = np.concatenate([e.vectors.real.ravel(), e.vectors.imag.ravel()])
        k = parts.size
        se_mean = parts.std(ddof=1) / np.sqrt(k)
        assert abs(parts.mean()) <= 4 * se_mean
        re2 = e.vectors.real.ravel() ** 2
        im2 = e.vectors.imag.ravel() ** 2
        for sq in (re2, im2):
            se = sq.std(ddof=1) / np.sqrt(sq.size)
            assert abs(sq.mean() - 0.5) <= 4 * max(se, 1e-12)

    def test_mean_squared_norm(self):
        e = sample_ensemble(16, 10_000, law=SubgaussianLaw.gaussian(), seed=11)
        norms2 = np.sum(np.abs(e.vectors) ** 2, axis=1)
        assert abs(norms2.mean() - 16.0) <= 0.5

    def test_rademacher_unit_modulus(self):
        e = sample_ensemble(6, 50, law=SubgaussianLaw.rademacher(), seed=2)
        np.testing.assert_allclose(np.abs(e.vectors) ** 2, 1.0, atol=1e-14)

    def test_real_gaussian_variant(self):
        e = sample_ensemble(8, 5000, law=SubgaussianLaw.real_gaussian(), seed=3)
        assert np.all(e.vectors.imag == 0)
        re2 = e.vectors.real.ravel() ** 2
        se = re2.std(ddof=1) / np.sqrt(re2.size)
        assert abs(re2.mean() - 1.0) <= 4 * se

    def test_degenerate_dimension(self):
        with pytest.raises(DimensionError):
            sample_ensemble(1, 4)

    def test_unknown_law(self):
        with pytest.raises(ParameterError):
            SubgaussianLaw(kind="bogus")


class TestForward:
    def test_unit_vector_gives_outer_product(self):
        e = sample_ensemble(3, 5, seed=1)
        x = np.zeros(5)
        x[2] = 1.0
        expected = np.outer(e.vectors[2], e.vectors[2].conj())
        np.testing.assert_allclose(forward(e, x), expected, atol=1e-14)

    def test_zero(self):
        e = sample_ensemble(3, 5, seed=1)
        assert np.all(forward(e, np.zeros(5)) == 0)

    def test_matches_triple_loop_oracle(self, rng):
        e = sample_ensemble(3, 5, seed=42)
        x = rng.standard_normal(5)
        Y = np.zeros((3, 3), dtype=complex)
        for i in range(5):
            for k in range(3):
                for l in range(3):
                    Y[k, l] += x[i] * e.vectors[i, k] * np.conj(e.vectors[i, l])
        np.testing.assert_allclose(forward(e, x), Y, atol=1e-12)

    def test_hermitian_output(self, rng):
        e = sample_ensemble(6, 20, seed=8)
        Y = forward(e, rng.standard_normal(20))
        assert np.max(np.abs(Y - Y.conj().T)) < 1e-12

    def test_psd_for_nonnegative_weights(self, rng):
        e = sample_ensemble(6, 20, seed=8)
        Y = forward(e, np.abs(rng.standard_normal(20)))
        eig = np.linalg.eigvalsh(Y)
        assert eig.min() >= -1e-9 * np.linalg.norm(Y)

    def test_linearity(self, rng):
        e = sample_ensemble(4, 9, seed=13)
        x, y = rng.standard_normal((2, 9))
        a, b = 0.7, -1.3
        np.testing.assert_allclose(
            forward(e, a * x + b * y),
            a * forward(e, x) + b * forward(e, y),
            atol=1e-12,
        )

    def test_dimension_mismatch(self):
        e = sample_ensemble(3, 5, seed=1)
        with pytest.raises(DimensionError):
            forward(e, np.zeros(6))


class TestAdjoint:
    def test_identity_gives_squared_norms(self):
        e = sample_ensemble(4, 7, seed=21)
        np.testing.assert_allclose(
            adjoint(e, np.eye(4, dtype=complex)),
            np.sum(np.abs(e.vectors) ** 2, axis=1),
            rtol=1e-12,
        )

    def test_zero(self):
        e = sample_ensemble(4, 7, seed=21)
        assert np.all(adjoint(e, np.zeros((4, 4), dtype=complex)) == 0)

    def test_adjoint_identity(self, rng, hermitian):
        e = sample_ensemble(5, 11, seed=4)
        for _ in range(10):
            x = rng.standard_normal(11)
            T = hermitian(rng, 5)
            lhs = np.vdot(forward(e, x), T).real
            rhs = x @ adjoint(e, T)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

    def test_rejects_non_hermitian(self, rng):
        e = sample_ensemble(4, 7, seed=21)
        T = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        with pytest.raises(ParameterError):
            adjoint(e, T)


class TestPhi:
    def test_columns_are_embedded_outer_products(self):
        e = sample_ensemble(3, 6, seed=31)
        phi = build_phi(e)
        m = 2 * 3 * 2
        assert phi.shape == (m, 6)
        for i in range(6):
            col = p_vectorize(np.outer(e.vectors[i], e.vectors[i].conj())) / np.sqrt(m)
            np.testing.assert_allclose(phi[:, i], col, atol=1e-13)

    def test_mean_column_norm(self):
        e = sample_ensemble(8, 4000, law=SubgaussianLaw.gaussian(), seed=17)
        phi = build_phi(e)
        norms2 = np.sum(phi**2, axis=0)
        se = norms2.std(ddof=1) / np.sqrt(norms2.size)
        assert abs(norms2.mean() - 1.0) <= 4 * se

    def test_composition_identity(self, rng):
        e = sample_ensemble(4, 10, seed=23)
        phi = build_phi(e)
        m = 2 * 4 * 3
        for _ in range(5):
            x = rng.standard_normal(10)
            np.testing.assert_allclose(
                phi @ x,
                p_vectorize(forward(e, x)) / np.sqrt(m),
                atol=1e-12,
            )


class TestGram:
    def test_matches_embedded_inner_products(self, rng):
        e = sample_ensemble(4, 8, seed=9)
        G = gram_matrix(e)
        for i in range(8):
            for j in range(8):
                ai, aj = e.vectors[i], e.vectors[j]
                Ai = np.outer(ai, ai.conj())
                Aj = np.outer(aj, aj.conj())
                assert G[i, j] == pytest.approx(np.vdot(Ai, Aj).real, rel=1e-12)
        np.testing.assert_allclose(gram_column(e, 3), G[:, 3], rtol=1e-13)


class TestSaveLoad:
    def test_round_trip(self, tmp_path):
        e = sample_ensemble(5, 9, law=SubgaussianLaw.rademacher(), seed=77)
        path = tmp_path / "ensemble.json"
        save_ensemble(e, path)
        e2 = load_ensemble(path)
        assert e2.law == e.law
        np.testing.assert_array_equal(e2.vectors, e.vectors)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(ParameterError):
            load_ensemble(path)


class TestSparseSignal:
    def test_dense_round_trip(self):
        sig = SparseNonnegSignal(N=6, support=[4, 1], values=[2.0, 3.0])
        x = sig.to_dense()
        assert x[1] == 3.0 and x[4] == 2.0 and x.sum() == 5.0
        assert list(sig.support) == [1, 4]  # sorted on construction

    def test_rejects_nonpositive_values(self):
        with pytest.raises(ParameterError):
            SparseNonnegSignal(N=4, support=[0], values=[0.0])

    def test_rejects_duplicate_support(self):
        with pytest.raises(ParameterError):
            SparseNonnegSignal(N=4, support=[1, 1], values=[1.0, 2.0])
