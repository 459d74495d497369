import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankone_nnls.certificates import (
    DELTA_MAX,
    NspCertificate,
    cd_constants,
    constant_chain,
    fourth_order_zeta,
    hanson_wright_bound,
    heavy_tailed_rip_bound,
    mplus_certificate,
    mplus_concentration_bound,
    phi_nsp_to_frobenius,
    random_model_bound,
    random_model_constants,
    rip_to_nsp,
    sparsity_threshold,
    deterministic_error_bound,
    weighted_nsp,
)
from rankone_nnls.ensemble import MeasurementEnsemble, SubgaussianLaw, sample_ensemble
from rankone_nnls.errors import InfeasibleError, ParameterError


class TestRipToNsp:
    def test_reference_point(self):
        # independent recomputation of the map at delta = 0.5
        delta = 0.5
        den = math.sqrt(1 - delta**2) - delta / 4
        cert = rip_to_nsp(delta, s=4)
        assert cert.rho == pytest.approx(delta / den, rel=1e-14)
        assert cert.tau == pytest.approx(math.sqrt(1.5) / den, rel=1e-14)
        assert 0.67 <= cert.rho <= 0.68
        C, D = cd_constants(cert.rho)
        assert 8.5 <= C <= 8.7
        assert 11.2 <= D <= 11.4
        assert cert.tau == pytest.approx(1.6528, abs=2e-4)

    def test_small_delta_limits(self):
        cert = rip_to_nsp(1e-9, s=1)
        assert cert.rho == pytest.approx(0.0, abs=1e-8)
        assert cert.tau == pytest.approx(1.0, abs=1e-8)

    def test_one_sixth(self):
        cert = rip_to_nsp(1.0 / 6.0, s=1)
        assert cert.rho <= 0.18
        assert cert.tau <= 1.15

    def test_domain_guard(self):
        with pytest.raises(InfeasibleError):
            rip_to_nsp(DELTA_MAX, s=1)
        with pytest.raises(InfeasibleError):
            rip_to_nsp(0.9, s=1)

    def test_strictly_increasing_and_below_one(self):
        deltas = np.linspace(1e-4, DELTA_MAX - 1e-9, 200)
        rhos = [rip_to_nsp(d, 1).rho for d in deltas]
        taus = [rip_to_nsp(d, 1).tau for d in deltas]
        assert all(a < b for a, b in zip(rhos, rhos[1:]))
        assert all(a < b for a, b in zip(taus, taus[1:]))
        assert rhos[-1] < 1.0


class TestCdConstants:
    def test_origin(self):
        assert cd_constants(0.0) == (1.0, 3.0)

    def test_fig_reference(self):
        C, D = cd_constants(0.675)
        assert C == pytest.approx(8.6, abs=0.1)
        assert D == pytest.approx(11.3, abs=0.1)

    def test_chain_midpoint(self):
        C, D = cd_constants(2 * 0.17649)
        assert C == pytest.approx((1 + 0.35298) ** 2 / (1 - 0.35298), rel=1e-10)
        assert D == pytest.approx((3 + 0.35298) / (1 - 0.35298), rel=1e-10)

    @given(st.floats(0.0, 0.999))
    @settings(max_examples=100)
    def test_c_below_d(self, rho):
        C, D = cd_constants(rho)
        assert C <= D + 1e-12

    def test_domain(self):
        with pytest.raises(InfeasibleError):
            cd_constants(1.0)


class TestWeightedNsp:
    def cert(self, rho=0.18, tau=1.1):
        return NspCertificate(q=2.0, s=3, rho=rho, tau=tau)

    def test_all_ones_identity(self):
        cert = self.cert()
        out = weighted_nsp(cert, np.ones(7))
        assert out == cert

    def test_kappa_two(self):
        out = weighted_nsp(self.cert(rho=0.18), np.array([1.0, 2.0, 1.5]))
        assert out.rho == pytest.approx(0.36)
        assert out.tau == pytest.approx(2.0 * 1.1)

    def test_infeasible_kappa(self):
        with pytest.raises(InfeasibleError):
            weighted_nsp(self.cert(rho=0.18), np.array([1.0, 6.0]))


class TestMPlusCertificate:
    def test_identity_certificate(self):
        e = sample_ensemble(4, 9, seed=5)
        mp = mplus_certificate(e, np.eye(4, dtype=complex))
        norms2 = np.sum(np.abs(e.vectors) ** 2, axis=1)
        np.testing.assert_allclose(mp.w, norms2, rtol=1e-12)
        assert mp.kappa == pytest.approx(norms2.max() / norms2.min(), rel=1e-12)

    def test_scale_invariance(self):
        e = sample_ensemble(4, 9, seed=5)
        a = mplus_certificate(e, np.eye(4, dtype=complex))
        b = mplus_certificate(e, 3.7 * np.eye(4, dtype=complex))
        assert a.kappa == pytest.approx(b.kappa, rel=1e-12)
        assert a.theta == pytest.approx(b.theta, rel=1e-12)

    def test_hand_built_ensemble(self):
        vectors = np.array([[1.0, 0.0], [0.0, 2.0]], dtype=complex)
        e = MeasurementEnsemble(n=2, N=2, seed=0, law=SubgaussianLaw.gaussian(), vectors=vectors)
        mp = mplus_certificate(e, np.eye(2, dtype=complex))
        np.testing.assert_allclose(mp.w, [1.0, 4.0])
        assert mp.kappa == pytest.approx(4.0)

    def test_violation_raises(self):
        e = sample_ensemble(3, 5, seed=1)
        with pytest.raises(InfeasibleError):
            mplus_certificate(e, -np.eye(3, dtype=complex))


class TestDeterministicBound:
    def mp(self, kappa, theta=0.5):
        return type("MP", (), {"kappa": kappa, "theta": theta})()

    def test_zero_inputs(self):
        cert = NspCertificate(q=2.0, s=4, rho=0.17649, tau=1.14379)
        bb = deterministic_error_bound(cert, self.mp(2.0), 0.0, 0.0, p=2.0)
        assert bb.total == 0.0

    def test_origin_constants(self):
        cert = NspCertificate(q=2.0, s=4, rho=1e-15, tau=1.0)
        bb = deterministic_error_bound(cert, self.mp(1.0), 1.0, 1.0, p=2.0)
        assert bb.constants["C_prime"] == pytest.approx(2.0)
        assert bb.constants["D_prime"] == pytest.approx(6.0)

    def test_matches_independent_recomputation(self):
        kappa, rho, tau, theta = 2.0, 0.17649, 1.14379, 0.77
        p = q = 2.0
        s = 4
        sigma_s, e_norm = 0.9, 0.31
        cert = NspCertificate(q=q, s=s, rho=rho, tau=tau)
        bb = deterministic_error_bound(cert, self.mp(kappa, theta), sigma_s, e_norm, p=p)
        kr = kappa * rho
        c_prime = 2 * (1 + kr) ** 2 / (1 - kr)
        d_prime = 2 * (3 + kr) / (1 - kr)
        t1 = c_prime * kappa * sigma_s / s ** (1 - 1 / p)
        t2 = d_prime * kappa / s ** (1 / q - 1 / p) * (tau + theta / s ** (1 - 1 / q)) * e_norm
        assert bb.term_sparsity == pytest.approx(t1, rel=1e-12)
        assert bb.term_noise == pytest.approx(t2, rel=1e-12)
        assert bb.total == pytest.approx(t1 + t2, rel=1e-12)

    def test_homogeneity_degree_one(self):
        cert = NspCertificate(q=2.0, s=5, rho=0.2, tau=1.2)
        mp = self.mp(1.5, 0.4)
        base = deterministic_error_bound(cert, mp, 0.3, 0.7, p=1.5)
        scaled = deterministic_error_bound(cert, mp, 3.0 * 0.3, 3.0 * 0.7, p=1.5)
        assert scaled.total == pytest.approx(3.0 * base.total, rel=1e-12)

    def test_infeasible_product(self):
        cert = NspCertificate(q=2.0, s=4, rho=0.6, tau=1.0)
        with pytest.raises(InfeasibleError):
            deterministic_error_bound(cert, self.mp(2.0), 1.0, 1.0, p=2.0)

    def test_p_domain(self):
        cert = NspCertificate(q=2.0, s=4, rho=0.1, tau=1.0)
        with pytest.raises(InfeasibleError):
            deterministic_error_bound(cert, self.mp(1.0), 1.0, 1.0, p=3.0)


class TestRandomModelConstants:
    def test_reference_chain(self):
        c2, c3, c4 = random_model_constants(1.0 / 3.0, 1.0 / 6.0)
        # independent recomputation of the whole chain
        den = math.sqrt(1 - (1 / 6) ** 2) - 1 / 24
        rho = (1 / 6) / den
        tau = math.sqrt(7 / 6) / den
        kr = 2.0 * rho
        C = (1 + kr) ** 2 / (1 - kr)
        D = (3 + kr) / (1 - kr)
        assert c2 == pytest.approx(4.0 * C, rel=1e-12)
        assert c3 == pytest.approx(3.0 * D, rel=1e-12)
        assert c4 == pytest.approx(8.0 * tau / 3.0, rel=1e-12)
        # below the reference roundings
        assert c2 <= 11.36 and c3 <= 15.55 and c4 <= 3.07

    def test_limits(self):
        c2, c3, c4 = random_model_constants(1e-12, 1e-12)
        assert c2 == pytest.approx(2.0, abs=1e-9)
        assert c3 == pytest.approx(6.0, abs=1e-9)
        assert c4 == pytest.approx(2.0, abs=1e-9)

    def test_infeasible_combination(self):
        # kappa_eta = 19 at eta = 0.9 and rho(0.3) ~ 0.357 gives product > 1
        with pytest.raises(InfeasibleError):
            random_model_constants(0.9, 0.3)


class TestRandomModelBound:
    def test_zero(self):
        bb = random_model_bound((11.3, 15.5, 3.05), 0.0, 0.0, n=25, s=20, p=2.0)
        assert bb.total == 0.0

    def test_s_equals_n(self):
        c = (11.3, 15.5, 3.05)
        bb = random_model_bound(c, 0.0, 1.0, n=25, s=25, p=2.0)
        assert bb.term_noise == pytest.approx(15.5 * (3.05 + 1.0) / 25.0, rel=1e-12)

    def test_matches_independent_recomputation(self):
        c2, c3, c4 = random_model_constants(1.0 / 3.0, 1.0 / 6.0)
        n, s, p, e_frob = 25, 25, 1.0, 1.0
        bb = random_model_bound((c2, c3, c4), 0.4, e_frob, n=n, s=s, p=p)
        t1 = c2 * 0.4 / s ** (1 - 1 / p)
        t2 = c3 * (c4 + math.sqrt(n / s)) / s ** (0.5 - 1 / p) * e_frob / n
        assert bb.total == pytest.approx(t1 + t2, rel=1e-12)

    def test_p_domain(self):
        with pytest.raises(InfeasibleError):
            random_model_bound((1, 1, 1), 0.0, 1.0, n=4, s=2, p=2.5)


class TestSparsityThreshold:
    def test_n_equals_m(self):
        n = 5
        m = 2 * n * (n - 1)
        assert sparsity_threshold(n, m, alpha=1.0) == m

    def test_direct_evaluation(self):
        n, m = 20, 760
        expected = math.floor(m / math.log(math.e * 2.0) ** 2)
        assert sparsity_threshold(n, 2 * m, alpha=1.0) == expected == 265

    def test_monotone_in_alpha(self):
        vals = [sparsity_threshold(20, 2000, alpha=a) for a in (0.01, 0.1, 0.5, 1.0)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))
        assert sparsity_threshold(20, 2000, alpha=1e-6) == 0

    def test_requires_enough_columns(self):
        with pytest.raises(InfeasibleError):
            sparsity_threshold(20, 100)


class TestHansonWright:
    def test_cap_at_zero_threshold(self):
        b = hanson_wright_bound(0.0, 1.0, 1.0, 1.0)
        assert b.probability == 1.0 and b.raw == 2.0
        bc = hanson_wright_bound(0.0, 1.0, 1.0, 1.0, complex_case=True)
        assert bc.probability == 1.0 and bc.raw == 4.0

    def test_crossover_point(self):
        # both exponent arguments equal 1 when t = K^2 * frob = K^2 * op * 1
        c = 0.37
        b = hanson_wright_bound(1.0, 1.0, 1.0, 1.0, c=c)
        assert b.raw == pytest.approx(2.0 * math.exp(-c), rel=1e-12)

    def test_complex_dominates_real(self, rng):
        for _ in range(50):
            t = float(rng.uniform(0.01, 10))
            K = float(rng.uniform(1, 3))
            fr = float(rng.uniform(0.1, 5))
            op = float(rng.uniform(0.05, fr))
            re = hanson_wright_bound(t, K, fr, op)
            co = hanson_wright_bound(t, K, fr, op, complex_case=True)
            assert co.raw >= re.raw / 2.0 - 1e-15
            assert co.raw >= re.raw  # larger prefactor and weaker exponent

    def test_monotone_decreasing_in_t(self):
        raws = [hanson_wright_bound(t, 1.0, 1.0, 1.0).raw for t in (0.5, 1.0, 2.0, 5.0)]
        assert all(a >= b for a, b in zip(raws, raws[1:]))


class TestFourthOrderZeta:
    def test_centered_unit_variance(self):
        # mu = 0, sigma^2 = 1, L = psi2, n >= psi2^4 collapses to omega^2 / psi2^4
        for psi2 in (1.0, 1.2, 1.5):
            for omega in (0.1, 0.5, 1.0):
                n = max(2, int(math.ceil(psi2**4)))
                z = fourth_order_zeta(omega, psi2, 0.0, 1.0, n)
                assert z == pytest.approx(omega**2 / psi2**4, rel=1e-12)

    def test_vanishes_with_omega(self):
        assert fourth_order_zeta(1e-12, 1.0, 1.0, 1.0, 10) < 1e-11

    def test_matches_term_enumeration(self):
        omega, L, mu, s2, n = 1.0, 1.0, 1.0, 1.0, 100
        terms = [
            omega**2 / (L**2 * mu**2 * s2**2),
            omega / (L**2 * (s2 + 2 * mu**2)),
            omega**2 / (L**4 * (s2 + mu**2) ** 2),
            omega ** (2 / 3) / (L**2 * mu ** (2 / 3)),
            omega / (L**3 * mu),
            omega**2 / (L**6 * mu**2) * n,
            omega**0.5 / L**2,
            omega ** (2 / 3) / L ** (8 / 3),
            omega / L**4,
            omega**2 / L**8 * n,
        ]
        assert fourth_order_zeta(omega, L, mu, s2, n) == pytest.approx(min(terms), rel=1e-12)

    def test_degenerate_moments(self):
        # mu = sigma2 = 0: divisions by zero drop out of the minimum
        z = fourth_order_zeta(0.25, 2.0, 0.0, 0.0, 10)
        assert z == pytest.approx(min(0.5 / 4.0, 0.25 ** (2 / 3) / 2 ** (8 / 3),
                                      0.25 / 16.0, 0.25**2 / 256.0 * 10), rel=1e-12)

    @given(st.floats(0.01, 10), st.floats(0.01, 10))
    @settings(max_examples=60)
    def test_monotone_in_omega_and_L(self, w1, w2):
        lo, hi = sorted((w1, w2))
        assert fourth_order_zeta(lo, 1.3, 0.5, 1.0, 10) <= fourth_order_zeta(
            hi, 1.3, 0.5, 1.0, 10
        ) + 1e-15
        L1, L2 = 1.0 + lo / 20, 1.0 + hi / 20
        assert fourth_order_zeta(1.0, L2, 0.5, 1.0, 10) <= fourth_order_zeta(
            1.0, L1, 0.5, 1.0, 10
        ) + 1e-15


class TestConcentrationBound:
    def test_vanishes_for_large_n(self):
        b = mplus_concentration_bound(0.999, 1.0, n=10**6, N=10)
        assert b.probability < 1e-12

    def test_kappa_bound_at_one_third(self):
        b = mplus_concentration_bound(1.0 / 3.0, 1.0, n=10, N=10)
        assert b.kappa_bound == pytest.approx(2.0)

    def test_direct_value(self):
        b = mplus_concentration_bound(0.3, 1.0, n=100, N=1000, c=0.1)
        assert b.raw == pytest.approx(2000.0 * math.exp(-0.45), rel=1e-12)
        assert b.probability == min(b.raw, 1.0)


class TestHeavyTailedRip:
    def test_terms_exposed(self):
        delta, probs = heavy_tailed_rip_bound(s=10, n=16, N=1000, psi1=2.0, theta=0.5)
        assert delta > 0.5  # includes the additive theta
        assert len(probs) == 3
        assert probs[1] == probs[2]  # default K' equalizes the column-norm terms

    def test_monotone_in_s(self):
        d1, _ = heavy_tailed_rip_bound(s=5, n=16, N=1000, psi1=2.0)
        d2, _ = heavy_tailed_rip_bound(s=20, n=16, N=1000, psi1=2.0)
        assert d1 <= d2


class TestConstantChain:
    def test_chain_contents(self):
        chain = constant_chain(n=20, N=1520)
        names = {c["name"]: c["value"] for c in chain["constants"]}
        assert 11.28 <= names["c2"] <= 11.36
        assert 15.50 <= names["c3"] <= 15.55
        assert 3.04 <= names["c4"] <= 3.07
        assert names["max_two_s"] == sparsity_threshold(20, 1520)
        assert all("formula" in c for c in chain["constants"])
        assert any("1.65" in note and "1.5" in note for note in chain["notes"])

    def test_phi_certificate_transfer(self):
        cert = rip_to_nsp(0.3, s=2)
        assert cert.norm_tag == "l2-columns"
        out = phi_nsp_to_frobenius(cert, n=4)
        m = 2 * 4 * 3
        assert out.norm_tag == "frobenius"
        assert out.tau == pytest.approx(cert.tau * math.sqrt(2.0 / m))
        assert out.rho == cert.rho
        assert phi_nsp_to_frobenius(out, n=4) == out


class TestCertificateValidation:
    def test_rho_domain(self):
        with pytest.raises(InfeasibleError):
            NspCertificate(q=2.0, s=2, rho=1.0, tau=1.0)

    def test_tau_positive(self):
        with pytest.raises(ParameterError):
            NspCertificate(q=2.0, s=2, rho=0.5, tau=0.0)
