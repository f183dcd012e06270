import numpy as np
import pytest

from conewalk import rng as rngmod
from conewalk.estimators import (BatchedProducts, aperiodicity_report,
                                 coupling_decay, estimate_lyapunov,
                                 estimate_psi, estimate_variance_direct,
                                 estimate_variance_series,
                                 fit_geometric_envelope, envelope_tail,
                                 invariant_regularity, moment_sanity,
                                 variance_via_martingale)
from conewalk.measures import MeasureSpec
from conewalk.posmat import AllowableMatrix, gauges, perron_vector, spectral_radius
from conewalk.simplex import barycenter, contraction_coefficient

G1 = AllowableMatrix([[2.0, 1.0], [1.0, 1.0]])
SINGLE = MeasureSpec.single_atom(G1)
STOCHASTIC = MeasureSpec.atomic([[[0.5, 0.3], [0.5, 0.7]],
                                 [[0.9, 0.2], [0.1, 0.8]]], [0.5, 0.5])


class TestLyapunov:
    def test_single_atom_with_perron_start_is_exact(self):
        # from the fixed direction the deterministic path is exactly linear
        res = estimate_lyapunov(SINGLE, 200, 1, start=perron_vector(G1), seed=0)
        assert res.estimate.value == pytest.approx(np.log(spectral_radius(G1)), abs=1e-8)
        assert res.estimate.std_error == 0.0

    def test_column_stochastic_atoms_give_zero(self):
        res = estimate_lyapunov(STOCHASTIC, 300, 20, seed=1)
        assert abs(res.estimate.value) <= 1e-12
        assert res.spread <= 1e-12 + 0.2  # spread stays tiny but not exactly 0

    def test_start_independence_within_pathwise_spread(self, reference_spec):
        a = estimate_lyapunov(reference_spec, 256, 500, start=(1.0, 0.0), seed=2)
        b = estimate_lyapunov(reference_spec, 256, 500, start=(0.0, 1.0), seed=2)
        # same seed, same paths: estimates differ by at most the mean spread
        assert abs(a.estimate.value - b.estimate.value) <= a.spread + 1e-12

    def test_parameter_validation(self, reference_spec):
        with pytest.raises(ValueError):
            estimate_lyapunov(reference_spec, 0, 10)


class TestCouplingDecay:
    def test_single_atom_matches_deterministic_path(self):
        curve = coupling_decay(SINGLE, 2.0, [1, 2, 3, 4], 5, seed=3)
        power = np.eye(2)
        prev_cs = np.ones(2)
        for n, expected_holder in zip(range(1, 5), curve.values):
            power = G1.entries @ power
            cs = power.sum(axis=0)
            ratios = np.log(cs / prev_cs)
            spread = (ratios.max() - ratios.min()) ** 2.0
            assert expected_holder == pytest.approx(spread, abs=1e-12)
            prev_cs = cs

    def test_rank_one_atom_gives_zero_at_step_one(self):
        flat = MeasureSpec.single_atom([[1.0, 1.0], [1.0, 1.0]])
        curve = coupling_decay(flat, 1.0, [1], 10, seed=4)
        assert curve.values[0] == 0.0

    def test_reference_fit_quality(self, reference_spec):
        curve = coupling_decay(reference_spec, 1.0, range(1, 31), 1000, seed=5)
        assert curve.a_hat is not None and curve.a_hat < 1.0
        assert curve.r_squared > 0.9
        assert curve.max_violation <= 1e-12

    def test_envelope_majorizes(self):
        ns = np.arange(1, 21)
        vals = 0.7 * 0.5 ** ns
        vals[3] *= 3.0  # a bump the fit must still cover
        amp, rate = fit_geometric_envelope(ns, vals)
        assert np.all(amp * rate ** ns >= vals - 1e-15)
        assert envelope_tail(amp, rate, 20) < envelope_tail(amp, rate, 10)


class TestVarianceRoutes:
    def test_single_atom_direct_variance_vanishes(self):
        out = estimate_variance_direct(SINGLE, 64, 50, seed=6)
        for est in out.values():
            assert abs(est.value) <= 1e-20

    def test_column_stochastic_sigma_variance_zero(self):
        out = estimate_variance_direct(STOCHASTIC, 64, 50, seed=7,
                                       functionals=("sigma",))
        assert abs(out["sigma"].value) <= 1e-24

    def test_direct_variants_agree(self, reference_spec):
        out = estimate_variance_direct(reference_spec, 256, 4000, seed=8)
        sigma = out["sigma"]
        for name in ("norm", "v", "kappa"):
            assert sigma.agrees_with(out[name]), name

    def test_series_route_agrees_with_direct(self, reference_spec):
        lam = estimate_lyapunov(reference_spec, 512, 2000, seed=9).estimate.value
        direct = estimate_variance_direct(reference_spec, 256, 4000, seed=10,
                                          functionals=("sigma",))["sigma"]
        curve = coupling_decay(reference_spec, 1.0, range(1, 25), 2000, seed=11)
        env = fit_geometric_envelope(curve.n_grid, curve.values)
        series = estimate_variance_series(reference_spec, 16, 4000, lam,
                                          seed=12, envelope=env)
        assert np.isfinite(series.tail_bound)
        assert direct.agrees_with(series.estimate)

    def test_single_atom_series_vanishes_with_exact_drift(self):
        lam = float(np.log(spectral_radius(G1)))
        series = estimate_variance_series(SINGLE, 8, 20, lam, seed=13, w0_tol=1e-10)
        assert abs(series.estimate.value) <= 1e-12


class TestMartingaleRoute:
    def test_single_atom_differences_vanish(self):
        lam = float(np.log(spectral_radius(G1)))
        psi = estimate_psi(SINGLE, 6, 16, lam, seed=14)
        out = variance_via_martingale(SINGLE, psi, 16, 8, lam, seed=15,
                                      w0_tol=1e-10)
        assert abs(out.estimate.value) <= 1e-10
        assert abs(out.raw_value) <= 1e-10

    def test_psi_envelope_dominates_contributions(self, reference_spec):
        lam = estimate_lyapunov(reference_spec, 512, 1000, seed=16).estimate.value
        psi = estimate_psi(reference_spec, 10, 128, lam, seed=17)
        amp, rate = psi.envelope
        levels = np.arange(1, psi.truncation + 1)
        assert np.all(np.asarray(psi.level_contributions)
                      <= amp * rate ** levels + 1e-12)
        assert psi.tail_bound >= 0

    def test_martingale_diagnostics(self, reference_spec):
        lam = estimate_lyapunov(reference_spec, 512, 2000, seed=18).estimate.value
        psi = estimate_psi(reference_spec, 10, 512, lam, seed=19)
        out = variance_via_martingale(reference_spec, psi, 64, 64, lam, seed=20)
        # martingale averages: both the mean difference and its lag-1
        # autocorrelation sit at zero within noise
        assert abs(out.mean_diff) <= 3.0 * out.mean_diff_se + 0.01
        assert abs(out.lag1_autocorr) <= 3.0 * out.lag1_se + 0.05
        direct = estimate_variance_direct(reference_spec, 256, 4000, seed=21,
                                          functionals=("sigma",))["sigma"]
        assert direct.agrees_with(out.estimate)


class TestAperiodicity:
    def test_single_atom_is_arithmetic(self):
        rep = aperiodicity_report(SINGLE, 4)
        assert rep.verdict == "possibly arithmetic"
        assert len(rep.words) == 4

    def test_atom_with_its_square_is_arithmetic(self):
        spec = MeasureSpec.atomic([G1.entries, (G1 @ G1).entries], [0.5, 0.5])
        rep = aperiodicity_report(spec, 3)
        assert rep.verdict == "possibly arithmetic"

    def test_golden_ratio_radii_flag_aperiodic(self):
        phi = (1.0 + np.sqrt(5.0)) / 2.0
        kappa2 = 2.0 ** phi
        g = [[1.5, 0.5], [0.5, 1.5]]                      # radius 2
        h = [[kappa2 / 2 + 0.25, kappa2 / 2 - 0.25],      # radius 2**phi
             [kappa2 / 2 - 0.25, kappa2 / 2 + 0.25]]
        spec = MeasureSpec.atomic([g, h], [0.5, 0.5])
        rep = aperiodicity_report(spec, 2)
        assert rep.verdict == "aperiodic evidence"
        assert rep.incommensurate_pairs

    def test_reference_spec_shows_evidence(self, reference_spec):
        rep = aperiodicity_report(reference_spec, 3)
        assert rep.verdict == "aperiodic evidence"

    def test_requires_atomic(self):
        with pytest.raises(ValueError):
            aperiodicity_report(MeasureSpec.parametric("lognormal", 2, mu=0.0, sigma=1.0), 2)


class TestRegularity:
    def test_flat_atom_gives_log_two(self):
        flat = MeasureSpec.single_atom([[1.0, 1.0], [1.0, 1.0]])
        for p in (1.0, 2.0):
            est = invariant_regularity(flat, p, 50, 1e-9, seed=22)
            assert est.value == pytest.approx(np.log(2.0) ** p, abs=1e-6)

    def test_single_positive_atom_matches_perron_oracle(self):
        est = invariant_regularity(SINGLE, 2.0, 50, 1e-10, seed=23)
        oracle = abs(np.log(perron_vector(G1).coords.min())) ** 2.0
        assert est.value == pytest.approx(oracle, abs=1e-7)

    def test_doubling_stability(self, reference_spec):
        a = invariant_regularity(reference_spec, 2.0, 1000, 1e-6, seed=24)
        b = invariant_regularity(reference_spec, 2.0, 2000, 1e-6, seed=25)
        assert a.agrees_with(b)

    def test_rejects_non_contracting_measure(self):
        perm = MeasureSpec.atomic([[[0.0, 1.0], [1.0, 0.0]],
                                   [[1.0, 0.0], [0.0, 1.0]]], [0.5, 0.5])
        with pytest.raises(ValueError, match="strictly positive"):
            invariant_regularity(perm, 2.0, 10, 0.5, seed=26)


class TestMomentSanity:
    def test_bounded_support_is_stable(self, reference_spec):
        rep = moment_sanity(reference_spec, 3.0, 4096, seed=27)
        assert rep.stable
        assert np.isfinite(rep.moment.value)

    def test_gauge_values_feed_the_moment(self):
        rep = moment_sanity(SINGLE, 2.0, 100, seed=28)
        expected = np.log(gauges(G1).N) ** 2.0
        assert rep.moment.value == pytest.approx(expected, abs=1e-12)


class TestBatchedProducts:
    def test_matches_scalar_walk_functionals(self, reference_spec):
        batch = BatchedProducts(reference_spec, 31, 4)
        batch.run(50)
        assert np.all(batch.log_v() <= batch.log_kappa() + 1e-9)
        assert np.all(batch.log_kappa() <= batch.log_norm() + 1e-9)
        assert np.all(batch.log_min_entry() <= batch.log_norm() + 1e-9)
        e = barycenter(2).coords
        sig = batch.sigma(e)
        assert np.all(sig <= batch.log_norm() + 1e-12)
        assert np.all(sig >= batch.log_v() - 1e-12)

    def test_determinism(self, reference_spec):
        a = BatchedProducts(reference_spec, 33, 8)
        b = BatchedProducts(reference_spec, 33, 8)
        a.run(20)
        b.run(20)
        assert np.array_equal(a.P, b.P)
        assert np.array_equal(a.log_scale, b.log_scale)
