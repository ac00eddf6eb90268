import math

import numpy as np
import pytest

from ncprob import randmat as rm


class TestGUE:
    def test_hermitian_exact(self):
        a = rm.sample_gue(64, seed=0)
        assert np.abs(a - a.conj().T).max() == 0

    def test_deterministic_per_seed(self):
        assert np.array_equal(rm.sample_gue(16, seed=3),
                              rm.sample_gue(16, seed=3))

    def test_scalar_variance(self):
        # N=1: a single real Gaussian with variance 1/2
        vals = np.array([rm.sample_gue(1, seed=s)[0, 0].real
                         for s in range(10_000)])
        assert abs(vals.var() - 0.5) < 0.025

    def test_second_moment(self):
        phis = [rm.trace_state(rm.sample_gue(200, seed=s) @
                               rm.sample_gue(200, seed=s))
                for s in range(50)]
        assert abs(np.mean(phis) - 1.0) < 0.05

    def test_wigner_distance(self):
        dists = rm.wigner_check(1000, seeds=(7,))
        assert dists[0] <= 0.06


class TestESD:
    def test_diagonal_atoms(self):
        d = np.diag([1.0, 2.0, 3.0])
        atoms = rm.esd(d).atoms
        assert [a for a, _ in atoms] == [1.0, 2.0, 3.0]

    def test_moments_match_traces(self):
        a = rm.sample_gue(60, seed=5)
        mu = rm.esd(a)
        for k in range(1, 9):
            tracek = rm.trace_state(np.linalg.matrix_power(a, k))
            assert abs(float(mu.moments(8)[k]) - tracek) < 1e-9

    def test_size_guard(self):
        with pytest.raises(rm.RandMatError):
            rm.esd(np.eye(5000))


class TestHaarFreeness:
    def test_unitary(self):
        u = rm.haar_unitary(100, seed=1)
        assert np.abs(u @ u.conj().T - np.eye(100)).max() < 1e-10

    def test_identity_partner_vanishes(self):
        a = rm.sample_gue(100, seed=2)
        assert rm.freeness_statistic(a, np.eye(100)) == 0.0

    def test_independent_gue_pair(self):
        a = rm.sample_gue(500, seed=1)
        b = rm.sample_gue(500, seed=2)
        assert rm.freeness_statistic(a, b) <= 0.1

    def test_haar_rotated_projection(self):
        n = 500
        diag = np.diag(np.concatenate([np.ones(n // 2), -np.ones(n // 2)]))
        u = rm.haar_unitary(n, seed=5)
        b = u @ diag @ u.conj().T
        assert rm.freeness_statistic(diag, b) <= 0.1
        # phi(ABAB) ~ 0 for centered free a, b
        assert abs(rm.trace_state(diag @ b @ diag @ b)) <= 0.05


class TestFreeAR1:
    def test_pure_noise(self):
        res = rm.free_ar1(300, steps=5, c=0.0, noise="gue", seed=1)
        assert abs(res.var_last - 1.0) < 0.1

    def test_stationary_variance(self):
        res = rm.free_ar1(500, steps=100, c=0.5, noise="gue", seed=3)
        assert abs(res.var_last - 4 / 3) < 0.1

    def test_mixed_moment_vanishes(self):
        res = rm.free_ar1(500, steps=100, c=0.5, noise="gue", seed=3)
        assert abs(res.mixed_moment) < 0.05

    def test_squared_noise_runs(self):
        res = rm.free_ar1(200, steps=30, c=0.5, noise="squared_gue", seed=4)
        assert abs(res.mean_last) < 0.1
        assert abs(res.mixed_moment) < 0.05

    def test_rejects_nonstationary(self):
        with pytest.raises(rm.RandMatError):
            rm.free_ar1(10, 5, c=1.0)


class TestSquaredGUE:
    def test_marchenko_pastur_limit(self):
        a = rm.sample_gue(1000, seed=9)
        dist = rm.kolmogorov_distance(rm.esd(a @ a), rm.marchenko_pastur_cdf)
        assert dist <= 0.08


class TestTraceState:
    def test_unit_on_identity(self):
        for n in (1, 7, 64):
            assert rm.trace_state(np.eye(n)) == 1.0
