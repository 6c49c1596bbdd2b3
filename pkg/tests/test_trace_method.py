import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracemethod.errors import DegenerateInputError, InsufficientDataError
from tracemethod.estimators import Direction, PairedDataset, covariances, structure_estimate
from tracemethod.trace_method import (
    DeltaReport,
    NullDistribution,
    Verdict,
    empirical_delta,
    epsilon_decide,
    infer,
    null_sample,
    p_value,
    verdict,
)

from conftest import simulate


def brute_p(samples, observed):
    """Count formula evaluated with plain loops."""
    s = sorted(samples)
    N = len(s)
    med = s[N // 2] if N % 2 else 0.5 * (s[N // 2 - 1] + s[N // 2])
    if observed <= med:
        c = sum(1 for w in samples if w <= observed)
    else:
        c = sum(1 for w in samples if w >= observed)
    return min(1.0, 2.0 * c / N)


def deltas(data):
    cov = covariances(data)
    out = []
    for d in Direction:
        out.append(empirical_delta(cov, structure_estimate(cov, d)))
    return DeltaReport.from_halves(*out)


def _report(dxy, dyx):
    return DeltaReport(dxy, dyx, 1, 1, 1, 1, 1, 1, 2, 2)


class TestEmpiricalDelta:
    def test_proportional_map_is_zero(self, rng):
        x = rng.standard_normal((40, 10))
        rep = deltas(PairedDataset(x, 2.0 * x))
        assert abs(rep.delta_xy) < 1e-12

    def test_log_ratio_invariant(self, rng):
        _, data = simulate(20, seed=3)
        cov = covariances(data)
        h = empirical_delta(cov, structure_estimate(cov))
        assert h.delta == pytest.approx(math.log(h.numerator / h.denominator), abs=1e-15)
        assert h.numerator > 0 and h.denominator > 0

    def test_zero_structure_is_degenerate(self, rng):
        x = rng.standard_normal((10, 4))
        y = np.ones((10, 3))
        cov = covariances(PairedDataset(x, y))
        with pytest.raises(DegenerateInputError):
            empirical_delta(cov, structure_estimate(cov))

    def test_scale_invariance(self, rng):
        _, data = simulate(30, seed=8)
        base = deltas(data)
        for c, d in [(3.0, 0.2), (-1.5, 7.0), (1e3, -1e-2)]:
            scaled = deltas(PairedDataset(c * data.x, d * data.y))
            assert scaled.delta_xy == pytest.approx(base.delta_xy, abs=1e-10)
            assert scaled.delta_yx == pytest.approx(base.delta_yx, abs=1e-10)

    def test_full_sample_reduces_to_plain_statistic(self, rng):
        _, data = simulate(10, k=50, seed=2)
        cov = covariances(data)
        est = structure_estimate(cov)
        h = empirical_delta(cov, est)
        assert h.rank == 10
        A, S = est.a_hat, cov.sigma_x
        tau = lambda M: np.trace(M) / M.shape[0]  # noqa: E731
        plain = math.log(tau(A @ S @ A.T) / (tau(A.T @ A) * tau(S)))
        assert h.delta == pytest.approx(plain, abs=1e-12)

    @pytest.mark.slow
    def test_monte_carlo_forward_and_backward(self):
        ok = 0
        for seed in range(100):
            _, data = simulate(200, k=100, seed=seed)
            rep = deltas(data)
            ok += abs(rep.delta_xy) < 0.05 and rep.delta_yx < -0.1
        assert ok >= 95

    @pytest.mark.slow
    def test_backward_matches_spectral_constant(self):
        _, data = simulate(400, k=200, seed=11)
        cov = covariances(data)
        bwd = structure_estimate(cov, Direction.BACKWARD)
        rep = empirical_delta(cov, bwd)
        z = np.linalg.eigvalsh(bwd.a_hat.T @ bwd.a_hat)[::-1][: rep.rank]
        predicted = -math.log(z.mean() * (1.0 / z).mean())
        assert rep.delta == pytest.approx(predicted, rel=0.10)

    def test_noiseless_identity_backward_plus_forward(self):
        # exact at any n: delta_yx + delta_xy = -log(mean(z) mean(1/z))
        _, data = simulate(40, k=20, seed=5)
        cov = covariances(data)
        fwd = empirical_delta(cov, structure_estimate(cov, Direction.FORWARD))
        bwd_est = structure_estimate(cov, Direction.BACKWARD)
        bwd = empirical_delta(cov, bwd_est)
        z = np.linalg.eigvalsh(bwd_est.a_hat.T @ bwd_est.a_hat)[::-1][: bwd.rank]
        assert fwd.delta + bwd.delta == pytest.approx(-math.log(z.mean() * (1 / z).mean()), rel=1e-6)


class TestNullSample:
    def test_rank_one_is_constant(self, rng):
        x = np.outer(rng.standard_normal(8), rng.standard_normal(5))
        y = x @ rng.standard_normal((5, 5)).T
        cov = covariances(PairedDataset(x, y))
        assert cov.rank_x == 1
        null = null_sample(cov, structure_estimate(cov), 50, seed=1)
        np.testing.assert_allclose(null.samples, null.observed, rtol=1e-12)

    def test_isotropic_on_subspace_is_constant(self, rng):
        # x rows orthogonal with equal norms after centering -> Sigma_X = c * projector
        n, k = 10, 5
        Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
        H = np.eye(k) - 1.0 / k
        Uk, _, _ = np.linalg.svd(H)
        x = 3.0 * Uk[:, : k - 1] @ Q[:, : k - 1].T
        y = x @ rng.standard_normal((n, n)).T
        cov = covariances(PairedDataset(x, y))
        ev = cov.eig_x.eigenvalues
        np.testing.assert_allclose(ev, ev[0], rtol=1e-10)
        null = null_sample(cov, structure_estimate(cov), 40, seed=2)
        np.testing.assert_allclose(null.samples, null.observed, rtol=1e-9)

    def test_observed_is_identity_rotation(self, rng):
        _, data = simulate(12, seed=1)
        cov = covariances(data)
        est = structure_estimate(cov)
        null = null_sample(cov, est, 3, seed=0)
        A = est.a_hat
        direct = np.trace(A.T @ A @ cov.sigma_x) / 12
        assert null.observed == pytest.approx(direct, rel=1e-10)

    def test_matches_explicit_rotation(self):
        # recompute one draw the long way: R = V U V^T, W = tau(A^T A R S R^T)
        from tracemethod.rng import generator, substream

        _, data = simulate(14, seed=6)
        cov = covariances(data)
        est = structure_estimate(cov)
        null = null_sample(cov, est, 4, seed=substream(9))
        V = cov.eig_x.eigenvectors
        r = cov.rank_x
        for i in range(4):
            G = generator(substream(9), i).standard_normal((r, r))
            Q, R_ = np.linalg.qr(G)
            U = Q * np.sign(np.diag(R_))
            R = V @ U @ V.T
            A = est.a_hat
            w = np.trace(A.T @ A @ R @ cov.sigma_x @ R.T) / 14
            assert null.samples[i] == pytest.approx(w, rel=1e-9)

    def test_thread_count_does_not_change_samples(self):
        _, data = simulate(30, seed=2)
        cov = covariances(data)
        est = structure_estimate(cov)
        a = null_sample(cov, est, 101, seed=5, threads=1)
        b = null_sample(cov, est, 101, seed=5, threads=4)
        assert np.array_equal(a.samples, b.samples)

    def test_rank_zero(self):
        x = np.ones((5, 3))
        cov = covariances(PairedDataset(x, np.random.default_rng(0).standard_normal((5, 3))))
        est = structure_estimate(cov)
        with pytest.raises(DegenerateInputError):
            null_sample(cov, est, 10, seed=0)

    @pytest.mark.slow
    def test_forward_observed_inside_null(self):
        # In the forward model the observed value is exchangeable with the
        # null draws, so it lands in the central 90% with probability 0.9.
        # 81 is the binomial(100, 0.9) mean minus 3 standard deviations.
        from scipy import stats

        inside = 0
        ranks = []
        for seed in range(100):
            _, data = simulate(100, k=50, seed=seed)
            cov = covariances(data)
            assert cov.rank_x == 49
            null = null_sample(cov, structure_estimate(cov), 1000, seed=seed)
            lo, hi = np.percentile(null.samples, [5, 95])
            inside += lo <= null.observed <= hi
            ranks.append(np.mean(null.samples < null.observed))
        assert inside >= 81
        assert stats.kstest(ranks, "uniform").pvalue > 0.001


class TestPValue:
    def test_median_case(self):
        s = np.arange(1.0, 12.0)
        assert p_value(NullDistribution(s, 6.0)) == 1.0

    def test_below_everything(self):
        assert p_value(NullDistribution(np.arange(1.0, 11.0), 0.0)) == 0.0

    def test_hand_count(self):
        assert p_value(NullDistribution(np.arange(1.0, 11.0), 2.5)) == pytest.approx(0.4)

    def test_upper_tail(self):
        assert p_value(NullDistribution(np.arange(1.0, 11.0), 9.5)) == pytest.approx(0.2)

    def test_ties_counted(self):
        assert p_value(NullDistribution(np.array([1.0, 2.0, 2.0, 5.0, 6.0, 7.0]), 2.0)) == pytest.approx(1.0)

    def test_pseudo_count(self):
        p = p_value(NullDistribution(np.arange(1.0, 11.0), 0.0), pseudo_count=True)
        assert p == pytest.approx(2 / 11)

    @given(
        st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60),
        st.floats(-1e6, 1e6, allow_nan=False),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force(self, samples, observed):
        assert p_value(NullDistribution(np.array(samples), observed)) == pytest.approx(brute_p(samples, observed))

    @given(
        st.lists(st.integers(-1000, 1000), min_size=1, max_size=40),
        st.integers(-1000, 1000),
    )
    @settings(max_examples=100, deadline=None)
    def test_monotone_transform_invariance(self, samples, observed):
        s = np.array(samples, dtype=float)
        base = p_value(NullDistribution(s, observed))
        # odd-N medians are sample points, so any increasing map commutes with them
        if len(samples) % 2 == 1:
            assert p_value(NullDistribution(np.exp(s / 100), math.exp(observed / 100))) == pytest.approx(base)
        assert p_value(NullDistribution(3 * s + 1, 3 * observed + 1)) == pytest.approx(base)

    @given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=30), st.floats(-10, 10))
    @settings(max_examples=100, deadline=None)
    def test_range(self, samples, observed):
        assert 0.0 <= p_value(NullDistribution(np.array(samples), observed)) <= 1.0


class TestVerdict:
    @pytest.mark.parametrize(
        "pxy, pyx, expected",
        [
            (0.5, 0.001, Verdict.X_CAUSES_Y),
            (0.001, 0.5, Verdict.Y_CAUSES_X),
            (0.001, 0.002, Verdict.CONFOUNDED_OR_VIOLATED),
            (0.5, 0.6, Verdict.UNDECIDED),
            (0.01, 0.001, Verdict.UNDECIDED),
        ],
    )
    def test_branches(self, pxy, pyx, expected):
        assert verdict(pxy, pyx, 0.01) is expected

    def test_messages(self):
        assert Verdict.X_CAUSES_Y.message == "X is the cause"
        assert Verdict.Y_CAUSES_X.message == "Y is the cause"
        assert Verdict.CONFOUNDED_OR_VIOLATED.message == "there is a confounder or the model assumptions are violated"
        assert Verdict.UNDECIDED.message == "cause cannot be identified"


class TestEpsilon:
    def test_smaller_magnitude_chosen(self):
        assert epsilon_decide(_report(-0.05, -0.9), 0.3).chosen == "x_causes_y"

    def test_equal(self):
        assert epsilon_decide(_report(-0.4, -0.4), 0.3).chosen == "none"

    def test_sub_threshold(self):
        assert epsilon_decide(_report(-0.4, -0.6), 0.3).chosen == "none"

    def test_backward(self):
        assert epsilon_decide(_report(-1.0, 0.1), 0.3).chosen == "y_causes_x"

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 2))
    def test_invariant(self, a, b, eps):
        d = epsilon_decide(_report(a, b), eps)
        assert (d.chosen != "none") == (abs(a - b) > eps)
        if d.chosen == "x_causes_y":
            assert abs(a) < abs(b)
        if d.chosen == "y_causes_x":
            assert abs(b) <= abs(a)


class TestInfer:
    def test_single_sample(self):
        with pytest.raises(InsufficientDataError):
            infer(PairedDataset(np.ones((1, 3)), np.ones((1, 3))))

    def test_deterministic_given_seed(self):
        _, data = simulate(30, seed=1)
        a = infer(data, rotations=200, seed=3)
        b = infer(data, rotations=200, seed=3, threads=3)
        assert a.test == b.test and a.deltas == b.deltas

    def test_degenerate_carries_direction(self, rng):
        x = rng.standard_normal((10, 4))
        with pytest.raises(DegenerateInputError, match="X->Y"):
            infer(PairedDataset(x, np.zeros((10, 3))), rotations=10)

    @pytest.mark.slow
    def test_forward_model_verdict(self):
        hits = 0
        for seed in range(100):
            _, data = simulate(100, k=50, seed=seed)
            hits += infer(data, alpha=0.01, rotations=1000, seed=seed).test.verdict is Verdict.X_CAUSES_Y
        assert hits >= 85

    @pytest.mark.slow
    def test_confounded_verdict(self):
        hits = 0
        for seed in range(100):
            _, data = simulate(100, k=50, seed=seed, confounded=True)
            hits += infer(data, rotations=1000, seed=seed).test.verdict is Verdict.CONFOUNDED_OR_VIOLATED
        assert hits > 50
