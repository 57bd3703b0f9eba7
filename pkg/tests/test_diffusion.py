"""Tests for the noise schedule and the DDPM forward/reverse math"""

import numpy as np
import pytest
import torch

from dual_diffusion_sr.diffusion import (
    DiffusionSchedule,
    extract,
    make_schedule,
    noise_loss,
    posterior_mean,
    predict_x0,
    q_sample,
    reverse_chain,
    reverse_step,
    sample_timesteps,
)
from dual_diffusion_sr.errors import DataError, ShapeError
from dual_diffusion_sr.models.config_models import ScheduleConfig


@pytest.fixture(scope="module")
def sched():
    return make_schedule()


class TestSchedule:
    def test_default_lengths(self, sched):
        assert sched.T == 100
        for arr in (sched.betas, sched.alphas, sched.alpha_bars, sched.sigmas):
            assert arr.shape == (100,)

    def test_first_alpha_bar(self, sched):
        assert sched.alpha_bars[0] == 1.0 - sched.betas[0]

    def test_final_alpha_bar_is_small(self, sched):
        # product of (1 - beta_t) for the default linear schedule
        assert sched.alpha_bars[-1] < 0.08
        assert sched.alpha_bars[-1] == pytest.approx(0.0782, abs=5e-4)

    def test_linear_endpoints(self, sched):
        assert sched.betas[0] == 1e-4
        assert sched.betas[-1] == pytest.approx(0.05, abs=1e-15)
        assert np.allclose(np.diff(sched.betas), np.diff(sched.betas)[0])

    def test_monotone_and_sigma_convention(self, sched):
        assert (np.diff(sched.alpha_bars) < 0).all()
        assert sched.sigmas[0] == 0.0
        assert (sched.sigmas[1:] > 0).all()
        assert ((0 < sched.betas) & (sched.betas < 1)).all()

    def test_consistent_and_read_only(self, sched):
        assert sched.is_consistent()
        with pytest.raises(ValueError):
            sched.betas[0] = 0.5

    def test_checksum_round_trip(self, sched):
        again = DiffusionSchedule.from_spec(sched.spec())
        assert again.checksum() == sched.checksum()
        assert again.verify(sched.checksum()) is again

    def test_checksum_mismatch(self, sched):
        other = make_schedule(T=50)
        with pytest.raises(DataError):
            other.verify(sched.checksum())

    def test_from_config(self):
        s = DiffusionSchedule.from_config(ScheduleConfig(T=10, beta_start=0.001, beta_end=0.02))
        assert s.spec() == {"T": 10, "beta_start": 0.001, "beta_end": 0.02, "shape": "linear"}

    @pytest.mark.parametrize(
        "kwargs",
        [{"T": 0}, {"beta_start": 0.0}, {"beta_start": 0.1, "beta_end": 0.05}, {"beta_end": 1.0}, {"shape": "cosine"}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(DataError):
            make_schedule(**kwargs)

    def test_bad_spec(self):
        with pytest.raises(DataError):
            DiffusionSchedule.from_spec({"T": -3})


class TestForward:
    def test_zero_noise(self, sched):
        x0 = torch.randn(2, 3, 4, 4, dtype=torch.float64)
        out = q_sample(x0, 40, torch.zeros_like(x0), sched)
        torch.testing.assert_close(out, np.sqrt(sched.alpha_bars[39]) * x0)

    def test_zero_signal(self, sched):
        eps = torch.randn(5, dtype=torch.float64)
        out = q_sample(torch.zeros(5, dtype=torch.float64), 7, eps, sched)
        torch.testing.assert_close(out, np.sqrt(1 - sched.alpha_bars[6]) * eps)

    def test_per_sample_timesteps(self, sched):
        x0 = torch.ones(3, 1, 2, 2)
        t = torch.tensor([1, 50, 100])
        out = q_sample(x0, t, torch.zeros_like(x0), sched)
        for i, ti in enumerate(t.tolist()):
            assert float(out[i, 0, 0, 0]) == pytest.approx(np.sqrt(sched.alpha_bars[ti - 1]), rel=1e-6)

    def test_marginal_variance_at_T(self, sched):
        g = torch.Generator().manual_seed(0)
        eps = torch.randn(100_000, generator=g, dtype=torch.float64)
        x = q_sample(torch.zeros_like(eps), sched.T, eps, sched)
        assert float(x.var()) == pytest.approx(1 - sched.alpha_bars[-1], rel=0.03)

    def test_marginal_mean(self, sched):
        g = torch.Generator().manual_seed(1)
        eps = torch.randn(100_000, generator=g, dtype=torch.float64)
        x = q_sample(torch.full_like(eps, 0.7), 30, eps, sched)
        assert float(x.mean()) == pytest.approx(0.7 * np.sqrt(sched.alpha_bars[29]), rel=0.03)

    def test_shape_mismatch(self, sched):
        with pytest.raises(ShapeError):
            q_sample(torch.zeros(3), 1, torch.zeros(4), sched)

    @pytest.mark.parametrize("t", [0, 101, torch.tensor([0, 3]), torch.tensor([1.0])])
    def test_timestep_out_of_range(self, sched, t):
        with pytest.raises(DataError):
            q_sample(torch.zeros(2), t, torch.zeros(2), sched)

    def test_extract_broadcasts(self, sched):
        coef = extract(sched.betas, torch.tensor([1, 2]), torch.zeros(2, 3, 4, 4))
        assert coef.shape == (2, 1, 1, 1)
        assert extract(sched.betas, 5, torch.zeros(1)) == sched.betas[4]


class TestReverse:
    def test_vanishing_noise_limit(self):
        s = make_schedule(T=10, beta_start=1e-10, beta_end=1e-10)
        x = torch.randn(4, dtype=torch.float64)
        torch.testing.assert_close(posterior_mean(x, torch.randn(4, dtype=torch.float64), 10, s), x, atol=1e-4, rtol=0)

    def test_linearity_at_zero(self, sched):
        z = torch.zeros(3, 4)
        assert torch.equal(posterior_mean(z, z, 50, sched), z)

    @pytest.mark.parametrize("t", [2, 10, 57, 100])
    def test_matches_closed_form_posterior(self, sched, t):
        g = torch.Generator().manual_seed(t)
        x0 = torch.randn(64, generator=g, dtype=torch.float64)
        eps = torch.randn(64, generator=g, dtype=torch.float64)
        x_t = q_sample(x0, t, eps, sched)
        ab, ab_prev, beta, alpha = (
            sched.alpha_bars[t - 1],
            sched.alpha_bars_prev[t - 1],
            sched.betas[t - 1],
            sched.alphas[t - 1],
        )
        expected = (np.sqrt(ab_prev) * beta / (1 - ab)) * x0 + (np.sqrt(alpha) * (1 - ab_prev) / (1 - ab)) * x_t
        torch.testing.assert_close(posterior_mean(x_t, eps, t, sched), expected, atol=1e-5, rtol=0)

    def test_predict_x0_inverts_q_sample(self, sched):
        x0 = torch.randn(10, dtype=torch.float64)
        eps = torch.randn(10, dtype=torch.float64)
        torch.testing.assert_close(predict_x0(q_sample(x0, 60, eps, sched), eps, 60, sched), x0)

    def test_last_step_is_deterministic(self, sched):
        x = torch.randn(5)
        e = torch.randn(5)
        assert torch.equal(reverse_step(x, e, 1, torch.zeros(5), sched), posterior_mean(x, e, 1, sched))
        assert torch.equal(reverse_step(x, e, 1, None, sched), posterior_mean(x, e, 1, sched))

    def test_nonzero_z_at_t1_rejected(self, sched):
        with pytest.raises(DataError):
            reverse_step(torch.zeros(2), torch.zeros(2), 1, torch.ones(2), sched)
        with pytest.raises(DataError):
            reverse_step(torch.zeros(2, 1), torch.zeros(2, 1), torch.tensor([5, 1]), torch.ones(2, 1), sched)

    def test_zero_z_gives_mean(self, sched):
        x, e = torch.randn(6), torch.randn(6)
        assert torch.equal(reverse_step(x, e, 42, torch.zeros(6), sched), posterior_mean(x, e, 42, sched))

    def test_adds_sigma_z(self, sched):
        x, e, z = torch.randn(6, dtype=torch.float64), torch.randn(6, dtype=torch.float64), torch.randn(6, dtype=torch.float64)
        out = reverse_step(x, e, 42, z, sched)
        torch.testing.assert_close(out, posterior_mean(x, e, 42, sched) + sched.sigmas[41] * z)

    def test_single_step_schedule_recovers_x0(self):
        s = make_schedule(T=1, beta_start=0.3, beta_end=0.3)
        x0 = torch.randn(8, dtype=torch.float64)
        eps = torch.randn(8, dtype=torch.float64)
        torch.testing.assert_close(reverse_step(q_sample(x0, 1, eps, s), eps, 1, None, s), x0)


def run_analytic_chain(sched, n=400_000, seed=0):
    """Scalar x0 ~ N(0, 1): the optimal noise prediction is sqrt(1 - alpha_bar_t) x_t."""
    coef = np.sqrt(1.0 - sched.alpha_bars)

    def predict(x, t):
        return extract(coef, t, x) * x

    g = torch.Generator().manual_seed(seed)
    return reverse_chain(predict, (n,), sched, g, dtype=torch.float64)


@pytest.mark.parametrize(
    "schedule_kwargs",
    [{}, {"T": 200, "beta_start": 1e-4, "beta_end": 0.02}, {"T": 1, "beta_start": 1e-4, "beta_end": 1e-4}],
)
def test_analytic_chain_recovers_moments(schedule_kwargs):
    samples = run_analytic_chain(make_schedule(**schedule_kwargs))
    assert abs(float(samples.mean())) < 0.02
    assert abs(float(samples.var()) - 1.0) < 0.05


def test_reverse_chain_is_seeded(sched):
    def predict(x, t):
        return torch.zeros_like(x)

    a = reverse_chain(predict, (2, 3), sched, torch.Generator().manual_seed(3))
    b = reverse_chain(predict, (2, 3), sched, torch.Generator().manual_seed(3))
    assert torch.equal(a, b)


class TestLoss:
    def test_exact_prediction(self):
        eps = torch.randn(4, 5)
        assert float(noise_loss(eps, eps)) == 0.0

    def test_ones(self):
        assert float(noise_loss(torch.zeros(2, 3), torch.ones(2, 3))) == pytest.approx(1.0)

    def test_matches_direct_sum(self):
        g = torch.Generator().manual_seed(0)
        a, b = torch.randn(7, 11, generator=g), torch.randn(7, 11, generator=g)
        expected = float(((a.double() - b.double()) ** 2).sum() / a.numel())
        assert float(noise_loss(a, b)) == pytest.approx(expected, abs=1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            noise_loss(torch.zeros(3), torch.zeros(2))


def test_sample_timesteps_range():
    t = sample_timesteps(10_000, 100, torch.Generator().manual_seed(0))
    assert t.dtype == torch.long
    assert int(t.min()) == 1 and int(t.max()) == 100
