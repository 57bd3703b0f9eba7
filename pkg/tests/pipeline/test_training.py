"""Tests for the three training phases and their shared loop"""

import json

import pytest
import torch

from dual_diffusion_sr.degradation.dataset import MANIFEST_NAME, generate_dataset
from dual_diffusion_sr.diffusion import noise_loss
from dual_diffusion_sr.errors import DataError, NumericalFailure, UsageError
from dual_diffusion_sr.networks.bundle import CHECKPOINT_NAMES, ModelBundle, load_checkpoint, state_checksum
from dual_diffusion_sr.pipeline.common import PlateauDetector, TrainingSet, TrainLog, encode_lr, run_phase
from dual_diffusion_sr.pipeline.encoder_trainer import pretrain_encoder
from dual_diffusion_sr.pipeline.kernel_trainer import train_kernel_predictor
from dual_diffusion_sr.pipeline.recon_trainer import KernelConditionCache, residual_target, train_reconstructor
from dual_diffusion_sr.utils.tensor_container import read_container, write_container
from tests.mocks import tiny_config, tiny_training_set, write_corpus

STEPS = {"encoder_steps": 6, "kernel_steps": 6, "recon_steps": 4, "log_interval": 2}


@pytest.fixture(scope="module")
def config():
    return tiny_config(train=STEPS)


@pytest.fixture(scope="module")
def data(config):
    return tiny_training_set(config, count=4)


def train_all(config, data, on_step=None):
    bundle = ModelBundle.create(config, seed=config.train.seed)
    results = {
        "encoder": pretrain_encoder(data, bundle, on_step=on_step),
        "kernel": train_kernel_predictor(data, bundle, on_step=on_step),
        "recon": train_reconstructor(data, bundle, on_step=on_step),
    }
    return bundle, results


@pytest.fixture(scope="module")
def trained(config, data):
    return train_all(config, data)


class TestPhases:
    def test_each_phase_only_changes_its_own_network(self, config, data):
        bundle = ModelBundle.create(config, seed=0)

        def sums():
            return {p: state_checksum(bundle.module(p)) for p in ("encoder", "kernel", "recon")}

        before = sums()
        pretrain_encoder(data, bundle)
        after_encoder = sums()
        assert after_encoder["encoder"] != before["encoder"]
        assert after_encoder["kernel"] == before["kernel"]
        assert after_encoder["recon"] == before["recon"]

        train_kernel_predictor(data, bundle)
        after_kernel = sums()
        assert after_kernel["encoder"] == after_encoder["encoder"]
        assert after_kernel["kernel"] != after_encoder["kernel"]
        assert after_kernel["recon"] == before["recon"]

        train_reconstructor(data, bundle)
        after_recon = sums()
        assert after_recon["encoder"] == after_encoder["encoder"]
        assert after_recon["kernel"] == after_kernel["kernel"]
        assert after_recon["recon"] != before["recon"]

    def test_trained_networks_are_frozen(self, trained):
        bundle, _ = trained
        for phase in ("encoder", "kernel", "recon"):
            assert not any(p.requires_grad for p in bundle.module(phase).parameters())
        assert bundle.trained == {"encoder", "kernel", "recon"}

    def test_phase_order_is_enforced(self, config, data):
        bundle = ModelBundle.create(config, seed=0)
        with pytest.raises(UsageError, match="encoder"):
            train_kernel_predictor(data, bundle)
        with pytest.raises(UsageError):
            train_reconstructor(data, bundle)

    def test_step_budgets(self, trained):
        _, results = trained
        assert [results[p].steps for p in ("encoder", "kernel", "recon")] == [6, 6, 4]

    def test_same_seed_same_losses(self, config, data, trained):
        _, first = trained
        _, second = train_all(config, data)
        for phase in ("encoder", "kernel", "recon"):
            assert first[phase].losses == second[phase].losses

    def test_logged_loss_is_the_noise_loss(self, config, data):
        infos = []
        train_all(config, data, on_step=infos.append)
        diffusion = [i for i in infos if i.phase in ("kernel", "recon")]
        assert len(diffusion) == 10
        for info in diffusion:
            assert float(noise_loss(info.eps_hat, info.eps)) == pytest.approx(info.loss, rel=1e-5)
        assert all(i.eps is None for i in infos if i.phase == "encoder")

    def test_initial_diffusion_losses_are_near_one(self, trained):
        # zero-initialised output convs predict eps_hat = 0, so the first loss is E[eps^2]
        _, results = trained
        assert results["kernel"].losses[0] == pytest.approx(1.0, abs=0.2)
        assert results["recon"].losses[0] == pytest.approx(1.0, abs=0.1)

    def test_condition_cache(self, config, data):
        bundle, _ = train_all(config.model_copy(update={"train": config.train.model_copy(update={"recon_steps": 1})}), data)
        cache = KernelConditionCache(bundle, encode_lr(bundle.encoder, data.lr), seed=0)
        first = cache.get(torch.tensor([0, 1, 0]))
        assert (cache.misses, cache.hits) == (2, 1)
        assert first.shape == (3, config.dataset.kernel_size ** 2)
        assert torch.equal(first[0], first[2])
        again = cache.get(torch.tensor([1]))
        assert torch.equal(again[0], first[1])
        assert len(cache) == 2

    def test_recon_reports_cache_use(self, trained, config):
        _, results = trained
        recon = results["recon"]
        assert recon.cache_hits + recon.cache_misses == recon.steps * config.train.batch_size
        assert recon.cache_misses <= 4

    def test_residual_target_range(self, data, config):
        target = residual_target(data.hr, data.lr, config.dataset.scale)
        assert target.shape == data.hr.shape
        assert float(target.abs().max()) <= 2.0


class TestLoop:
    def make_param(self):
        return torch.nn.Parameter(torch.tensor([1.0]))

    def test_log_lines_per_interval(self, config, tmp_path):
        p = self.make_param()
        log = TrainLog(tmp_path / "log.jsonl")
        run_phase("kernel", 7, [p], lambda _: ((p ** 2).sum(), None), config, log=log)
        lines = (tmp_path / "log.jsonl").read_text().splitlines()
        assert len(lines) == 7 // config.train.log_interval
        record = json.loads(lines[0])
        assert set(record) == {"step", "phase", "loss", "wall_time"}
        assert record["step"] == config.train.log_interval

    def test_non_finite_loss(self, config):
        p = self.make_param()
        with pytest.raises(NumericalFailure, match="step 1"):
            run_phase("recon", 3, [p], lambda _: (p.sum() * float("nan"), None), config)

    def test_checkpoint_interval(self, config):
        p = self.make_param()
        cfg = config.model_copy(update={"train": config.train.model_copy(update={"checkpoint_interval": 2})})
        seen = []
        run_phase("encoder", 5, [p], lambda _: ((p ** 2).sum(), None), cfg, checkpoint_fn=seen.append)
        assert seen == [2, 4]

    def test_plateau_stops_early(self, config):
        p = torch.nn.Parameter(torch.tensor([0.0]))
        cfg = config.model_copy(update={"train": config.train.model_copy(update={"plateau_window": 2})})
        result = run_phase("kernel", 50, [p], lambda _: (p.sum() * 0.0 + 1.0, None), cfg)
        assert result.stopped_early
        assert result.steps == 4

    def test_log_replaces_rerun_phase(self, tmp_path):
        path = tmp_path / "train_log.jsonl"
        log = TrainLog(path)
        log.record("encoder", 1, 0.3)
        log.record("kernel", 1, 0.9)
        TrainLog(path, replace_phases=["kernel"]).record("kernel", 1, 0.8)
        phases = [json.loads(line)["phase"] for line in path.read_text().splitlines()]
        assert phases == ["encoder", "kernel"]

    def test_in_memory_log(self):
        log = TrainLog()
        log.record("encoder", 5, 0.1)
        assert log.records[0]["step"] == 5


class TestPlateauDetector:
    def test_flat_losses(self):
        detector = PlateauDetector(window=2, tol=1e-3)
        assert [detector.update(1.0) for _ in range(4)] == [False, False, False, True]

    def test_improving_losses(self):
        detector = PlateauDetector(window=2, tol=1e-3)
        assert not any(detector.update(1.0 / (i + 1)) for i in range(10))

    def test_zero_previous_window(self):
        detector = PlateauDetector(window=1)
        detector.update(0.0)
        assert detector.update(0.0)

    def test_window_must_be_positive(self):
        with pytest.raises(DataError):
            PlateauDetector(window=0)


class TestBundleCheckpoints:
    def test_save_and_load_round_trip(self, trained, tmp_path):
        bundle, _ = trained
        written = bundle.save(tmp_path)
        assert {p: path.name for p, path in written.items()} == CHECKPOINT_NAMES
        loaded = ModelBundle.load(tmp_path)
        assert loaded.config == bundle.config
        assert loaded.trained == {"encoder", "kernel", "recon"}
        for phase in ("encoder", "kernel", "recon"):
            assert state_checksum(loaded.module(phase)) == state_checksum(bundle.module(phase))

    def test_shape_mismatch(self, trained, tmp_path):
        bundle, _ = trained
        bundle.save(tmp_path, phases=["encoder"])
        wider = tiny_config(architecture={"encoder_channels": 12})
        with pytest.raises(DataError, match="shape"):
            ModelBundle.load(tmp_path, phases=["encoder"], config=wider)

    def test_wrong_phase(self, trained, tmp_path):
        bundle, _ = trained
        paths = bundle.save(tmp_path, phases=["encoder"])
        with pytest.raises(DataError, match="expected 'kernel'"):
            load_checkpoint(bundle.kernel_predictor, paths["encoder"], "kernel")

    def test_schedule_mismatch(self, trained, tmp_path):
        bundle, _ = trained
        path = bundle.save(tmp_path, phases=["encoder"])["encoder"]
        tensors, meta = read_container(path)
        meta["schedule_checksum"] = "0" * 64
        write_container(path, tensors, meta)
        with pytest.raises(DataError):
            load_checkpoint(bundle.encoder, path, "encoder")

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(UsageError, match="encoder"):
            ModelBundle.load(tmp_path)

    def test_require(self, config):
        bundle = ModelBundle.create(config)
        with pytest.raises(UsageError, match="recon.ckpt"):
            bundle.require("recon")


class TestTrainingSet:
    def test_from_manifest(self, tmp_path, config):
        write_corpus(tmp_path / "corpus", count=2, size=72)
        generate_dataset(tmp_path / "corpus", tmp_path / "ds", s=4, patch_size=32, count=3, seed=0)
        data = TrainingSet.from_manifest(tmp_path / "ds" / MANIFEST_NAME, config)
        assert len(data) == 3
        assert data.hr.shape == (3, 3, 32, 32)
        assert data.lr.shape == (3, 3, 8, 8)
        assert float(data.hr.min()) >= -1.0 and float(data.hr.max()) <= 1.0
        torch.testing.assert_close(
            data.kernels.sum(dim=(1, 2, 3)), torch.full((3,), config.dataset.kernel_scale), rtol=1e-5, atol=1e-5
        )
        assert data.names == ["000000", "000001", "000002"]

    def test_scale_mismatch(self, tmp_path, config):
        write_corpus(tmp_path / "corpus", count=1, size=72)
        generate_dataset(tmp_path / "corpus", tmp_path / "ds", s=2, patch_size=32, count=1, seed=0)
        with pytest.raises(DataError, match="scale"):
            TrainingSet.from_manifest(tmp_path / "ds" / MANIFEST_NAME, config)

    def test_mismatched_counts(self, data):
        with pytest.raises(DataError):
            TrainingSet.from_tensors([data.hr[0]], [], [])
