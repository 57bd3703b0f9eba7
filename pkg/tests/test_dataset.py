"""Tests for synthetic dataset generation"""

import json
import math

import numpy as np
import pytest
import torch

from dual_diffusion_sr.degradation.dataset import MANIFEST_NAME, generate_dataset, load_kernel, load_triplet
from dual_diffusion_sr.degradation.ops import degrade
from dual_diffusion_sr.errors import DataError
from dual_diffusion_sr.models.kernel_models import KernelParams
from dual_diffusion_sr.utils.config_loader import read_manifest
from dual_diffusion_sr.utils.image_io import quantize
from tests.mocks import write_corpus, write_corrupt_image


@pytest.fixture
def corpus(tmp_path):
    write_corpus(tmp_path / "corpus", count=3, size=80)
    return tmp_path / "corpus"


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_shape_contract(corpus, tmp_path):
    out = tmp_path / "ds"
    manifest = generate_dataset(corpus, out, s=4, patch_size=64, count=4, seed=0)

    assert len(manifest) == 4
    assert (out / MANIFEST_NAME).exists()
    for entry in manifest.entries:
        hr, lr, k = load_triplet(out, entry)
        assert hr.shape == (3, 64, 64)
        assert lr.shape == (3, 16, 16)
        assert k.values.shape == (24, 24)
        assert k.is_normalized()


def test_same_seed_is_byte_identical(corpus, tmp_path):
    generate_dataset(corpus, tmp_path / "a", count=4, seed=11)
    generate_dataset(corpus, tmp_path / "b", count=4, seed=11)
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_different_seed_differs(corpus, tmp_path):
    a = generate_dataset(corpus, tmp_path / "a", count=4, seed=1)
    b = generate_dataset(corpus, tmp_path / "b", count=4, seed=2)
    assert [e.lambda1 for e in a.entries] != [e.lambda1 for e in b.entries]


def test_worker_count_does_not_change_output(corpus, tmp_path):
    generate_dataset(corpus, tmp_path / "serial", count=6, seed=3, workers=1)
    generate_dataset(corpus, tmp_path / "threaded", count=6, seed=3, workers=4)
    assert tree_bytes(tmp_path / "serial") == tree_bytes(tmp_path / "threaded")


def test_regeneration_oracle(corpus, tmp_path):
    out = tmp_path / "ds"
    manifest = generate_dataset(corpus, out, count=4, seed=5)
    for entry in manifest.entries:
        hr, lr, k = load_triplet(out, entry)
        relr, rek = degrade(hr, entry.kernel_params(), manifest.s)
        np.testing.assert_allclose(rek.values, k.values, atol=1e-7)
        torch.testing.assert_close(quantize(relr), lr, rtol=0, atol=1e-6)


def test_corrupt_files_are_skipped_and_counted(corpus, tmp_path):
    write_corrupt_image(corpus / "broken.png")
    (corpus / "notes.txt").write_text("not an image")
    manifest = generate_dataset(corpus, tmp_path / "ds", count=2, seed=0)

    assert manifest.skipped == 2
    assert set(manifest.skipped_files) == {"broken.png", "notes.txt"}
    on_disk = json.loads((tmp_path / "ds" / MANIFEST_NAME).read_text())
    assert on_disk["skipped"] == 2


def test_small_images_are_skipped(tmp_path):
    write_corpus(tmp_path / "corpus", count=1, size=80)
    write_corpus(tmp_path / "small", count=1, size=32)
    (tmp_path / "small" / "img_00.png").rename(tmp_path / "corpus" / "tiny.png")
    manifest = generate_dataset(tmp_path / "corpus", tmp_path / "ds", count=2, seed=0)
    assert manifest.skipped_files == ["tiny.png"]
    assert all(e.source == "img_00.png" for e in manifest.entries)


def test_fixed_kernel(corpus, tmp_path):
    fixed = KernelParams(lambda1=1.2, lambda2=2.4, theta=math.pi / 4)
    manifest = generate_dataset(corpus, tmp_path / "ds", count=3, seed=0, fixed_params=fixed)
    assert {(e.lambda1, e.lambda2, e.theta) for e in manifest.entries} == {fixed.as_tuple()}
    kernels = [load_kernel(tmp_path / "ds" / e.ker).values for e in manifest.entries]
    np.testing.assert_array_equal(kernels[0], kernels[2])


def test_manifest_round_trip(corpus, tmp_path):
    manifest = generate_dataset(corpus, tmp_path / "ds", count=3, seed=9)
    assert read_manifest(str(tmp_path / "ds" / MANIFEST_NAME)) == manifest


def test_params_within_prior(corpus, tmp_path):
    manifest = generate_dataset(corpus, tmp_path / "ds", count=8, seed=4)
    for entry in manifest.entries:
        entry.kernel_params()


def test_empty_corpus(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(DataError, match="empty corpus"):
        generate_dataset(tmp_path / "empty", tmp_path / "ds", count=2)


def test_only_corrupt_corpus(tmp_path):
    write_corrupt_image(tmp_path / "corpus" / "bad.png")
    with pytest.raises(DataError):
        generate_dataset(tmp_path / "corpus", tmp_path / "ds", count=2)


def test_patch_not_divisible_by_scale(corpus, tmp_path):
    with pytest.raises(DataError):
        generate_dataset(corpus, tmp_path / "ds", patch_size=62, s=4, count=1)


def test_count_must_be_positive(corpus, tmp_path):
    with pytest.raises(DataError):
        generate_dataset(corpus, tmp_path / "ds", count=0)
