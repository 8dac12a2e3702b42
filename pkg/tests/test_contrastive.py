"""Contrastive loss: scalar oracle, analytic gradients, sharded equivalence."""

import math

import numpy as np
import pytest

from figurelink.contrastive import (
    EmbeddingBatch,
    NonFiniteInput,
    TemperatureParam,
    ZeroNormRow,
    cosine_matrix,
    grad_check,
    info_nce,
    info_nce_sharded,
)


def scalar_oracle_loss(images, texts, tau):
    """Pure-Python symmetric cross-entropy over cosine logits.

    Deliberately written with scalar math so it shares no code with the
    implementation under test.
    """
    n = len(images)
    unit_im = []
    unit_tx = []
    for row in images:
        norm = math.sqrt(sum(v * v for v in row))
        unit_im.append([v / norm for v in row])
    for row in texts:
        norm = math.sqrt(sum(v * v for v in row))
        unit_tx.append([v / norm for v in row])
    scale = min(1.0 / tau, 100.0)
    logits = [[scale * sum(a * b for a, b in zip(unit_im[i], unit_tx[j]))
               for j in range(n)] for i in range(n)]
    total = 0.0
    for i in range(n):
        row = logits[i]
        col = [logits[j][i] for j in range(n)]
        total -= row[i] - math.log(sum(math.exp(v) for v in row))
        total -= col[i] - math.log(sum(math.exp(v) for v in col))
    return total / (2 * n)


def random_batch(rng, n, d):
    return EmbeddingBatch(rng.standard_normal((n, d)), rng.standard_normal((n, d)))


class TestLossValues:
    def test_identity_pair_matches_closed_form(self):
        # Orthonormal N=2 at tau=1: every diagonal logit is 1, off-diagonal 0,
        # so each cross-entropy term is log(1 + e^-1).
        batch = EmbeddingBatch(np.eye(2), np.eye(2))
        report = info_nce(batch, TemperatureParam.from_tau(1.0))
        assert report.loss == pytest.approx(math.log(1.0 + math.exp(-1.0)), abs=1e-15)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(11)
        for n, d, tau in [(1, 3, 1.0), (4, 8, 0.5), (16, 32, 0.07), (33, 5, 0.01)]:
            batch = random_batch(rng, n, d)
            oracle = scalar_oracle_loss(batch.images.tolist(), batch.texts.tolist(), tau)
            report = info_nce(batch, TemperatureParam.from_tau(tau))
            assert report.loss == pytest.approx(oracle, rel=1e-12, abs=1e-12)

    def test_scale_cap_at_100(self):
        rng = np.random.default_rng(3)
        batch = random_batch(rng, 6, 4)
        temp = TemperatureParam.from_tau(1e-4)  # 1/tau = 10000, capped
        assert temp.scale == 100.0
        oracle = scalar_oracle_loss(batch.images.tolist(), batch.texts.tolist(), 1e-4)
        report = info_nce(batch, temp)
        assert report.loss == pytest.approx(oracle, rel=1e-12)
        assert report.grad_log_scale == 0.0

    def test_perfect_alignment_low_temperature_drives_loss_down(self):
        rng = np.random.default_rng(5)
        im = rng.standard_normal((8, 16))
        batch = EmbeddingBatch(im, im.copy())
        hot = info_nce(batch, TemperatureParam.from_tau(1.0)).loss
        cold = info_nce(batch, TemperatureParam.from_tau(0.05)).loss
        assert cold < hot


class TestGradients:
    def test_gradcheck_small_batches(self):
        rng = np.random.default_rng(21)
        for n, d in [(2, 3), (5, 7), (9, 4)]:
            batch = random_batch(rng, n, d)
            dev = grad_check(batch, TemperatureParam.from_tau(0.2))
            assert dev < 1e-4

    def test_grad_log_scale_finite_difference(self):
        rng = np.random.default_rng(22)
        batch = random_batch(rng, 6, 5)
        temp = TemperatureParam.from_tau(0.3)
        report = info_nce(batch, temp)
        eps = 1e-6
        up = info_nce(batch, TemperatureParam(temp.log_scale + eps)).loss
        down = info_nce(batch, TemperatureParam(temp.log_scale - eps)).loss
        assert report.grad_log_scale == pytest.approx((up - down) / (2 * eps), abs=1e-6)

    def test_gradient_shapes_and_finiteness(self):
        rng = np.random.default_rng(23)
        batch = random_batch(rng, 7, 9)
        report = info_nce(batch, TemperatureParam.from_tau(0.1))
        assert report.grad_images.shape == (7, 9)
        assert report.grad_texts.shape == (7, 9)
        assert np.isfinite(report.grad_images).all()
        assert np.isfinite(report.grad_texts).all()


class TestSharded:
    def test_k1_bitwise_equal(self):
        rng = np.random.default_rng(31)
        batch = random_batch(rng, 24, 16)
        temp = TemperatureParam.from_tau(0.07)
        mono = info_nce(batch, temp)
        shard = info_nce_sharded(batch, temp, shards=1)
        assert shard.loss == mono.loss
        assert np.array_equal(shard.grad_images, mono.grad_images)
        assert np.array_equal(shard.grad_texts, mono.grad_texts)
        assert shard.grad_log_scale == mono.grad_log_scale

    def test_shards_beyond_batch_rejected(self):
        rng = np.random.default_rng(30)
        batch = random_batch(rng, 4, 3)
        with pytest.raises(ValueError):
            info_nce_sharded(batch, TemperatureParam.from_tau(0.1), shards=5)

    @pytest.mark.parametrize("shards", [2, 3, 5, 8, 24])
    def test_many_shards_match_monolithic(self, shards):
        rng = np.random.default_rng(32)
        batch = random_batch(rng, 24, 12)
        temp = TemperatureParam.from_tau(0.05)
        mono = info_nce(batch, temp)
        shard = info_nce_sharded(batch, temp, shards=shards)
        assert shard.loss == pytest.approx(mono.loss, rel=1e-10)
        np.testing.assert_allclose(shard.grad_images, mono.grad_images,
                                   rtol=1e-10, atol=1e-14)
        np.testing.assert_allclose(shard.grad_texts, mono.grad_texts,
                                   rtol=1e-10, atol=1e-14)
        assert shard.grad_log_scale == pytest.approx(mono.grad_log_scale, rel=1e-10)

    def test_peak_block_shrinks_with_shards(self):
        rng = np.random.default_rng(33)
        batch = random_batch(rng, 20, 6)
        temp = TemperatureParam.from_tau(0.1)
        full = info_nce_sharded(batch, temp, shards=1).peak_block_elems
        quarter = info_nce_sharded(batch, temp, shards=4).peak_block_elems
        assert full == 20 * 20
        assert quarter == 20 * 5


class TestValidation:
    def test_rejects_nan(self):
        bad = np.ones((3, 2))
        bad[1, 0] = np.nan
        with pytest.raises(NonFiniteInput):
            info_nce(EmbeddingBatch(bad, np.ones((3, 2))),
                     TemperatureParam.from_tau(1.0))

    def test_rejects_zero_norm_row(self):
        im = np.ones((3, 2))
        tx = np.ones((3, 2))
        tx[2] = 0.0
        with pytest.raises(ZeroNormRow):
            info_nce(EmbeddingBatch(im, tx), TemperatureParam.from_tau(1.0))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            EmbeddingBatch(np.ones((3, 2)), np.ones((2, 3)))

    def test_cosine_matrix_bounded(self):
        rng = np.random.default_rng(41)
        batch = random_batch(rng, 10, 6)
        sims = cosine_matrix(batch)
        assert sims.shape == (10, 10)
        assert np.all(np.abs(sims) <= 1.0 + 1e-12)
