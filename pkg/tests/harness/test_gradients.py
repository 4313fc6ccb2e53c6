"""Gradient Harness — tests named gradients, the finite-difference check and frozen training.

Run:  cd backend && python -m pytest ../tests/harness/test_gradients.py -v
"""

import numpy as np
import pytest
import torch
from torch import nn

from app.config import TrainConfig
from app.datasets.checkpoint import Checkpoint
from app.errors import ConfigError, GradientError
from app.models import TrainingStage
from app.network.gradients import apply_gradients, check_gradients, compute_gradients
from app.network.losses import pretext_loss, supervised_loss
from app.network.models import build_pretext_model
from app.network.transformer import MultiHeadSelfAttention
from app.training.downstream import train_downstream


# ═══════════════════════════════════════════════════════════════════════════
# 1. compute_gradients / apply_gradients
# ═══════════════════════════════════════════════════════════════════════════

class TestComputeGradients:

    def test_every_parameter_named(self, tiny_encoder_cfg):
        model = build_pretext_model(tiny_encoder_cfg, 6, seed=0)
        logits, _ = model(torch.randn(4, 16, 3))
        grads = compute_gradients(pretext_loss(logits, torch.randint(0, 6, (4, 3)))[0], model)
        assert set(grads) == {n for n, _ in model.named_parameters()}
        for name, p in model.named_parameters():
            assert grads[name].shape == p.shape

    def test_unused_heads_get_zeros(self, tiny_encoder_cfg):
        model = build_pretext_model(tiny_encoder_cfg, 6, seed=0)
        logits, _ = model(torch.randn(4, 16, 3))
        grads = compute_gradients(supervised_loss(logits[0], torch.tensor([0, 1, 2, 3])), model)
        for name, g in grads.items():
            if name.startswith(("heads.1.", "heads.2.")):
                assert torch.count_nonzero(g) == 0, name
        assert torch.count_nonzero(grads["heads.0.mlp.4.weight"]) > 0

    def test_frozen_parameters_get_zeros(self):
        lin = nn.Linear(3, 2)
        lin.weight.requires_grad_(False)
        grads = compute_gradients(lin(torch.randn(4, 3)).sum(), lin)
        assert torch.count_nonzero(grads["weight"]) == 0
        assert torch.count_nonzero(grads["bias"]) > 0

    def test_non_finite_gradient_named(self):
        lin = nn.Linear(3, 2)
        loss = (lin(torch.randn(4, 3)) * float("nan")).sum()
        with pytest.raises(GradientError) as exc:
            compute_gradients(loss, lin)
        assert exc.value.parameter == "weight"

    def test_apply_matches_backward(self, tiny_encoder_cfg):
        x, y = torch.randn(4, 16, 3), torch.randint(0, 6, (4, 3))
        a = build_pretext_model(tiny_encoder_cfg, 6, seed=5)
        b = build_pretext_model(tiny_encoder_cfg, 6, seed=5)
        for model, manual in ((a, True), (b, False)):
            torch.manual_seed(0)
            opt = torch.optim.SGD(model.parameters(), lr=0.1)
            loss = pretext_loss(model(x)[0], y)[0]
            if manual:
                apply_gradients(model, compute_gradients(loss, model))
            else:
                loss.backward()
            opt.step()
        for (name, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
            torch.testing.assert_close(pa, pb, msg=name)


# ═══════════════════════════════════════════════════════════════════════════
# 2. Finite-difference check
# ═══════════════════════════════════════════════════════════════════════════

class TestCheckGradients:

    def test_smooth_module_passes(self):
        torch.manual_seed(0)
        attn = MultiHeadSelfAttention(8, 2).double()
        x = torch.randn(2, 5, 8, dtype=torch.float64)
        report = check_gradients(attn, lambda: (attn(x)[0] ** 2).sum(), n_per_group=10)
        assert report.group_counts() == {"w_q": 10, "w_k": 10, "w_v": 10, "w_o": 10}
        assert report.passed, f"worst entry: {report.worst()}"

    @pytest.mark.parametrize("batch,seed", [(3, 1), (8, 2)])
    def test_full_model_agrees(self, tiny_encoder_cfg, batch, seed):
        model = build_pretext_model(tiny_encoder_cfg, 6, seed=seed).double()
        model.train()
        gen = torch.Generator().manual_seed(seed)
        x = torch.randn(batch, 16, 3, dtype=torch.float64, generator=gen)
        y = torch.randint(0, 6, (batch, 3), generator=gen)
        report = check_gradients(model, lambda: pretext_loss(model(x)[0], y)[0], n_per_group=20, h=1e-4)
        assert report.passed, f"worst entry: {report.worst()}"
        counts = report.group_counts()
        assert set(counts) == {
            "encoder.encoders.0", "encoder.encoders.1", "encoder.encoders.2",
            "encoder.transformer", "heads.0", "heads.1", "heads.2",
        }
        assert min(counts.values()) >= 20

    def test_kink_entries_not_judged(self):
        lin = nn.Linear(1, 1).double()
        with torch.no_grad():
            lin.weight.zero_()
            lin.bias.zero_()
        x = torch.ones(1, 1, dtype=torch.float64)
        report = check_gradients(lin, lambda: torch.relu(lin(x)).sum())
        assert report.n_kinks == 2
        assert all(e.forward == pytest.approx(1.0) and e.backward == 0.0 for e in report.entries)
        assert report.group_counts() == {}
        assert report.passed

    def test_wrong_backward_caught(self):
        class SloppySquare(torch.autograd.Function):
            @staticmethod
            def forward(ctx, t):
                ctx.save_for_backward(t)
                return t ** 2

            @staticmethod
            def backward(ctx, grad):
                (t,) = ctx.saved_tensors
                return grad * 3.0 * t

        torch.manual_seed(0)
        lin = nn.Linear(3, 1).double()
        x = torch.randn(5, 3, dtype=torch.float64) + 2.0
        report = check_gradients(lin, lambda: SloppySquare.apply(lin(x)).sum())
        assert not report.passed
        assert report.worst().rel_error == pytest.approx(1 / 3, rel=1e-3)

    def test_dropout_disabled_in_place(self, tiny_encoder_cfg):
        model = build_pretext_model(tiny_encoder_cfg, 6, seed=1).double()
        x = torch.randn(2, 16, 3, dtype=torch.float64)
        check_gradients(model, lambda: pretext_loss(model(x)[0], torch.zeros(2, 3, dtype=torch.long))[0], n_per_group=1)
        assert all(m.p == 0.0 for m in model.modules() if isinstance(m, nn.Dropout))

    def test_requires_float64(self):
        lin = nn.Linear(3, 2)
        with pytest.raises(ConfigError):
            check_gradients(lin, lambda: lin(torch.randn(2, 3)).sum())

    def test_report_verdict(self):
        torch.manual_seed(0)
        lin = nn.Linear(2, 1).double()
        x = torch.randn(4, 2, dtype=torch.float64)
        report = check_gradients(lin, lambda: (lin(x) ** 2).sum(), tolerance=1e-6)
        assert report.max_rel_error < 1e-6
        assert report.passed


# ═══════════════════════════════════════════════════════════════════════════
# 3. Frozen mode — the encoder never moves
# ═══════════════════════════════════════════════════════════════════════════

class TestFrozenEncoder:

    def test_encoder_unchanged_after_training(self, tiny_encoder_cfg, level_windows):
        pretext = build_pretext_model(tiny_encoder_cfg, 6, seed=0)
        ckpt = Checkpoint.from_model(pretext, tiny_encoder_cfg, 6, 0, TrainingStage.PRETRAINED)
        cfg = TrainConfig(mode="frozen", lr=0.1, batch_size=8, epochs=2, checkpoint_path="pretrained.ckpt")
        result = train_downstream(ckpt, level_windows, 2, cfg)
        for name, tensor in result.model.state_dict().items():
            if name.startswith("encoder."):
                np.testing.assert_array_equal(tensor.numpy(), ckpt.arrays[name], err_msg=name)

    def test_heads_do_move(self, tiny_encoder_cfg, level_windows):
        pretext = build_pretext_model(tiny_encoder_cfg, 6, seed=0)
        ckpt = Checkpoint.from_model(pretext, tiny_encoder_cfg, 6, 0, TrainingStage.PRETRAINED)
        cfg = TrainConfig(mode="frozen", lr=0.1, batch_size=8, epochs=1, checkpoint_path="pretrained.ckpt")
        before = train_downstream(ckpt, level_windows, 2, cfg.model_copy(update={"epochs": 0})).model
        after = train_downstream(ckpt, level_windows, 2, cfg).model
        assert not torch.equal(before.heads[0].mlp[0].weight, after.heads[0].mlp[0].weight)
