"""Tests for the numpy autograd layer."""

import h5py
import numpy as np
import pytest

from paydiff.nn import (
    Adam,
    AdamState,
    Conv1d,
    Conv1dBlock,
    GroupNorm,
    Linear,
    Tensor,
    adam_step,
    default_dtype,
    functional as F,
    get_default_dtype,
    gradient_check,
    load_checkpoint,
    no_grad,
    save_checkpoint,
    tensor,
)
from paydiff.nn.checkpoint import CHECKPOINT_MAGIC
from paydiff.utils.error_handler import CorruptFileError, FormatVersionError, NonFiniteGradientError, ShapeError


class TestTensor:
    """Reverse-mode gradients of the elementary operations."""

    def test_product_gradient(self):
        a = tensor([1.0, 2.0, 3.0], requires_grad=True)
        b = tensor([4.0, 5.0, 6.0], requires_grad=True)
        (a * b).sum().backward()
        np.testing.assert_allclose(a.grad, [4.0, 5.0, 6.0])
        np.testing.assert_allclose(b.grad, [1.0, 2.0, 3.0])

    def test_broadcast_gradient_is_summed(self):
        x = tensor(np.ones((3, 2)), requires_grad=True)
        bias = tensor([0.5, -0.5], requires_grad=True)
        (x + bias).sum().backward()
        np.testing.assert_allclose(bias.grad, [3.0, 3.0])

    def test_reused_node_accumulates(self):
        x = tensor(2.0, requires_grad=True)
        (x * x + x).backward()
        assert x.grad == pytest.approx(5.0)

    def test_backward_needs_scalar(self):
        x = tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ShapeError):
            (x * 2.0).backward()

    def test_no_grad_builds_no_graph(self):
        x = tensor([1.0], requires_grad=True)
        with no_grad():
            y = x * 3.0
        assert not y.requires_grad

    def test_default_dtype_context(self):
        assert get_default_dtype() == np.float32
        with default_dtype(np.float64):
            assert tensor([1.0]).dtype == np.float64
        assert tensor([1.0]).dtype == np.float32


class TestFunctional:
    """Forward values of the U-Net operations."""

    def test_conv1d_identity_kernel(self):
        x = tensor(np.arange(10.0).reshape(1, 2, 5))
        w = np.zeros((2, 2, 3))
        w[0, 0, 1] = w[1, 1, 1] = 1.0
        out = F.conv1d(x, tensor(w), padding=1)
        np.testing.assert_allclose(out.data, x.data)

    def test_conv1d_difference_kernel(self):
        x = tensor(np.array([[[0.0, 1.0, 4.0, 9.0]]]))
        out = F.conv1d(x, tensor([[[-1.0, 1.0]]]))
        np.testing.assert_allclose(out.data, [[[1.0, 3.0, 5.0]]])

    def test_conv1d_stride_halves_length(self):
        x = tensor(np.ones((2, 3, 8)))
        w = tensor(np.ones((4, 3, 3)))
        assert F.conv1d(x, w, stride=2, padding=1).shape == (2, 4, 4)

    def test_conv1d_channel_mismatch(self):
        with pytest.raises(ShapeError):
            F.conv1d(tensor(np.ones((1, 2, 5))), tensor(np.ones((1, 3, 3))))

    def test_group_norm_output_is_standardized(self):
        rng = np.random.default_rng(0)
        x = tensor(rng.normal(3.0, 2.0, (2, 4, 16)))
        out = F.group_norm(x, 2).data.reshape(2, 2, -1)
        np.testing.assert_allclose(out.mean(axis=2), 0.0, atol=1e-5)
        np.testing.assert_allclose(out.std(axis=2), 1.0, atol=1e-3)

    def test_film_broadcasts_over_time(self):
        x = tensor(np.ones((1, 2, 3)))
        out = F.film(x, tensor([[2.0, 3.0]]), tensor([[0.0, 1.0]]))
        np.testing.assert_allclose(out.data[0, 0], 2.0)
        np.testing.assert_allclose(out.data[0, 1], 4.0)

    def test_masked_mse(self):
        pred = tensor([[1.0, 2.0], [3.0, 4.0]])
        target = np.zeros((2, 2))
        mask = np.array([[1.0, 0.0], [0.0, 0.0]])
        assert F.mse_loss(pred, target, mask).item() == pytest.approx(1.0)
        assert F.mse_loss(pred, target).item() == pytest.approx(7.5)


class TestGradientCheck:
    """Analytic gradients agree with central differences in float64."""

    def test_conv_block(self):
        rng = np.random.default_rng(1)
        with default_dtype(np.float64):
            block = Conv1dBlock(3, 4, 3, n_groups=2, rng=rng)
            x = Tensor(rng.normal(size=(2, 3, 8)), requires_grad=True)
            target = rng.normal(size=(2, 4, 8))
            report = gradient_check(lambda: F.mse_loss(block(x), target), block.parameters() + [x],
                                    n_samples=6, tol=1e-5)
        assert report.passed, report

    def test_linear_and_film(self):
        rng = np.random.default_rng(2)
        with default_dtype(np.float64):
            linear = Linear(3, 4, rng)
            cond = Tensor(rng.normal(size=(2, 3)), requires_grad=True)
            x = Tensor(rng.normal(size=(2, 4, 5)), requires_grad=True)

            def loss():
                scale = F.silu(linear(cond))
                return (F.film(x, scale, scale * 0.5) ** 2).mean()

            report = gradient_check(loss, linear.parameters() + [cond, x], n_samples=8, tol=1e-5)
        assert report.passed, report

    def test_rejects_float32(self):
        conv = Conv1d(1, 1, 3, np.random.default_rng(0))
        with pytest.raises(TypeError):
            gradient_check(lambda: conv(tensor(np.ones((1, 1, 4)))).sum(), conv.parameters())

    def test_frozen_parameters_are_skipped(self):
        rng = np.random.default_rng(3)
        with default_dtype(np.float64):
            norm = GroupNorm(1, 2).freeze()
            x = Tensor(rng.normal(size=(1, 2, 4)), requires_grad=True)
            report = gradient_check(lambda: (norm(x) * x).sum(), norm.parameters(include_frozen=True) + [x])
        assert report.n_checked == x.size


class TestAdam:
    """Bias-corrected Adam updates."""

    def test_first_step_moves_by_lr(self):
        state = AdamState()
        (updated,) = adam_step([np.array([1.0, -1.0])], [np.array([0.5, -2.0])], state, lr=0.1)
        np.testing.assert_allclose(updated, [0.9, -0.9], atol=1e-6)
        assert state.step == 1

    def test_zero_gradient_leaves_params(self):
        state = AdamState()
        (updated,) = adam_step([np.array([1.0, 2.0])], [np.zeros(2)], state)
        np.testing.assert_allclose(updated, [1.0, 2.0])

    def test_non_finite_gradient_raises(self):
        state = AdamState()
        with pytest.raises(NonFiniteGradientError, match="w"):
            adam_step([np.ones(2)], [np.array([np.nan, 0.0])], state, names=["w"])
        assert state.step == 0

    def test_optimizer_minimizes_quadratic(self):
        x = tensor([3.0, -2.0], requires_grad=True, name="x")
        opt = Adam([x], lr=0.1)
        for _ in range(500):
            opt.zero_grad()
            (x * x).sum().backward()
            opt.step()
        np.testing.assert_allclose(x.data, 0.0, atol=0.1)

    def test_gradient_clipping(self):
        x = tensor([0.0], requires_grad=True)
        opt = Adam([x], grad_clip=1.0)
        x.grad = np.array([100.0], dtype=np.float32)
        assert opt.grad_norm() == pytest.approx(100.0)
        opt.step()
        assert opt.state.m[0][0] == pytest.approx(0.1, rel=1e-5)

    def test_state_dict_roundtrip(self):
        x = tensor([1.0], requires_grad=True)
        opt = Adam([x])
        x.grad = np.array([1.0], dtype=np.float32)
        opt.step()
        other = Adam([x])
        other.load_state_dict(opt.state_dict())
        assert other.state.step == 1
        np.testing.assert_allclose(other.state.v[0], opt.state.v[0])


class TestModule:
    """Parameter naming and state dicts."""

    def setup_method(self):
        self.block = Conv1dBlock(2, 4, 3, n_groups=2, rng=np.random.default_rng(0))

    def test_named_parameters(self):
        names = [name for name, _ in self.block.named_parameters()]
        assert names == ["conv.weight", "conv.bias", "norm.weight", "norm.bias"]

    def test_load_state_dict_strict(self):
        state = self.block.state_dict()
        state.pop("norm.bias")
        with pytest.raises(KeyError):
            self.block.load_state_dict(state)

    def test_freeze_excludes_from_training(self):
        self.block.freeze()
        assert self.block.parameters() == []
        assert len(self.block.parameters(include_frozen=True)) == 4
        self.block.unfreeze()
        assert len(self.block.parameters()) == 4


class TestCheckpoint:
    """HDF5 parameter containers."""

    def test_roundtrip(self, tmp_path):
        params = {"down.0.conv.weight": np.arange(6.0).reshape(2, 3), "bias": np.ones(2)}
        path = save_checkpoint(tmp_path / "net.h5", params, {"widths": [8, 16]},
                               optimizer={"step": np.array(4)}, metadata={"loss": 0.5})
        data = load_checkpoint(path)
        np.testing.assert_array_equal(data.params["down.0.conv.weight"], params["down.0.conv.weight"])
        assert data.config == {"widths": [8, 16]}
        assert int(data.optimizer["step"]) == 4
        assert data.metadata["loss"] == 0.5
        assert not (tmp_path / "net.h5.tmp").exists()

    def test_skip_optimizer(self, tmp_path):
        path = save_checkpoint(tmp_path / "net.h5", {"w": np.ones(1)}, {}, optimizer={"step": np.array(1)})
        assert load_checkpoint(path, load_optimizer=False).optimizer is None

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "absent.h5")

    def test_garbage_file(self, tmp_path):
        path = tmp_path / "bad.h5"
        path.write_bytes(b"not an hdf5 file at all")
        with pytest.raises(CorruptFileError):
            load_checkpoint(path)

    def test_future_format(self, tmp_path):
        path = tmp_path / "future.h5"
        with h5py.File(path, "w") as f:
            f.attrs["magic"] = CHECKPOINT_MAGIC
            f.attrs["format_version"] = "2.0"
        with pytest.raises(FormatVersionError):
            load_checkpoint(path)
