"""
Unit tests for the Adam optimizer.
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", ".."))

from core.autodiff import Tensor
from core.errors import NonFiniteError, ShapeMismatchError
from core.training import Adam


@pytest.fixture
def params():
    return {
        "a": Tensor(np.ones((2, 3)), requires_grad=True),
        "b": Tensor(np.zeros(4), requires_grad=True),
    }


@pytest.fixture
def grads():
    return {"a": np.array([[0.5, -2.0, 1e-3], [3.0, -0.1, 7.0]]), "b": np.full(4, -0.25)}


class TestAdam:
    """Test suite for Adam with per-parameter step counts."""

    def test_first_step_is_signed_lr(self, params, grads):
        """Test that the bias-corrected first step moves each entry by lr·sign(g)."""
        Adam(params).step(grads, lr=0.01)
        np.testing.assert_allclose(params["a"].data, 1.0 - 0.01 * np.sign(grads["a"]), atol=1e-6)
        np.testing.assert_allclose(params["b"].data, 0.01, atol=1e-6)

    def test_selected_names_only(self, params, grads):
        """Test that unnamed parameters and their step counts stay untouched."""
        opt = Adam(params)
        opt.step(grads, lr=0.01, names=["a"])
        np.testing.assert_array_equal(params["b"].data, 0.0)
        assert opt.steps == {"a": 1, "b": 0}
        np.testing.assert_array_equal(opt.m["b"], 0.0)

    def test_missing_gradient_skipped(self, params, grads):
        """Test that a parameter without gradient is not stepped."""
        opt = Adam(params)
        opt.step({"a": grads["a"]}, lr=0.01)
        assert opt.steps["b"] == 0

    def test_resumed_bias_correction(self, params, grads):
        """Test that a parameter joining late still takes a full-size first step."""
        opt = Adam(params)
        for _ in range(3):
            opt.step(grads, lr=0.01, names=["a"])
        opt.step(grads, lr=0.01, names=["b"])
        np.testing.assert_allclose(params["b"].data, 0.01, atol=1e-6)

    def test_non_finite_gradient(self, params, grads):
        """Test that NaN gradients raise before any parameter changes."""
        grads["b"][2] = np.nan
        opt = Adam(params)
        with pytest.raises(NonFiniteError, match="b"):
            opt.step(grads, lr=0.01)
        np.testing.assert_array_equal(params["a"].data, 1.0)
        assert opt.steps == {"a": 0, "b": 0}

    def test_state_round_trip(self, params, grads):
        """Test that a restored optimizer continues identically."""
        opt = Adam(params)
        opt.step(grads, lr=0.01)
        tensors, steps = opt.state_dict()

        twin_params = {k: Tensor(v.data.copy(), requires_grad=True) for k, v in params.items()}
        twin = Adam(twin_params)
        twin.load_state_dict(tensors, steps)

        opt.step(grads, lr=0.005)
        twin.step(grads, lr=0.005)
        for name in params:
            np.testing.assert_array_equal(twin_params[name].data, params[name].data)

    def test_load_missing_moment(self, params):
        """Test that incomplete state raises ShapeMismatchError."""
        tensors, steps = Adam(params).state_dict()
        del tensors["v.b"]
        with pytest.raises(ShapeMismatchError, match="v.b"):
            Adam(params).load_state_dict(tensors, steps)

    def test_load_wrong_shape(self, params):
        """Test that a moment of another shape is refused."""
        tensors, steps = Adam(params).state_dict()
        tensors["m.a"] = np.zeros((3, 2), dtype=np.float32)
        with pytest.raises(ShapeMismatchError):
            Adam(params).load_state_dict(tensors, steps)
