# tests/test_torch_gradients.py
#
# Reverse-mode gradients checked against torch autograd on the same network.

import numpy as np
import pytest

from network.losses import LossFn
from network.model import backward, forward
from shared_types import DeepSplineNet, Layer, LinearSpline

torch = pytest.importorskip("torch")


def random_net(rng, arch, k=4):
    layers = []
    for fan_in, width in zip(arch[:-1], arch[1:]):
        acts = tuple(
            LinearSpline(
                b1=rng.standard_normal(),
                b2=rng.standard_normal(),
                knots=tuple(rng.uniform(-2, 2, k)),
                coeffs=tuple(rng.standard_normal(k)),
            )
            for _ in range(width)
        )
        layers.append(Layer(weights=rng.standard_normal((width, fan_in)), activations=acts, normalized=False))
    return DeepSplineNet(layers)


def torch_params(net):
    """Leaf tensors mirroring every parameter of `net`."""
    params = []
    for layer in net.layers:
        params.append(
            {
                "w": torch.tensor(layer.weights, dtype=torch.float64, requires_grad=True),
                "b1": torch.tensor([a.b1 for a in layer.activations], dtype=torch.float64, requires_grad=True),
                "b2": torch.tensor([a.b2 for a in layer.activations], dtype=torch.float64, requires_grad=True),
                "a": [torch.tensor(a.coeffs, dtype=torch.float64, requires_grad=True) for a in layer.activations],
                "tau": [torch.tensor(a.knots, dtype=torch.float64, requires_grad=True) for a in layer.activations],
            }
        )
    return params


def torch_forward(params, x):
    h = torch.tensor(x, dtype=torch.float64)
    for p in params:
        z = h @ p["w"].T
        cols = []
        for j in range(z.shape[1]):
            zj = z[:, j]
            ramps = torch.relu(zj[:, None] - p["tau"][j][None, :])
            cols.append(p["b1"][j] + p["b2"][j] * zj + ramps @ p["a"][j])
        h = torch.stack(cols, dim=1)
    return h


# --------------------------
# Squared loss
# --------------------------

@pytest.mark.parametrize("arch", [[1, 3, 1], [2, 4, 3, 1], [3, 5, 2]])
def test_backward_matches_autograd(rng, arch):
    net = random_net(rng, arch)
    x = rng.uniform(-1, 1, (25, arch[0]))
    y = rng.standard_normal((25, arch[-1]))

    out, cache = forward(net, x)
    ours = backward(net, cache, LossFn("squared").gradient(y, out), knot_learning=True)

    params = torch_params(net)
    t_out = torch_forward(params, x)
    loss = torch.sum((torch.tensor(y) - t_out) ** 2)
    loss.backward()

    assert np.allclose(t_out.detach().numpy(), out, atol=1e-12)
    for i, p in enumerate(params):
        assert np.allclose(ours.weights[i], p["w"].grad.numpy(), rtol=1e-10, atol=1e-10)
        assert np.allclose(ours.b1[i], p["b1"].grad.numpy(), rtol=1e-10, atol=1e-10)
        assert np.allclose(ours.b2[i], p["b2"].grad.numpy(), rtol=1e-10, atol=1e-10)
        for j in range(len(p["a"])):
            assert np.allclose(ours.coeffs[i][j], p["a"][j].grad.numpy(), rtol=1e-10, atol=1e-10)
            assert np.allclose(ours.knots[i][j], p["tau"][j].grad.numpy(), rtol=1e-10, atol=1e-10)


# --------------------------
# Logistic loss
# --------------------------

def test_logistic_backward_matches_autograd(rng):
    net = random_net(rng, [2, 3, 1])
    x = rng.uniform(-1, 1, (30, 2))
    y = np.sign(rng.standard_normal((30, 1)))

    out, cache = forward(net, x)
    ours = backward(net, cache, LossFn("logistic").gradient(y, out))

    params = torch_params(net)
    t_out = torch_forward(params, x)
    loss = torch.sum(torch.nn.functional.softplus(-torch.tensor(y) * t_out))
    loss.backward()

    for i, p in enumerate(params):
        assert np.allclose(ours.weights[i], p["w"].grad.numpy(), rtol=1e-10, atol=1e-10)
