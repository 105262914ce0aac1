import math
import torch
from torch import nn
from torch.nn import functional as F

from linalg.errors import InvalidShape, InvalidState

DTYPE = torch.float64


class MlpNetwork(nn.Module):
    """Fully connected network on batch-first (N, d) inputs.

    ReLU after every hidden layer; the output layer is linear, or softmax for a cluster
    head. A network with a single entry in `dims` has no layers and is the identity.
    """

    def __init__(self, dims, output='linear', generator=None):
        super().__init__()
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise InvalidShape(f'layer dims must be positive, got {list(dims)}')
        if output not in ('linear', 'softmax'):
            raise ValueError(f"output must be 'linear' or 'softmax', got {output!r}")
        self.dims = list(dims)
        self.output = output
        self.layers = nn.ModuleList([nn.Linear(d_in, d_out, dtype=DTYPE)
                                     for d_in, d_out in zip(dims[:-1], dims[1:])])
        self.reset_parameters(generator)
        self._cache = None

    @torch.no_grad()
    def reset_parameters(self, generator=None):
        "symmetric uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), for weights and biases"
        for layer in self.layers:
            bound = 1 / math.sqrt(layer.in_features)
            layer.weight.uniform_(-bound, bound, generator=generator)
            layer.bias.uniform_(-bound, bound, generator=generator)

    @property
    def in_features(self):
        return self.dims[0]

    @property
    def out_features(self):
        return self.dims[-1]

    def _check(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise InvalidShape(f'expected (N, {self.in_features}) input, got {tuple(x.shape)}')

    def forward(self, x):
        self._check(x)
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = F.relu(x)
            elif self.output == 'softmax':
                x = F.softmax(x, dim=-1)
        return x

    def activations(self, x):
        """Every layer's output, input first; caches the graph for `backward`."""
        self._check(x)
        x = x.detach().requires_grad_(True)
        acts = [x]
        with torch.enable_grad():
            for i, layer in enumerate(self.layers):
                h = layer(acts[-1])
                if i < len(self.layers) - 1:
                    h = F.relu(h)
                elif self.output == 'softmax':
                    h = F.softmax(h, dim=-1)
                acts.append(h)
        self._cache = acts
        return acts

    def backward(self, upstream):
        """Reverse pass through the cached activations.

        Returns ({parameter name: gradient}, input gradient) for dL/d(output) = upstream.
        """
        if self._cache is None:
            raise InvalidState('backward called before activations')
        x, out = self._cache[0], self._cache[-1]
        if upstream.shape != out.shape:
            raise InvalidShape(f'upstream gradient {tuple(upstream.shape)} does not match output {tuple(out.shape)}')
        names, params = zip(*self.named_parameters()) if self.layers else ((), ())
        grads = torch.autograd.grad(out, [*params, x], grad_outputs=upstream, allow_unused=True)
        self._cache = None
        param_grads = {n: g if g is not None else torch.zeros_like(p) for n, p, g in zip(names, params, grads)}
        input_grad = grads[-1] if grads[-1] is not None else torch.zeros_like(x)
        return param_grads, input_grad
