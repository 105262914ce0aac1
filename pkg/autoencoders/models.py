import torch
import torch.nn as nn

from blocks.blocks import DTYPE, MlpNetwork
from linalg.errors import InvalidShape


def fuse(embeddings, weights):
    "sum_v w_v H_v over equally shaped (N, d) embeddings"
    if len(embeddings) != len(weights):
        raise InvalidShape(f'{len(weights)} fusion weights for {len(embeddings)} views')
    shapes = {tuple(h.shape) for h in embeddings}
    if len(shapes) != 1:
        raise InvalidShape(f'embeddings differ in shape: {sorted(shapes)}')
    return sum(w * h for w, h in zip(weights, embeddings))


class CoperModel(nn.Module):
    """Per-view encoders F_v, optional mirrored decoders, and a softmax cluster head G on the
    weighted fusion of the embeddings.

    `linear=True` swaps every encoder for a single affine map.
    """

    def __init__(self, view_dims, k, embed_dim=10, hidden_dims=(256, 256), head_dims=(64,),
                 decoders=True, linear=False, generator=None):
        super().__init__()
        if k < 2:
            raise InvalidShape(f'cluster head needs K >= 2, got {k}')
        hidden = [] if linear else list(hidden_dims)
        self.view_dims = list(view_dims)
        self.k = k
        self.embed_dim = embed_dim
        self.encoders = nn.ModuleList([MlpNetwork([d, *hidden, embed_dim], generator=generator)
                                       for d in view_dims])
        self.decoders = nn.ModuleList([MlpNetwork([embed_dim, *reversed(hidden), d], generator=generator)
                                       for d in view_dims]) if decoders else None
        self.head = MlpNetwork([embed_dim, *head_dims, k], output='softmax', generator=generator)
        self.fusion_weights = nn.Parameter(torch.full((len(view_dims),), 1. / len(view_dims), dtype=DTYPE))

    @property
    def n_views(self):
        return len(self.encoders)

    def encode(self, views):
        if len(views) != self.n_views:
            raise InvalidShape(f'model has {self.n_views} encoders, got {len(views)} views')
        return [encoder(x) for encoder, x in zip(self.encoders, views)]

    def decode(self, embeddings):
        return [decoder(h) for decoder, h in zip(self.decoders, embeddings)]

    def fuse(self, embeddings):
        return fuse(embeddings, self.fusion_weights)

    def forward(self, views):
        "cluster probabilities (N, K) of the fused embedding"
        return self.head(self.fuse(self.encode(views)))
