"""End-to-end training: encoders, cluster head and fusion trained with the correlation,
cross-entropy and reconstruction losses under a gradual schedule.

Epochs are 0-based. Cross-entropy on pseudo-labels switches on at `start_epoch` and
within-cluster permutations at `perm_epoch`; before that only the correlation (and
reconstruction) terms train.
"""
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from typing import List, NamedTuple, Optional

import pandas as pd
import pytorch_lightning as pl
import torch
from torch import optim
from torch.nn import functional as F
from prefigure.prefigure import push_wandb_config

from autoencoders.models import CoperModel
from dataset.dataloader import MultiViewDataModule
from linalg.errors import ConfigError, InvalidState, TrainingDiverged
from linalg.linalg import make_generator
from linear.permute import sample_plan
from losses.cluster_losses import cross_entropy, reconstruction_loss
from losses.corr_losses import pairwise_correlation_loss
from metrics.metrics import ClusterAssignment, evaluate
from pseudo.pseudolabel import default_top_count, permutation_labels, pseudo_label_pipeline
from viz.viz import embeddings_table

CHECKPOINT_VERSION = 1

VARIANTS = {
    'full': {},
    'linear': {'linear': True},
    'no-corr': {'use_corr': False},
    'no-perm': {'use_perm': False},
    'no-agreement': {'use_agreement': False},
}


@dataclass
class TrainConfig:
    epochs: int = 200
    start_epoch: Optional[int] = None   # default round(0.1 * epochs)
    perm_epoch: Optional[int] = None    # default round(0.15 * epochs)
    batch_size: int = 128
    lr: float = 1e-4
    ridge: float = 1e-4
    lam: float = 0.5
    top_count: Optional[int] = None     # default ceil(batch_size / K)
    perm_rounds: int = 1
    temperature: float = 1.
    w_corr: float = 1.
    w_ce: float = 1.
    w_mse: float = 1.
    embed_dim: int = 10
    hidden_dims: List[int] = field(default_factory=lambda: [256, 256])
    head_dims: List[int] = field(default_factory=lambda: [64])
    decoders: bool = True
    linear: bool = False
    use_corr: bool = True
    use_perm: bool = True
    use_agreement: bool = True
    k: Optional[int] = None
    seed: int = 0
    demo_every: int = 0
    wandb_project: str = ''

    def __post_init__(self):
        if self.start_epoch is None:
            self.start_epoch = round(0.1 * self.epochs)
        if self.perm_epoch is None:
            self.perm_epoch = round(0.15 * self.epochs)

    @classmethod
    def from_dict(cls, values):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f'unknown training options: {", ".join(unknown)}')
        return cls(**values)

    @classmethod
    def from_json(cls, path, **overrides):
        with open(path) as f:
            try:
                values = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f'{path}: invalid JSON ({e.msg}, line {e.lineno})') from e
        if not isinstance(values, dict):
            raise ConfigError(f'{path}: a training preset must be a JSON object')
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(values)

    def to_dict(self):
        return asdict(self)

    def for_variant(self, name):
        if name not in VARIANTS:
            raise ConfigError(f'unknown variant {name!r}; valid variants: {", ".join(VARIANTS)}')
        return replace(self, **VARIANTS[name])

    def batch_for(self, n_samples):
        return min(self.batch_size, n_samples)

    def validate(self, n_samples=None, k=None):
        if self.epochs < 1:
            raise ConfigError(f'epochs must be positive, got {self.epochs}')
        if not 0 <= self.start_epoch <= self.epochs or not 0 <= self.perm_epoch <= self.epochs:
            raise ConfigError(f'start_epoch ({self.start_epoch}) and perm_epoch ({self.perm_epoch}) '
                              f'must lie in [0, epochs={self.epochs}]')
        if self.lr <= 0 or self.ridge < 0 or self.temperature <= 0:
            raise ConfigError('lr and temperature must be positive and ridge non-negative')
        if self.embed_dim < 1 or self.perm_rounds < 1:
            raise ConfigError('embed_dim and perm_rounds must be positive')
        batch = self.batch_for(n_samples) if n_samples else self.batch_size
        if batch <= self.embed_dim + 2:
            raise ConfigError(f'batch size {batch} must exceed embed_dim + 2 = {self.embed_dim + 2} '
                              'for full-rank batch covariances')
        k = k or self.k
        if k is None or k < 2:
            raise ConfigError(f'the number of clusters must be known and >= 2, got {k}')
        if self.top_count is not None and not 1 <= self.top_count <= batch:
            raise ConfigError(f'top_count must lie in [1, {batch}], got {self.top_count}')
        return self


class StepLosses(NamedTuple):
    total: torch.Tensor
    parts: dict


def coper_objective(model, views, config, ce_active, perm_active, step=0, anchor=0):
    """Total loss and its parts on one batch of (B, d_v) views.

    Pseudo-labels come from the detached fused prediction; gradients flow through every
    loss into the encoders, decoders, head and fusion weights.
    """
    H = model.encode(views)
    parts = {}
    total = torch.zeros((), dtype=H[0].dtype)
    if config.use_corr:
        parts['corr'] = pairwise_correlation_loss([h.T for h in H], config.ridge)
        total = total + config.w_corr * parts['corr']
    if model.decoders is not None:
        parts['mse'] = reconstruction_loss(model.decoders, views, H)
        total = total + config.w_mse * parts['mse']

    if not ce_active:
        return StepLosses(total, parts)

    fused_probs = model.head(model.fuse(H))
    with torch.no_grad():
        detached = [h.detach() for h in H]
        top_count = config.top_count or default_top_count(H[0].shape[0], model.k)
        plset = pseudo_label_pipeline(detached, fused_probs.detach(), top_count, config.lam,
                                      agreement=config.use_agreement)
        perm_labels = permutation_labels(plset, H[0].shape[0], fused_probs.detach())

    ce_terms = []
    for v, h in enumerate(H):
        labels = plset.per_view[v]
        if labels:
            idx = sorted(labels)
            ce_terms.append(cross_entropy(model.head(h[idx]), torch.stack([labels[i] for i in idx])))
    kept = perm_labels >= 0
    if kept.any():
        # the fused prediction trained on the agreed labels gives the fusion weights a gradient
        targets = F.one_hot(perm_labels[kept], model.k).to(fused_probs.dtype)
        ce_terms.append(cross_entropy(fused_probs[kept], targets))
    if ce_terms:
        parts['ce'] = torch.stack(ce_terms).mean()
        total = total + config.w_ce * parts['ce']
    parts['retained'] = torch.tensor(float(kept.sum()))

    if perm_active and config.use_perm and config.use_corr:
        perm_losses = []
        for r in range(config.perm_rounds):
            order = sample_plan(perm_labels, step * config.perm_rounds + r, config.seed).order()
            permuted = [h if v == anchor else h[order] for v, h in enumerate(H)]
            perm_losses.append(pairwise_correlation_loss([h.T for h in permuted], config.ridge))
        parts['perm_corr'] = torch.stack(perm_losses).mean()
        total = total + config.w_corr * parts['perm_corr']
    return StepLosses(total, parts)


class CoperModule(pl.LightningModule):
    def __init__(self, config, view_dims, k):
        super().__init__()
        self.config = config
        self.model = CoperModel(view_dims, k, config.embed_dim, config.hidden_dims, config.head_dims,
                                decoders=config.decoders, linear=config.linear,
                                generator=make_generator(config.seed, 0))
        self.history = []
        self._sums, self._batches = {}, 0

    def configure_optimizers(self):
        return optim.Adam(self.model.parameters(), lr=self.config.lr)

    def training_step(self, batch, batch_idx):
        views, _ = batch
        epoch = self.current_epoch
        step = self.global_step
        losses = coper_objective(self.model, views, self.config,
                                 ce_active=epoch >= self.config.start_epoch,
                                 perm_active=epoch >= self.config.perm_epoch,
                                 step=step,
                                 anchor=step % self.model.n_views)
        if not losses.total.requires_grad:
            # no active term yet (no correlation, no decoders, cross-entropy not started)
            return None
        if not torch.isfinite(losses.total):
            raise TrainingDiverged(f'non-finite loss at epoch {epoch}', epoch=epoch)

        log_dict = {'train/loss': losses.total.detach()}
        log_dict.update({f'train/{name}': value.detach() for name, value in losses.parts.items()})
        self.log_dict(log_dict, on_step=True, batch_size=views[0].shape[0])
        for name, value in log_dict.items():
            self._sums[name] = self._sums.get(name, 0.) + float(value)
        self._batches += 1
        return losses.total

    def epoch_means(self):
        means = {name.split('/', 1)[1]: total / max(self._batches, 1) for name, total in self._sums.items()}
        self._sums, self._batches = {}, 0
        return means

    @torch.no_grad()
    def embed(self, views):
        "(embeddings per view, mean embedding (1/n_v) sum H_v, fused probabilities)"
        was_training = self.model.training
        self.model.eval()
        H = self.model.encode(views)
        probs = self.model.head(self.model.fuse(H))
        self.model.train(was_training)
        return H, sum(H) / len(H), probs


def _batch_first(ds):
    return [v.T.contiguous() for v in ds.views]


class ExceptionCallback(pl.Callback):
    def on_exception(self, trainer, module, err):
        print(f'{type(err).__name__}: {err}', file=sys.stderr)


class SilhouetteCallback(pl.Callback):
    """Closes every epoch with a training-log row: mean losses, the silhouette of the mean
    embedding under the current predictions and, with true labels, ACC/ARI/NMI."""

    def __init__(self, dataset, demo_every=0):
        super().__init__()
        self.views = _batch_first(dataset)
        self.truth = dataset.true_labels
        self.demo_every = demo_every

    def on_train_epoch_end(self, trainer, module):
        H, mean_embedding, probs = module.embed(self.views)
        pred = probs.argmax(dim=1)
        report = evaluate(pred, self.truth, mean_embedding.T)
        row = {'epoch': trainer.current_epoch, **module.epoch_means(), **report.as_dict()}
        if self.truth is None:
            for name in ('acc', 'ari', 'nmi'):
                row.pop(name)
        module.history.append(row)

        if trainer.logger is not None and hasattr(trainer.logger, 'experiment'):
            log_dict = {f'epoch/{name}': value for name, value in row.items() if name != 'epoch'}
            if self.demo_every and trainer.current_epoch % self.demo_every == 0:
                log_dict['embeddings'] = embeddings_table(mean_embedding, pred)
            trainer.logger.experiment.log(log_dict, step=trainer.global_step)


class TrainResult(NamedTuple):
    model: CoperModel
    assignment: ClusterAssignment
    log: pd.DataFrame


def train_coper(ds, config, args=None):
    """Trains on the whole dataset and returns the model, the final assignment (argmax of
    the fused prediction on every sample) and the per-epoch training log."""
    k = config.k or ds.k
    config = replace(config, k=k)
    config.validate(ds.n_samples, k)
    pl.seed_everything(config.seed, workers=True)

    module = CoperModule(config, ds.dims, k)
    data_module = MultiViewDataModule(ds, config.batch_for(ds.n_samples), seed=config.seed)

    logger = False
    if config.wandb_project:
        logger = pl.loggers.WandbLogger(project=config.wandb_project)
        push_wandb_config(logger, args if args is not None else config)

    trainer = pl.Trainer(
        accelerator='cpu',
        devices=1,
        precision=64,
        deterministic=True,
        max_epochs=config.epochs,
        logger=logger,
        callbacks=[SilhouetteCallback(ds, config.demo_every), ExceptionCallback()],
        enable_checkpointing=False,
        enable_progress_bar=False,
        enable_model_summary=False,
        log_every_n_steps=1,
        num_sanity_val_steps=0,
    )
    trainer.fit(module, datamodule=data_module)

    _, _, probs = module.embed(_batch_first(ds))
    assignment = ClusterAssignment(probs.argmax(dim=1).numpy(), k)
    return TrainResult(module.model, assignment, pd.DataFrame(module.history))


def save_checkpoint(path, model, config):
    "JSON checkpoint with sorted keys, so equal weights give equal bytes"
    state = {name: tensor.tolist() for name, tensor in model.state_dict().items()}
    blob = {
        'version': CHECKPOINT_VERSION,
        'config': config.to_dict(),
        'view_dims': model.view_dims,
        'k': model.k,
        'fusion_weights': model.fusion_weights.detach().tolist(),
        'state_dict': state,
    }
    with open(path, 'w') as f:
        json.dump(blob, f, sort_keys=True)
        f.write('\n')


def load_checkpoint(path):
    "returns (model, config)"
    with open(path) as f:
        try:
            blob = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidState(f'{path}: unreadable checkpoint ({e.msg}, line {e.lineno})') from e
    version = blob.get('version') if isinstance(blob, dict) else None
    if version != CHECKPOINT_VERSION:
        raise InvalidState(f'{path}: unsupported checkpoint version {version}')
    config = TrainConfig.from_dict(blob['config'])
    model = CoperModel(blob['view_dims'], blob['k'], config.embed_dim, config.hidden_dims, config.head_dims,
                       decoders=config.decoders, linear=config.linear)
    model.load_state_dict({name: torch.tensor(value, dtype=torch.float64)
                           for name, value in blob['state_dict'].items()})
    return model, config


def write_log(log, path):
    log.to_csv(path, index=False)
