from torch.utils import data
import torch
import pytorch_lightning as pl


def collate_views(batch):
    "stacks ((x_1..x_nv), idx) items into batch-first view tensors and an index tensor"
    views, idx = zip(*batch)
    return [torch.stack(column) for column in zip(*views)], torch.as_tensor(idx)


class MultiViewDataModule(pl.LightningDataModule):
    def __init__(self, dataset, batch_size, seed=0, drop_last=True):
        super().__init__()
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed
        self.drop_last = drop_last

    def setup(self, stage=None):
        self.train_set = self.dataset

    def train_dataloader(self):
        # seeded shuffling so two runs with one seed see the same batches
        generator = torch.Generator().manual_seed(self.seed)
        return data.DataLoader(self.train_set, self.batch_size, shuffle=True, generator=generator,
                               num_workers=0, drop_last=self.drop_last, collate_fn=collate_views)

    def predict_dataloader(self):
        return data.DataLoader(self.train_set, self.batch_size, shuffle=False, num_workers=0,
                               collate_fn=collate_views)
