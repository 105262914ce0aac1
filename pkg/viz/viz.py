import numpy as np
import pandas as pd
import torch
import wandb


def embeddings_table(embedding, labels=None):
    "make a table of (N, d) embeddings for use with wandb, colored by cluster"
    features = embedding.detach().cpu().numpy() if isinstance(embedding, torch.Tensor) else np.asarray(embedding)
    cols = [f"dim_{i}" for i in range(features.shape[1])]
    df = pd.DataFrame(features, columns=cols)
    if labels is not None:
        labels = labels.cpu().numpy() if isinstance(labels, torch.Tensor) else np.asarray(labels)
        df['LABEL'] = [f'cluster{int(c)}' for c in labels]   # labels does the grouping / color for each point
    return wandb.Table(columns=df.columns.to_list(), data=df.values.tolist())
