import json
import os

import numpy as np
import pandas as pd
import torch
from pandas.errors import ParserError

from linalg.errors import AlignmentError, InvalidLabels, InvalidShape, ParseError
from linalg.linalg import DTYPE, as_matrix

MANIFEST_NAME = 'manifest.json'


class MultiViewDataset(torch.utils.data.Dataset):
    """Aligned views of the same N observations.

    Each view is a (d_v, N) float64 tensor; column i of every view is observation i.
    Items are ``((x_1, ..., x_nv), index)`` so a DataLoader yields batch-first views.
    """

    def __init__(self, views, true_labels=None, k=None, latent=None):
        super().__init__()
        views = [as_matrix(v, f'view {i}') for i, v in enumerate(views)]
        if not views:
            raise InvalidShape('a dataset needs at least one view')
        counts = [v.shape[1] for v in views]
        if len(set(counts)) != 1:
            raise AlignmentError(f'views disagree on the number of samples: {counts}')
        if any(v.shape[0] == 0 for v in views):
            raise InvalidShape('views must have at least one feature')
        self.views = views

        if true_labels is not None:
            true_labels = torch.as_tensor(true_labels, dtype=torch.long).reshape(-1)
            if true_labels.numel() != counts[0]:
                raise AlignmentError(f'{true_labels.numel()} labels for {counts[0]} samples')
            if true_labels.numel() and true_labels.min() < 0:
                raise InvalidLabels('labels must be non-negative cluster ids')
            if k is None and true_labels.numel():
                k = int(true_labels.max()) + 1
            if k is not None and true_labels.numel() and true_labels.max() >= k:
                raise InvalidLabels(f'label {int(true_labels.max())} outside [0, {k})')
        self.true_labels = true_labels
        self.k = k
        # generator latent variables (latent_dim, N), when known
        self.latent = None if latent is None else as_matrix(latent, 'latent')

    @property
    def n_samples(self):
        return self.views[0].shape[1]

    @property
    def n_views(self):
        return len(self.views)

    @property
    def dims(self):
        return [v.shape[0] for v in self.views]

    def __len__(self):
        return self.n_samples

    def __getitem__(self, idx):
        return tuple(v[:, idx] for v in self.views), idx

    def with_views(self, views):
        "same labels, new view matrices"
        return MultiViewDataset(views, self.true_labels, self.k, self.latent)

    def subset(self, indices):
        indices = torch.as_tensor(indices, dtype=torch.long)
        labels = None if self.true_labels is None else self.true_labels[indices]
        latent = None if self.latent is None else self.latent[:, indices]
        return MultiViewDataset([v[:, indices] for v in self.views], labels, self.k, latent)


def _looks_numeric(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def _read_frame(path):
    "reads a CSV as strings; returns (frame, header_lines)"
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except ParserError as e:
        raise ParseError(f'{path}: {e}', path=path) from e
    except pd.errors.EmptyDataError as e:
        raise ParseError(f'{path}: file is empty', path=path, line=1) from e
    header = 0
    if len(frame) and not any(_looks_numeric(tok) for tok in frame.iloc[0]):
        frame, header = frame.iloc[1:], 1
    return frame, header


def _parse_numbers(path, frame, header):
    values = frame.apply(pd.to_numeric, errors='coerce')
    bad = values.isna().to_numpy() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        row, col = map(int, np.argwhere(bad)[0])
        line = row + header + 1
        token = frame.iloc[row, col]
        raise ParseError(f'{path}: non-numeric token {token!r} at line {line}, column {col + 1}',
                         path=path, line=line)
    return values.to_numpy(dtype=float)


def read_view_csv(path):
    "one view: features as rows, samples as columns"
    frame, header = _read_frame(path)
    return torch.as_tensor(_parse_numbers(path, frame, header), dtype=DTYPE)


def read_labels_csv(path):
    frame, header = _read_frame(path)
    if frame.shape[1] != 1:
        raise ParseError(f'{path}: labels must be a single column, found {frame.shape[1]}', path=path)
    values = _parse_numbers(path, frame, header)[:, 0]
    if not np.all(values == np.round(values)):
        row = int(np.argmax(values != np.round(values)))
        raise ParseError(f'{path}: label at line {row + header + 1} is not an integer',
                         path=path, line=row + header + 1)
    return torch.as_tensor(values.astype(np.int64))


def load_dataset(paths, labels_path=None, k=None):
    views = [read_view_csv(p) for p in paths]
    counts = [v.shape[1] for v in views]
    if len(set(counts)) != 1:
        raise AlignmentError(f'views disagree on the number of samples: ' +
                             ', '.join(f'{p}={n}' for p, n in zip(paths, counts)))
    labels = read_labels_csv(labels_path) if labels_path else None
    return MultiViewDataset(views, labels, k)


def _read_manifest(path):
    with open(path) as f:
        try:
            manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f'{path}: invalid JSON ({e.msg})', path=path, line=e.lineno) from e
    views = manifest.get('views') if isinstance(manifest, dict) else None
    if not isinstance(views, list) or not views:
        raise ParseError(f'{path}: the manifest needs a non-empty "views" list', path=path)
    for i, entry in enumerate(views):
        if not isinstance(entry, dict) or not isinstance(entry.get('path'), str):
            raise ParseError(f'{path}: view entry {i} has no "path"', path=path)
    labels_path = manifest.get('labels_path')
    if labels_path is not None and not isinstance(labels_path, str):
        raise ParseError(f'{path}: "labels_path" must be a string', path=path)
    return manifest


def load_manifest(path):
    "loads a dataset from its JSON manifest (or from a directory holding one)"
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_NAME)
    manifest = _read_manifest(path)
    root = os.path.dirname(os.path.abspath(path))
    resolve = lambda p: p if os.path.isabs(p) else os.path.join(root, p)

    view_paths = [resolve(entry['path']) for entry in manifest['views']]
    labels_path = manifest.get('labels_path')
    ds = load_dataset(view_paths, resolve(labels_path) if labels_path else None, manifest.get('k'))

    for entry, dim in zip(manifest['views'], ds.dims):
        if 'dim' in entry and entry['dim'] != dim:
            raise AlignmentError(f"{entry['path']}: manifest says {entry['dim']} features, file has {dim}")
    if manifest.get('n_samples', ds.n_samples) != ds.n_samples:
        raise AlignmentError(f"manifest says {manifest['n_samples']} samples, files have {ds.n_samples}")
    return ds


def save_dataset(ds, out_dir):
    "writes view_<v>.csv, labels.csv and manifest.json; returns the manifest path"
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for i, view in enumerate(ds.views):
        name = f'view_{i}.csv'
        pd.DataFrame(view.numpy()).to_csv(os.path.join(out_dir, name), header=False, index=False,
                                          float_format='%.17g')
        entries.append({'path': name, 'dim': view.shape[0]})

    manifest = {'views': entries, 'n_samples': ds.n_samples, 'k': ds.k}
    if ds.true_labels is not None:
        pd.DataFrame(ds.true_labels.numpy()).to_csv(os.path.join(out_dir, 'labels.csv'),
                                                    header=False, index=False)
        manifest['labels_path'] = 'labels.csv'

    path = os.path.join(out_dir, MANIFEST_NAME)
    with open(path, 'w') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')
    return path
