import json

from dataset.dataset import save_dataset
from dataset.synth import LatentSpec, benchmark_dataset, synth_multiview

from .config import parse_list


def run(args):
    if args.benchmark:
        ds = benchmark_dataset(args.benchmark, seed=args.seed, n_samples=args.n)
    else:
        spec = LatentSpec.random(n_clusters=args.k, latent_dim=args.latent_dim,
                                 view_dims=parse_list(args.views, int), separation=args.separation,
                                 scale=args.scale, noise=args.noise, seed=args.seed)
        ds = synth_multiview(spec, args.n, seed=args.seed)
    return ds, save_dataset(ds, args.out)


def main(args, as_json=False):
    ds, manifest = run(args)
    if as_json:
        print(json.dumps({'manifest': manifest, 'n_samples': ds.n_samples, 'dims': ds.dims, 'k': ds.k},
                         indent=2, sort_keys=True))
    else:
        print(f'wrote {ds.n_views} views ({", ".join(map(str, ds.dims))} features) x {ds.n_samples} samples, '
              f'K={ds.k} -> {manifest}')
    return 0
