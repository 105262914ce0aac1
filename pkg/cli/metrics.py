from dataset.dataset import read_labels_csv, read_view_csv
from metrics.metrics import evaluate

from .report import ExperimentResult


def run(args):
    pred = read_labels_csv(args.pred)
    truth = read_labels_csv(args.truth) if args.truth else None
    embedding = read_view_csv(args.embedding) if args.embedding else None
    report = evaluate(pred, truth, embedding)
    row = {k: v for k, v in report.as_dict().items()
           if (truth is not None or k == 'silhouette') and (embedding is not None or k != 'silhouette')}
    return ExperimentResult('metrics', vars(args), [row], [], list(row))


def main(args, as_json=False):
    result = run(args)
    if args.out:
        result.write(args.out)
    result.show(as_json)
    return 0
