import tempfile
import unittest

from cli import casestudy, linear_bench, perturb_sweep
from cli.config import load_defaults


def means(result, key, value):
    "{group: mean} for one aggregate column"
    return {row[key]: row[f'{value}_mean'] for row in result.aggregate}


class TestShippedBenchmarks(unittest.TestCase):
    "the shipped defaults of the linear commands, ten seeds each"

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_linear_bench_ordering(self):
        args = load_defaults('linear-bench', methods='raw,cca,cca-perm', out=self.tmp.name)
        acc = means(linear_bench.run(args), 'method', 'acc')
        self.assertGreaterEqual(acc['cca'], acc['raw'] - 0.01)
        # permutation rounds on pseudo-labels, half a point of slack over ten seeds
        self.assertGreaterEqual(acc['cca-perm'], acc['cca'] - 0.005)

    def test_casestudy_gain(self):
        result, _ = casestudy.run(load_defaults('casestudy', out=self.tmp.name))
        by_seed = {}
        for row in result.rows:
            by_seed.setdefault(row['seed'], {})[row['stage']] = row['ari']
        gains = [stages[max(stages)] - stages[0] for stages in by_seed.values()]
        self.assertGreaterEqual(sum(gains) / len(gains), 0.05)
        rising = sum(all(stages[s] <= stages[s + 1] for s in range(max(stages))) for stages in by_seed.values())
        self.assertGreaterEqual(rising, 8)

    def test_perturb_sweep_trends(self):
        result = perturb_sweep.run(load_defaults('perturb-sweep', out=self.tmp.name))
        noise = [r for r in result.aggregate if r['mode'] == 'noise']
        subset = [r for r in result.aggregate if r['mode'] == 'subset']
        self.assertEqual([r['level'] for r in noise], [0., 0.1, 0.2, 0.3])
        self.assertLessEqual(noise[0]['max_gap_mean'], 1e-8)
        for lower, higher in zip(noise, noise[1:]):
            self.assertLessEqual(lower['max_gap_mean'], higher['max_gap_mean'])
        for larger, smaller in zip(subset, subset[1:]):
            self.assertGreaterEqual(larger['max_gap_mean'], smaller['max_gap_mean'])
        exact = [r for r in result.rows if r['mode'] == 'noise' and r['level'] == 0.]
        self.assertTrue(all(r['bound'] <= 1e-12 for r in exact))
        # the bound at 10% label noise
        held = [r['bound_satisfied'] for r in result.rows if r['mode'] == 'noise' and r['level'] == 0.1]
        self.assertGreaterEqual(sum(held), 9)


if __name__ == '__main__':
    unittest.main()
