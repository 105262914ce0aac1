import unittest

import torch

from dataset.synth import benchmark_dataset
from linalg.errors import InvalidLabels, InvalidParameter
from linalg.linalg import DTYPE, center, sym_eig
from linear.lda import scatter_matrices
from perturb.perturb import (bound_check, error_terms, noisy_labels, perturbation_matrix, pseudo_scatters,
                             subset_labels)


def loop_error_terms(theta, truth, pseudo, k, form):
    "sample-by-sample sums of the three error terms"
    theta = center(theta)
    d, n = theta.shape
    cols = [theta[:, i] for i in range(n)]

    def mean_of(indices, fallback=None):
        if not indices:
            return fallback
        return sum(cols[i] for i in indices) / len(indices)

    true_sets = [[i for i in range(n) if truth[i] == c] for c in range(k)]
    mu = [mean_of(s) for s in true_sets]
    hat_sets = [[i for i in range(n) if pseudo[i] == c] for c in range(k)]
    mu_hat = [mean_of(s, mu[c]) for c, s in enumerate(hat_sets)]
    outer = lambda a, b: torch.outer(a, b)

    E1, E2, E3 = (torch.zeros(d, d, dtype=DTYPE) for _ in range(3))
    n_bar, pairs = 0, 0
    for c in range(k):
        excluded = [i for i in true_sets[c] if pseudo[i] != c]
        wrong = [j for j in hat_sets[c] if truth[j] != c]
        right = [i for i in hat_sets[c] if truth[i] == c]
        for i in excluded:
            E1 -= outer(cols[i] - mu_hat[c], cols[i] - mu_hat[c])
        n_bar += len(excluded)
        delta = mu[c] - mu_hat[c]
        if form == 'scatter':
            for j in wrong:
                E2 += outer(cols[j] - mu_hat[c], cols[j] - mu_hat[c])
            E2 += len(true_sets[c]) * outer(delta, delta)
            E3 += len(hat_sets[c]) * outer(mu_hat[c], mu_hat[c]) - len(true_sets[c]) * outer(mu[c], mu[c])
        else:
            for i in right:
                for j in wrong:
                    q = int(truth[j])
                    E2 += outer(cols[i] - mu_hat[c], cols[j] - mu_hat[q])
            pairs += len(right) * len(wrong)
            E3 -= len(hat_sets[c]) / n * outer(delta, delta)
    if form == 'scatter':
        return E1 / n, E2 / n, E3 / n
    return E1 / max(n_bar, 1), E2 / max(pairs, 1), E3


class TestErrorTerms(unittest.TestCase):

    def setUp(self):
        g = torch.Generator().manual_seed(5)
        self.truth = torch.tensor([0] * 6 + [1] * 6)
        offsets = torch.tensor([[0., 0., 0.], [3., 1., -1.]], dtype=DTYPE)
        self.theta = (offsets[self.truth] + torch.randn(12, 3, generator=g, dtype=DTYPE)).T

    def check_against_loops(self, pseudo):
        for form in ('scatter', 'averaged'):
            expected = loop_error_terms(self.theta, self.truth, pseudo, 2, form)
            for got, want in zip(error_terms(self.theta, self.truth, pseudo, 2, form), expected):
                self.assertTrue(torch.allclose(got, want, atol=1e-12), form)

    def test_one_excluded_sample(self):
        pseudo = self.truth.clone()
        pseudo[3] = -1
        self.check_against_loops(pseudo)
        E1, E2, E3 = error_terms(self.theta, self.truth, pseudo, 2, 'averaged')
        self.assertEqual(E2.abs().max().item(), 0.)

    def test_one_mislabeled_sample(self):
        pseudo = self.truth.clone()
        pseudo[8] = 0
        self.check_against_loops(pseudo)

    def test_mixed_errors(self):
        pseudo = torch.tensor([0, 0, 1, -1, 0, 0, 1, 1, 0, 1, -1, 1])
        self.check_against_loops(pseudo)

    def test_exact_labels_give_zero_terms(self):
        for form in ('scatter', 'averaged'):
            for term in error_terms(self.theta, self.truth, self.truth, 2, form):
                self.assertLess(term.abs().max().item(), 1e-12)

    def test_scatter_terms_decompose_the_pseudo_scatters(self):
        theta = center(self.theta)
        C_e, C_a = scatter_matrices(theta, self.truth, 2)
        for pseudo in (torch.tensor([0, 0, 1, -1, 0, 0, 1, 1, 0, 1, -1, 1]), subset_labels(self.truth, 0.5)):
            E1, E2, E3 = error_terms(theta, self.truth, pseudo, 2)
            C_e_hat, C_a_hat = pseudo_scatters(theta, pseudo, 2)
            self.assertTrue(torch.allclose(C_e + E1 + E2, C_e_hat, atol=1e-12))
            self.assertTrue(torch.allclose(C_a + E3, C_a_hat, atol=1e-12))

    def test_unknown_form(self):
        with self.assertRaises(InvalidParameter):
            error_terms(self.theta, self.truth, self.truth, 2, 'pairwise')


class TestPerturbationMatrix(unittest.TestCase):

    def test_scalar_case(self):
        c, ce, e, e3 = 2.5, 1.5, 0.3, -0.2
        D = perturbation_matrix(torch.tensor([[c]], dtype=DTYPE), torch.tensor([[ce]], dtype=DTYPE),
                                torch.tensor([[e]], dtype=DTYPE), torch.tensor([[e3]], dtype=DTYPE), ridge=0.)
        expected = e / c - e * ce / c ** 2 - e3 / c + e * e3 / c ** 2
        self.assertAlmostEqual(D.item(), expected, places=12)

    def test_matches_term_by_term_products(self):
        g = torch.Generator().manual_seed(2)
        M = torch.randn(4, 4, generator=g, dtype=DTYPE)
        C = M @ M.T + 4 * torch.eye(4, dtype=DTYPE)
        C_e = 0.5 * C
        E = 0.1 * torch.randn(4, 4, generator=g, dtype=DTYPE)
        E3 = 0.1 * torch.randn(4, 4, generator=g, dtype=DTYPE)
        C_inv = torch.linalg.inv(C)
        expected = C_inv @ E - C_inv @ E @ C_inv @ C_e - C_inv @ E3 + C_inv @ E @ C_inv @ E3
        self.assertTrue(torch.allclose(perturbation_matrix(C, C_e, E, E3, ridge=0.), expected, atol=1e-10))

    def test_zero_errors(self):
        C = torch.eye(3, dtype=DTYPE)
        zero = torch.zeros(3, 3, dtype=DTYPE)
        self.assertEqual(perturbation_matrix(C, C, zero, zero).abs().max().item(), 0.)


class TestPerturbation(unittest.TestCase):

    def setUp(self):
        ds = benchmark_dataset('blobs', seed=0, n_samples=300)
        self.theta, self.truth = ds.latent, ds.true_labels

    def test_exact_labels_have_no_error(self):
        for form in ('scatter', 'averaged'):
            report = bound_check(self.theta, self.truth, self.truth, form=form)
            for term in (report.E1, report.E2, report.E3, report.D):
                self.assertLess(term.abs().max().item(), 1e-12)
            self.assertLess(report.max_gap, 1e-10)
            self.assertTrue(report.bound_satisfied)

    def test_error_sum(self):
        report = bound_check(self.theta, self.truth, noisy_labels(self.truth, 0.2, seed=3))
        self.assertTrue(torch.equal(report.E, report.E1 + report.E2 + report.E3))
        self.assertEqual(report.max_gap, (report.perturbed_eigvals - report.true_eigvals).abs().max().item())

    def test_averaged_subset_has_no_swap_term(self):
        pseudo = subset_labels(self.truth, 0.5, seed=1)
        E1, E2, E3 = error_terms(self.theta, self.truth, pseudo, form='averaged')
        self.assertEqual(E2.abs().max().item(), 0.)
        self.assertGreater(E1.abs().max().item(), 0.)
        self.assertLessEqual(sym_eig(E1).values.max().item(), 1e-12)

    def test_averaged_mean_shift_term_is_negative_semidefinite(self):
        E1, E2, E3 = error_terms(self.theta, self.truth, noisy_labels(self.truth, 0.2, seed=0), form='averaged')
        self.assertLessEqual(sym_eig(E3).values.max().item(), 1e-12)
        self.assertGreater(E2.abs().max().item(), 0.)

    def test_scatter_noise_keeps_the_total_scatter(self):
        E1, E2, E3 = error_terms(self.theta, self.truth, noisy_labels(self.truth, 0.2, seed=0))
        self.assertLess((E1 + E2 + E3).abs().max().item(), 1e-10)

    def test_report_row(self):
        row = bound_check(self.theta, self.truth, noisy_labels(self.truth, 0.1)).as_row()
        self.assertEqual(set(row), {'max_gap', 'bound', 'bound_satisfied', 'norm_E1', 'norm_E2', 'norm_E3',
                                    'top_eigval', 'top_eigval_hat'})
        self.assertIn(row['bound_satisfied'], (0, 1))
        self.assertGreaterEqual(row['bound'], 0.)

    def test_noisy_labels(self):
        self.assertTrue(torch.equal(noisy_labels(self.truth, 0.), self.truth))
        flipped = noisy_labels(self.truth, 1., seed=4)
        self.assertFalse((flipped == self.truth).any())
        partial = noisy_labels(self.truth, 0.3, seed=4)
        self.assertEqual(int((partial != self.truth).sum()), 90)
        self.assertTrue(torch.equal(partial, noisy_labels(self.truth, 0.3, seed=4)))
        with self.assertRaises(InvalidParameter):
            noisy_labels(self.truth, 1.5)

    def test_subset_labels(self):
        labels = subset_labels(self.truth, 0.4, seed=2)
        kept = labels >= 0
        self.assertEqual(int(kept.sum()), 120)
        self.assertTrue(torch.equal(labels[kept], self.truth[kept]))
        with self.assertRaises(InvalidParameter):
            subset_labels(self.truth, 0.)

    def test_too_few_pseudo_labels(self):
        pseudo = torch.full_like(self.truth, -1)
        pseudo[0] = self.truth[0]
        with self.assertRaises(InvalidLabels):
            bound_check(self.theta, self.truth, pseudo)


class TestNoiseSweep(unittest.TestCase):
    "the shipped blobs latents, ten seeds"

    @classmethod
    def setUpClass(cls):
        ds = benchmark_dataset('blobs', seed=0, n_samples=600)
        cls.theta, cls.truth = ds.latent, ds.true_labels
        cls.seeds = range(10)

    def mean_gap(self, labels_for):
        gaps = [bound_check(self.theta, self.truth, labels_for(seed)).max_gap for seed in self.seeds]
        return sum(gaps) / len(gaps)

    def test_bound_holds_under_small_noise(self):
        for p in (0.05, 0.1):
            held = sum(bound_check(self.theta, self.truth, noisy_labels(self.truth, p, seed)).bound_satisfied
                       for seed in self.seeds)
            self.assertGreaterEqual(held, 9, f'noise {p}')

    def test_gap_grows_with_label_noise(self):
        gaps = [self.mean_gap(lambda seed: noisy_labels(self.truth, p, seed)) for p in (0., 0.1, 0.2, 0.3)]
        self.assertLessEqual(gaps[0], 1e-8)
        for lower, higher in zip(gaps, gaps[1:]):
            self.assertLessEqual(lower, higher)

    def test_gap_shrinks_with_more_labels(self):
        gaps = [self.mean_gap(lambda seed: subset_labels(self.truth, f, seed)) for f in (0.2, 0.4, 0.6, 0.8, 1.)]
        for larger, smaller in zip(gaps, gaps[1:]):
            self.assertGreaterEqual(larger, smaller)
        self.assertLessEqual(gaps[-1], 1e-8)


if __name__ == '__main__':
    unittest.main()
