import unittest

import torch

from linalg.errors import CoperError, NotSymmetric, SingularCovariance, exit_code_table
from linalg.linalg import (DTYPE, covariance, center, fix_signs, inv_sqrt, make_generator,
                           optimal_assignment, pca, principal_cosines, sym_eig)


def random_spd(d, seed=0):
    g = torch.Generator().manual_seed(seed)
    A = torch.randn(d, d, generator=g, dtype=DTYPE)
    return A @ A.T + d * torch.eye(d, dtype=DTYPE)


class TestLinalg(unittest.TestCase):

    def test_sym_eig_descending_and_reconstructs(self):
        A = random_spd(5)
        eig = sym_eig(A)
        self.assertTrue(torch.all(eig.values[:-1] >= eig.values[1:]))
        rebuilt = eig.vectors @ torch.diag(eig.values) @ eig.vectors.T
        self.assertTrue(torch.allclose(rebuilt, A, atol=1e-10))

    def test_sym_eig_rejects_asymmetric(self):
        A = random_spd(3)
        A[0, 1] += 1.
        with self.assertRaises(NotSymmetric):
            sym_eig(A)

    def test_inv_sqrt_whitens(self):
        A = random_spd(4, seed=1)
        W = inv_sqrt(A)
        self.assertTrue(torch.allclose(W @ A @ W, torch.eye(4, dtype=DTYPE), atol=1e-10))

    def test_inv_sqrt_singular_needs_ridge(self):
        A = torch.zeros(3, 3, dtype=DTYPE)
        A[0, 0] = 1.
        with self.assertRaises(SingularCovariance):
            inv_sqrt(A)
        W = inv_sqrt(A, ridge=1e-2)
        self.assertTrue(torch.isfinite(W).all())

    def test_covariance_divisors(self):
        X = center(torch.arange(12, dtype=DTYPE).reshape(2, 6) ** 2)
        self.assertTrue(torch.allclose(covariance(X, X, ddof=1) * 5, covariance(X, X, ddof=0) * 6))

    def test_fix_signs_makes_pivots_positive(self):
        rows, signs = fix_signs(torch.tensor([[1., -3.], [2., 1.]], dtype=DTYPE))
        self.assertEqual(signs.tolist(), [-1., 1.])
        self.assertEqual(rows[0].tolist(), [-1., 3.])

    def test_pca_projection_is_orthonormal(self):
        g = torch.Generator().manual_seed(0)
        X = torch.randn(6, 50, generator=g, dtype=DTYPE)
        projection, embedded = pca(X, 3)
        self.assertEqual(tuple(embedded.shape), (3, 50))
        self.assertTrue(torch.allclose(projection @ projection.T, torch.eye(3, dtype=DTYPE), atol=1e-10))

    def test_optimal_assignment(self):
        cost = torch.tensor([[4., 1., 3.], [2., 0., 5.], [3., 2., 2.]], dtype=DTYPE)
        self.assertEqual(optimal_assignment(cost), [1, 0, 2])

    def test_principal_cosines_of_same_span(self):
        g = torch.Generator().manual_seed(0)
        A = torch.randn(10, 2, generator=g, dtype=DTYPE)
        mixed = A @ torch.tensor([[2., 1.], [0., 3.]], dtype=DTYPE)
        self.assertTrue(torch.allclose(principal_cosines(A, mixed), torch.ones(2, dtype=DTYPE), atol=1e-10))

    def test_generator_streams(self):
        a = torch.rand(4, generator=make_generator(7, 1))
        b = torch.rand(4, generator=make_generator(7, 1))
        c = torch.rand(4, generator=make_generator(7, 2))
        self.assertTrue(torch.equal(a, b))
        self.assertFalse(torch.equal(a, c))

    def test_exit_codes_are_unique(self):
        table = exit_code_table()
        codes = [code for _, code in table]
        self.assertEqual(len(codes), len(set(codes)))
        self.assertEqual(codes, sorted(codes))
        self.assertIn(('CoperError', CoperError.exit_code), table)


if __name__ == '__main__':
    unittest.main()
