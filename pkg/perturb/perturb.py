"""How wrong pseudo-labels move the LDA spectrum.

With true labels, A = C^-1 C_a. Pseudo-labels estimate it as A_hat = C_hat^-1 C_hat_a from
their own scatters; the three error terms collect what goes wrong (excluded samples, samples
grouped with the wrong class, shifted class means) and D is the first-order difference
A - A_hat built from them. The first-order bound |lambda_hat_i - lambda_i| <= ||D||_2 is
reported, not asserted.

Two forms of the error terms are available:

- ``scatter`` (default): every term is normalized by the total sample count N, like the
  scatters themselves, so C_hat_e = C_e + E1 + E2 and C_hat_a = C_a + E3 hold exactly.
  When every sample keeps a label, C_hat = C, D equals A - A_hat and the bound holds.
- ``averaged``: E1 averages over the excluded samples, E2 over the (correct, wrong) pairs
  and E3 keeps only the quadratic mean-shift term. These magnitudes do not shrink with the
  amount of label noise, so the bound is a heuristic in this form.

Pseudo-labels use -1 for samples that received no label.
"""
from dataclasses import dataclass

import torch

from linalg.errors import InvalidLabels, InvalidParameter
from linalg.linalg import DTYPE, as_matrix, center, inv_psd, inv_sqrt, make_generator, spectral_norm, sym_eig
from linear.lda import class_means, scatter_matrices

FORMS = ('scatter', 'averaged')


@dataclass
class PerturbationReport:
    E1: torch.Tensor
    E2: torch.Tensor
    E3: torch.Tensor
    E: torch.Tensor
    D: torch.Tensor
    true_eigvals: torch.Tensor
    perturbed_eigvals: torch.Tensor
    bound: float
    max_gap: float
    bound_satisfied: bool

    def as_row(self):
        "scalar summary for CSV reports"
        return {'max_gap': self.max_gap, 'bound': self.bound, 'bound_satisfied': int(self.bound_satisfied),
                'norm_E1': spectral_norm(self.E1), 'norm_E2': spectral_norm(self.E2),
                'norm_E3': spectral_norm(self.E3), 'top_eigval': self.true_eigvals[0].item(),
                'top_eigval_hat': self.perturbed_eigvals[0].item()}


def _label_pair(theta, true_labels, pseudo_labels):
    n = theta.shape[1]
    truth = torch.as_tensor(true_labels, dtype=torch.long).reshape(-1)
    pseudo = torch.as_tensor(pseudo_labels, dtype=torch.long).reshape(-1)
    if truth.numel() != n or pseudo.numel() != n:
        raise InvalidLabels(f'{truth.numel()} true and {pseudo.numel()} pseudo labels for {n} samples')
    if n and (truth.min() < 0 or pseudo.min() < -1):
        raise InvalidLabels('true labels must be >= 0 and pseudo labels >= -1')
    return truth, pseudo


def _outer_sum(X, mean):
    "sum over the columns x of (x - mean)(x - mean)^T"
    r = X - mean[:, None]
    return r @ r.T


def pseudo_scatters(theta, pseudo_labels, k):
    """(C_hat_e, C_hat_a) of the pseudo-labeled samples of centered theta, divided by the
    total sample count N so they compare term by term with the true scatters."""
    theta = as_matrix(theta, 'theta')
    pseudo = torch.as_tensor(pseudo_labels, dtype=torch.long).reshape(-1)
    d, n = theta.shape
    labeled = pseudo >= 0
    if labeled.sum() < 2:
        raise InvalidLabels('need at least two pseudo-labeled samples')
    means, counts = class_means(theta[:, labeled], pseudo[labeled], k, fill=torch.zeros(k, d, dtype=DTYPE))
    residual = theta[:, labeled] - means[pseudo[labeled]].T
    within = residual @ residual.T / n
    between = (means.T * (counts.to(DTYPE) / n)) @ means
    return within, between


def error_terms(theta, true_labels, pseudo_labels, k=None, form='scatter'):
    """(E1, E2, E3) for latent data theta (D, N), centered here.

    For class k: N_hat = samples pseudo-labeled k, N_bar = class-k samples outside N_hat,
    N_tilde = samples in N_hat from another class, N_ddot = class-k samples in N_hat.
    mu_hat_k is the mean over N_hat (mu_k when N_hat is empty) and dmu_k = mu_k - mu_hat_k.

    scatter:
        E1 = -1/N sum_k sum_{N_bar} (x - mu_hat_k)(x - mu_hat_k)^T
        E2 = 1/N sum_k [sum_{N_tilde} (x - mu_hat_k)(x - mu_hat_k)^T + |N_k| dmu_k dmu_k^T]
        E3 = 1/N sum_k [|N_hat_k| mu_hat_k mu_hat_k^T - |N_k| mu_k mu_k^T]
    averaged:
        E1 = -(mean over all N_bar of the same outer products)
        E2 = mean over the pairs (i in N_ddot, j in N_tilde) of (x_i - mu_hat_k)(x_j - mu_hat_q)^T,
             q the true class of x_j
        E3 = -sum_k |N_hat_k| / N dmu_k dmu_k^T
    A term whose normalizer is zero is the zero matrix.
    """
    if form not in FORMS:
        raise InvalidParameter(f'unknown error form {form!r}; choose from {", ".join(FORMS)}')
    theta = center(as_matrix(theta, 'theta'))
    truth, pseudo = _label_pair(theta, true_labels, pseudo_labels)
    d, n = theta.shape
    k = k or int(max(truth.max(), pseudo.max())) + 1
    mu, n_true = class_means(theta, truth, k, fill=torch.zeros(k, d, dtype=DTYPE))
    labeled = pseudo >= 0
    mu_hat, n_hat = class_means(theta[:, labeled], pseudo[labeled], k, fill=mu)
    delta = mu - mu_hat

    if form == 'scatter':
        E1 = torch.zeros(d, d, dtype=DTYPE)
        E2 = (delta.T * n_true.to(DTYPE)) @ delta
        for c in range(k):
            excluded = (truth == c) & (pseudo != c)
            wrong = (pseudo == c) & (truth != c)
            E1 -= _outer_sum(theta[:, excluded], mu_hat[c])
            E2 += _outer_sum(theta[:, wrong], mu_hat[c])
        E3 = (mu_hat.T * n_hat.to(DTYPE)) @ mu_hat - (mu.T * n_true.to(DTYPE)) @ mu
        return E1 / n, E2 / n, E3 / n

    E1 = torch.zeros(d, d, dtype=DTYPE)
    E2 = torch.zeros(d, d, dtype=DTYPE)
    n_bar_total, pair_total = 0, 0
    for c in range(k):
        excluded = ((truth == c) & (pseudo != c)).nonzero()[:, 0]
        if excluded.numel():
            E1 -= _outer_sum(theta[:, excluded], mu_hat[c])
            n_bar_total += excluded.numel()

        wrong = ((pseudo == c) & (truth != c)).nonzero()[:, 0]
        right = ((pseudo == c) & (truth == c)).nonzero()[:, 0]
        if wrong.numel() and right.numel():
            ri = (theta[:, right] - mu_hat[c][:, None]).sum(dim=1)
            # x_j is centered on the estimated mean of its true class q
            rj = (theta[:, wrong] - mu_hat[truth[wrong]].T).sum(dim=1)
            E2 += torch.outer(ri, rj)
            pair_total += right.numel() * wrong.numel()

    if n_bar_total:
        E1 /= n_bar_total
    if pair_total:
        E2 /= pair_total
    E3 = -(delta.T * (n_hat.to(DTYPE) / n)) @ delta
    return E1, E2, E3


def perturbation_matrix(C, C_e, E, E3, ridge=1e-4):
    "D = C^-1 E - C^-1 E C^-1 C_e - C^-1 E3 + C^-1 E C^-1 E3"
    C_inv = inv_psd(as_matrix(C, 'C'), ridge)
    CE = C_inv @ E
    return CE - CE @ C_inv @ C_e - C_inv @ E3 + CE @ C_inv @ E3


def _spectrum(C, C_a, ridge):
    "eigenvalues of C^-1 C_a through the similar symmetric C^-1/2 C_a C^-1/2"
    w = inv_sqrt(C, ridge)
    return sym_eig(w @ C_a @ w).values


def bound_check(theta, true_labels, pseudo_labels, ridge=1e-4, tol=1e-6, k=None, form='scatter'):
    theta = center(as_matrix(theta, 'theta'))
    truth, pseudo = _label_pair(theta, true_labels, pseudo_labels)
    k = k or int(max(truth.max(), pseudo.max())) + 1
    C_e, C_a = scatter_matrices(theta, truth, k, allow_empty=True)
    C = C_e + C_a
    true_eigvals = _spectrum(C, C_a, ridge)

    C_e_hat, C_a_hat = pseudo_scatters(theta, pseudo, k)
    perturbed_eigvals = _spectrum(C_e_hat + C_a_hat, C_a_hat, ridge)

    E1, E2, E3 = error_terms(theta, truth, pseudo, k, form)
    E = E1 + E2 + E3
    D = perturbation_matrix(C, C_e, E, E3, ridge)
    bound = spectral_norm(D)
    max_gap = (perturbed_eigvals - true_eigvals).abs().max().item()
    return PerturbationReport(E1, E2, E3, E, D, true_eigvals, perturbed_eigvals, bound, max_gap,
                              max_gap <= bound * (1 + tol) + 1e-12)


def noisy_labels(truth, p, seed=0, k=None):
    "moves a fraction p of the labels to a uniformly drawn different class"
    truth = torch.as_tensor(truth, dtype=torch.long).reshape(-1)
    if not 0 <= p <= 1:
        raise InvalidParameter(f'noise fraction must lie in [0, 1], got {p}')
    k = k or int(truth.max()) + 1
    if k < 2:
        raise InvalidParameter(f'label noise needs at least 2 classes, got {k}')
    generator = make_generator(seed, 1)
    n_flip = round(p * truth.numel())
    flip = torch.randperm(truth.numel(), generator=generator)[:n_flip]
    shift = torch.randint(1, k, (n_flip,), generator=generator)
    noisy = truth.clone()
    noisy[flip] = (truth[flip] + shift) % k
    return noisy


def subset_labels(truth, fraction, seed=0):
    "keeps a random fraction of the labels; the rest become -1"
    truth = torch.as_tensor(truth, dtype=torch.long).reshape(-1)
    if not 0 < fraction <= 1:
        raise InvalidParameter(f'fraction must lie in (0, 1], got {fraction}')
    keep = torch.randperm(truth.numel(), generator=make_generator(seed, 2))[:round(fraction * truth.numel())]
    labels = torch.full_like(truth, -1)
    labels[keep] = truth[keep]
    return labels
