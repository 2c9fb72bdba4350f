import numpy as np
import pytest

from mvkmf.kernels import FeatureMatrix, KernelMatrix, KernelSet, KernelSpec, build_kernel


def random_psd_kernel(rng, n, rank=None, name="view"):
    """Random symmetric PSD matrix X^T X with controllable rank."""
    rank = rank or n
    x = rng.standard_normal((rank, n))
    k = x.T @ x
    return KernelMatrix((k + k.T) / 2.0, name)


def random_orthonormal_rows(rng, k, n):
    """k x n matrix with orthonormal rows via QR of a Gaussian draw."""
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q.T


def blob_kernels(seed, n_per=15, clusters=4, views=3, separation=6.0,
                 kind="linear"):
    """Kernel set + labels for one random separable clustering instance."""
    from mvkmf.io import make_synthetic

    feats, labels = make_synthetic(n_per, clusters, views,
                                   separation=separation, noise=1.0, seed=seed)
    kernels = tuple(build_kernel(f, KernelSpec(kind=kind)) for f in feats)
    return KernelSet(kernels=kernels), labels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
