import numpy as np
import pytest

from mvkmf.errors import (
    BadParamError,
    DimensionMismatchError,
    NonFiniteError,
    RankDeficientWarning,
)
from mvkmf.kernels import KernelMatrix, KernelSet
from mvkmf.solver import (
    SolverConfig,
    fit,
    fit_kkm,
    fit_mkkm,
    global_similarity_matrix,
    init_g,
    init_state,
    iterate,
    objective,
    per_view_loss,
    update_g,
    update_h,
    update_weights,
)

from conftest import blob_kernels, random_orthonormal_rows, random_psd_kernel


def naive_loss(K, G, H, alpha):
    """Elementwise double-loop evaluation of one view's loss."""
    n, k = G.shape
    r1 = 0.0
    for i in range(n):
        for j in range(n):
            r1 += (K[i, j] - sum(G[i, t] * H[t, j] for t in range(k))) ** 2
    r2 = 0.0
    for i in range(n):
        for t in range(k):
            r2 += (G[i, t] - H[t, i]) ** 2
    return r1 + alpha * r2


def small_instance(rng, n=8, k=3, V=2):
    kernels = [random_psd_kernel(rng, n, name=f"v{i}") for i in range(V)]
    H = random_orthonormal_rows(rng, k, n)
    G = [rng.standard_normal((n, k)) for _ in range(V)]
    omega = rng.random(V)
    omega /= omega.sum()
    return kernels, H, G, omega


# ---------------------------------------------------------------------------
# config


def test_config_validation():
    with pytest.raises(BadParamError):
        SolverConfig(k=1)
    with pytest.raises(BadParamError):
        SolverConfig(k=3, alpha=-0.5)
    with pytest.raises(BadParamError):
        SolverConfig(k=3, rel_tol=0.0)
    with pytest.raises(BadParamError):
        SolverConfig(k=3, objective_variant="dense")
    with pytest.raises(BadParamError):
        SolverConfig(k=3, max_iters=-1)


# ---------------------------------------------------------------------------
# objective


def test_objective_identity_kernels_projector_value(rng):
    n, k, V = 7, 3, 2
    H = random_orthonormal_rows(rng, k, n)
    from mvkmf.solver import SolverState

    state = SolverState(H=H, G=(H.T.copy(), H.T.copy()),
                        omega=np.array([0.5, 0.5]),
                        objective_trace=np.empty(0))
    cfg = SolverConfig(k=k, alpha=3.0)
    val = objective([np.eye(n)] * V, state, cfg)
    # ||I - H^T H||_F^2 = n - k for a rank-k orthogonal projector
    assert val == pytest.approx(sum(0.25 * (n - k) for _ in range(V)), abs=1e-10)


def test_objective_zero_when_exact_and_alpha_zero(rng):
    n, k = 6, 2
    H = random_orthonormal_rows(rng, k, n)
    G = H.T.copy()
    K = H.T @ H
    from mvkmf.solver import SolverState

    state = SolverState(H=H, G=(G,), omega=np.array([1.0]),
                        objective_trace=np.empty(0))
    val = objective([K], state, SolverConfig(k=k, alpha=0.0))
    assert val == pytest.approx(0.0, abs=1e-12)


def test_objective_matches_naive_double_loop(rng):
    kernels, H, G, omega = small_instance(rng, n=5, k=2, V=2)
    from mvkmf.solver import SolverState

    cfg = SolverConfig(k=2, alpha=1.7)
    state = SolverState(H=H, G=tuple(G), omega=omega,
                        objective_trace=np.empty(0))
    expected = sum(w * w * naive_loss(k.data, g, H, cfg.alpha)
                   for k, g, w in zip(kernels, G, omega))
    assert objective(kernels, state, cfg) == pytest.approx(expected, rel=1e-10)


# ---------------------------------------------------------------------------
# update_g


def test_update_g_identity_kernel_returns_ht(rng):
    H = random_orthonormal_rows(rng, 2, 5)
    for alpha in (0.0, 1.0, 64.0):
        G = update_g(np.eye(5), H, alpha)
        assert np.allclose(G, H.T, atol=1e-12)


def test_update_g_alpha_zero(rng):
    K = random_psd_kernel(rng, 5).data
    H = random_orthonormal_rows(rng, 2, 5)
    assert np.allclose(update_g(K, H, 0.0), K.T @ H.T, atol=1e-12)


def test_update_g_zeroes_finite_difference_gradient(rng):
    # central differences on the per-view loss, step 1e-6
    K = random_psd_kernel(rng, 6).data
    H = random_orthonormal_rows(rng, 2, 6)
    alpha = 2.5
    G = update_g(K, H, alpha)
    step = 1e-6
    worst = 0.0
    for i in range(6):
        for t in range(2):
            up = G.copy()
            up[i, t] += step
            dn = G.copy()
            dn[i, t] -= step
            grad = (per_view_loss(K, up, H, alpha)
                    - per_view_loss(K, dn, H, alpha)) / (2 * step)
            worst = max(worst, abs(grad))
    assert worst < 1e-5


def test_update_g_beats_random_perturbations(rng):
    K = random_psd_kernel(rng, 7).data
    H = random_orthonormal_rows(rng, 3, 7)
    alpha = 4.0
    G = update_g(K, H, alpha)
    base = per_view_loss(K, G, H, alpha)
    for _ in range(100):
        E = rng.standard_normal(G.shape)
        E /= np.linalg.norm(E)
        assert base <= per_view_loss(K, G + 1e-3 * E, H, alpha) + 1e-12


def test_update_g_alpha_infinity_limit(rng):
    K = random_psd_kernel(rng, 6).data
    H = random_orthonormal_rows(rng, 2, 6)
    G = update_g(K, H, 1e9)
    assert np.max(np.abs(G - H.T)) < 1e-6


def test_update_g_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatchError):
        update_g(np.eye(4), random_orthonormal_rows(rng, 2, 5), 1.0)


# ---------------------------------------------------------------------------
# update_h


def test_update_h_diagonal_example():
    A = np.array([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    # feed G, omega, alpha chosen so the internal A equals the target: one
    # view, K = I, alpha = 0, G = A^T
    H = update_h([np.eye(3)], [A.T], np.array([1.0]), 0.0)
    assert np.allclose(H, A / np.array([[2.0], [1.0]]), atol=1e-12)
    assert np.sum(H * A) == pytest.approx(3.0, abs=1e-12)   # sigma1 + sigma2


def test_update_h_orthonormal_rows(rng):
    kernels, H0, G, omega = small_instance(rng, n=9, k=4, V=3)
    H = update_h(kernels, G, omega, 2.0)
    assert np.max(np.abs(H @ H.T - np.eye(4))) < 1e-10


def test_update_h_attains_singular_value_sum(rng):
    kernels, _, G, omega = small_instance(rng, n=9, k=3, V=2)
    alpha = 1.5
    A = sum((w * w) * (g.T @ k.data + alpha * g.T)
            for k, g, w in zip(kernels, G, omega))
    H = update_h(kernels, G, omega, alpha)
    sigma = np.linalg.svd(A, compute_uv=False)
    assert np.sum(H * A) == pytest.approx(np.sum(sigma), abs=1e-8)


def test_update_h_beats_random_orthonormal(rng):
    kernels, _, G, omega = small_instance(rng, n=8, k=3, V=2)
    alpha = 1.5
    A = sum((w * w) * (g.T @ k.data + alpha * g.T)
            for k, g, w in zip(kernels, G, omega))
    H = update_h(kernels, G, omega, alpha)
    best = np.sum(H * A)
    for _ in range(200):
        Ht = random_orthonormal_rows(rng, 3, 8)
        assert best >= np.sum(Ht * A) - 1e-10


def test_update_h_single_view_identity_preserves_row_space(rng):
    H_prev = random_orthonormal_rows(rng, 2, 6)
    H = update_h([np.eye(6)], [H_prev.T], np.array([1.0]), 0.0)
    assert np.max(np.abs(H @ H.T - np.eye(2))) < 1e-10
    # same row space: the rank-2 projectors coincide
    assert np.allclose(H.T @ H, H_prev.T @ H_prev, atol=1e-10)


def test_update_h_rank_deficient_warning(rng):
    # rank-1 coefficient matrix with k=2 makes A rank deficient
    u = rng.standard_normal((6, 1))
    G = np.hstack([u, u])
    with pytest.warns(RankDeficientWarning):
        update_h([np.eye(6)], [G], np.array([1.0]), 0.0)


# ---------------------------------------------------------------------------
# update_weights


def test_update_weights_examples():
    assert np.allclose(update_weights([1.0, 1.0]), [0.5, 0.5], atol=1e-15)
    assert np.allclose(update_weights([1.0, 3.0]), [0.75, 0.25], atol=1e-12)
    w = update_weights([0.0, 5.0])
    assert w[0] == pytest.approx(1.0, abs=1e-10)
    assert w[1] == pytest.approx(2e-13, rel=0.5)


def test_update_weights_simplex_and_minimum(rng):
    for _ in range(20):
        d = rng.random(4) + 0.05
        w = update_weights(d)
        assert abs(w.sum() - 1.0) < 1e-12
        assert np.all(w >= 0)
        # analytic minimum of sum w^2 d over the simplex is 1/sum(1/d)
        assert np.sum(w * w * d) == pytest.approx(1.0 / np.sum(1.0 / d),
                                                  rel=1e-12)


def test_update_weights_matches_grid_search(rng):
    # two views: exhaustive sweep over the simplex at 1e-4 resolution
    d = np.array([0.8, 2.3])
    t = np.arange(0.0, 1.0 + 1e-9, 1e-4)
    vals = t * t * d[0] + (1.0 - t) ** 2 * d[1]
    best_t = t[np.argmin(vals)]
    w = update_weights(d)
    assert abs(w[0] - best_t) <= 1e-4


# ---------------------------------------------------------------------------
# per_view_loss


def test_per_view_loss_exact_reconstruction(rng):
    H = random_orthonormal_rows(rng, 3, 7)
    assert per_view_loss(H.T @ H, H.T.copy(), H, 5.0) == pytest.approx(0.0, abs=1e-12)


def test_per_view_loss_matches_naive(rng):
    kernels, H, G, _ = small_instance(rng, n=5, k=2, V=1)
    val = per_view_loss(kernels[0], G[0], H, 0.9)
    assert val == pytest.approx(naive_loss(kernels[0].data, G[0], H, 0.9),
                                rel=1e-10)


def test_per_view_loss_alpha_zero_is_reconstruction(rng):
    kernels, H, G, _ = small_instance(rng, n=5, k=2, V=1)
    val = per_view_loss(kernels[0], G[0], H, 0.0)
    assert val == pytest.approx(
        np.linalg.norm(kernels[0].data - G[0] @ H, "fro") ** 2, rel=1e-12)


def test_per_view_loss_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatchError):
        per_view_loss(np.eye(5), np.zeros((4, 2)),
                      random_orthonormal_rows(rng, 2, 5), 1.0)


def test_trace_expansion_identity(rng):
    # ||K - GH||_F^2 == tr(K^T K) - 2 tr(K^T G H) + tr(H^T G^T G H)
    for _ in range(10):
        K = random_psd_kernel(rng, 6).data
        G = rng.standard_normal((6, 3))
        H = random_orthonormal_rows(rng, 3, 6)
        lhs = float(np.trace((K - G @ H).T @ (K - G @ H)))
        rhs = (float(np.trace(K.T @ K)) - 2.0 * float(np.trace(K.T @ G @ H))
               + float(np.trace(H.T @ G.T @ G @ H)))
        assert lhs == pytest.approx(rhs, abs=1e-8 * max(1.0, abs(lhs)))


# ---------------------------------------------------------------------------
# initialization


def test_global_similarity_matrix_rule():
    K = np.array([[1.0, 0.5], [0.5, 2.0]])
    D = global_similarity_matrix(K)
    A = K.sum(axis=1)     # (1.5, 2.5)
    assert D[0, 0] == A[0] and D[1, 1] == A[1]
    assert D[0, 1] == D[1, 0] == A[1]     # A_max(i,j)
    assert np.array_equal(D, D.T)


def test_init_g_identity_two_by_two():
    G = init_g(np.eye(2), 1)
    assert np.allclose(G, np.full((2, 1), 1.0 / np.sqrt(2)), atol=1e-12)


def test_init_g_block_diagonal_indicator_structure():
    K = np.zeros((6, 6))
    K[:3, :3] = 1.0
    K[3:, 3:] = 1.0
    G = init_g(K, 2)
    for col in range(2):
        assert np.ptp(G[:3, col]) < 1e-8    # constant within blocks
        assert np.ptp(G[3:, col]) < 1e-8
    # columns span the two block-indicator directions
    ind = np.zeros((6, 2))
    ind[:3, 0] = 1.0 / np.sqrt(3.0)
    ind[3:, 1] = 1.0 / np.sqrt(3.0)
    assert np.allclose(G @ G.T, ind @ ind.T, atol=1e-8)


def test_init_g_orthonormal_columns(rng):
    K = random_psd_kernel(rng, 9).data
    G = init_g(K, 4)
    assert np.max(np.abs(G.T @ G - np.eye(4))) < 1e-8


def test_init_state_single_view_row_space(rng):
    K = random_psd_kernel(rng, 8)
    cfg = SolverConfig(k=3, alpha=1.0)
    state = init_state([K], cfg)
    G = init_g(K, 3)
    assert np.max(np.abs(state.H @ state.H.T - np.eye(3))) < 1e-10
    assert np.allclose(state.H.T @ state.H, G @ G.T, atol=1e-10)
    assert np.array_equal(state.omega, [1.0])
    assert state.objective_trace.shape == (1,)


def test_init_state_identical_views_match_single_view(rng):
    K = random_psd_kernel(rng, 8)
    cfg = SolverConfig(k=3, alpha=1.0)
    one = init_state([K], cfg)
    two = init_state([K, K], SolverConfig(k=3, alpha=1.0))
    assert np.array_equal(one.H, two.H)
    assert np.allclose(two.omega, [0.5, 0.5], atol=1e-15)


def test_init_state_rejects_k_above_n():
    with pytest.raises(BadParamError):
        init_state([np.eye(3)], SolverConfig(k=4))


# ---------------------------------------------------------------------------
# fit loop


def test_fit_objective_monotone_on_random_instances():
    for seed in range(20):
        ks, _ = blob_kernels(seed, n_per=6, clusters=3, views=2)
        state = fit(ks, SolverConfig(k=3, alpha=4.0, max_iters=60))
        steps = np.diff(state.objective_trace)
        assert np.all(steps <= 1e-9)


def test_fit_separable_converges_quickly():
    ks, _ = blob_kernels(3, n_per=10, clusters=3, views=3, separation=10.0)
    state = fit(ks, SolverConfig(k=3, alpha=4.0, max_iters=100))
    assert len(state.objective_trace) - 1 <= 15
    tr = state.objective_trace
    rel = abs(tr[-2] - tr[-1]) / max(abs(tr[-2]), 1e-12)
    assert rel < 1e-6


def test_fit_zero_iterations_returns_initialization(rng):
    K = random_psd_kernel(rng, 7)
    cfg = SolverConfig(k=2, alpha=1.0, max_iters=0)
    state = fit([K], cfg)
    init = init_state([K], SolverConfig(k=2, alpha=1.0))
    assert np.array_equal(state.H, init.H)
    assert np.array_equal(state.objective_trace, init.objective_trace)


def test_fit_deterministic_bitwise():
    ks, _ = blob_kernels(5, n_per=6, clusters=3, views=2)
    cfg = SolverConfig(k=3, alpha=16.0)
    a = fit(ks, cfg)
    b = fit(ks, cfg)
    assert np.array_equal(a.objective_trace, b.objective_trace)
    assert np.array_equal(a.H, b.H)
    assert np.array_equal(a.omega, b.omega)


def test_fit_raises_on_overflowing_kernels():
    K = np.full((6, 6), 1e200)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NonFiniteError):
            fit([K], SolverConfig(k=2, alpha=1.0))


def test_iterate_yields_every_iteration():
    ks, _ = blob_kernels(1, n_per=6, clusters=3, views=2)
    cfg = SolverConfig(k=3, alpha=4.0, max_iters=50)
    states = list(iterate(ks, cfg))
    assert len(states) >= 1
    final = fit(ks, cfg)
    assert np.array_equal(states[-1].H, final.H)
    assert len(states[-1].objective_trace) == len(states) + 1


def test_fit_nonsparse_variant_runs_clean():
    ks, _ = blob_kernels(2, n_per=6, clusters=3, views=2)
    cfg = SolverConfig(k=3, alpha=4.0, objective_variant="nonsparse",
                       max_iters=60)
    state = fit(ks, cfg)
    assert np.all(np.isfinite(state.objective_trace))
    assert np.max(np.abs(state.H @ state.H.T - np.eye(3))) < 1e-8
    assert abs(state.omega.sum() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# baselines


def test_fit_kkm_block_diagonal_trace(rng):
    sizes = (4, 3, 5)
    n = sum(sizes)
    K = np.zeros((n, n))
    start = 0
    for s in sizes:
        K[start:start + s, start:start + s] = 1.0
        start += s
    H = fit_kkm(K, 3)
    assert np.trace(H @ K @ H.T) == pytest.approx(sum(sizes), abs=1e-8)


def test_fit_kkm_identity_kernel(rng):
    H = fit_kkm(np.eye(6), 3)
    assert np.trace(H @ np.eye(6) @ H.T) == pytest.approx(3.0, abs=1e-10)


def test_fit_kkm_beats_random_orthonormal(rng):
    K = random_psd_kernel(rng, 8).data
    H = fit_kkm(K, 3)
    best = np.trace(H @ K @ H.T)
    for _ in range(200):
        Ht = random_orthonormal_rows(rng, 3, 8)
        assert best >= np.trace(Ht @ K @ Ht.T) - 1e-9


def test_fit_mkkm_single_view_reduces_to_kkm(rng):
    K = random_psd_kernel(rng, 8)
    H, gamma = fit_mkkm([K], 3)
    assert np.array_equal(H, fit_kkm(K, 3))
    assert np.array_equal(gamma, [1.0])


def test_fit_mkkm_identical_views_uniform_gamma(rng):
    K = random_psd_kernel(rng, 8)
    _, gamma = fit_mkkm([K, K], 3)
    assert np.max(np.abs(gamma - 0.5)) < 1e-10


def test_mkkm_gamma_step_matches_grid_search(rng):
    # fixed H: the gamma update solves min sum gamma^2 c_v on the simplex
    K1, K2 = (random_psd_kernel(rng, 8, name=s) for s in ("a", "b"))
    H = fit_kkm((K1.data + K2.data) / 2.0, 3)
    c = np.array([np.trace(K.data) - np.sum((H @ K.data) * H)
                  for K in (K1, K2)])
    gamma = update_weights(c)
    t = np.arange(0.0, 1.0 + 1e-9, 1e-4)
    vals = t * t * c[0] + (1.0 - t) ** 2 * c[1]
    assert abs(gamma[0] - t[np.argmin(vals)]) <= 1e-4
