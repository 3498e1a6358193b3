import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ffxnls.linsolve import (_Gram, design_matrix, elastic_net_path, kkt_residuals, lambda_max,
                             lasso_select, min_norm_lstsq, ols, select_support)


def orthonormal_design(n, p, seed):
    """Columns with mean 0 and Z^T Z / n = I, so z-scoring leaves them unchanged."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, p))
    A -= A.mean(axis=0)
    Q, _ = np.linalg.qr(np.column_stack([np.ones(n), A]))
    return Q[:, 1:] * np.sqrt(n)


def soft(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


# -- ols ------------------------------------------------------------------------

def test_ols_exact_linear():
    x = np.linspace(-1, 3, 17)
    r = ols(design_matrix(x), 2 * x + 1)
    assert r.coef[0] == pytest.approx(2.0, abs=1e-10)
    assert r.intercept == pytest.approx(1.0, abs=1e-10)
    assert r.rank == 1


def test_ols_duplicated_column_matches_pseudoinverse():
    A = np.array([[1.0, 1.0], [2.0, 2.0], [4.0, 4.0]])
    y = np.array([1.0, 0.0, 3.0])
    r = ols(design_matrix(A), y)
    assert r.rank == 1
    Ac = A - A.mean(axis=0)
    expect = np.linalg.pinv(Ac) @ (y - y.mean())
    np.testing.assert_allclose(r.coef, expect, atol=1e-12)
    assert r.intercept == pytest.approx(y.mean() - A.mean(axis=0) @ expect)


def test_ols_zero_column():
    y = np.array([1.0, 2.0, 6.0])
    r = ols(design_matrix(np.zeros((3, 1))), y)
    assert r.intercept == pytest.approx(3.0) and r.coef[0] == 0.0


def test_min_norm_against_pinv(rng):
    # rank 3 in a 20 x 5 matrix, with badly scaled columns
    B = rng.normal(size=(20, 3))
    A = np.column_stack([B, B[:, 0] + B[:, 1], 2 * B[:, 2]]) * np.array([1, 1e3, 1, 1, 1e-3])
    b = rng.normal(size=20)
    sol = min_norm_lstsq(A, b)
    assert sol.rank == 3
    # same fitted values as the pseudoinverse, and in range(A)
    np.testing.assert_allclose(A @ sol.x, A @ (np.linalg.pinv(A) @ b), atol=1e-9)
    np.testing.assert_allclose(sol.Q.T @ sol.Q, np.eye(3), atol=1e-12)


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_ols_residual_orthogonal(seed, p):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(25, p))
    y = rng.normal(size=25)
    r = ols(design_matrix(A), y)
    res = y - r.intercept - A @ r.coef
    assert abs(res.sum()) < 1e-9
    np.testing.assert_allclose(A.T @ res, 0.0, atol=1e-9)


# -- elastic net ------------------------------------------------------------------

def test_soft_threshold_example():
    Z = orthonormal_design(40, 1, 0)
    y = Z[:, 0] * 1.0
    path = elastic_net_path(design_matrix(Z, y), y, 1.0, lambdas=[0.4])
    assert path.std_coefs[0, 0] == pytest.approx(0.6, abs=1e-12)


@pytest.mark.parametrize("l1_ratio", [1.0, 0.5, 0.0])
def test_orthonormal_path_matches_closed_form(l1_ratio):
    n, p = 60, 6
    Z = orthonormal_design(n, p, 1)
    beta = np.array([3.0, -2.0, 1.0, 0.5, -0.25, 0.0])
    y = Z @ beta + 5.0 + 0.1 * np.random.default_rng(2).normal(size=n)
    D = design_matrix(Z, y)
    path = elastic_net_path(D, y, l1_ratio, n_lambdas=30)
    c = Z.T @ (y - y.mean()) / n
    for lam, b in zip(path.lambdas, path.std_coefs):
        expect = soft(c, lam * l1_ratio) / (1 + lam * (1 - l1_ratio))
        np.testing.assert_allclose(b, expect, atol=1e-8)


def test_lambda_max_gives_zero_and_just_below_does_not(rng):
    X = rng.normal(size=(50, 4))
    y = X @ [1.0, 0.0, -1.0, 2.0] + rng.normal(size=50)
    D = design_matrix(X, y)
    for a in (1.0, 0.5):
        lm = lambda_max(D, y, a)
        path = elastic_net_path(D, y, a, lambdas=[lm, lm * 1.0001, lm * 0.99])
        assert path.nnz[0] == 0 and path.nnz[1] == 0 and path.nnz[2] >= 1


def test_ridge_has_no_zeros(rng):
    X = rng.normal(size=(40, 5))
    X[:, 4] = 3.0  # degenerate column stays zero
    y = X[:, :4] @ [1.0, 0.3, -0.2, 0.01] + rng.normal(size=40)
    path = elastic_net_path(design_matrix(X, y), y, 0.0, n_lambdas=10)
    assert np.all(path.std_coefs[:, :4] != 0)
    assert np.all(path.std_coefs[:, 4] == 0)


def _correlated(seed, n=80, p=8):
    rng = np.random.default_rng(seed)
    L = rng.normal(size=(p, p)) * 0.5 + np.eye(p)
    X = rng.normal(size=(n, p)) @ L
    beta = rng.normal(size=p) * (rng.random(p) < 0.5)
    return X, X @ beta + 0.3 * rng.normal(size=n)


@pytest.mark.parametrize("l1_ratio", [1.0, 0.5])
def test_kkt_along_path(l1_ratio):
    X, y = _correlated(7)
    D = design_matrix(X, y)
    path = elastic_net_path(D, y, l1_ratio)
    for lam, b in zip(path.lambdas, path.std_coefs):
        assert np.max(kkt_residuals(D, y, b, lam, l1_ratio)) < 1e-5


@given(st.integers(0, 10_000))
def test_cd_objective_monotone(seed):
    X, y = _correlated(seed)
    gram = _Gram(design_matrix(X, y), y)
    trace = np.full(500, np.nan)
    lam = 0.01 * float(np.max(np.abs(gram.c)))
    _, ok, sweeps = gram.solve(lam, 0.7, np.zeros(X.shape[1]), trace=trace)
    t = trace[:min(sweeps, 500)]
    assert ok
    assert np.all(np.diff(t) <= 1e-12 * max(1.0, abs(t[0])))


@given(st.integers(0, 10_000), st.integers(2, 8))
def test_lasso_nnz_monotone_on_orthonormal(seed, p):
    Z = orthonormal_design(50, p, seed)
    y = Z @ np.random.default_rng(seed).normal(size=p) + np.random.default_rng(seed + 1).normal(size=50)
    path = elastic_net_path(design_matrix(Z, y), y, 1.0, n_lambdas=40)
    assert path.nnz[0] == 0
    assert np.all(np.diff(path.nnz) >= 0)


def test_lasso_nnz_can_dip_on_correlated_design():
    # variables may leave the active set; selection walks the path prefix instead
    dips = 0
    for seed in range(40):
        X, y = _correlated(seed, p=6)
        path = elastic_net_path(design_matrix(X, y), y, 1.0, n_lambdas=40)
        assert np.all(np.isfinite(path.coefs))
        dips += bool(np.any(np.diff(path.nnz) < 0))
        for budget in range(1, 7):
            assert len(lasso_select(design_matrix(X, y), y, budget, path)) <= budget
    assert dips > 0


def test_standardization_round_trip(rng):
    X = rng.normal(size=(30, 4)) * [1e-3, 1.0, 1e3, 5.0] + [10.0, -2.0, 0.0, 1e4]
    y = rng.normal(size=30)
    D = design_matrix(X, y)
    b = rng.normal(size=4)
    intercept, coef = D.to_original(b)
    np.testing.assert_allclose(D.standardized() @ b + D.y_mean, intercept + X @ coef,
                               rtol=1e-10, atol=1e-10 * np.abs(intercept))


def test_path_against_sklearn():
    sk = pytest.importorskip("sklearn.linear_model")
    X, y = _correlated(11)
    D = design_matrix(X, y)
    Z = D.standardized()
    path = elastic_net_path(D, y, 0.5, n_lambdas=20)
    for lam, b in list(zip(path.lambdas, path.std_coefs))[::4]:
        ref = sk.ElasticNet(alpha=lam, l1_ratio=0.5, tol=1e-12, max_iter=100_000).fit(Z, y)
        np.testing.assert_allclose(b, ref.coef_, atol=1e-6)


# -- selection -----------------------------------------------------------------------

def test_lasso_select_single_informative_column():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 10))
    y = 4.0 * X[:, 3] + 0.5 * rng.normal(size=200)
    D = design_matrix(X, y)
    # oracle: the best single column by exhaustive 1-subset OLS
    sse = [np.sum((y - (lambda r: r.intercept + X[:, [j]] @ r.coef)(ols(design_matrix(X[:, [j]]), y))) ** 2)
           for j in range(10)]
    assert lasso_select(D, y, 1) == (int(np.argmin(sse)),) == (3,)


def test_lasso_select_unconstrained_limit(rng):
    X = rng.normal(size=(100, 5))
    y = X @ [1.0, -2.0, 0.5, 3.0, 1.0] + 0.1 * rng.normal(size=100)
    assert lasso_select(design_matrix(X, y), y, 10) == (0, 1, 2, 3, 4)


def test_lasso_select_rejects_zero_budget(rng):
    X = rng.normal(size=(10, 2))
    with pytest.raises(ValueError):
        lasso_select(design_matrix(X), X[:, 0], 0)


def test_select_support_empty_for_constant_target():
    X = np.random.default_rng(0).normal(size=(20, 3))
    y = np.full(20, 2.5)
    assert select_support(design_matrix(X, y), y, 3, 1.0) == ()


@given(seed=st.integers(0, 10_000), budget=st.integers(1, 8), l1=st.sampled_from([0.0, 0.5, 1.0]))
def test_select_support_respects_budget(seed, budget, l1):
    X, y = _correlated(seed)
    sel = select_support(design_matrix(X, y), y, budget, l1)
    assert len(sel) <= budget
    assert list(sel) == sorted(set(sel))


def test_bisection_reaches_budget_after_jump():
    # two perfectly correlated columns enter the lasso path together
    rng = np.random.default_rng(9)
    x = rng.normal(size=100)
    X = np.column_stack([x, x + 1e-9 * rng.normal(size=100), rng.normal(size=100)])
    y = 2 * x + 0.5 * X[:, 2]
    sel = lasso_select(design_matrix(X, y), y, 2)
    assert 1 <= len(sel) <= 2


def test_best_subset_agrees_on_easy_problem():
    rng = np.random.default_rng(21)
    X = rng.normal(size=(300, 6))
    y = 3 * X[:, 0] - 2 * X[:, 4] + 0.1 * rng.normal(size=300)
    best = min(itertools.combinations(range(6), 2),
               key=lambda s: np.linalg.lstsq(np.column_stack([np.ones(300), X[:, s]]), y, rcond=None)[1][0])
    assert lasso_select(design_matrix(X, y), y, 2) == best


def test_min_norm_handles_column_norm_overflow():
    # exp(709) is finite but the 2-norm of 40 such entries is not
    x = np.linspace(700.0, 709.0, 40)
    A = np.column_stack([np.ones(40), np.exp(x), x])
    b = 1.0 + 3e-300 * np.exp(x) + 2.0 * x
    with np.errstate(all="raise"):
        sol = min_norm_lstsq(A, b)
    assert sol.rank == 3
    np.testing.assert_allclose(sol.x, [1.0, 3e-300, 2.0], rtol=1e-5)
