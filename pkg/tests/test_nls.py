import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffxnls.config import FitConfig
from ffxnls.dataset import from_arrays
from ffxnls.expr import FuncKind, evaluate
from ffxnls.ffx import fit_ffx
from ffxnls.linsolve import design_matrix, ols
from ffxnls.nls import fit_ffx_nls, fit_ffx_nls_budgets, predict
from ffxnls.synth import synth_generate


def r2(d, m):
    return 1 - np.mean((d.y - predict(m, d.X)) ** 2) / np.var(d.y)


def test_two_function_recovery():
    d = synth_generate("log-exp-1d", 300, seed=0)
    m = fit_ffx_nls(d, FitConfig(max_terms=3, use_bivariate=False))
    assert r2(d, m) > 0.999
    logs = [b for _, b in m.terms if b.kind is FuncKind.LOG and b.exponent == 1.0]
    exps = [b for _, b in m.terms if b.kind is FuncKind.EXP and b.exponent == 1.0]
    assert any(abs(b.offset - 3.0) < 0.1 for b in logs)
    assert any(abs(b.scale - 0.7) < 0.1 for b in exps)


def test_beats_plain_ffx_in_training():
    d = synth_generate("log-exp-1d", 300, seed=0)
    cfg = FitConfig(max_terms=3, use_bivariate=False)
    nls_mse = np.mean((d.y - predict(fit_ffx_nls(d, cfg), d.X)) ** 2)
    for l1 in (0.0, 0.5, 1.0):
        assert nls_mse <= np.mean((d.y - evaluate(fit_ffx(d, cfg.replace(l1_ratio=l1)), d.X)) ** 2)


def test_degenerate_configuration_is_ols(rng):
    x = rng.uniform(-2, 3, 80)
    y = 1.5 - 0.7 * x + 0.3 * x**2 + 0.1 * rng.normal(size=80)
    m = fit_ffx_nls(from_arrays(x, y), FitConfig(max_terms=3, use_bivariate=False, use_nonlinear=False))
    assert all(b.n_slots == 0 for _, b in m.terms)
    ref = ols(design_matrix(np.column_stack([x, x**2])), y)
    ref_pred = ref.intercept + np.column_stack([x, x**2]) @ ref.coef
    np.testing.assert_allclose(predict(m, x[:, None]), ref_pred, rtol=1e-9)


def test_constant_target():
    X = np.random.default_rng(1).normal(size=(20, 2))
    m = fit_ffx_nls(from_arrays(X, np.full(20, 4.0)), FitConfig())
    assert m.n_terms == 0 and m.intercept == 4.0


def test_constant_features_give_constant_model():
    X = np.ones((15, 2))
    y = np.arange(15.0)
    m = fit_ffx_nls(from_arrays(X, y), FitConfig())
    assert m.n_terms == 0 and m.intercept == pytest.approx(7.0)


def test_ten_survivors_give_45_products():
    d = synth_generate("additive-10d", 300, noise_sd=0.05, seed=2)
    info = fit_ffx_nls_budgets(d, FitConfig(max_terms=10), [10])[10].info
    assert len(info.univariate_selected) == 10
    assert info.n_products == 45
    assert info.n_candidates == info.n_univariate + 45


def test_final_sse_not_worse_than_frozen():
    for name, seed in [("log-exp-2d", 0), ("sqrt-exp-3d", 1), ("interaction-3d", 2)]:
        d = synth_generate(name, 150, noise_sd=0.1, seed=seed)
        for res in fit_ffx_nls_budgets(d, FitConfig(), [3, 5, 10]).values():
            assert res.info.final_sse <= res.info.frozen_sse * (1 + 1e-9)


def test_budgets_match_single_fits():
    d = synth_generate("log-exp-2d", 120, noise_sd=0.1, seed=4)
    cfg = FitConfig()
    many = fit_ffx_nls_budgets(d, cfg, [3, 5, 10])
    for b in (3, 5, 10):
        assert many[b].model == fit_ffx_nls(d, cfg.replace(max_terms=b))


def test_deterministic():
    d = synth_generate("log-exp-2d", 150, noise_sd=0.1, seed=5)
    assert fit_ffx_nls(d, FitConfig()) == fit_ffx_nls(d, FitConfig())


def test_rejects_zero_budget():
    d = synth_generate("log-1d", 20)
    with pytest.raises(ValueError):
        fit_ffx_nls_budgets(d, FitConfig(), [0])


@settings(max_examples=10)
@given(seed=st.integers(0, 10_000), budget=st.sampled_from([1, 2, 3, 5]),
       bivariate=st.booleans(), nonlinear=st.booleans())
def test_budget_property(seed, budget, bivariate, nonlinear):
    d = synth_generate("sqrt-exp-3d", 50, noise_sd=0.2, seed=seed)
    m = fit_ffx_nls(d, FitConfig(max_terms=budget, use_bivariate=bivariate, use_nonlinear=nonlinear))
    assert m.n_terms <= budget
    assert np.all(np.isfinite(predict(m, d.X)))
