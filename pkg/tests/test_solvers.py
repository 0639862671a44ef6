import numpy as np
import pytest

import oracles
from _frozen import SUBGRADIENT_REFERENCES
from conftest import (random_dataset, spec_from_record, tiny_dataset,
                      windowed_residual_check)
from sparsemsvm.evaluate import hinge_sum, predict
from sparsemsvm.linop import apply_T_adjoint
from sparsemsvm.model import (Dataset, ModelVector, RegularizerSpec,
                              make_margin_offsets)
from sparsemsvm.solvers import (DivergenceError, SOLVERS, SolverConfig,
                                _logistic_loss_grad, _square_loss_grad,
                                solve_constrained_fbpd, solve_one_vs_all,
                                solve_regularized_fbpd)

TIGHT = dict(max_iter=400000, rel_tol=1e-11)


# ---------------------------------------------------------------------------
# trivial iteration-count behavior

@pytest.mark.parametrize("name", sorted(SOLVERS))
def test_zero_iterations_returns_zero_model(name):
    ds = tiny_dataset(0)
    cfg = SolverConfig(lam=1.0, eta=1.0, max_iter=0)
    rep = SOLVERS[name](ds, RegularizerSpec("l1"), cfg)
    assert rep.iterations == 0
    assert not rep.converged
    assert np.all(rep.model.weights == 0.0) and np.all(rep.model.offsets == 0.0)


def test_config_validation():
    ds = tiny_dataset(0)
    with pytest.raises(ValueError):
        solve_regularized_fbpd(ds, RegularizerSpec("l1"), SolverConfig(eta=1.0))
    with pytest.raises(ValueError):
        solve_constrained_fbpd(ds, RegularizerSpec("l1"), SolverConfig(lam=1.0))
    with pytest.raises(ValueError):
        solve_regularized_fbpd(ds, RegularizerSpec("l1"),
                               SolverConfig(lam=1.0, tau=10.0, sigma=10.0))


# ---------------------------------------------------------------------------
# desk-scale correctness against the frozen long-run subgradient references

@pytest.mark.parametrize("case", sorted(SUBGRADIENT_REFERENCES))
def test_regularized_matches_subgradient_reference(case):
    rec = SUBGRADIENT_REFERENCES[case]
    ds = tiny_dataset(rec["seed"])
    spec = spec_from_record(rec)
    rep = solve_regularized_fbpd(ds, spec, SolverConfig(lam=rec["lam"], **TIGHT))
    assert rep.converged
    ref = rec["objective"]
    assert abs(rep.primal_objective - ref) <= 1e-4 * abs(ref)


@pytest.mark.parametrize("case", sorted(SUBGRADIENT_REFERENCES))
def test_constrained_matches_regularized_g_value(case):
    # Lagrangian equivalence: run eta at the achieved hinge sum
    rec = SUBGRADIENT_REFERENCES[case]
    ds = tiny_dataset(rec["seed"])
    spec = spec_from_record(rec)
    reg = solve_regularized_fbpd(ds, spec, SolverConfig(lam=rec["lam"], **TIGHT))
    if reg.hinge_sum <= 1e-9:
        pytest.skip("hinge vanished; eta=0 is out of the constrained domain")
    con = solve_constrained_fbpd(ds, spec, SolverConfig(eta=reg.hinge_sum, **TIGHT))
    assert con.constraint_violation <= 1e-6
    assert abs(con.g_value - reg.g_value) <= 1e-4 * (1.0 + abs(reg.g_value))


def test_regularized_with_margins_matches_lp_reference(rng):
    # per-sample margins flow through r; linprog solves the same problem
    ds = random_dataset(rng, L=5, M=2, K=3)
    assert not np.allclose(ds.margins, 1.0)
    lam = 1.3
    ref = oracles.regularized_lp_reference(ds, "l1", lam)
    rep = solve_regularized_fbpd(ds, RegularizerSpec("l1"),
                                 SolverConfig(lam=lam, **TIGHT))
    assert abs(rep.primal_objective - ref) <= 1e-4 * (1.0 + abs(ref))


def test_cross_class_grouping_matches_subgradient_oracle():
    ds = tiny_dataset(8)
    from sparsemsvm.model import BlockStructure
    blocks = BlockStructure.contiguous(2, 1, mode="cross-class")
    spec = RegularizerSpec("l12", blocks)
    ref, _ = oracles.regularized_subgradient_reference(
        ds, "l12", 0.9, groups=[(0,), (1,)], mode="cross-class",
        n_rounds=35, steps_per_round=2500)
    rep = solve_regularized_fbpd(ds, spec, SolverConfig(lam=0.9, **TIGHT))
    assert abs(rep.primal_objective - ref) <= 1e-4 * (1.0 + abs(ref))


def test_sparse_features_end_to_end(rng):
    import scipy.sparse as sp
    dense = tiny_dataset(12)
    sparse_ds = Dataset(sp.csr_matrix(dense.dense_features()), dense.labels,
                        dense.n_classes, dense.margins)
    cfg = SolverConfig(lam=1.0, max_iter=50000, rel_tol=1e-9)
    a = solve_regularized_fbpd(dense, RegularizerSpec("l1"), cfg)
    b = solve_regularized_fbpd(sparse_ds, RegularizerSpec("l1"), cfg)
    assert a.converged and b.converged
    np.testing.assert_allclose(b.model.weights, a.model.weights, atol=1e-7)
    assert b.primal_objective == pytest.approx(a.primal_objective, rel=1e-9)


def test_constrained_trivial_eta_yields_zero_model():
    # eta >= sum of margins makes x=0 feasible, and it is g-minimal for l1
    ds = tiny_dataset(1)
    eta = float(ds.margins.sum())
    rep = solve_constrained_fbpd(ds, RegularizerSpec("l1"),
                                 SolverConfig(eta=eta, max_iter=100000, rel_tol=1e-10))
    assert rep.g_value <= 1e-8
    assert rep.hinge_sum <= eta + 1e-6


# ---------------------------------------------------------------------------
# gradient checks for the smooth baselines

def test_square_gradient_matches_finite_differences(rng):
    for _ in range(5):
        ds = random_dataset(rng, L=4, M=3, K=3)
        r = make_margin_offsets(ds)
        lam = 0.7
        x = rng.standard_normal((3, 4))
        _, grad = _square_loss_grad(x, ds, r, lam)
        fd = oracles.central_difference_grad(
            lambda z: _square_loss_grad(z, ds, r, lam)[0], x, h=1e-6)
        assert np.linalg.norm(grad - fd) <= 1e-5 * (1.0 + np.linalg.norm(fd))


def test_logistic_gradient_matches_finite_differences(rng):
    for _ in range(5):
        ds = random_dataset(rng, L=4, M=3, K=3)
        r = make_margin_offsets(ds)
        lam = 0.9
        x = 0.5 * rng.standard_normal((3, 4))
        _, grad = _logistic_loss_grad(x, ds, r, lam)
        fd = oracles.central_difference_grad(
            lambda z: _logistic_loss_grad(z, ds, r, lam)[0], x, h=1e-6)
        assert np.linalg.norm(grad - fd) <= 1e-5 * (1.0 + np.linalg.norm(fd))


def test_logistic_value_spec_case():
    ds = Dataset.from_arrays(np.array([[0.5]]), [1], n_classes=2, one_based=True)
    r = make_margin_offsets(ds)
    value, _ = _logistic_loss_grad(np.zeros((2, 2)), ds, r, 1.0)
    assert value == pytest.approx(np.log(1.0 + np.e))


def test_one_vs_all_single_class_is_binary_problem(rng):
    # with K=1 the joint squared hinge and the one-vs-all coincide up to the
    # direction convention, and both objectives vanish (no rival class)
    ds = random_dataset(rng, L=5, M=3, K=1)
    rep = solve_one_vs_all(ds, RegularizerSpec("l1"),
                           SolverConfig(lam=1.0, max_iter=2000, rel_tol=1e-9))
    assert rep.hinge_sum == 0.0
    assert rep.model.weights.shape == (1, 3)


def test_one_vs_all_rejects_cross_class_groups(rng):
    from sparsemsvm.model import BlockStructure
    ds = random_dataset(rng, L=4, M=4, K=2)
    blocks = BlockStructure.contiguous(4, 2, mode="cross-class")
    with pytest.raises(ValueError):
        solve_one_vs_all(ds, RegularizerSpec("l12", blocks), SolverConfig(lam=1.0))


def test_one_vs_all_separates_balanced_classes():
    # each class must end up on the positive side of its own block
    ds = tiny_dataset(3)
    rep = solve_one_vs_all(ds, RegularizerSpec("l2sq"),
                           SolverConfig(lam=10.0, max_iter=20000, rel_tol=1e-10))
    preds = predict(rep.model, ds.features)
    errors = int(np.sum(preds != ds.labels + 1))
    assert errors <= 1  # tiny instance is nearly separable


# ---------------------------------------------------------------------------
# duality diagnostics for the squared-l2 penalty

def test_l2sq_dual_gap_and_link():
    rec = SUBGRADIENT_REFERENCES["l2sq_a"]
    ds = tiny_dataset(rec["seed"])
    rep = solve_regularized_fbpd(ds, RegularizerSpec("l2sq"),
                                 SolverConfig(lam=rec["lam"], **TIGHT))
    assert rep.dual_objective is not None
    assert abs(rep.dual_gap) <= 1e-3 * (1.0 + abs(rep.primal_objective))
    # linkage: weights satisfy 2w = -(T^T y)_w, offsets (T^T y)_b -> 0
    TtY = apply_T_adjoint(rep.dual_y, ds).augmented()
    xnorm = np.linalg.norm(rep.model.ravel())
    assert np.linalg.norm(2.0 * rep.model.weights + TtY[:, :-1]) <= 1e-3 * (1.0 + xnorm)
    assert np.linalg.norm(TtY[:, -1]) <= 1e-3 * (1.0 + xnorm)
    # dual feasibility: every simplex block sums to lam, entrywise >= 0
    assert np.all(rep.dual_y >= -1e-12)
    np.testing.assert_allclose(rep.dual_y.sum(axis=1), rec["lam"], atol=1e-9)


# ---------------------------------------------------------------------------
# stability and diagnostics

def test_boundary_step_sizes_stay_finite():
    ds = tiny_dataset(4)
    truth = np.linalg.svd(oracles.dense_T_matrix(ds), compute_uv=False)[0]
    cfg = SolverConfig(lam=1.0, tau=1.0 / truth, sigma=1.0 / truth,
                       norm_T=truth, max_iter=3000, rel_tol=0.0)
    rep = solve_regularized_fbpd(ds, RegularizerSpec("l1"), cfg)
    assert np.all(np.isfinite(rep.model.ravel()))
    cfg = SolverConfig(eta=2.0, tau=1.0 / max(truth, 1.0), sigma=1.0 / max(truth, 1.0),
                       norm_T=truth, max_iter=3000, rel_tol=0.0)
    rep = solve_constrained_fbpd(ds, RegularizerSpec("l1"), cfg)
    assert np.all(np.isfinite(rep.model.ravel()))


def test_divergence_guard_raises():
    ds = tiny_dataset(2)
    # lying about the operator norm lets the step-size rule pass while the
    # true product is far beyond 1
    cfg = SolverConfig(lam=5.0, norm_T=1e-8, max_iter=50000, rel_tol=0.0)
    with pytest.raises(DivergenceError):
        solve_regularized_fbpd(ds, RegularizerSpec("l2sq"), cfg)


@pytest.mark.parametrize("mode", ["reg", "con"])
def test_windowed_residuals_nonincreasing(mode):
    # the smoothed residual must decay once the start-up transient (primal
    # pinned at zero while the dual warms up) has peaked
    ds = tiny_dataset(42)
    if mode == "reg":
        cfg = SolverConfig(lam=1.0, max_iter=100000, rel_tol=1e-7,
                           record_history=True)
        rep = solve_regularized_fbpd(ds, RegularizerSpec("l1"), cfg)
    else:
        warm = solve_regularized_fbpd(ds, RegularizerSpec("l1"),
                                      SolverConfig(lam=1.0, max_iter=100000,
                                                   rel_tol=1e-9))
        cfg = SolverConfig(eta=warm.hinge_sum, max_iter=100000, rel_tol=1e-7,
                           record_history=True)
        rep = solve_constrained_fbpd(ds, RegularizerSpec("l1"), cfg)
    assert rep.iterations >= 150
    assert windowed_residual_check(rep.history["rel_change"])


@pytest.mark.parametrize("name", sorted(SOLVERS))
def test_prediction_invariant_to_common_offset_shift(name, rng):
    ds = tiny_dataset(9)
    cfg = SolverConfig(lam=1.0, eta=2.0, max_iter=4000, rel_tol=1e-8)
    rep = SOLVERS[name](ds, RegularizerSpec("l1"), cfg)
    probe = rng.standard_normal((20, ds.n_features))
    base = predict(rep.model, probe)
    shifted = ModelVector(rep.model.weights, rep.model.offsets + 13.7)
    np.testing.assert_array_equal(predict(shifted, probe), base)


def test_history_recording():
    ds = tiny_dataset(5)
    rep = solve_regularized_fbpd(ds, RegularizerSpec("l1"),
                                 SolverConfig(lam=1.0, max_iter=50, rel_tol=0.0,
                                              record_history=True))
    assert len(rep.history["objective"]) == 50
    assert len(rep.history["rel_change"]) == 50
    assert len(rep.history["time"]) == 50


def test_callback_sees_every_iteration():
    ds = tiny_dataset(5)
    seen = []
    solve_regularized_fbpd(ds, RegularizerSpec("l1"),
                           SolverConfig(lam=1.0, max_iter=20, rel_tol=0.0),
                           callback=lambda i, x: seen.append(i))
    assert seen == list(range(1, 21))


def test_hinge_sum_nonnegative_across_solvers(rng):
    ds = tiny_dataset(6)
    for name in sorted(SOLVERS):
        cfg = SolverConfig(lam=0.5, eta=1.0, max_iter=2000, rel_tol=1e-7)
        rep = SOLVERS[name](ds, RegularizerSpec("l1"), cfg)
        assert rep.hinge_sum >= 0.0
        assert rep.hinge_sum == pytest.approx(hinge_sum(rep.model, ds), rel=1e-12)
