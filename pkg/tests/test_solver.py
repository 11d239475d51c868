import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from plirls.apps import build_sparse_lsq
from plirls.checks.oracles import fd_gradient
from plirls.core.problem import (
    AffineTerm,
    BlockTerms,
    ProblemSpec,
    ProxFriendlyTerm,
    RowTerms,
    SmoothTerm,
    eval_auxiliary,
    eval_smoothed_objective,
    grad_h,
)
from plirls.core.prox import l1_term
from plirls.core.solver import (
    SolverOptions,
    Status,
    StepRule,
    WeightVector,
    grad_H_x,
    initial_state,
    local_lipschitz_bound,
    plirls_step,
    run_plirls,
    step_modulus,
    weight_update,
    weights_in_box,
)
from plirls.core.trace import trace_to_csv_text
from plirls.exceptions import InstanceError, SolverError


def _toy_spec(epsilon=1.0, nu=1.0):
    return build_sparse_lsq(np.eye(3), [1.0, -0.5, 0.25], lam=2.0, nu=nu, epsilon=epsilon)


def test_local_lipschitz_bound_hand_value():
    term = AffineTerm.dense([[1.0, 0.0]], [2.0])
    # (||B|| ||c|| + ||B^T B|| (2 tau ||B|| + ||c|| + eps)) / eps^2 = (2 + 5) / 1
    assert local_lipschitz_bound(term, epsilon=1.0, tau=1.0) == pytest.approx(7.0)
    with pytest.raises(InstanceError):
        local_lipschitz_bound(term, epsilon=0.0, tau=1.0)


def test_step_modulus_hand_value():
    assert step_modulus(2.0, np.array([1.0, 3.0]), np.array([0.5, 0.25])) == pytest.approx(4.0)
    with pytest.raises(InstanceError):
        step_modulus(0.0, np.array([-1.0]), np.array([1.0]))


def test_weight_update_formulas():
    spec = _toy_spec(epsilon=0.5)
    y = weight_update(spec, np.array([1.0, -0.5, 0.0]))
    # residual of coordinate extraction is x itself
    assert_allclose(y.weights, 1.0 / (2.0 * np.sqrt(np.array([1.0, 0.25, 0.0]) + 0.25)))
    assert y.weights[2] == pytest.approx(spec.weight_cap)
    half = _toy_spec(epsilon=0.5, nu=0.5)
    y_half = weight_update(half, np.array([1.0, 0.0, 0.0]))
    assert y_half.weights[0] == pytest.approx(0.25 * (1.25 ** -0.75))
    assert weights_in_box(half, y_half)


def test_weight_vector_must_be_positive():
    with pytest.raises(InstanceError):
        WeightVector(np.array([1.0, 0.0]))


def test_grad_H_x_of_sparse_lsq():
    spec = _toy_spec()
    x = np.array([0.3, -0.2, 1.0])
    y = weight_update(spec, x)
    expected = 2.0 * (x - np.array([1.0, -0.5, 0.25])) + 2.0 * y.weights * x
    assert_allclose(grad_H_x(spec, x, y), expected)


def _composite_spec(rng, nu):
    """l1 + least-squares s + five residual rows on R^3."""
    s = SmoothTerm.least_squares(rng.standard_normal((4, 3)), rng.standard_normal(4), lam=0.5)
    terms = RowTerms(rng.standard_normal((5, 3)), rng.standard_normal(5))
    return ProblemSpec(f=l1_term(0.3), s=s, terms=terms, epsilon=0.2, nu=nu)


@pytest.mark.parametrize("nu", [1.0, 0.5, 0.25])
def test_grad_H_x_matches_finite_differences(rng, nu):
    spec = _composite_spec(rng, nu)
    x = rng.standard_normal(3)
    y = weight_update(spec, rng.standard_normal(3))

    def H(z):
        return eval_auxiliary(spec, z, y) - spec.f.value(z)

    assert_allclose(grad_H_x(spec, x, y), fd_gradient(H, x), rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("nu", [1.0, 0.5, 0.25])
def test_grad_H_x_at_updated_weights_is_grad_h(rng, nu):
    spec = _composite_spec(rng, nu)
    for _ in range(10):
        x = 3.0 * rng.standard_normal(3)
        expected = grad_h(spec, x)
        got = grad_H_x(spec, x, weight_update(spec, x))
        assert np.linalg.norm(got - expected) <= 1e-12 * max(1.0, np.linalg.norm(expected))


def test_run_converges_on_well_conditioned_toy():
    spec = _toy_spec()
    result = run_plirls(spec, np.zeros(3), SolverOptions(tau0=2.0, max_iters=20_000))
    assert result.status == Status.CONVERGED
    assert result.trace[-1].w_norm <= 1e-6
    assert [r.k for r in result.trace[:3]] == [1, 2, 3]
    assert np.isfinite(sum(r.step_norm for r in result.trace))


def test_trace_invariants_hold_every_iteration():
    spec = _toy_spec(epsilon=0.3)
    state = initial_state(spec, np.array([2.0, 2.0, -2.0]))
    rule = StepRule.for_spec(spec, gamma=1.1, tau=10.0)
    for _ in range(200):
        new_state, record = plirls_step(spec, state, rule)
        assert record.rho1_witness >= -1e-9
        assert record.rho2_witness >= -1e-9
        assert new_state.objective <= state.objective + 1e-12
        assert weights_in_box(spec, new_state.y)
        psi = eval_auxiliary(spec, new_state.x, new_state.y)
        assert abs(psi - new_state.objective) <= 1e-12 * (1 + abs(new_state.objective))
        state = new_state


def test_max_iters_status():
    result = run_plirls(_toy_spec(), np.zeros(3), SolverOptions(max_iters=1))
    assert result.status == Status.MAX_ITERS
    assert result.iterations == 1


def test_tau_doubling_cap_gives_diverged():
    result = run_plirls(_toy_spec(), np.zeros(3), SolverOptions(tau0=1e-3, tau_doubling_cap=0))
    assert result.status == Status.DIVERGED
    assert result.iterations == 0


def test_tau_is_enlarged_when_the_iterate_leaves_the_ball():
    result = run_plirls(_toy_spec(), np.zeros(3), SolverOptions(tau0=1e-3, max_iters=5))
    assert result.rule.doublings >= 1
    assert result.rule.tau >= np.linalg.norm(result.x)


def test_tau0_below_start_norm_is_rejected():
    with pytest.raises(InstanceError):
        run_plirls(_toy_spec(), np.full(3, 10.0), SolverOptions(tau0=1.0))


def test_options_validate_gamma():
    with pytest.raises(ValidationError):
        SolverOptions(gamma=0.9)


def test_nonfinite_gradient_aborts():
    broken = SmoothTerm(value=lambda x: 0.0, gradient=lambda x: np.full_like(x, np.nan), lipschitz_modulus=1.0)
    spec = ProblemSpec(f=ProxFriendlyTerm.zero(), s=broken, terms=[AffineTerm.dense([[1.0, 0.0]])], epsilon=0.1)
    with pytest.raises(SolverError) as info:
        run_plirls(spec, np.zeros(2))
    assert info.value.iteration == 0


def test_vanishing_modulus_is_an_error():
    spec = ProblemSpec(f=ProxFriendlyTerm.zero(), s=SmoothTerm.zero(), terms=BlockTerms.empty(2), epsilon=0.1)
    with pytest.raises(SolverError):
        run_plirls(spec, np.zeros(2), SolverOptions(max_iters=3))


def test_identical_runs_give_identical_traces():
    first = run_plirls(_toy_spec(), np.zeros(3), SolverOptions(max_iters=50))
    second = run_plirls(_toy_spec(), np.zeros(3), SolverOptions(max_iters=50))
    assert trace_to_csv_text(first.trace) == trace_to_csv_text(second.trace)


def test_verbose_diagnostics_add_stated_witness():
    result = run_plirls(_toy_spec(), np.zeros(3), SolverOptions(max_iters=5, diagnostics="verbose"))
    assert all(r.w_norm_stated is not None for r in result.trace)
    quiet = run_plirls(_toy_spec(), np.zeros(3), SolverOptions(max_iters=5))
    assert all(r.w_norm_stated is None for r in quiet.trace)


def test_critical_start_converges_immediately():
    spec = build_sparse_lsq(np.eye(2), [0.0, 0.0], lam=1.0, epsilon=0.5)
    result = run_plirls(spec, np.zeros(2))
    assert result.status == Status.CONVERGED
    assert result.iterations == 1
    assert result.trace[0].step_norm == 0.0
    assert eval_smoothed_objective(spec, result.x) == pytest.approx(2 * 0.5)
