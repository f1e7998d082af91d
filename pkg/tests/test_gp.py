import math

import numpy as np
import pytest

from gpcolloc import casebook
from gpcolloc import expr as ex
from gpcolloc.cli import evaluation_grid
from gpcolloc.geometry import BoundaryDatum, Discretization, Interval, UnitDisk, sample_interior
from gpcolloc.gp import (
    BASE_JITTER,
    IllConditionedError,
    LengthscaleGrid,
    ProblemSpec,
    assemble,
    condition,
    jittered_cholesky,
    log_marginal_likelihood,
    posterior_covariance,
    posterior_mean,
    posterior_variance,
    select_lengthscale,
)
from gpcolloc.kernel import SEKernel
from gpcolloc.operators import LinearDiffOperator

from _oracles import gaussian_conditional

L = LinearDiffOperator
DIRICHLET_1D = L.identity(1)


def dirichlet_only(g0=0.7, s=1.5, ell=0.4, point=1.0):
    disc = Discretization(np.zeros((0, 1)), (BoundaryDatum([point], DIRICHLET_1D, g0),))
    return ProblemSpec(Interval(0.0, 1.0), L.partial((2,), -1.0), ex.const(1.0), disc,
                       SEKernel.isotropic(s, ell, 1))


def test_dirichlet_only_system():
    sys = assemble(dirichlet_only())
    assert sys.C.tolist() == [[2.25]]
    assert sys.y.tolist() == [0.7]
    assert sys.jitter_used == 0.0


def test_dirichlet_only_interpolates():
    field = condition(dirichlet_only())
    assert abs(posterior_mean(field, [1.0]) - 0.7) <= 1e-9
    assert posterior_variance(field, [1.0]) <= 1e-9 * 2.25


def test_single_observation_likelihood():
    got = log_marginal_likelihood(dirichlet_only(g0=0.7, s=1.5))
    assert got == pytest.approx(-0.5 * 0.7**2 / 2.25 - 0.5 * math.log(2 * math.pi * 2.25), rel=1e-14)


def test_zero_data_gives_zero_mean_and_logdet_likelihood():
    spec = casebook.build_case("disk_poisson", ell=1.0)
    spec = ProblemSpec(spec.domain, spec.interior_op, ex.const(0.0), spec.discretization, spec.kernel)
    field = condition(spec)
    pts = evaluation_grid(spec.domain, 15)
    assert np.all(field.mean(pts) == 0.0)
    sys = field.system
    sign, logdet = np.linalg.slogdet(sys.C)
    assert sign > 0
    expected = -0.5 * logdet - 0.5 * sys.size * math.log(2 * math.pi)
    assert log_marginal_likelihood(spec, sys) == pytest.approx(expected, rel=1e-9)


def test_empty_observation_set_is_prior():
    spec = ProblemSpec(UnitDisk(), L.laplacian(2, -1.0), ex.const(1.0),
                       Discretization(np.zeros((0, 2))), SEKernel.isotropic(0.3, 0.5, 2))
    field = condition(spec)
    x, xp = [0.1, 0.2], [-0.4, 0.3]
    assert posterior_mean(field, x) == 0.0
    assert posterior_variance(field, x) == pytest.approx(0.09, rel=1e-15)
    assert posterior_covariance(field, x, xp) == spec.kernel.eval(x, xp)
    assert log_marginal_likelihood(spec) == 0.0


def test_disk_system_shape_and_symmetry():
    sys = assemble(casebook.build_case("disk_poisson", ell=3.5))
    assert sys.C.shape == (21, 21)
    assert np.array_equal(sys.C, sys.C.T)
    n = len(sys.C)
    recon = sys.chol @ sys.chol.T
    target = sys.C + sys.jitter_used * np.eye(n)
    assert np.linalg.norm(recon - target) <= 1e-8 * np.linalg.norm(target)


def test_disk_centre_value():
    field = condition(casebook.build_case("disk_poisson", ell=3.5))
    assert posterior_mean(field, [0.0, 0.0]) == pytest.approx(0.25, abs=5e-3)


def test_duplicate_point_needs_jitter_or_fails():
    spec = casebook.build_case("disk_poisson", ell=1.0)
    X = spec.discretization.interior
    disc = Discretization(np.vstack([X, X[:1]]), spec.discretization.boundary)
    dup = ProblemSpec(spec.domain, spec.interior_op, spec.source, disc, spec.kernel)
    try:
        sys = assemble(dup)
    except IllConditionedError:
        return
    # an exactly singular C is rescued at the base level already
    assert sys.jitter_used >= BASE_JITTER * np.max(np.diag(sys.C))


def test_jitter_escalation_gives_up():
    C = np.array([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(IllConditionedError) as info:
        jittered_cholesky(C)
    assert info.value.jitter == pytest.approx(1e-4)


def test_far_field_variance_returns_to_prior():
    spec = casebook.build_case("disk_poisson", ell=0.5)
    field = condition(spec)
    s2 = spec.kernel.variance
    for direction in ([1, 0], [0, -1], [-0.6, 0.8]):
        x = 20 * 0.5 * np.array(direction, dtype=float) * 1.1
        assert abs(posterior_variance(field, x) - s2) <= 1e-6 * s2


def test_covariance_diagonal_and_symmetry(rng):
    field = condition(casebook.build_case("disk_poisson", ell=0.8))
    P = sample_interior(UnitDisk(), 10, "uniform_random", seed=3)
    K = field.covariance(P, P)
    assert np.allclose(np.diag(K), field.variance(P), rtol=0, atol=1e-12 * field.kernel.variance)
    for _ in range(20):
        x, xp = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        assert abs(posterior_covariance(field, x, xp) - posterior_covariance(field, xp, x)) <= 1e-12 * field.kernel.variance


# -- brute-force conditional -------------------------------------------------


def tabulate(kernel, functionals):
    """Joint covariance of ``[(operator, point)]`` written out term by term."""
    n = len(functionals)
    K = np.zeros((n, n))
    for i, (A, x) in enumerate(functionals):
        for j, (B, xp) in enumerate(functionals):
            total = 0.0
            for ta in A.terms:
                for tb in B.terms:
                    total += (ex.evaluate(ta.coefficient, x) * ex.evaluate(tb.coefficient, xp)
                              * kernel.eval_derivative(ta.alpha.components, tb.alpha.components, x, xp))
            K[i, j] = total
    return K


def tiny_problem(ell=0.9):
    op = L([((2,), "-(1+x1/2)"), ((1,), "0.3"), ((0,), "-0.5")])
    bnd = (BoundaryDatum([0.0], L.partial((1,)), 0.4), BoundaryDatum([2.0], DIRICHLET_1D, -0.2))
    disc = Discretization(np.array([[0.5], [1.0], [1.5]]), bnd)
    return ProblemSpec(Interval(0.0, 2.0), op, ex.parse("exp(-(x1-1)^2)"), disc, SEKernel.isotropic(1.3, ell, 1))


def brute_force(spec, test_points):
    obs = [(spec.interior_op, x) for x in spec.discretization.interior]
    obs += [(b.operator, b.point) for b in spec.discretization.boundary]
    tests = [(DIRICHLET_1D, np.array([t])) for t in test_points]
    joint = tabulate(spec.kernel, tests + obs)
    return gaussian_conditional(joint, len(tests), spec.observation_values())


def test_brute_force_conditional_equivalence():
    spec = tiny_problem()
    field = condition(spec)
    assert field.system.jitter_used == 0.0
    t = np.linspace(-0.3, 2.3, 27)
    mean, cov = brute_force(spec, t)
    got_mean = field.mean(t)
    got_var = field.variance(t)
    s2 = spec.kernel.variance
    assert np.max(np.abs(got_mean - mean)) <= 1e-10 * np.max(np.abs(mean))
    assert np.max(np.abs(got_var - np.diag(cov))) <= 1e-10 * s2
    assert np.max(np.abs(field.covariance(t, t) - cov)) <= 1e-10 * s2


def test_operator_acts_on_observed_argument():
    """Differentiating the test-point argument instead gives a different vector."""
    spec = tiny_problem()
    field = condition(spec)
    x = np.array([0.7])
    k = spec.kernel
    right, wrong = [], []
    for op, p in zip(spec.observation_operators(), spec.observation_points()):
        right.append(tabulate(k, [(DIRICHLET_1D, x), (op, p)])[0, 1])
        wrong.append(sum(ex.evaluate(t.coefficient, x) * k.eval_derivative(t.alpha.components, (0,), x, p)
                         for t in op.terms))
    assert np.allclose(field.cross_covariance(x)[0], right, rtol=1e-13, atol=1e-15)
    assert not np.allclose(right, wrong)


# -- properties over the case studies ----------------------------------------


@pytest.fixture(scope="module")
def case_fields():
    return {cid: condition(casebook.build_case(cid)) for cid in casebook.CASE_IDS}


@pytest.mark.parametrize("case_id", casebook.CASE_IDS)
def test_collocation_residuals(case_fields, case_id):
    field = case_fields[case_id]
    spec = field.spec
    y = field.system.y
    tol = 1e-6 * np.max(np.abs(y))
    X = spec.discretization.interior
    interior = field.apply(spec.interior_op, X) - y[: len(X)]
    assert np.max(np.abs(interior)) <= tol
    for b in spec.discretization.boundary:
        assert abs(field.apply(b.operator, b.point)[0] - b.value) <= tol


@pytest.mark.parametrize("case_id", casebook.CASE_IDS)
def test_variance_non_negative_on_grid(case_fields, case_id):
    field = case_fields[case_id]
    dom = field.spec.domain
    pts = evaluation_grid(dom, 2500 if dom.dim == 1 else 50)
    var = field.variance(pts)  # raises below -1e-10 s^2
    assert np.all(var >= 0.0)


@pytest.mark.parametrize("case_id", casebook.CASE_IDS)
def test_posterior_covariance_psd(case_fields, case_id, rng):
    field = case_fields[case_id]
    lo, hi = field.spec.domain.bounding_box()
    P = rng.uniform(lo, hi, (10, len(lo)))
    K = field.covariance(P, P)
    assert np.max(np.abs(K - K.T)) <= 1e-12 * field.kernel.variance
    assert np.linalg.eigvalsh(0.5 * (K + K.T))[0] >= -1e-8 * np.trace(K)


@pytest.mark.parametrize("ell", [0.3, 0.8])
def test_monotone_information(ell):
    base = casebook.build_case("disk_poisson", ell=ell)
    extra = sample_interior(UnitDisk(), 1, "uniform_random", seed=11)
    disc = Discretization(np.vstack([base.discretization.interior, extra]), base.discretization.boundary)
    more = ProblemSpec(base.domain, base.interior_op, base.source, disc, base.kernel)
    probes = sample_interior(UnitDisk(), 20, "uniform_random", seed=5)
    before = condition(base).variance(probes)
    after = condition(more).variance(probes)
    assert np.all(after <= before + 1e-9 * base.kernel.variance)


def test_monotone_information_1d():
    base = tiny_problem(ell=0.6)
    disc = Discretization(np.vstack([base.discretization.interior, [[1.8]]]), base.discretization.boundary)
    more = ProblemSpec(base.domain, base.interior_op, base.source, disc, base.kernel)
    probes = np.linspace(0.05, 1.95, 20)
    assert np.all(condition(more).variance(probes) <= condition(base).variance(probes) + 1e-9 * 1.69)


# -- lengthscale selection ---------------------------------------------------


def test_repeated_single_lengthscale():
    spec = tiny_problem()
    best, profile = select_lengthscale(spec, [0.7, 0.7])
    assert best == 0.7
    assert profile == [(0.7, 1.0), (0.7, 1.0)]


def test_profile_is_normalized():
    best, profile = select_lengthscale(tiny_problem(), LengthscaleGrid(0.1, 3.0, 15))
    vals = [v for _, v in profile]
    assert max(vals) == 1.0 and min(vals) >= 0.0
    assert dict(profile)[best] == 1.0


def test_grid_validation():
    with pytest.raises(ValueError):
        LengthscaleGrid(1.0, 0.5)
    assert LengthscaleGrid.default_for(UnitDisk()).values()[[0, -1]].tolist() == pytest.approx([0.02, 6.0])


def test_heat_profile_has_interior_maximum():
    spec = casebook.build_case("heat1d", ell=1.0)
    ells = casebook.case_config("heat1d").lengthscale_grid().values()
    best, _ = select_lengthscale(spec, ells)
    assert ells[0] < best < ells[-1]


def _brute_loglik(spec):
    obs = [(spec.interior_op, x) for x in spec.discretization.interior]
    obs += [(b.operator, b.point) for b in spec.discretization.boundary]
    C = tabulate(spec.kernel, obs)
    y = spec.observation_values()
    sign, logdet = np.linalg.slogdet(C)
    return -0.5 * y @ np.linalg.solve(C, y) - 0.5 * logdet - 0.5 * len(y) * math.log(2 * math.pi)


def test_disk_argmax_matches_direct_likelihood():
    spec = casebook.build_case("disk_poisson", ell=1.0)
    ells = np.geomspace(0.2, 1.2, 16)
    best, _ = select_lengthscale(spec, ells)
    direct = [_brute_loglik(spec.with_lengthscale(e)) for e in ells]
    assert best == ells[int(np.argmax(direct))]
    assert ells[0] < best < ells[-1]


@pytest.mark.xfail(strict=True, reason="evidence on the sunflower layout peaks near 0.5 and falls steadily toward 3.5")
def test_disk_argmax_near_3_5():
    spec = casebook.build_case("disk_poisson", ell=1.0)
    best, _ = select_lengthscale(spec, LengthscaleGrid(0.02, 6.0, 60))
    assert 2.5 <= best <= 4.5
