import json

import numpy as np
import pytest
from scipy.stats import norm

from wong_zakai_lab.coefficients import reduce_to_wz_form
from wong_zakai_lab.errors import ParameterError
from wong_zakai_lab.experiments import (
    ABOVE,
    BELOW,
    FAIL,
    INCONCLUSIVE,
    PASS,
    SUPPORT_LOWER,
    SUPPORT_UPPER,
    WONG_ZAKAI,
    ConvergenceReport,
    ExceedanceEstimate,
    chunks,
    judge,
    run_chunks,
    support_lower,
    support_upper,
    truncation_consistency,
    wilson_interval,
    wong_zakai_convergence,
)
from wong_zakai_lab.integrators import DriverBundle, integrate_mixed, integrate_reference, solve_skeleton_wn, sup_distance
from wong_zakai_lab.models.registry import builtin
from wong_zakai_lab.paths import CameronMartinPath, PolygonalPath, sample_wiener
from wong_zakai_lab.reporting import dumps_json


def _estimate(n, p, low, high, escaped=0, samples=100):
    return ExceedanceEstimate(n, 0.25, samples, int(round(p * samples)), escaped, p, low, high, 0.1)


@pytest.mark.parametrize("count, total", [(c, t) for t in (10, 57, 300, 1000) for c in (1, 2, t // 3, t // 2, t - 1)])
def test_wilson_interval_formula(count, total):
    z = norm.ppf(0.975)
    p = count / total
    centre = p + z * z / (2 * total)
    spread = z * np.sqrt(p * (1 - p) / total + z * z / (4 * total * total))
    scale = 1 + z * z / total
    low, high = wilson_interval(count, total)
    assert low == pytest.approx((centre - spread) / scale)
    assert high == pytest.approx((centre + spread) / scale)
    assert 0.0 <= low <= p <= high <= 1.0


def test_wilson_interval_edges():
    z = norm.ppf(0.95)
    assert wilson_interval(0, 100) == (0.0, pytest.approx(z * z / (100 + z * z)))
    assert wilson_interval(100, 100) == (pytest.approx(100 / (100 + z * z)), 1.0)
    assert wilson_interval(0, 0) == (0.0, 1.0)
    with pytest.raises(ParameterError):
        wilson_interval(5, 3)


def test_estimate_from_distances():
    distances = [0.1, 0.5, np.inf, 0.3]
    above = ExceedanceEstimate.from_distances(4, 0.25, distances)
    assert (above.samples, above.exceed_count, above.escaped_count, above.valid) == (4, 2, 1, 3)
    assert above.p_hat == pytest.approx(2 / 3)
    assert above.median_distance == 0.3
    assert above.escape_fraction == 0.25
    below = ExceedanceEstimate.from_distances(4, 0.25, distances, BELOW)
    assert below.exceed_count == 1
    empty = ExceedanceEstimate.from_distances(4, 0.25, [np.inf, np.inf])
    assert np.isnan(empty.p_hat)
    assert (empty.ci_low, empty.ci_high) == (0.0, 1.0)


def test_judge_escapes_make_inconclusive():
    estimates = [_estimate(2, 0.0, 0.0, 0.03, escaped=21), _estimate(4, 0.0, 0.0, 0.03)]
    assert judge(WONG_ZAKAI, estimates) == INCONCLUSIVE
    assert judge(SUPPORT_LOWER, estimates) == INCONCLUSIVE


def test_judge_lower_bound():
    assert judge(SUPPORT_LOWER, [_estimate(3, 0.0, 0.0, 0.03), _estimate(7, 0.2, 0.13, 0.29)]) == PASS
    assert judge(SUPPORT_LOWER, [_estimate(3, 0.5, 0.4, 0.6), _estimate(7, 0.0, 0.0, 0.03)]) == FAIL


@pytest.mark.parametrize(
    "estimates, verdict",
    [
        ([(0.4, 0.3, 0.5), (0.3, 0.21, 0.4), (0.1, 0.05, 0.17)], PASS),
        ([(0.4, 0.3, 0.5), (0.45, 0.35, 0.55), (0.1, 0.05, 0.17)], PASS),
        ([(0.1, 0.05, 0.17), (0.4, 0.3, 0.5)], FAIL),
        ([(0.4, 0.3, 0.5), (0.3, 0.21, 0.4)], FAIL),
        ([(0.05, 0.02, 0.11), (0.05, 0.02, 0.11)], PASS),
        ([(0.0, 0.0, 0.03), (0.0, 0.0, 0.03)], PASS),
    ],
)
def test_judge_decay(estimates, verdict):
    built = [_estimate(2 * i + 2, *values) for i, values in enumerate(estimates)]
    assert judge(SUPPORT_UPPER, built) == verdict


def test_chunks():
    assert chunks(120) == [range(0, 50), range(50, 100), range(100, 120)]
    assert chunks(50) == [range(0, 50)]


def test_run_chunks_keeps_order():
    def work(chunk):
        return np.array([list(chunk), [2 * i for i in chunk]])

    for workers in (1, 4):
        out = run_chunks(work, 130, workers)
        assert out.shape == (2, 130)
        assert out[0].tolist() == list(range(130))


def _quiet_ou():
    return builtin("threshold_ou", {"sigma": 0.0})


def test_wong_zakai_without_noise_never_exceeds():
    model = _quiet_ou()
    report = wong_zakai_convergence(reduce_to_wz_form(model, "skeleton"), None, model.x0, levels=[1, 2], M=100, L=6)
    assert report.p_hats == [0.0, 0.0]
    assert report.levels == [1, 2]
    assert report.event == ABOVE
    assert report.verdict == PASS
    assert report.metadata["variant"] is None


def test_support_upper_without_noise_never_exceeds():
    report = support_upper(_quiet_ou(), levels=[1, 2], M=100, L=6)
    assert report.p_hats == [0.0, 0.0]
    assert report.verdict == PASS


def test_support_upper_measures_against_linear_solution():
    model = builtin("threshold_ou", {"betas": [0.5], "alphas": [1.0], "sigma": 0.5})
    report = support_upper(model, levels=[1, 2], delta=0.1, M=100, L=6, seed=3, workers=2)
    W = sample_wiener(1, 6, seed=3, samples=range(100))
    X = integrate_reference(model, DriverBundle(W))
    assert model.exact_states(W, model.x0) is not None
    for estimate in report.estimates:
        distances = sup_distance(X, solve_skeleton_wn(model, PolygonalPath(W, estimate.n)))
        assert estimate.exceed_count == int(np.sum(distances > 0.1))
        assert estimate.median_distance == pytest.approx(float(np.median(distances)), rel=1e-12)


def test_support_lower_without_noise_always_close():
    report = support_lower(_quiet_ou(), CameronMartinPath.constant(1, 1.0), levels=[1, 2], M=100, L=6)
    assert report.p_hats == [1.0, 1.0]
    assert report.event == BELOW
    assert report.verdict == PASS
    assert report.metadata["h"] == {"breakpoints": [0.0, 1.0], "slopes": [[1.0]]}


@pytest.mark.parametrize(
    "kwargs",
    [{"levels": [2, 1]}, {"levels": []}, {"levels": [1, 4], "L": 7}, {"M": 99}, {"delta": 0.0}, {"seed": -1}],
)
def test_run_arguments_are_checked(kwargs):
    model = builtin("cubic")
    arguments = dict(levels=[1, 2], M=100, L=6)
    arguments.update(kwargs)
    with pytest.raises(ParameterError):
        wong_zakai_convergence(reduce_to_wz_form(model), None, model.x0, **arguments)


def test_reports_do_not_depend_on_worker_count():
    model = builtin("cubic")
    system = reduce_to_wz_form(model)
    h = CameronMartinPath.constant(1, 1.0)
    for run in (
        lambda workers: wong_zakai_convergence(system, None, model.x0, levels=[1, 2], M=120, L=6, seed=4, workers=workers),
        lambda workers: support_upper(model, levels=[1, 2], M=120, L=6, seed=4, workers=workers),
        lambda workers: support_lower(model, h, levels=[1, 2], M=120, L=6, seed=4, workers=workers),
    ):
        assert dumps_json(run(1).to_dict()) == dumps_json(run(3).to_dict())


def test_report_round_trip_through_json():
    model = builtin("cubic")
    report = support_upper(model, levels=[1, 2], M=100, L=6, seed=1)
    document = json.loads(dumps_json(report.to_dict()))
    again = ConvergenceReport.from_dict(document)
    assert dumps_json(again.to_dict()) == dumps_json(report.to_dict())
    with pytest.raises(ParameterError):
        ConvergenceReport.from_dict({"experiment": "x"})


def test_truncation_leaves_small_paths_alone():
    system = reduce_to_wz_form(builtin("cubic"))
    drivers = DriverBundle.coupled(sample_wiener(1, 8, seed=0, samples=range(20)), 4)
    report = truncation_consistency(system, drivers, [0.5], [1.0, 2.0, 4.0])
    assert report.failures == 0
    assert report.verdict == PASS
    assert [r.R for r in report.results] == [1.0, 2.0, 4.0]
    assert all(r.covered == r.equal for r in report.results)
    assert report.results[0].covered <= report.results[-1].covered <= 20
    assert report.to_dict()["metadata"]["n"] == 4


def test_truncation_radii_must_increase():
    system = reduce_to_wz_form(builtin("cubic"))
    drivers = DriverBundle.coupled(sample_wiener(1, 8, seed=0), 4)
    with pytest.raises(ParameterError):
        truncation_consistency(system, drivers, [0.5], [2.0, 1.0])


@pytest.mark.parametrize("ito_limit", [False, True])
def test_localization_coincidence(ito_limit):
    system = reduce_to_wz_form(builtin("cubic"))
    drivers = DriverBundle.coupled(sample_wiener(1, 10, seed=0, samples=range(100)), 4)
    report = truncation_consistency(system, drivers, [0.5], [1.0, 2.0, 4.0], ito_limit=ito_limit)
    assert report.failures == 0
    assert report.results[0].covered > 0


@pytest.mark.slow
def test_wong_zakai_trend_on_cubic():
    model = builtin("cubic")
    report = wong_zakai_convergence(reduce_to_wz_form(model, "skeleton"), None, model.x0, levels=[2, 4, 6, 8], delta=0.25, M=500, L=12, seed=42, workers=4)
    assert report.escape_fraction < 0.05
    assert report.verdict == PASS


@pytest.mark.slow
@pytest.mark.parametrize("name", ["cubic", "threshold_ou"])
def test_support_upper_trend(name):
    report = support_upper(builtin(name), levels=[3, 5, 7], M=300, L=12, seed=0, workers=4)
    assert report.verdict == PASS
    if name == "threshold_ou":
        # X is the single-regime linear solution here
        assert builtin(name).exact_states(sample_wiener(1, 4, seed=0), [0.5]) is not None
        medians = [e.median_distance for e in report.estimates]
        assert medians[0] >= 2.0 * medians[-1]


@pytest.mark.slow
def test_support_lower_on_cubic():
    report = support_lower(builtin("cubic"), CameronMartinPath.constant(1, 1.0), levels=[3, 5, 7], epsilon=0.3, M=300, L=12, seed=0, workers=4)
    assert report.estimates[-1].ci_low > 0.0
    assert report.verdict == PASS


@pytest.mark.slow
def test_ornstein_uhlenbeck_moments():
    alpha, beta, sigma, x0 = 1.0, 0.5, 0.5, 1.0
    model = builtin("threshold_ou", {"alphas": [alpha], "betas": [beta], "sigma": sigma}, x0=[x0])
    system = reduce_to_wz_form(model, "direct")
    finals = []
    for start in range(0, 10000, 1000):
        W = sample_wiener(1, 12, seed=0, samples=range(start, start + 1000))
        finals.append(integrate_mixed(system, DriverBundle.coupled(W, 4), model.x0).final[:, 0])
    finals = np.concatenate(finals)
    mean = np.exp(-alpha) * x0 + beta / alpha * (1.0 - np.exp(-alpha))
    variance = sigma ** 2 * (1.0 - np.exp(-2.0 * alpha)) / (2.0 * alpha)
    assert abs(finals.mean() - mean) <= 3.0 * finals.std() / np.sqrt(finals.size)
    assert finals.var() == pytest.approx(variance, rel=0.05)
