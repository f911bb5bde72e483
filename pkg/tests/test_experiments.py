import math

import numpy as np
import pytest

from sparselab.ensembles import entry_distribution
from sparselab.errors import (InputError, ParameterError, UnderdeterminedError)
from sparselab.experiments import (ConcentrationReport, PhaseDiagram,
                                   concentration_experiment, contour_crossings,
                                   fit_threshold, phase_diagram,
                                   scaling_exponent, std_scaling_check)

E1 = np.array([1.0, 0.0])


def test_gaussian_mean_matches_absolute_moment():
    report = concentration_experiment(E1, entry_distribution("gaussian"),
                                      [100], [0.1], 20_000, 3)
    assert report.means[0] == pytest.approx(math.sqrt(2 / math.pi), rel=0.01)


def test_laplace_mean_matches_absolute_moment():
    report = concentration_experiment(E1, entry_distribution("laplace"),
                                      [100], [0.1], 20_000, 3)
    assert report.means[0] == pytest.approx(1 / math.sqrt(2), rel=0.01)


@pytest.mark.parametrize("kind", ["laplace", "symmetrized_exponential",
                                  "gaussian", "rademacher", "custom_mixture"])
def test_jensen_bound_and_floor(kind):
    report = concentration_experiment(E1, entry_distribution(kind),
                                      [50], [0.1], 2000, 5)
    se = report.stds[0] / math.sqrt(report.trials)
    assert report.means[0] <= 1.0 + 4.0 * se
    assert report.means[0] >= 0.1  # empirical floor for unit-variance laws
    assert report.mins[0] > 0.0


def test_exceedance_decays_with_m():
    report = concentration_experiment(E1, entry_distribution("laplace"),
                                      [25, 100, 400], [0.1], 2000, 9)
    rates = report.exceedance[:, 0]
    for i in range(len(rates) - 1):
        sigma = math.sqrt(max(rates[i] * (1 - rates[i]), 1e-12) / report.trials)
        assert rates[i + 1] <= rates[i] + 3 * sigma + 1e-9


def test_non_unit_probe_rejected():
    with pytest.raises(InputError):
        concentration_experiment(np.array([1.0, 1.0]),
                                 entry_distribution("laplace"), [10], [0.1], 100, 0)


def test_std_scaling_gaussian_and_laplace():
    for kind in ("gaussian", "laplace"):
        report = concentration_experiment(E1, entry_distribution(kind),
                                          [50, 200, 800], [0.1], 2000, 11)
        assert std_scaling_check(report)
        for i in range(2):
            ratio = report.stds[i + 1] / report.stds[i]
            assert 0.25 <= ratio <= 1.0


def test_std_scaling_rejects_degenerate():
    base = concentration_experiment(E1, entry_distribution("gaussian"),
                                    [50, 200, 800], [0.1], 200, 0)
    degenerate = ConcentrationReport(
        dist=base.dist, probe=base.probe, m_values=base.m_values,
        delta_values=base.delta_values, trials=base.trials, seed=base.seed,
        means=base.means, stds=np.zeros(3), mins=base.mins, maxs=base.maxs,
        exceedance=base.exceedance, lower_ref=base.lower_ref)
    with pytest.raises(InputError):
        std_scaling_check(degenerate)
    with pytest.raises(ParameterError):
        std_scaling_check(ConcentrationReport(
            dist=base.dist, probe=base.probe, m_values=(50, 100),
            delta_values=base.delta_values, trials=base.trials, seed=base.seed,
            means=base.means[:2], stds=base.stds[:2], mins=base.mins[:2],
            maxs=base.maxs[:2], exceedance=base.exceedance[:2],
            lower_ref=base.lower_ref))


def test_phase_diagram_trivial_cells():
    dist = entry_distribution("laplace")
    diagram = phase_diagram(8, [0, 1], [4, 8], dist, "gaussian", 30, 13)
    assert (diagram.success[0] == 1.0).all()  # s = 0: zero signal always back
    assert diagram.success[1, 1] >= 0.9       # m = n: full-rank square system


def test_phase_diagram_monotone_in_m_within_noise():
    dist = entry_distribution("laplace")
    diagram = phase_diagram(20, [2], [4, 8, 12, 16, 20], dist, "gaussian", 60, 21)
    row = diagram.success[0]
    for j in range(len(row) - 1):
        pooled = (row[j] + row[j + 1]) / 2
        sigma = math.sqrt(max(pooled * (1 - pooled), 1e-12)
                          / diagram.trials_per_cell)
        assert row[j + 1] >= row[j] - 3 * sigma - 1e-9


def test_phase_diagram_reproducible_bit_exact():
    dist = entry_distribution("gaussian")
    one = phase_diagram(12, [1, 2], [4, 8], dist, "rademacher", 25, 3)
    two = phase_diagram(12, [1, 2], [4, 8], dist, "rademacher", 25, 3)
    assert np.array_equal(one.success, two.success)
    threaded = phase_diagram(12, [1, 2], [4, 8], dist, "rademacher", 25, 3,
                             threads=3)
    assert np.array_equal(one.success, threaded.success)


def test_phase_diagram_validation():
    dist = entry_distribution("laplace")
    with pytest.raises(ParameterError):
        phase_diagram(8, [], [4], dist, "gaussian", 10, 0)
    with pytest.raises(ParameterError):
        phase_diagram(8, [2, 1], [4], dist, "gaussian", 10, 0)


def _ramp_diagram(n, s_grid, m_grid, m_star_fn, width=2.0):
    """Synthetic diagram whose 0.5-contour sits exactly at m_star_fn(s)."""
    success = np.zeros((len(s_grid), len(m_grid)))
    for i, s in enumerate(s_grid):
        target = m_star_fn(s)
        for j, m in enumerate(m_grid):
            success[i, j] = min(max(0.5 + (m - target) / (2 * width), 0.0), 1.0)
    return PhaseDiagram(n=n, s_grid=tuple(s_grid), m_grid=tuple(m_grid),
                        success=success, trials_per_cell=1,
                        dist=entry_distribution("laplace"),
                        value_law="gaussian", master_seed=0)


def test_fit_recovers_synthetic_threshold_law():
    n = 128
    s_grid = [2, 4, 8, 16]
    m_grid = list(range(2, 120))
    diagram = _ramp_diagram(n, s_grid, m_grid,
                            lambda s: 2.0 * s * math.log(n / s))
    fit = fit_threshold(diagram)
    assert fit.a == pytest.approx(2.0, rel=0.05)
    assert fit.b == pytest.approx(1.0, rel=0.20)
    assert fit.residual <= 0.1 * np.mean(fit.m_star)


def test_fit_underdetermined():
    diagram = _ramp_diagram(64, [2], list(range(2, 60)), lambda s: 4.0 * s)
    with pytest.raises(UnderdeterminedError):
        fit_threshold(diagram)


def test_contour_drops_rows_without_crossing():
    n = 64
    diagram = _ramp_diagram(n, [2, 4, 32], list(range(2, 30)),
                            lambda s: 5.0 * s)  # s = 32 never crosses
    s_used, m_star = contour_crossings(diagram)
    assert s_used == [2, 4]
    assert m_star == pytest.approx([10.0, 20.0], rel=1e-6)


def test_scaling_exponent_power_laws():
    n = 4096
    s_grid = [2, 4, 8, 16]
    linear = _ramp_diagram(n, s_grid, list(range(2, 80)), lambda s: 3.0 * s)
    assert scaling_exponent(linear) == pytest.approx(1.0, abs=0.05)
    quadratic = _ramp_diagram(n, s_grid, list(range(2, 800)),
                              lambda s: 3.0 * s ** 2)
    assert scaling_exponent(quadratic) == pytest.approx(2.0, abs=0.05)


def test_scaling_exponent_needs_range():
    diagram = _ramp_diagram(64, [2, 4], list(range(2, 40)), lambda s: 4.0 * s)
    with pytest.raises(UnderdeterminedError):
        scaling_exponent(diagram)


def test_concentration_reproducible():
    report_a = concentration_experiment(E1, entry_distribution("custom_mixture"),
                                        [30], [0.1], 300, 8)
    report_b = concentration_experiment(E1, entry_distribution("custom_mixture"),
                                        [30], [0.1], 300, 8)
    assert np.array_equal(report_a.means, report_b.means)
    assert np.array_equal(report_a.exceedance, report_b.exceedance)
