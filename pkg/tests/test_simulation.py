import json

import numpy as np
import pytest
from scipy import linalg, stats

from qcdcluster import ConfigError, MTSeries, SimulationError
from qcdcluster.simulation import (
    BASE_PROCESSES,
    OUTLIER,
    InnovationSpec,
    OutlierSpec,
    ProcessSpec,
    build_pool,
    build_scenario,
    contaminate_mio,
    contaminate_mtc,
    draw_innovations,
    simulate,
    var1,
    white_noise,
    write_scenario,
)


def spectral_radius(spec):
    A, G = spec.matrix("a"), spec.matrix("g")
    return max(abs(np.linalg.eigvals(np.kron(A, A) + np.kron(G, G))))


def test_zero_var_equals_innovations():
    spec = var1(((0.0, 0.0), (0.0, 0.0)))
    out = simulate(spec, 50, 11)
    eps = draw_innovations(spec.innovation, np.random.default_rng(11), spec.burn_in + 50)
    np.testing.assert_array_equal(out.values, eps[spec.burn_in:])
    np.testing.assert_array_equal(simulate(white_noise(), 50, 11).values, eps[spec.burn_in:])


def test_var_lag_one_autocovariance():
    spec = var1()
    phi = spec.matrix("phi")
    gamma0 = linalg.solve_discrete_lyapunov(phi, np.eye(2))
    gamma1 = phi @ gamma0  # E[X_t X_{t-1}^T]
    x = simulate(spec, 50_000, 5).values
    x = x - x.mean(axis=0)
    sample = x[1:].T @ x[:-1] / x.shape[0]
    assert np.max(np.abs(sample - gamma1)) < 0.02


def test_determinism():
    for tag, spec in BASE_PROCESSES["2"] + BASE_PROCESSES["3"]:
        a = simulate(spec, 200, 3)
        b = simulate(spec, 200, 3)
        assert np.array_equal(a.values, b.values), tag


@pytest.mark.parametrize("which", [0, 1])
def test_bekk_parameters_not_covariance_stationary(which):
    # the fourth-moment operator of both parameter sets has spectral radius above one
    assert spectral_radius(BASE_PROCESSES["3"][which][1]) > 1.0


@pytest.mark.xfail(reason="BEKK parameter sets are not covariance stationary; window covariances diverge", strict=False)
def test_bekk_window_covariances_stable():
    x = simulate(BASE_PROCESSES["3"][0][1], 50_000, 1).values
    first, second = np.cov(x[:25_000].T), np.cov(x[25_000:].T)
    assert np.max(np.abs(first - second) / np.abs(first)) < 0.2


def test_bekk_rejects_indefinite_covariance():
    bad = ProcessSpec("BEKK", {"c": ((0.1, 0.0), (0.1, 0.1)), "a": ((40.0, 0.0), (0.0, 40.0)), "g": ((2.0, 0.0), (0.0, 2.0))})
    with pytest.raises(SimulationError):
        simulate(bad, 2000, 0)


def test_mtc_examples():
    rng = np.random.default_rng(0)
    base = MTSeries(rng.normal(size=(300, 2)))
    shock = OutlierSpec("MTC", t0=150, w=(5.0, -5.0), eta=0.99)
    out = contaminate_mtc(base, shock)
    np.testing.assert_array_equal(out.values[:149], base.values[:149])
    np.testing.assert_allclose(out.values[149], base.values[149] + [5, -5])
    assert 5 * 0.99 ** 100 == pytest.approx(1.83, abs=0.005)
    np.testing.assert_allclose(out.values[249] - base.values[149], [5 * 0.99 ** 100, -5 * 0.99 ** 100])
    moved = contaminate_mtc(base, shock, transitory=True)
    np.testing.assert_allclose(moved.values[249] - base.values[249], [5 * 0.99 ** 100, -5 * 0.99 ** 100])


def test_mtc_zero_size_separates_readings():
    base = MTSeries(np.random.default_rng(1).normal(size=(40, 2)))
    zero = OutlierSpec("MTC", t0=20, w=(0.0, 0.0))
    frozen = contaminate_mtc(base, zero).values
    assert np.all(frozen[19:] == base.values[19])
    np.testing.assert_array_equal(contaminate_mtc(base, zero, transitory=True).values, base.values)
    with pytest.raises(ConfigError):
        contaminate_mtc(base, OutlierSpec("MTC", t0=41, w=(1.0, 1.0)))


def test_mio_prefix_and_no_op():
    spec = BASE_PROCESSES["2"][0][1]
    clean = simulate(spec, 400, 9)
    dirty = contaminate_mio(spec, OutlierSpec("MIO", t0=200, law=InnovationSpec("chi2", 3.0)), 400, 9)
    np.testing.assert_array_equal(dirty.values[:199], clean.values[:199])
    assert not np.array_equal(dirty.values[199:], clean.values[199:])
    same = contaminate_mio(spec, OutlierSpec("MIO", t0=200, law=spec.innovation), 400, 9)
    np.testing.assert_array_equal(same.values, clean.values)


def test_mio_chi_square_moments():
    out = contaminate_mio(white_noise(), OutlierSpec("MIO", t0=1001, law=InnovationSpec("chi2", 3.0)), 201_000, 4)
    post = out.values[1000:]
    assert np.all(np.abs(post.mean(axis=0) - 3.0) < 0.03)
    assert np.all(np.abs(post.var(axis=0) - 6.0) < 0.15)


def test_fractional_chi_square():
    draws = draw_innovations(InnovationSpec("chi2", 0.3), np.random.default_rng(2), 400_000)
    assert np.all(draws >= 0)
    assert np.all(np.abs(draws.mean(axis=0) - 0.3) < 0.01)


def test_gaussian_moments():
    z = draw_innovations(InnovationSpec(), np.random.default_rng(3), 1_000_000)
    assert np.all(np.abs(z.mean(axis=0)) < 0.01)
    assert np.max(np.abs(np.cov(z.T) - np.eye(2))) < 0.02


def test_t3_heavy_tails():
    z = draw_innovations(InnovationSpec("t", 3.0), np.random.default_rng(4), 1_000_000)
    assert np.all(stats.kurtosis(z, axis=0) > 6)
    assert InnovationSpec.parse("t3") == InnovationSpec("t", 3.0)
    assert InnovationSpec.parse("chi2:0.3") == InnovationSpec("chi2", 0.3)
    with pytest.raises(ConfigError):
        InnovationSpec.parse("cauchy")


@pytest.mark.parametrize(
    "name, n, outliers",
    [("1.1", 11, ["varma"]), ("1.2", 12, ["varma", "nar"]), ("2.2", 12, ["nar", "var01"]), ("3.2", 12, ["wn", "bl"]), ("MTC2", 11, ["mtc"]), ("MIO3", 11, ["mio"])],
)
def test_scenario_composition(name, n, outliers):
    sc = build_scenario(name, 100, 0)
    assert sc.dataset.n == n == len(sc.labels)
    assert sc.outlier_indices == tuple(range(10, n))
    assert [sc.dataset.ids[i].removeprefix("outlier_") for i in sc.outlier_indices] == outliers
    assert sc.labels[:10] == (1,) * 5 + (2,) * 5
    assert all(sc.labels[i] == OUTLIER for i in sc.outlier_indices)


def test_mtc_scenario_uses_first_process():
    sc = build_scenario("MTC2", 200, 7)
    assert sc.dataset.ids[:5] == ["expar_1", "expar_2", "expar_3", "expar_4", "expar_5"]
    with pytest.raises(ConfigError):
        build_scenario("4.1", 100, 0)


def test_scenarios_deterministic_and_exportable(tmp_path):
    a = build_scenario("3.1", 120, 5)
    b = build_scenario("3.1", 120, 5)
    assert all(s == t for s, t in zip(a.dataset, b.dataset))
    out = write_scenario(a, tmp_path / "sc")
    truth = json.loads((out / "truth.json").read_text())
    assert truth["outlier_wn"] == "outlier" and truth["bekk1_1"] == 1


def test_pool_labels():
    ds, labels = build_pool("2.2", 60, 0, per_process=3)
    assert ds.n == 12 and labels.count("nar") == 3
