import json

import numpy as np
import pytest

from hartreelab import (
    Field,
    GaussianProfile,
    Grid,
    KernelSpec,
    ModeFamily,
    SweepConfig,
    error_report,
    expected_rate,
    fit_rate,
    persist,
    read_records_csv,
    run_sweep,
    validate_suite,
)


@pytest.fixture
def small_config(tmp_path):
    grid = Grid(d=1, length=32.0, points=1024)
    kernel = KernelSpec(d=1, gamma=0.5, coupling=1.0)
    family = ModeFamily.from_profiles(
        grid,
        [
            ([-2.0], GaussianProfile(amplitude=1.0, center=(0.0,), width=1.0)),
            ([2.0], GaussianProfile(amplitude=1.0, center=(0.0,), width=1.0)),
        ],
        gamma=0.5,
    )
    return SweepConfig(
        grid=grid,
        kernel=kernel,
        family=family,
        epsilons=(0.2, 0.1),
        final_time=0.2,
        sample_times=(0.1, 0.2),
        output=str(tmp_path / "out"),
    )


class TestExpectedRate:
    def test_schrodinger_poisson_case(self):
        assert expected_rate(3, 1.0) == 1.0

    def test_half_power_1d(self):
        assert expected_rate(1, 0.5) == 0.5

    def test_2d_saturates_at_one(self):
        assert expected_rate(2, 0.5) == 1.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            expected_rate(1, 1.5)


class TestErrorReport:
    def test_identical_fields(self, gaussian_field):
        rep = error_report(gaussian_field, gaussian_field)
        assert rep.l2 == rep.wiener == rep.l2w == 0

    def test_zero_approximation(self, gaussian_field, grid1d):
        zero = Field(grid1d, np.zeros(grid1d.shape))
        rep = error_report(gaussian_field, zero)
        from hartreelab import l2_norm, wiener_norm

        assert rep.l2 == pytest.approx(l2_norm(gaussian_field))
        assert rep.wiener == pytest.approx(wiener_norm(gaussian_field))

    def test_grid_mismatch_rejected(self, gaussian_field):
        other = Grid(d=1, length=32.0, points=512)
        with pytest.raises(ValueError, match="grids"):
            error_report(gaussian_field, Field(other, np.zeros(other.shape)))


class TestFitRate:
    def test_two_point_slope(self):
        fit = fit_rate([(0.1, 0.01), (0.05, 0.005)])
        assert fit.slope == pytest.approx(1.0, abs=1e-12)

    def test_exact_power_law(self):
        c = 0.37
        pts = [(e, c * e**0.5) for e in (0.1, 0.05, 0.025)]
        fit = fit_rate(pts)
        assert fit.slope == pytest.approx(0.5, abs=1e-12)
        assert fit.residual < 1e-12

    def test_noisy_power_law(self):
        rng = np.random.default_rng(41)
        truth = 0.8
        pts = [
            (e, 2.0 * e**truth * (1 + 0.01 * rng.uniform(-1, 1)))
            for e in np.geomspace(0.2, 0.01, 12)
        ]
        fit = fit_rate(pts)
        assert abs(fit.slope - truth) < 0.02

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="positive"):
            fit_rate([(0.1, 0.0), (0.05, 0.005)])

    def test_rejects_single_point(self):
        with pytest.raises(ValueError, match="two points"):
            fit_rate([(0.1, 0.01)])


class TestSweepConfig:
    def test_rejects_increasing_epsilons(self, small_config):
        with pytest.raises(ValueError, match="decreasing"):
            SweepConfig(
                grid=small_config.grid,
                kernel=small_config.kernel,
                family=small_config.family,
                epsilons=(0.1, 0.2),
                final_time=0.2,
                sample_times=(0.2,),
            )

    def test_rejects_sample_after_final_time(self, small_config):
        with pytest.raises(ValueError, match="sample times"):
            SweepConfig(
                grid=small_config.grid,
                kernel=small_config.kernel,
                family=small_config.family,
                epsilons=(0.2, 0.1),
                final_time=0.2,
                sample_times=(0.3,),
            )

    def test_rejects_unresolvable_epsilon(self, small_config):
        with pytest.raises(Exception, match="lattice frequency"):
            SweepConfig(
                grid=small_config.grid,
                kernel=small_config.kernel,
                family=small_config.family,
                epsilons=(0.2, 0.01),
                final_time=0.2,
                sample_times=(0.2,),
            )


class TestRunSweep:
    def test_degenerate_free_single_mode(self):
        # zero coupling, zero wavevector, tiny horizon: the integrator
        # must match the frozen envelope to splitting tolerance
        grid = Grid(d=1, length=32.0, points=256)
        kernel = KernelSpec(d=1, gamma=0.5, coupling=0.0)
        family = ModeFamily.from_profiles(
            grid,
            [([0.0], GaussianProfile(amplitude=1.0, center=(0.0,), width=1.0))],
            gamma=0.5,
        )
        horizon = 1e-8
        cfg = SweepConfig(
            grid=grid,
            kernel=kernel,
            family=family,
            epsilons=(0.2, 0.1, 0.05),
            final_time=horizon,
            sample_times=(horizon,),
        )
        result = run_sweep(cfg)
        assert all(r.err_l2w < 1e-8 for r in result.records)

    def test_two_epsilon_sweep_records_and_fit(self, small_config):
        result = run_sweep(small_config)
        assert len(result.records) == 4  # 2 eps x 2 sample times
        assert result.beta_expected == 0.5
        assert result.beta_fitted is not None
        assert result.checks["initial_exactness"].passed
        assert not result.failures

    def test_single_epsilon_gives_no_fit(self, small_config):
        cfg = SweepConfig(
            grid=small_config.grid,
            kernel=small_config.kernel,
            family=small_config.family,
            epsilons=(0.2,),
            final_time=0.2,
            sample_times=(0.2,),
        )
        result = run_sweep(cfg)
        assert result.beta_fitted is None
        assert result.c_fitted is None

    def test_divergent_epsilon_marked_not_fatal(self):
        # a violently attractive coupling trips the stability guard for
        # every eps; the sweep must record the failures and carry on
        grid = Grid(d=1, length=32.0, points=2048)
        kernel = KernelSpec(d=1, gamma=0.5, coupling=-5e4)
        family = ModeFamily.from_profiles(
            grid,
            [([0.0], GaussianProfile(amplitude=5.0, center=(0.0,), width=1.0))],
            gamma=0.5,
        )
        cfg = SweepConfig(
            grid=grid,
            kernel=kernel,
            family=family,
            epsilons=(1.0, 0.5),
            final_time=2.0,
            sample_times=(2.0,),
        )
        result = run_sweep(cfg)
        assert set(result.failures) == {1.0, 0.5}
        assert result.records == ()
        assert result.beta_fitted is None

    def test_threaded_matches_sequential(self, small_config):
        seq = run_sweep(small_config)
        par_cfg = SweepConfig(
            grid=small_config.grid,
            kernel=small_config.kernel,
            family=small_config.family,
            epsilons=small_config.epsilons,
            final_time=small_config.final_time,
            sample_times=small_config.sample_times,
            output=small_config.output,
            threads=2,
        )
        par = run_sweep(par_cfg)
        for a, b in zip(seq.records, par.records):
            assert a == b


class TestValidateSuite:
    def test_default_passes(self, small_config):
        checks = validate_suite(small_config, algebra_pairs=50, hartree_pairs=25)
        for name, outcome in checks.items():
            assert outcome.passed, f"{name}: {outcome.detail}"

    def test_kernel_fault_detected(self, small_config):
        checks = validate_suite(
            small_config,
            algebra_pairs=5,
            hartree_pairs=5,
            fault_kernel_constant=True,
        )
        assert not checks["kernel_constant"].passed


class TestPersist:
    def test_artifacts_written(self, small_config, tmp_path):
        result = run_sweep(small_config)
        paths = persist(result, tmp_path / "artifacts")
        for p in paths.values():
            assert p.is_file()

    def test_csv_round_trip_bit_exact(self, small_config, tmp_path):
        result = run_sweep(small_config)
        paths = persist(result, tmp_path / "artifacts")
        back = read_records_csv(paths["csv"])
        assert len(back) == len(result.records)
        for a, b in zip(result.records, back):
            for col in ("eps", "t", "err_l2", "err_w", "err_l2w",
                        "r_norm", "z2_norm", "mass_drift"):
                assert getattr(a, col) == getattr(b, col)

    def test_empty_records_header_only(self, small_config, tmp_path):
        from hartreelab import SweepResult

        empty = SweepResult(
            records=(),
            beta_expected=0.5,
            beta_fitted=None,
            c_fitted=None,
            fit_residual=None,
            checks={},
            failures={},
            config=small_config,
        )
        paths = persist(empty, tmp_path / "empty")
        lines = paths["csv"].read_text().splitlines()
        assert len(lines) == 1
        summary = json.loads(paths["json"].read_text())
        assert summary["beta_fitted"] is None
        assert summary["c_fitted"] is None

    def test_svg_structure(self, small_config, tmp_path):
        result = run_sweep(small_config)
        paths = persist(result, tmp_path / "artifacts")
        svg = paths["svg"].read_text()
        assert svg.startswith("<?xml")
        assert 'version="1.1"' in svg
        assert svg.count("<polyline") == len(small_config.sample_times)
        assert svg.count("<line") == 1
        assert "http://" not in svg.replace("http://www.w3.org/2000/svg", "")

    def test_json_summary_keys(self, small_config, tmp_path):
        result = run_sweep(small_config)
        paths = persist(result, tmp_path / "artifacts")
        summary = json.loads(paths["json"].read_text())
        for key in ("config_echo", "beta_expected", "beta_fitted",
                    "c_fitted", "fit_residual", "checks"):
            assert key in summary
        assert summary["config_echo"]["dimension"] == 1
        assert summary["config_echo"]["points"] == 1024
        for outcome in summary["checks"].values():
            assert set(outcome) == {"pass", "margin"}

    def test_deterministic_artifacts(self, small_config, tmp_path):
        r1 = run_sweep(small_config)
        r2 = run_sweep(small_config)
        p1 = persist(r1, tmp_path / "a")
        p2 = persist(r2, tmp_path / "b")
        for kind in ("csv", "json", "svg"):
            assert p1[kind].read_bytes() == p2[kind].read_bytes()
