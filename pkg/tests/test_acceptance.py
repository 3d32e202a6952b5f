"""End-to-end acceptance suite.

Each test prints one PASS/FAIL line (visible with `pytest -s`) and then
asserts the same condition, so the suite is both a report and a gate.
The Monte-Carlo studies run at desk scale with fixed seeds.
"""

import math

import numpy as np
import pytest
from scipy import stats

import monohaz as mh
from monohaz._rng import derive_seed
from monohaz.cli import main
from monohaz.gof import TestConfig
from monohaz.harness import StudyConfig, run_study
from monohaz.limits import ArgmaxMCConfig, estimate_constants, scaled_lp_error

pytestmark = pytest.mark.filterwarnings("ignore::UserWarning")


def report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)


# ---------------------------------------------------------------- fixtures

@pytest.fixture(scope="module")
def level_rows():
    scen = mh.Scenario(
        baseline=mh.WeibullBaseline(1.0, 0.5), beta=(0.5,), censor_tau=3.5,
        window=(0.5, 2.5), n=500,
    )
    cfg = TestConfig(window=(0.5, 2.5), B=199)
    study = StudyConfig(
        scenario=scen, cfg=cfg, n_list=(500,), outer_reps=200,
        master_seed=20260810, stats=("T",),
    )
    return run_study(study)


@pytest.fixture(scope="module")
def power_rows():
    scen = mh.Scenario(
        baseline=mh.AltABaseline(1.0), beta=(0.5,), censor_tau=6.0,
        window=(0.1, 5.0), n=500,
    )
    cfg = TestConfig(window=(0.1, 5.0), B=199)
    study = StudyConfig(
        scenario=scen, cfg=cfg, n_list=(500, 1000), outer_reps=200,
        master_seed=7, stats=("T",),
    )
    return run_study(study)


@pytest.fixture(scope="module")
def ordering_rows():
    scen = mh.Scenario(
        baseline=mh.AltBBaseline(1.0), beta=(0.5,), censor_tau=1.3,
        window=(0.1, 1.1), n=1000,
    )
    cfg = TestConfig(window=(0.1, 1.1), B=199, split_ratio=0.5)
    study = StudyConfig(
        scenario=scen, cfg=cfg, n_list=(1000,), outer_reps=200,
        master_seed=101, stats=("T", "LR", "S"),
    )
    return {row.statistic: row for row in run_study(study)}


@pytest.fixture(scope="module")
def limit_constants():
    cfg = ArgmaxMCConfig(half_width=6.0, step=0.01, reps=30_000, a_max=4.0, a_step=0.1)
    return estimate_constants(1.0, cfg, seed=2)


# -------------------------------------------------------- cheap criteria

class TestEstimatorOracles:
    def test_grenander_matches_chord_envelope(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            k = int(rng.integers(1, 49))
            jt = np.unique(rng.uniform(0.02, 4.0, k))
            lam = mh.StepCumHazard(jt, np.cumsum(rng.exponential(0.25, jt.size)))
            window = (0.0, float(jt[-1] + rng.uniform(0.05, 0.5)))
            est = mh.grenander(lam, window)
            xs = np.concatenate(([window[0]], jt, [window[1]]))
            ys = lam(xs)
            grid = np.union1d(np.linspace(*window, 101), xs)
            hull = np.interp(grid, est.knots, est.heights)
            envelope = np.full_like(grid, -np.inf)
            for i in range(xs.size):
                right = xs[i:]
                dx = right - xs[i]
                for j in range(1, right.size):
                    inside = (grid >= xs[i]) & (grid <= right[j])
                    frac = (grid[inside] - xs[i]) / dx[j]
                    envelope[inside] = np.maximum(
                        envelope[inside], ys[i] + frac * (ys[i + j] - ys[i])
                    )
            envelope = np.maximum(envelope, np.interp(grid, xs, ys))
            worst = max(worst, float(np.max(np.abs(hull - envelope))))
        ok = worst <= 1e-10
        report("grenander-envelope-oracle", ok, f"max |hull - envelope| = {worst:.2e}")
        assert ok

    def test_breslow_matches_direct_sum(self):
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(5, 30))
            time = np.maximum(np.round(rng.exponential(1.0, n), 2), 0.01)  # ties
            status = rng.integers(0, 2, n)
            if status.sum() == 0:
                status[0] = 1
            z = rng.normal(0, 1, (n, 1))
            data = mh.Dataset(time, status, z)
            beta = np.array([rng.uniform(-0.8, 0.8)])
            lam = mh.breslow(data, beta)
            for x in np.concatenate((np.unique(time), [0.0, time.max() + 1.0])):
                direct = 0.0
                for i in range(n):
                    if status[i] == 1 and time[i] <= x:
                        direct += 1.0 / np.exp(z[time >= time[i]] @ beta).sum()
                worst = max(worst, abs(float(lam(x)) - direct))
        ok = worst <= 1e-12
        report("breslow-direct-sum-oracle", ok, f"max abs diff = {worst:.2e}")
        assert ok


class TestSwitchingRelation:
    def test_zero_violations(self):
        rng = np.random.default_rng(55)
        violations = 0
        for _ in range(200):
            k = int(rng.integers(1, 40))
            jt = np.unique(rng.uniform(0.05, 3.0, k))
            lam = mh.StepCumHazard(jt, np.cumsum(rng.exponential(0.3, jt.size)))
            window = (float(rng.uniform(0.0, 0.04)), float(jt[-1] + 0.2))
            est = mh.grenander(lam, window)
            a_grid = rng.uniform(0.0, float(est.slopes[0]) * 1.2 + 0.3, 20)
            t_grid = np.concatenate(
                [rng.uniform(window[0] + 1e-9, window[1], 30), est.knots[1:]]
            )
            for a in a_grid:
                u = mh.inverse_process(lam, a, window)
                violations += int(
                    np.count_nonzero((est(t_grid) >= a) != (u >= t_grid))
                )
        ok = violations == 0
        report("switching-relation", ok, f"violations = {violations}")
        assert ok


class TestGradientChecks:
    def test_cox_gradient(self):
        scen = mh.Scenario(
            baseline=mh.WeibullBaseline(1.0, 0.5), beta=(0.5, -0.2),
            censor_tau=3.5, window=(0.5, 2.5), n=60,
        )
        data = mh.sample(scen, 33)
        rng = np.random.default_rng(17)
        h = 1e-6
        worst = 0.0
        for _ in range(20):
            beta = rng.uniform(-1.0, 1.0, 2)
            grad = mh.partial_likelihood_gradient(data, beta)
            for k in range(2):
                e = np.zeros(2)
                e[k] = h
                fd = (
                    mh.log_partial_likelihood(data, beta + e)
                    - mh.log_partial_likelihood(data, beta - e)
                ) / (2 * h)
                worst = max(worst, abs(grad[k] - fd) / max(1e-8, abs(fd)))
        ok = worst <= 1e-5
        report("cox-gradient-fd", ok, f"max rel err = {worst:.2e}")
        assert ok

    def test_weibull_gradient(self):
        scen = mh.Scenario(
            baseline=mh.WeibullBaseline(1.0, 0.7), beta=(0.5,), censor_tau=4.0,
            window=(0.5, 2.5), n=60,
        )
        data = mh.sample(scen, 14)
        rng = np.random.default_rng(91)
        h = 1e-6
        worst = 0.0
        for _ in range(20):
            mu, nu, b = rng.uniform(0.4, 1.8), rng.uniform(0.3, 1.4), rng.uniform(-1, 1)
            grad = mh.weibull_loglik_gradient(data, mh.WeibullTheta(mu, nu, (b,)))
            probes = [
                (mh.WeibullTheta(mu - h, nu, (b,)), mh.WeibullTheta(mu + h, nu, (b,))),
                (mh.WeibullTheta(mu, nu - h, (b,)), mh.WeibullTheta(mu, nu + h, (b,))),
                (mh.WeibullTheta(mu, nu, (b - h,)), mh.WeibullTheta(mu, nu, (b + h,))),
            ]
            for k, (lo, hi) in enumerate(probes):
                fd = (mh.weibull_loglik(data, hi) - mh.weibull_loglik(data, lo)) / (2 * h)
                worst = max(worst, abs(grad[k] - fd) / max(1e-8, abs(fd)))
        ok = worst <= 1e-5
        report("weibull-gradient-fd", ok, f"max rel err = {worst:.2e}")
        assert ok


class TestSamplingLaws:
    @pytest.mark.parametrize(
        "baseline",
        [mh.WeibullBaseline(1.0, 0.5), mh.AltABaseline(1.0), mh.AltBBaseline(1.0)],
        ids=["weibull", "alt_a", "alt_b"],
    )
    def test_inverse_sampling_exponential(self, baseline):
        scen = mh.Scenario(
            baseline=baseline, beta=(0.5,), censor_tau=1e18,
            window=(0.1, 1.0), n=100_000,
        )
        data = mh.sample(scen, 5)
        e = baseline.cum_hazard(data.time) * np.exp(0.5 * data.covariates[:, 0])
        ks = stats.kstest(e, "expon").statistic
        ok = ks < 0.01
        report(f"inverse-sampling-{baseline.kind}", ok, f"KS = {ks:.4f}")
        assert ok

    def test_uncensored_fraction(self):
        scen = mh.Scenario(
            baseline=mh.WeibullBaseline(5.0, 0.5), beta=(0.5,), censor_tau=0.7,
            window=(0.1, 0.5), n=100_000,
        )
        frac = float(mh.sample(scen, 11).status.mean())
        ok = abs(frac - 0.75) <= 0.02
        report("uncensored-fraction", ok, f"fraction = {frac:.4f}")
        assert ok


# ----------------------------------------------------- Monte-Carlo criteria

class TestLevelReproduction:
    def test_level_within_band(self, level_rows):
        rate = level_rows[0].rejection_rate
        ok = 0.013 <= rate <= 0.097
        report(
            "level-reproduction", ok,
            f"rate = {rate:.3f} +- {level_rows[0].stderr:.3f}, band [0.013, 0.097]",
        )
        assert ok


class TestPowerReproduction:
    def test_power_above_half_and_monotone(self, power_rows):
        by_n = {row.n: row.rejection_rate for row in power_rows}
        ok = by_n[1000] > 0.5 and by_n[1000] > by_n[500]
        report(
            "power-reproduction", ok,
            f"rate(500) = {by_n[500]:.3f}, rate(1000) = {by_n[1000]:.3f}",
        )
        assert ok


class TestPowerOrdering:
    def test_t_not_dominated(self, ordering_rows):
        t = ordering_rows["T"]
        ok = True
        details = [f"T = {t.rejection_rate:.3f}"]
        for other in ("LR", "S"):
            row = ordering_rows[other]
            slack = 2.0 * math.hypot(t.stderr, row.stderr)
            ok = ok and t.rejection_rate >= row.rejection_rate - slack
            details.append(f"{other} = {row.rejection_rate:.3f} (slack {slack:.3f})")
        report("power-ordering", ok, ", ".join(details))
        assert ok


class TestExpectationScaling:
    def test_factor_two_between_sizes(self):
        scen = mh.Scenario(
            baseline=mh.WeibullBaseline(1.0, 0.1), beta=(0.5,), censor_tau=7.0,
            window=(0.5, 4.5), n=500,
        )
        lo, hi = scen.window
        trim = 0.15 * (hi - lo)
        interior = (lo + trim, hi - trim)
        means = {}
        for n in (1000, 4000):
            vals = [
                scaled_lp_error(
                    mh.sample(scen.with_n(n), derive_seed(314, n, r)),
                    scen.baseline, scen.window, 1.0, eval_window=interior,
                )
                for r in range(100)
            ]
            means[n] = float(np.mean(vals))
        ratio = means[4000] / means[1000]
        ok = 0.5 < ratio < 2.0
        report(
            "expectation-scaling", ok,
            f"n^(1/3) E[J]: {means[1000]:.4f} -> {means[4000]:.4f}, ratio {ratio:.3f}",
        )
        assert ok


class TestCltSanity:
    def test_standardized_error_moments(self, limit_constants):
        # steep-hazard registry scenario; the interior margin excludes
        # the O(n^(-1/3)) boundary layers whose contribution decays too
        # slowly to see the Gaussian limit at n = 5000 (band frozen
        # after pilot runs at margins 0.10-0.20, seeds 5/71/2024)
        scen = mh.Scenario(
            baseline=mh.WeibullBaseline(1.0, 0.1), beta=(0.5,), censor_tau=7.0,
            window=(0.5, 4.5), n=500,
        )
        rep = mh.clt_check(
            scen, 1.0, n=5000, reps=300, seed=71,
            constants=limit_constants, interior_margin=0.15,
        )
        ok = -0.3 <= rep.mean_z <= 0.3 and 0.5 <= rep.var_z <= 2.0
        report(
            "clt-sanity", ok,
            f"mean_z = {rep.mean_z:+.3f} (band +-0.3), "
            f"var_z = {rep.var_z:.3f} (band [0.5, 2.0]), "
            f"KS p = {rep.ks_pvalue:.3f}",
        )
        assert ok


class TestCliDeterminism:
    def _run(self, capsys, argv):
        code = main(argv)
        out = capsys.readouterr().out
        assert code == 0
        return out

    def test_all_commands_reproducible(self, capsys, tmp_path):
        data_csv = tmp_path / "d.csv"
        sim_argv = [
            "simulate", "--scenario", "weibull:1,0.5", "--beta", "0.5",
            "--tau", "3.5", "--eps", "0.5", "--M", "2.5", "--n", "90",
            "--seed", "9",
        ]
        sims = {self._run(capsys, sim_argv) for _ in range(2)}
        data_csv.write_text(next(iter(sims)))

        fits = {self._run(capsys, ["fit", str(data_csv)]) for _ in range(2)}
        grens = {
            self._run(
                capsys, ["grenander", str(data_csv), "--eps", "0.5", "--M", "2.5"]
            )
            for _ in range(2)
        }
        limits_argv = [
            "limits", "--p", "1", "--reps", "1500", "--step", "0.05",
            "--half-width", "5", "--seed", "4",
        ]
        lims = {self._run(capsys, limits_argv) for _ in range(2)}

        tests = set()
        for threads in ("1", "4", "8"):
            tests.add(
                self._run(
                    capsys,
                    ["test", str(data_csv), "--stat", "T", "--eps", "0.5",
                     "--M", "2.5", "--B", "24", "--seed", "5",
                     "--threads", threads],
                )
            )
        tables = set()
        for threads in ("1", "4", "8"):
            out_dir = tmp_path / f"tables{threads}"
            self._run(
                capsys,
                ["tables", "--scale", "desk", "--out", str(out_dir),
                 "--n-list", "40", "--N", "2", "--B", "20", "--seed", "3",
                 "--threads", threads],
            )
            tables.add(
                "".join(
                    sorted(
                        p.name + p.read_text() for p in out_dir.glob("*.csv")
                    )
                )
            )
        counts = {
            "simulate": len(sims), "fit": len(fits), "grenander": len(grens),
            "limits": len(lims), "test": len(tests), "tables": len(tables),
        }
        ok = all(v == 1 for v in counts.values())
        report("cli-determinism", ok, f"distinct outputs per command: {counts}")
        assert ok
