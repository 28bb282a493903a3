import math
from dataclasses import replace

import numpy as np
import pytest

from ppcm import sweep_lab as sl
from ppcm.errors import DomainError
from ppcm.phase_model import ModelParams
from ppcm.shot_simulator import NoiseParams

HALF_PI = math.pi / 2


class TestSurface:
    def test_plateau_node(self):
        rows = sl.fi_surface(5e4, [1e-12], [0.1], kappa=1)
        # the exact ratio is sin^2(psi + g) / sin^2(psi), a hair above 1
        assert 0.99 <= rows[0]["f_p"] / 5e4**2 <= 1.0 + 1e-9

    def test_decayed_nodes(self):
        rows = sl.fi_surface(5e4, [0.02, 0.05, 0.3], np.linspace(-3, 3, 25))
        assert all(r["f_p"] < 1e-3 * 5e4**2 for r in rows)

    def test_periodic_in_epsilon(self):
        g = np.logspace(-12, -1, 12)
        a = sl.fi_surface(5e4, g, [0.1, 0.3])
        b = sl.fi_surface(5e4, g, [0.1 + 2 * math.pi, 0.3 + 2 * math.pi])
        for u, v in zip(a, b):
            assert u["log10_f_p"] == pytest.approx(v["log10_f_p"], rel=1e-6, abs=1e-6)

    def test_every_cell_finite(self):
        rows = sl.fi_surface(5e4, np.logspace(-12, -0.3, 60), np.linspace(-math.pi, math.pi, 30))
        assert all(math.isfinite(v) for r in rows for v in r.values())

    def test_empty(self):
        with pytest.raises(DomainError):
            sl.fi_surface(5e4, [], [0.1])


class TestDelayScan:
    delays = [float(d) for d in range(-1500, 1501, 100)]
    base = ModelParams()

    def test_peak_at_zero(self):
        rows = sl.delay_scan(self.delays, 7.92e-8, [5e4, 1e5, 2e5], self.base, exact=True)
        peaks = set()
        for n in (5e4, 1e5, 2e5):
            sub = [r for r in rows if r["n"] == n]
            peaks.add(max(sub, key=lambda r: r["p_hat"])["delay_fs"])
            fit = sl.fit_delay_peak([r["delay_fs"] for r in sub], [r["p_hat"] for r in sub])
            assert abs(fit["centre"]) < 1.0
        assert peaks == {0.0}

    def test_far_baseline(self):
        rows = sl.delay_scan([-1e5, 1e5], 7.92e-8, [1e5], self.base, exact=True)
        for r in rows:
            assert r["p_hat"] == pytest.approx((1 - math.cos(0.1)) / 2, rel=1e-12)

    def test_monte_carlo_deterministic(self):
        a = sl.delay_scan(self.delays[::5], 7.92e-8, [1e5], self.base, nu=3, n_total=10**5, master_seed=4)
        b = sl.delay_scan(self.delays[::5], 7.92e-8, [1e5], self.base, nu=3, n_total=10**5, master_seed=4)
        assert a == b

    def test_single_width_from_fit(self):
        assert sl.infer_single_fwhm(math.hypot(150.0, 480.0)) == pytest.approx(480.0, rel=1e-12)
        with pytest.raises(DomainError):
            sl.infer_single_fwhm(100.0)


class TestScaling:
    n_list = list(sl.DEFAULT_N_LIST)
    g_grid = list(sl.DEFAULT_G_GRID)

    def test_exact_exponents(self):
        pts = sl.scaling_sweep(self.n_list, self.g_grid, sl.ScalingConfig(mode="exact"))
        assert sl.fit_power_law(pts, "delta_g").exponent == pytest.approx(-1.0, abs=1e-3)
        assert sl.fit_power_law(pts, "f_extracted_per_event").exponent == pytest.approx(2.0, abs=2e-3)
        for p in pts:
            assert p.f_extracted_per_rep == pytest.approx(p.f_extracted * 1e6, rel=1e-12)

    def test_monte_carlo_deterministic(self):
        cfg = sl.ScalingConfig(master_seed=17)
        a = sl.scaling_sweep(self.n_list[:3], self.g_grid, cfg)
        b = sl.scaling_sweep(self.n_list[:3], self.g_grid, cfg)
        assert a == b

    def test_designated_modes(self):
        cfg = sl.ScalingConfig(mode="exact", designated_g=3e-8)
        a = sl.scaling_sweep(self.n_list, self.g_grid, cfg)
        b = sl.scaling_sweep(self.n_list, self.g_grid, replace(cfg, delta_p_mode="designated"))
        for u, v in zip(a, b):
            assert u.delta_p == pytest.approx(v.delta_p, rel=1e-12)

    def test_background_lifts_precision(self):
        n_list = [2e5, 5e5, 1e6, 2e6, 5e6]
        clean = sl.scaling_sweep(n_list, self.g_grid, sl.ScalingConfig(mode="exact"))
        noisy = sl.scaling_sweep(n_list, self.g_grid, sl.ScalingConfig(
            mode="exact", noise=NoiseParams(0.02, 0.5), noise_onset_n=1e6))
        for c, d in zip(clean, noisy):
            if c.n < 1e6:
                assert d.delta_g == c.delta_g
            else:
                assert d.delta_g > c.delta_g

    @pytest.mark.parametrize("n_list, kw", [([1e4, 2e4], {}), ([3e4, 2e4, 5e4], {}),
                                            ([1e4, 2e4, 3e4], {"mode": "fast"})])
    def test_bad_inputs(self, n_list, kw):
        with pytest.raises(DomainError):
            sl.scaling_sweep(n_list, self.g_grid, sl.ScalingConfig(**kw))


class TestTheoryCurve:
    def test_plateau(self):
        rows = sl.theory_curve_large_n(6.1e-8, [1e4, 1e10, 1e12])
        for r in rows:
            assert r["f_p_over_n2"] / 4.0 == pytest.approx(1.0, abs=0.05)

    def test_breakdown(self):
        (r,) = sl.theory_curve_large_n(6.1e-8, [3e14])
        assert r["envelope"] == pytest.approx(math.exp(-4 * 3e14 * math.sin(6.1e-8) ** 2), rel=1e-9)
        assert r["envelope"] < 0.012
        assert r["f_p_over_n2"] < 0.02 * 4.0

    def test_small_g_continuity(self):
        (r,) = sl.theory_curve_large_n(1e-15, [5e4], ModelParams(kappa=1), operating_phase=None)
        surf = sl.fi_surface(5e4, [1e-15], [0.1], kappa=1)[0]
        assert r["f_p"] == pytest.approx(surf["f_p"], rel=1e-12)

    def test_requires_positive_g(self):
        with pytest.raises(DomainError):
            sl.theory_curve_large_n(0.0, [1e4])


class TestPowerLaw:
    def test_exact_inverse(self):
        fit = sl.power_law([10, 100, 1000], [0.1, 0.01, 0.001])
        assert fit.exponent == pytest.approx(-1.0, abs=1e-12)
        assert fit.prefactor == pytest.approx(1.0, rel=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_quadratic_fisher(self):
        n = np.array([2e4, 5e4, 1e5, 2e5, 5e5, 1e6])
        pts = [sl.ScalingPoint(x, 1.2 / x, 0.69 * x * x) for x in n]
        fit = sl.fit_power_law(pts, "f_extracted")
        assert fit.exponent == pytest.approx(2.0, abs=1e-12)
        assert fit.prefactor == pytest.approx(0.69, rel=1e-10)

    def test_continuity(self):
        x = [1.0, 10.0, 100.0, 1000.0]
        base = sl.power_law(x, [1.0, 0.1, 0.01, 0.001]).exponent
        near = sl.power_law(x, [1.0, 0.1, 0.01 * (1 + 1e-9), 0.001]).exponent
        assert abs(near - base) < 1e-8

    def test_errors(self):
        with pytest.raises(DomainError):
            sl.power_law([1, 2], [1, 2])
        with pytest.raises(DomainError):
            sl.power_law([1, 2, 3], [1, -2, 3])
        with pytest.raises(DomainError):
            sl.fit_power_law([sl.ScalingPoint(1, 1, 1)] * 3, "nope")


def test_synthetic_sweep_keyed():
    a = sl.synthetic_epsilon_sweep(6.1e-8, 6e5, [0.05, 0.1, 0.15], 10**6, 5)
    b = sl.synthetic_epsilon_sweep(6.1e-8, 6e5, [0.05, 0.1, 0.15], 10**6, 5)
    c = sl.synthetic_epsilon_sweep(6.1e-8, 6e5, [0.05, 0.1, 0.15], 10**6, 6)
    assert a == b and a != c
