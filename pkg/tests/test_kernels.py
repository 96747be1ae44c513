import numpy as np
import pytest

from covertauction import kernels
from covertauction import _depscan_py


def _draws(n=4000, seed=3):
    rng = np.random.default_rng(seed)
    return rng.exponential(1.0, n), rng.exponential(1.0, n)


def _dense_grid_oracle(hwm, hwg, c1, c2, sigma2, points=1000, quantile=0.999):
    """Brute-force dep minimization on a dense log grid (independent path)."""
    y1 = np.sort(sigma2 + c2 * hwg)
    y2 = np.sort(y1 + c1 * hwm)
    n = len(y1)
    hi = y2[min(n - 1, int(quantile * n))]
    lo = sigma2 * (1.0 + 1e-6)
    eps = np.exp(np.linspace(np.log(lo), np.log(hi), points))
    fa = n - np.searchsorted(y1, eps, side="right")
    md = np.searchsorted(y2, eps, side="left")
    dep = (fa + md) / n
    k = int(np.argmin(dep))
    return float(dep[k]), float(eps[k])


def test_scan_beats_or_matches_dense_grid():
    hwm, hwg = _draws()
    for c1, c2 in [(5.0, 0.5), (1.0, 1.0), (0.2, 4.0), (3.0, 0.0)]:
        dep, eps, pfa, pmd = kernels.optimal_dep(
            hwm, hwg, c1, c2, 0.01, 64, 0.999, 1e-3
        )
        oracle_dep, _ = _dense_grid_oracle(hwm, hwg, c1, c2, 0.01)
        n = len(hwm)
        stderr = np.sqrt(dep * max(1.0 - dep, 1e-12) / n) + 1e-12
        assert dep <= oracle_dep + 2 * stderr
        assert dep == pytest.approx(pfa + pmd, abs=1e-12)
        assert 0.0 <= dep <= 2.0


def test_scan_monotone_extremes():
    hwm, hwg = _draws()
    sigma2 = 1e-4
    # no jamming, strong direct link: detection nearly perfect
    dep0, *_ = kernels.optimal_dep(hwm, hwg, 1.0, 0.0, sigma2, 64, 0.999, 1e-3)
    assert dep0 < 0.05
    # jamming swamps the direct link: detection nearly blind
    dep1, *_ = kernels.optimal_dep(hwm, hwg, 1e-4, 10.0, sigma2, 64, 0.999, 1e-3)
    assert dep1 > 0.9


def test_invalid_inputs():
    hwm, hwg = _draws(100)
    with pytest.raises(ValueError):
        kernels.optimal_dep(hwm, hwg, 1.0, 1.0, 0.0, 64, 0.999, 1e-3)
    with pytest.raises(ValueError):
        kernels.optimal_dep(hwm, hwg, -1.0, 1.0, 0.1, 64, 0.999, 1e-3)
    with pytest.raises(ValueError):
        kernels.optimal_dep(np.array([]), np.array([]), 1.0, 1.0, 0.1, 64, 0.999, 1e-3)
    # both scales zero leaves no threshold range above the noise floor
    with pytest.raises(ValueError):
        kernels.optimal_dep(hwm, hwg, 0.0, 0.0, 0.1, 64, 0.999, 1e-3)


def test_batch_matches_single():
    hwm, hwg = _draws(2000, seed=11)
    c1s = np.array([4.0, 0.3, 1.0])
    c2s = np.array([0.1, 2.0, 1.0])
    deps, epss = kernels.optimal_dep_batch(hwm, hwg, c1s, c2s, 0.05, 64, 0.999, 1e-3)
    for i in range(3):
        dep, eps, *_ = kernels.optimal_dep(
            hwm, hwg, float(c1s[i]), float(c2s[i]), 0.05, 64, 0.999, 1e-3
        )
        assert deps[i] == dep
        assert epss[i] == eps


@pytest.mark.skipif(
    "compiled" not in kernels.available_backends(),
    reason="compiled kernel not built",
)
def test_backends_bit_identical():
    rng = np.random.default_rng(17)
    for trial in range(8):
        n = int(rng.integers(50, 3000))
        hwm = rng.gamma(rng.uniform(0.5, 3.0), 1.0, n) * rng.uniform(0.1, 5.0)
        hwg = rng.gamma(rng.uniform(0.5, 3.0), 1.0, n) * rng.uniform(0.1, 5.0)
        c1 = float(rng.uniform(0.0, 5.0))
        c2 = float(rng.uniform(0.0, 5.0))
        sigma2 = float(rng.uniform(1e-6, 0.5))
        args = (hwm, hwg, c1, c2, sigma2, 64, 0.999, 1e-3)
        try:
            with kernels.use_backend("python"):
                res_py = kernels.optimal_dep(*args)
        except ValueError:
            with pytest.raises(ValueError), kernels.use_backend("compiled"):
                kernels.optimal_dep(*args)
            continue
        with kernels.use_backend("compiled"):
            res_cy = kernels.optimal_dep(*args)
        assert res_py == res_cy  # exact, not approximate


@pytest.mark.skipif(
    "compiled" not in kernels.available_backends(),
    reason="compiled kernel not built",
)
def test_batch_backends_bit_identical():
    hwm, hwg = _draws(1500, seed=5)
    c1s = np.geomspace(0.01, 10.0, 12)
    c2s = np.geomspace(10.0, 0.01, 12)
    with kernels.use_backend("python"):
        d_py, e_py = kernels.optimal_dep_batch(hwm, hwg, c1s, c2s, 0.02, 64, 0.999, 1e-3)
    with kernels.use_backend("compiled"):
        d_cy, e_cy = kernels.optimal_dep_batch(hwm, hwg, c1s, c2s, 0.02, 64, 0.999, 1e-3)
    np.testing.assert_array_equal(d_py, d_cy)
    np.testing.assert_array_equal(e_py, e_cy)


def test_pure_backend_always_available():
    assert "python" in kernels.available_backends()
    with kernels.use_backend("python"):
        assert kernels.backend_name() == "python"
