import math

import numpy as np
import pytest

import gaplab


def test_exponents():
    assert gaplab.alpha(3, 2.0) == pytest.approx(math.sqrt(2) - 1, abs=1e-14)
    e = gaplab.exponents(3, 2.0)
    assert e["rate"] == pytest.approx((math.sqrt(2) - 2) / 2, abs=1e-14)
    assert gaplab.alpha_k(3, 2.0, 2) == pytest.approx(math.sqrt(5) - 1, abs=1e-14)
    with pytest.raises(ValueError):
        gaplab.alpha(2, 2.0)


def test_radial_profile():
    g = gaplab.solve_g(1e-3)
    assert g["g"][-1] == pytest.approx(1.0)
    assert np.all(np.diff(g["g"]) > 0)
    r0, c0 = gaplab.r0_C0(1e-3, 3, 2.0)
    assert r0 == pytest.approx(5e-4, rel=1e-15)
    cert = gaplab.certify_bounds(1e-3)
    assert cert["valid"]


def test_gap_solve():
    flat = gaplab.solve_mode(1e-2, flat=True, R0=0.3, nr=64, ns=8)
    assert flat["max_grad"] == pytest.approx(1.0, abs=1e-3)
    sol = gaplab.solve_mode(1e-3, nr=128, ns=16)
    assert sol["diagnostics"]["maximum_principle"]
    assert sol["u"].shape == (129, 17)
    assert np.all(sol["u"][0] == 0.0)


def test_sweep_and_fit():
    eps = [1e-2, 10**-2.4, 10**-2.8, 10**-3.2, 10**-3.6, 1e-4]
    rows = gaplab.run_sweep({"d": 3, "m": 2, "epsilons": eps, "grid": {"nr": 128, "ns": 16}})
    assert list(rows[0]) == ["epsilon", "max_grad", "u_at_eps1m", "grad_lb", "c1_est"]
    fit = gaplab.fit_rate([r["epsilon"] for r in rows[1:]], [r["max_grad"] for r in rows[1:]],
                          gaplab.exponents(3, 2.0)["rate"])
    assert fit["deviation"] <= 0.05


def test_verify_rejects_bad_geometry():
    rep = gaplab.verify_all({"R0": 1.0, "grid": {"nr": 64, "ns": 8}})
    assert not rep["passed"]
    assert rep["sections"]["rate"]["skipped"]
