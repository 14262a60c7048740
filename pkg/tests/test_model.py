import math

import pytest

from fbstab.errors import AssumptionError
from fbstab.model import build_model, find_sigma_tilde, reference_model
from fbstab.expr import parse_expr


BASE = {
    "n": 3,
    "f": "sigma",
    "g": "sigma - 0.93911",
    "sigma_bar": 1.0,
    "c": 1e-3,
    "gamma": 1.0,
}


def test_reference_model_accepted():
    model = build_model(BASE)
    assert model.sigma_tilde == pytest.approx(0.93911, abs=1e-11)
    assert model.n == 3


def test_a1_rejects_nonzero_f_at_origin():
    cfg = dict(BASE, f="sigma - 1")
    with pytest.raises(AssumptionError) as err:
        build_model(cfg)
    assert "(A1)" in str(err.value)


def test_a3_rejects_sigma_tilde_above_sigma_bar():
    cfg = dict(BASE, sigma_bar=0.5, sigma_tilde=0.93911)
    with pytest.raises(AssumptionError) as err:
        build_model(cfg)
    assert "(A3)" in str(err.value)


def test_a1_rejects_decreasing_f():
    cfg = dict(BASE, f="-sigma")
    with pytest.raises(AssumptionError) as err:
        build_model(cfg)
    assert "(A1)" in str(err.value)


def test_a2_rejects_decreasing_g():
    cfg = dict(BASE, g="0.5 - sigma")
    with pytest.raises(AssumptionError):
        build_model(cfg)


def test_missing_key():
    with pytest.raises(KeyError):
        build_model({"n": 3, "f": "sigma"})


def test_sigma_tilde_root_found_by_bisection():
    g = parse_expr("sinh(sigma) - 0.6")
    root = find_sigma_tilde(g, 1.0)
    assert math.sinh(root) == pytest.approx(0.6, abs=1e-11)


def test_build_model_deterministic():
    a = build_model(BASE)
    b = build_model(BASE)
    assert a == b


def test_reference_model_matches_coth_identity():
    model = reference_model()
    assert model.sigma_tilde == pytest.approx(
        3.0 * (math.cosh(1.0) / math.sinh(1.0) - 1.0), abs=1e-15
    )


def test_nonlinear_model_accepted():
    cfg = dict(BASE, f="sinh(sigma)", g="exp(sigma) - 2")
    model = build_model(cfg)
    assert model.sigma_tilde == pytest.approx(math.log(2.0), abs=1e-11)
