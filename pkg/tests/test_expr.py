import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbstab.errors import EvalDomainError, ParseError
from fbstab.expr import (
    Binary,
    Const,
    Unary,
    Var,
    compile_expr,
    diff_expr,
    eval_expr,
    parse_expr,
    pretty,
)


def test_parse_variable_is_identity_node():
    assert parse_expr("sigma") == Var()


def test_parse_linear_g():
    ast = parse_expr("sigma - 0.93911")
    assert ast == Binary("sub", Var(), Const(0.93911))


def test_parse_arithmetic_identity():
    ast = parse_expr("2*(sigma^2 + 1)")
    assert eval_expr(ast, 1.0) == 4.0


def test_parse_precedence_and_unary_minus():
    # unary minus binds tighter than * ...
    assert eval_expr(parse_expr("-sigma*3"), 2.0) == -6.0
    # ... but looser than ^
    assert eval_expr(parse_expr("-sigma^2"), 3.0) == -9.0
    # ^ is right-associative
    assert eval_expr(parse_expr("2^3^2"), 0.0) == 512.0


@pytest.mark.parametrize(
    "src",
    ["sigma +", "(sigma", "bogus", "sinh()", "sigma 2", "2..5"],
)
def test_parse_errors_carry_offsets(src):
    with pytest.raises(ParseError) as err:
        parse_expr(src)
    assert err.value.offset >= 0


def test_diff_identity():
    assert diff_expr(parse_expr("sigma")) == Const(1.0)


def test_diff_power_rule():
    d = diff_expr(parse_expr("sigma^2"))
    assert eval_expr(d, 3.0) == pytest.approx(6.0, abs=0, rel=1e-15)


@pytest.mark.parametrize(
    "src",
    [
        "sigma",
        "sigma^3 - 2*sigma",
        "exp(sigma) + sinh(sigma)*cosh(sigma)",
        "log(sigma + 2)",
        "sigma/(1 + sigma^2)",
        "2^sigma",
        "(sigma + 1)^(sigma/4)",
    ],
)
def test_diff_matches_finite_differences(src):
    ast = parse_expr(src)
    d = diff_expr(ast)
    h = 1e-6
    for i in range(1, 20):
        s = 0.1 * i
        fd = (eval_expr(ast, s + h) - eval_expr(ast, s - h)) / (2.0 * h)
        exact = eval_expr(d, s)
        assert exact == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_eval_const():
    assert eval_expr(Const(2.5), 7.0) == 2.5


def test_eval_sinh_matches_library():
    assert eval_expr(parse_expr("sinh(sigma)"), 1.0) == pytest.approx(
        math.sinh(1.0), rel=1e-15
    )
    assert eval_expr(parse_expr("sinh(sigma)"), 1.0) == pytest.approx(
        1.1752012, abs=1e-7
    )


def test_eval_division_by_zero_is_reported():
    ast = parse_expr("sigma/0")
    with pytest.raises(EvalDomainError):
        eval_expr(ast, 3.0)


def test_eval_log_domain():
    with pytest.raises(EvalDomainError):
        eval_expr(parse_expr("log(sigma)"), -1.0)


def test_compile_matches_eval():
    ast = parse_expr("exp(sigma)*(sigma - 0.5)^2 + sinh(sigma)")
    fn = compile_expr(ast)
    fsc = compile_expr(ast, target="math")
    for i in range(10):
        s = 0.2 * i + 0.05
        assert fn(s) == pytest.approx(eval_expr(ast, s), rel=1e-15)
        assert fsc(s) == pytest.approx(eval_expr(ast, s), rel=1e-15)


# --------------------------------------------------------------------------
# properties

_consts = st.floats(min_value=0.0, max_value=100.0, allow_nan=False,
                    allow_infinity=False).map(Const)
_leaves = st.one_of(_consts, st.just(Var()))


def _extend(children):
    unary = st.builds(
        Unary, st.sampled_from(["neg", "exp", "sinh", "cosh", "log"]), children
    )
    binary = st.builds(
        Binary,
        st.sampled_from(["add", "sub", "mul", "div", "pow"]),
        children,
        children,
    )
    return st.one_of(unary, binary)


ast_strategy = st.recursive(_leaves, _extend, max_leaves=12)


@settings(max_examples=150, deadline=None)
@given(ast_strategy)
def test_pretty_parse_round_trip(ast):
    normalized = parse_expr(pretty(ast))
    assert parse_expr(pretty(normalized)) == normalized


@settings(max_examples=100, deadline=None)
@given(ast_strategy, st.floats(min_value=1.0, max_value=10.0))
def test_diff_commutes_with_constant_scaling(ast, c):
    scaled = Binary("mul", Const(c), ast)
    lhs = diff_expr(scaled)
    rhs_inner = diff_expr(ast)
    # folding reduces d(c*e) to c * d(e) node-for-node
    from fbstab.expr import _mul

    assert lhs == _mul(Const(c), rhs_inner)
