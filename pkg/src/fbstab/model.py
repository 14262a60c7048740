"""Tumor model assembly: consumption law f, proliferation law g, and the
constants (n, sigma_bar, sigma_tilde, c, gamma), validated against the
structural assumptions the rest of the package relies on:

* (A1)  f(0) = 0 and f' > 0,
* (A2)  g' > 0 and g(sigma_tilde) = 0,
* (A3)  sigma_tilde < sigma_bar.

Positivity of the derivatives is checked on a 1000-point sample grid of
[0, max(sigma_bar, sigma_tilde) + 1]; the underlying theory states these
conditions on all of [0, inf), which a finite artifact cannot verify.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import AssumptionError, SolverError
from .expr import ExprAST, compile_expr, diff_expr, eval_expr, parse_expr

SAMPLE_POINTS = 1000
STRICTNESS_TOL = 1e-12
ROOT_TOL = 1e-12


@dataclass(frozen=True)
class TumorModel:
    """Validated model data.  Immutable; safe to share across threads."""

    n: int
    f: ExprAST
    g: ExprAST
    fp: ExprAST
    gp: ExprAST
    sigma_bar: float
    sigma_tilde: float
    c: float
    gamma: float

    @cached_property
    def f_fn(self):
        return compile_expr(self.f)

    @cached_property
    def g_fn(self):
        return compile_expr(self.g)

    @cached_property
    def fp_fn(self):
        return compile_expr(self.fp)

    @cached_property
    def gp_fn(self):
        return compile_expr(self.gp)

    @cached_property
    def f_scalar(self):
        return compile_expr(self.f, target="math")

    @cached_property
    def fp_scalar(self):
        return compile_expr(self.fp, target="math")

    @cached_property
    def g_scalar(self):
        return compile_expr(self.g, target="math")

    def with_scaled_laws(self, factor: float, gamma: float | None = None) -> "TumorModel":
        """Return a copy whose f and g are multiplied by ``factor`` (used by
        the unit-ball rescaling).  Derivatives are rescaled consistently."""
        from .expr import Binary, Const

        scale = Const(float(factor))
        return TumorModel(
            n=self.n,
            f=Binary("mul", scale, self.f),
            g=Binary("mul", scale, self.g),
            fp=Binary("mul", scale, self.fp),
            gp=Binary("mul", scale, self.gp),
            sigma_bar=self.sigma_bar,
            sigma_tilde=self.sigma_tilde,
            c=self.c,
            gamma=self.gamma if gamma is None else gamma,
        )


def find_sigma_tilde(g: ExprAST, sigma_bar: float, tol: float = ROOT_TOL) -> float:
    """Locate the zero of g in (0, sigma_bar) by bisection.

    g' > 0 guarantees a unique simple root, so bisection is enough.
    """
    lo, hi = 0.0, sigma_bar
    g_lo, g_hi = eval_expr(g, lo), eval_expr(g, hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo > 0.0:
        raise AssumptionError("(A2)", f"g(0) = {g_lo} > 0, no zero in [0, sigma_bar]")
    if g_hi < 0.0:
        raise AssumptionError(
            "(A3)", f"g(sigma_bar) = {g_hi} < 0, the zero of g lies above sigma_bar"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = eval_expr(g, mid)
        if g_mid == 0.0:
            return mid
        if g_mid < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_model(config: dict) -> TumorModel:
    """Assemble and validate a :class:`TumorModel` from a key/value config.

    Required keys: ``n, f, g, sigma_bar, c, gamma``; ``sigma_tilde`` is
    optional (root-found from g when absent).  ``f`` and ``g`` may be given
    either as source text or as already-parsed ASTs.
    """
    missing = [k for k in ("n", "f", "g", "sigma_bar", "c", "gamma") if k not in config]
    if missing:
        raise KeyError(f"config missing keys: {', '.join(missing)}")

    n = int(config["n"])
    if n < 2:
        raise AssumptionError("n >= 2", f"got n = {n}")
    f = config["f"] if isinstance(config["f"], ExprAST) else parse_expr(str(config["f"]))
    g = config["g"] if isinstance(config["g"], ExprAST) else parse_expr(str(config["g"]))
    sigma_bar = float(config["sigma_bar"])
    c = float(config["c"])
    gamma = float(config["gamma"])
    if sigma_bar <= 0.0:
        raise AssumptionError("sigma_bar > 0", f"got {sigma_bar}")
    if c < 0.0:
        raise AssumptionError("c >= 0", f"got {c}")
    if gamma <= 0.0:
        raise AssumptionError("gamma > 0", f"got {gamma}")

    fp = diff_expr(f)
    gp = diff_expr(g)

    # (A1) part one: f(0) = 0
    f0 = eval_expr(f, 0.0)
    if abs(f0) > STRICTNESS_TOL:
        raise AssumptionError("(A1)", f"f(0) = {f0} != 0")

    # sigma_tilde: accept a provided value (validated) or root-find
    if config.get("sigma_tilde") is not None:
        sigma_tilde = float(config["sigma_tilde"])
        g_at = eval_expr(g, sigma_tilde)
        if abs(g_at) > 1e-6:
            raise AssumptionError(
                "(A2)", f"g(sigma_tilde) = {g_at} at sigma_tilde = {sigma_tilde}"
            )
    else:
        sigma_tilde = find_sigma_tilde(g, sigma_bar)

    if not sigma_tilde < sigma_bar:
        raise AssumptionError(
            "(A3)", f"sigma_tilde = {sigma_tilde} >= sigma_bar = {sigma_bar}"
        )
    if sigma_tilde <= 0.0:
        raise AssumptionError("(A2)", f"sigma_tilde = {sigma_tilde} <= 0")

    # (A1)/(A2) positivity of the derivatives on the sample grid
    hi = max(sigma_bar, sigma_tilde) + 1.0
    step = hi / (SAMPLE_POINTS - 1)
    for i in range(SAMPLE_POINTS):
        s = i * step
        fps = eval_expr(fp, s)
        if not fps > STRICTNESS_TOL:
            raise AssumptionError("(A1)", f"f'({s}) = {fps} not positive")
        gps = eval_expr(gp, s)
        if not gps > STRICTNESS_TOL:
            raise AssumptionError("(A2)", f"g'({s}) = {gps} not positive")

    return TumorModel(
        n=n,
        f=f,
        g=g,
        fp=fp,
        gp=gp,
        sigma_bar=sigma_bar,
        sigma_tilde=sigma_tilde,
        c=c,
        gamma=gamma,
    )


def reference_model(c: float = 1e-3, gamma: float = 1.0, n: int = 3) -> TumorModel:
    """The package's reference configuration: f = sigma and g = sigma - s0
    with s0 chosen so that the stationary free radius is exactly 1 (for
    n = 3 this is s0 = 3*(coth 1 - 1))."""
    import math

    if n != 3:
        raise SolverError("reference model is calibrated for n = 3 only")
    sigma_tilde = 3.0 * (math.cosh(1.0) / math.sinh(1.0) - 1.0)
    return build_model(
        {
            "n": n,
            "f": "sigma",
            "g": f"sigma - {sigma_tilde!r}",
            "sigma_bar": 1.0,
            "sigma_tilde": sigma_tilde,
            "c": c,
            "gamma": gamma,
        }
    )
