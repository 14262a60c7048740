"""Boundary graphs on the unit sphere, the harmonic extension into the ball,
the cutoff-dressed Hanzawa map, and the translation action on graphs.

A near-sphere hypersurface is stored as the graph r = 1 + rho(omega) with
rho band-limited in the real spherical-harmonic basis (Fourier basis for
n = 2).  Translating the surface by a small vector z produces another graph
S_z(rho); the action is computed pointwise by intersecting rays with the
translated surface and re-projecting onto the basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import lpmv

from .errors import SolverError

DELTA_DEFAULT = 0.1
EPS_DEFAULT = DELTA_DEFAULT / 2
KMAX_DEFAULT_3D = 16
KMAX_DEFAULT_2D = 64


# ---------------------------------------------------------------------------
# cutoff profile

@dataclass(frozen=True)
class CutoffProfile:
    """Even C^2 piecewise-polynomial cutoff: 1 on |tau| <= delta, 0 on
    |tau| >= 3*delta, with the slope capped at 0.625/delta — below the
    admissible ceiling 2/(3*delta).  (A plain quintic smoothstep would peak
    at 0.9375/delta and break that ceiling, so the transition uses cubic-
    smoothed shoulders around a linear ramp.)"""

    delta: float = DELTA_DEFAULT

    @property
    def shoulder(self) -> float:
        return 0.4 * self.delta

    @property
    def slope(self) -> float:
        return 1.0 / (2.0 * self.delta - self.shoulder)

    def __call__(self, tau):
        d, s, m = self.delta, self.shoulder, self.slope
        a = np.abs(np.asarray(tau, dtype=float))
        x = np.clip((a - d) / s, 0.0, 1.0)
        y = np.clip((3.0 * d - a) / s, 0.0, 1.0)
        out = np.select(
            [a <= d, a >= 3.0 * d, a <= d + s, a >= 3.0 * d - s],
            [1.0, 0.0,
             1.0 - m * s * (x**3 - 0.5 * x**4),
             m * s * (y**3 - 0.5 * y**4)],
            default=1.0 - 0.5 * m * s - m * (a - d - s),
        )
        return out if out.ndim else float(out)

    def derivative(self, tau):
        d, s, m = self.delta, self.shoulder, self.slope
        t = np.asarray(tau, dtype=float)
        a = np.abs(t)
        x = np.clip((a - d) / s, 0.0, 1.0)
        y = np.clip((3.0 * d - a) / s, 0.0, 1.0)
        mag = np.select(
            [a <= d, a >= 3.0 * d, a <= d + s, a >= 3.0 * d - s],
            [0.0, 0.0,
             -m * (3.0 * x**2 - 2.0 * x**3),
             -m * (3.0 * y**2 - 2.0 * y**3)],
            default=-m,
        )
        out = mag * np.sign(t)
        return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# bases

class SphereBasis:
    """Real orthonormal spherical harmonics on S^2 with a Gauss-Legendre x
    uniform-azimuth product quadrature grid (exact analysis/synthesis for
    band-limited functions)."""

    def __init__(self, k_max: int, n_theta: int | None = None,
                 n_phi: int | None = None):
        self.n = 3
        self.k_max = k_max
        self.n_theta = n_theta or (k_max + 2)
        self.n_phi = n_phi or (2 * k_max + 2)
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        phi = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        self.x_nodes = x
        xx, pp = np.meshgrid(x, phi, indexing="ij")
        self.cos_theta = xx.ravel()
        self.phi = pp.ravel()
        sin_theta = np.sqrt(1.0 - self.cos_theta**2)
        self.points = np.column_stack(
            [sin_theta * np.cos(self.phi), sin_theta * np.sin(self.phi),
             self.cos_theta]
        )
        self.weights = np.repeat(w, self.n_phi) * (2.0 * np.pi / self.n_phi)
        self.index = [(k, m) for k in range(k_max + 1) for m in range(-k, k + 1)]
        self.degree = np.array([k for k, _ in self.index])
        self.Y = self._evaluate(self.cos_theta, self.phi)
        self.dY_dtheta, self.dY_dphi = self._evaluate_derivs(
            self.cos_theta, self.phi
        )

    @property
    def size(self) -> int:
        return len(self.index)

    def _norm(self, k, m):
        return math.sqrt(
            (2 * k + 1) / (4.0 * math.pi)
            * math.factorial(k - m) / math.factorial(k + m)
        )

    def _evaluate(self, cos_theta, phi):
        npts = cos_theta.size
        Y = np.empty((npts, self.size))
        for col, (k, m) in enumerate(self.index):
            am = abs(m)
            P = lpmv(am, k, cos_theta)
            N = self._norm(k, am)
            if m == 0:
                Y[:, col] = N * P
            elif m > 0:
                Y[:, col] = math.sqrt(2.0) * N * P * np.cos(m * phi)
            else:
                Y[:, col] = math.sqrt(2.0) * N * P * np.sin(am * phi)
        return Y

    def _evaluate_derivs(self, cos_theta, phi):
        """Tangential derivative matrices d/dtheta and d/dphi."""
        npts = cos_theta.size
        sin_theta = np.sqrt(np.clip(1.0 - cos_theta**2, 1e-300, None))
        dYt = np.empty((npts, self.size))
        dYp = np.empty((npts, self.size))
        for col, (k, m) in enumerate(self.index):
            am = abs(m)
            P = lpmv(am, k, cos_theta)
            Pm1 = lpmv(am, k - 1, cos_theta) if k - 1 >= am else np.zeros(npts)
            # dP_k^m(cos t)/dt = (k cos t P_k^m - (k+m) P_{k-1}^m) / sin t
            dP = (k * cos_theta * P - (k + am) * Pm1) / sin_theta
            N = self._norm(k, am)
            if m == 0:
                dYt[:, col] = N * dP
                dYp[:, col] = 0.0
            elif m > 0:
                dYt[:, col] = math.sqrt(2.0) * N * dP * np.cos(m * phi)
                dYp[:, col] = -math.sqrt(2.0) * N * P * m * np.sin(m * phi)
            else:
                dYt[:, col] = math.sqrt(2.0) * N * dP * np.sin(am * phi)
                dYp[:, col] = math.sqrt(2.0) * N * P * am * np.cos(am * phi)
        return dYt, dYp

    def analyze(self, samples: np.ndarray) -> np.ndarray:
        return self.Y.T @ (self.weights * samples)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return self.Y @ coeffs

    def eval_at(self, points: np.ndarray, coeffs: np.ndarray,
                radial_power: np.ndarray | None = None) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ct = np.clip(pts[:, 2], -1.0, 1.0)
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        Y = self._evaluate(ct, phi)
        if radial_power is not None:
            Y = Y * radial_power[:, None] ** self.degree[None, :]
        return Y @ coeffs

    def grad_sup(self, coeffs: np.ndarray) -> float:
        sin_theta = np.sqrt(np.clip(1.0 - self.cos_theta**2, 1e-300, None))
        gt = self.dY_dtheta @ coeffs
        gp = (self.dY_dphi @ coeffs) / sin_theta
        return float(np.sqrt(gt**2 + gp**2).max())


class CircleBasis:
    """Real Fourier basis on S^1 with uniform trapezoid quadrature."""

    def __init__(self, k_max: int, n_grid: int | None = None):
        self.n = 2
        self.k_max = k_max
        self.n_grid = n_grid or (4 * (k_max + 1))
        theta = 2.0 * np.pi * np.arange(self.n_grid) / self.n_grid
        self.theta = theta
        self.points = np.column_stack([np.cos(theta), np.sin(theta)])
        self.weights = np.full(self.n_grid, 2.0 * np.pi / self.n_grid)
        self.index = [(0, 0)] + [
            (k, s) for k in range(1, k_max + 1) for s in (1, -1)
        ]
        self.degree = np.array([k for k, _ in self.index])
        self.Y = self._evaluate(theta)

    @property
    def size(self) -> int:
        return len(self.index)

    def _evaluate(self, theta):
        Y = np.empty((theta.size, self.size))
        for col, (k, s) in enumerate(self.index):
            if k == 0:
                Y[:, col] = 1.0 / math.sqrt(2.0 * math.pi)
            elif s > 0:
                Y[:, col] = np.cos(k * theta) / math.sqrt(math.pi)
            else:
                Y[:, col] = np.sin(k * theta) / math.sqrt(math.pi)
        return Y

    def analyze(self, samples):
        return self.Y.T @ (self.weights * samples)

    def synthesize(self, coeffs):
        return self.Y @ coeffs

    def eval_at(self, points, coeffs, radial_power=None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        Y = self._evaluate(theta)
        if radial_power is not None:
            Y = Y * radial_power[:, None] ** self.degree[None, :]
        return Y @ coeffs

    def grad_sup(self, coeffs):
        dY = np.empty_like(self.Y)
        for col, (k, s) in enumerate(self.index):
            if k == 0:
                dY[:, col] = 0.0
            elif s > 0:
                dY[:, col] = -k * np.sin(k * self.theta) / math.sqrt(math.pi)
            else:
                dY[:, col] = k * np.cos(k * self.theta) / math.sqrt(math.pi)
        return float(np.abs(dY @ coeffs).max())


_BASIS_CACHE: dict[tuple, object] = {}


def get_basis(n: int, k_max: int):
    key = (n, k_max)
    if key not in _BASIS_CACHE:
        _BASIS_CACHE[key] = SphereBasis(k_max) if n == 3 else CircleBasis(k_max)
    return _BASIS_CACHE[key]


# ---------------------------------------------------------------------------
# graph functions

@dataclass
class GraphFunction:
    """A boundary graph rho on S^{n-1} in truncated harmonic representation."""

    n: int
    k_max: int
    coeffs: np.ndarray
    _samples: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError("n must be 2 or 3")
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.size != self.basis.size:
            raise ValueError(
                f"expected {self.basis.size} coefficients, got {self.coeffs.size}"
            )

    @property
    def basis(self):
        return get_basis(self.n, self.k_max)

    @classmethod
    def zero(cls, n: int = 3, k_max: int | None = None) -> "GraphFunction":
        k_max = k_max if k_max is not None else (
            KMAX_DEFAULT_3D if n == 3 else KMAX_DEFAULT_2D
        )
        basis = get_basis(n, k_max)
        return cls(n=n, k_max=k_max, coeffs=np.zeros(basis.size))

    @classmethod
    def from_samples(cls, n: int, k_max: int, samples: np.ndarray) -> "GraphFunction":
        basis = get_basis(n, k_max)
        return cls(n=n, k_max=k_max, coeffs=basis.analyze(np.asarray(samples, float)))

    @property
    def grid_points(self) -> np.ndarray:
        return self.basis.points

    def samples(self) -> np.ndarray:
        if self._samples is None:
            self._samples = self.basis.synthesize(self.coeffs)
        return self._samples

    def __call__(self, points) -> np.ndarray:
        return self.basis.eval_at(points, self.coeffs)

    def sup_norm(self) -> float:
        return float(np.abs(self.samples()).max())

    def grad_sup_norm(self) -> float:
        return self.basis.grad_sup(self.coeffs)

    def in_O_delta(self, delta: float = DELTA_DEFAULT) -> bool:
        return self.sup_norm() < delta and self.grad_sup_norm() < delta

    def degree_coeffs(self, k: int) -> np.ndarray:
        mask = self.basis.degree == k
        return self.coeffs[mask]


# ---------------------------------------------------------------------------
# operations

def harmonic_extension(rho: GraphFunction, x) -> float | np.ndarray:
    """Evaluate the harmonic extension of rho at interior points:
    sum_k b_{kl} |x|^k Y_{kl}(x/|x|), exact for band-limited data."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    scalar = np.asarray(x).ndim == 1
    radii = np.linalg.norm(pts, axis=1)
    if np.any(radii > 1.0 + 1e-12):
        raise ValueError("harmonic extension requested outside the closed ball")
    units = np.zeros_like(pts)
    pos = radii > 0.0
    units[pos] = pts[pos] / radii[pos, None]
    units[~pos, -1] = 1.0  # direction immaterial at the origin
    out = rho.basis.eval_at(units, rho.coeffs, radial_power=radii)
    return float(out[0]) if scalar else out


def hanzawa_map(rho: GraphFunction, phi: CutoffProfile, x) -> np.ndarray:
    """The cutoff-dressed map x -> x + phi(|x|-1) Pi(rho)(x) x/|x| taking the
    closed unit ball onto the domain bounded by r = 1 + rho."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    scalar = np.asarray(x).ndim == 1
    radii = np.linalg.norm(pts, axis=1)
    omega = np.zeros_like(pts)
    pos = radii > 0.0
    omega[pos] = pts[pos] / radii[pos, None]
    ext = harmonic_extension(rho, pts)
    out = pts + (phi(radii - 1.0) * ext)[:, None] * omega
    return out[0] if scalar else out


def translate_graph(
    rho: GraphFunction,
    z,
    eps: float = EPS_DEFAULT,
    tol: float = 1e-13,
    max_iter: int = 80,
) -> GraphFunction:
    """The translation action S_z on boundary graphs.

    For each quadrature direction omega' the radius t with t*omega' on the
    translated surface solves |t omega' - z| = 1 + rho((t omega' - z)/|.|),
    i.e. the inverse of the direction map between the original and shifted
    graphs; the new graph values t - 1 are then re-projected onto the basis.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (rho.n,):
        raise ValueError(f"shift must be a vector in R^{rho.n}")
    if not np.any(z):
        # the zero shift is the identity, exactly at coefficient level
        return GraphFunction(n=rho.n, k_max=rho.k_max, coeffs=rho.coeffs.copy())
    if np.linalg.norm(z) >= eps:
        raise SolverError(
            f"|z| = {np.linalg.norm(z):.4g} outside the smallness range "
            f"(< {eps}); the graph inversion is not guaranteed"
        )
    omega = rho.grid_points
    t = 1.0 + rho.samples()
    converged = False
    for _ in range(max_iter):
        xx = t[:, None] * omega - z
        dist = np.linalg.norm(xx, axis=1)
        units = xx / dist[:, None]
        residual = dist - 1.0 - rho(units)
        slope = np.einsum("ij,ij->i", xx, omega) / dist
        t = t - residual / slope
        if np.abs(residual).max() < tol:
            converged = True
            break
    if not converged:
        raise SolverError(
            "surface inversion did not converge on every node; |z| or the "
            "graph norm is too large for the translation action"
        )
    return GraphFunction.from_samples(rho.n, rho.k_max, t - 1.0)


def infinitesimal_generator(
    z,
    n: int = 3,
    k_max: int | None = None,
    eps_fd: float = 1e-5,
) -> GraphFunction:
    """Central-difference generator of the translation action at the zero
    graph, (S_{eps z}(0) - S_{-eps z}(0)) / (2 eps); equals the degree-1
    harmonic omega -> z . omega up to O(eps^2)."""
    z = np.asarray(z, dtype=float)
    base = GraphFunction.zero(n=n, k_max=k_max)
    if not np.any(z):
        return base
    plus = translate_graph(base, eps_fd * z)
    minus = translate_graph(base, -eps_fd * z)
    coeffs = (plus.coeffs - minus.coeffs) / (2.0 * eps_fd)
    return GraphFunction(n=n, k_max=base.k_max, coeffs=coeffs)


def linear_graph(z, n: int = 3, k_max: int | None = None) -> GraphFunction:
    """The graph omega -> z . omega (pure degree-1 content)."""
    z = np.asarray(z, dtype=float)
    base = GraphFunction.zero(n=n, k_max=k_max)
    samples = base.grid_points @ z
    return GraphFunction.from_samples(n, base.k_max, samples)


def sphere_translation_exact(z, omega) -> np.ndarray:
    """Closed-form graph of the unit sphere translated by z:
    rho(omega') = z.omega' + sqrt(1 - |z|^2 + (z.omega')^2) - 1."""
    z = np.asarray(z, dtype=float)
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    u = omega @ z
    return u + np.sqrt(1.0 - float(z @ z) + u**2) - 1.0
