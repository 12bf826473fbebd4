"""Initial conditions, physical constants and meshes for the test cases.

Velocities enter W1 by dof interpolation (edge normal point values plus
interior moments), which preserves normal continuity exactly; depth and
bottom fields enter W2 by L2 projection.  Spherical formulas are evaluated
at the flat-cell quadrature points; longitude/latitude are taken from the
normalised position so the inverse trig stays well defined.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import Discretization
from .errors import ConfigError
from .mesh import build_icosahedral_sphere, build_periodic_square
from .operators import Physics

SCENARIO_NAMES = ("unit_square", "williamson2", "williamson5", "galewsky")

EARTH_RADIUS = 6371220.0
EARTH_OMEGA = 7.292e-5
GRAVITY = 9.810616
SECONDS_PER_DAY = 86400.0


@dataclass
class Scenario:
    name: str
    ctx: Discretization
    physics: Physics
    u0: np.ndarray
    D0: np.ndarray
    dt: float
    steps: int
    picard_iterations: int
    picard_mode: str
    reference_height: float
    analytic_u: callable = None
    analytic_D: callable = None


def lonlat(points):
    r = np.linalg.norm(points, axis=-1)
    lam = np.arctan2(points[..., 1], points[..., 0])
    theta = np.arcsin(np.clip(points[..., 2] / r, -1.0, 1.0))
    return lam, theta


def zonal_east(points):
    """Unit eastward vector field; zero on the polar axis."""
    rho = np.hypot(points[..., 0], points[..., 1])
    safe = np.where(rho > 0, rho, 1.0)
    e = np.stack([-points[..., 1] / safe, points[..., 0] / safe,
                  np.zeros_like(rho)], axis=-1)
    return np.where(rho[..., None] > 0, e, 0.0)


def make_scenario(name, refinement=3, n=32, quad_degree=8):
    if name == "unit_square":
        return _unit_square(n, quad_degree)
    if name == "williamson2":
        return _williamson2(refinement, quad_degree)
    if name == "williamson5":
        return _williamson5(refinement, quad_degree)
    if name == "galewsky":
        return _galewsky(refinement, quad_degree)
    raise ConfigError(f"unknown scenario {name!r}; pick one of {SCENARIO_NAMES}")


def _unit_square(n, quad_degree):
    f, g = 5.0, 5.0
    mesh = build_periodic_square(n, 1.0)
    ctx = Discretization(mesh, quad_degree)
    phys = Physics(g=g, f_constant=f)
    u0 = ctx.interpolate_W1(lambda p: np.column_stack([
        np.zeros(len(p)), np.sin(2.0 * np.pi * p[:, 0]), np.zeros(len(p))]))
    Dq = 1.0 + (f / g) / (4.0 * np.pi) * np.sin(4.0 * np.pi * ctx.vpoints[:, :, 1])
    D0 = ctx.project_W2(Dq)
    return Scenario("unit_square", ctx, phys, u0, D0, dt=1e-3, steps=1000,
                    picard_iterations=4, picard_mode="explicit",
                    reference_height=1.0)


def _solid_body(ctx, a, u_max, h, g, omega):
    u_fn = lambda p: u_max * np.stack(
        [-p[..., 1], p[..., 0], np.zeros_like(p[..., 0])], axis=-1) / a
    D_fn = lambda p: h - (a * omega * u_max + 0.5 * u_max ** 2) * (
        p[..., 2] ** 2) / (g * a ** 2)
    return u_fn, D_fn


def _williamson2(refinement, quad_degree):
    a, omega, g, h = EARTH_RADIUS, EARTH_OMEGA, GRAVITY, 5960.0
    u_max = 2.0 * np.pi * a / (12.0 * SECONDS_PER_DAY)
    mesh = build_icosahedral_sphere(refinement, a)
    ctx = Discretization(mesh, quad_degree)
    phys = Physics(g=g, omega=omega)
    u_fn, D_fn = _solid_body(ctx, a, u_max, h, g, omega)
    u0 = ctx.interpolate_W1(u_fn)
    D0 = ctx.project_W2(D_fn(ctx.vpoints))
    return Scenario("williamson2", ctx, phys, u0, D0, dt=50.0, steps=500,
                    picard_iterations=4, picard_mode="explicit",
                    reference_height=h, analytic_u=u_fn, analytic_D=D_fn)


def mountain_profile(points, b0=2000.0, R=np.pi / 9.0,
                     lam_c=-np.pi / 2.0, theta_c=np.pi / 6.0):
    lam, theta = lonlat(points)
    r = np.minimum(R, np.sqrt((lam - lam_c) ** 2 + (theta - theta_c) ** 2))
    return b0 * (1.0 - r / R)


def _williamson5(refinement, quad_degree):
    a, omega, g, h = EARTH_RADIUS, EARTH_OMEGA, GRAVITY, 5960.0
    u_max = 20.0
    mesh = build_icosahedral_sphere(refinement, a)
    ctx = Discretization(mesh, quad_degree)
    b = ctx.project_W2(mountain_profile(ctx.vpoints))
    phys = Physics(g=g, omega=omega, b=b)
    u_fn, D_flat = _solid_body(ctx, a, u_max, h, g, omega)
    u0 = ctx.interpolate_W1(u_fn)
    D0 = ctx.project_W2(D_flat(ctx.vpoints) - mountain_profile(ctx.vpoints))
    return Scenario("williamson5", ctx, phys, u0, D0, dt=50.0, steps=500,
                    picard_iterations=8, picard_mode="explicit",
                    reference_height=h)


# -- Galewsky jet --------------------------------------------------------------

GALEWSKY = {
    "u0": 80.0, "theta0": np.pi / 7.0, "theta1": 5.0 * np.pi / 14.0,
    "hp": 120.0, "alpha": 1.0 / 3.0, "beta": 1.0 / 15.0,
    "theta2": np.pi / 4.0, "mean_height": 10000.0,
}


def galewsky_jet(theta):
    """Zonal speed profile, u0 at the jet core, zero outside (theta0, theta1)."""
    p = GALEWSKY
    en = np.exp(-4.0 / (p["theta1"] - p["theta0"]) ** 2)
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    inside = (theta > p["theta0"]) & (theta < p["theta1"])
    t = theta[inside]
    out[inside] = (p["u0"] / en) * np.exp(
        1.0 / ((t - p["theta0"]) * (t - p["theta1"])))
    return out


class _JetBalance:
    """Cumulative latitude integral for the balanced depth field.

    Integrates a*u*(f + tan(theta)/a * u) from the south pole with composite
    Gauss panels over the jet support (the integrand vanishes elsewhere).
    """

    def __init__(self, a, omega, panels=10000):
        self.a, self.omega = a, omega
        self.lo, self.hi = GALEWSKY["theta0"], GALEWSKY["theta1"]
        self.edges = np.linspace(self.lo, self.hi, panels + 1)
        self.gl_x, self.gl_w = np.polynomial.legendre.leggauss(4)
        per_panel = self._panel_integrals(self.edges[:-1], self.edges[1:])
        self.cum = np.concatenate([[0.0], np.cumsum(per_panel)])

    def _integrand(self, theta):
        u = galewsky_jet(theta)
        f = 2.0 * self.omega * np.sin(theta)
        return self.a * u * (f + np.tan(theta) / self.a * u)

    def _panel_integrals(self, lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        nodes = mid[:, None] + half[:, None] * self.gl_x[None, :]
        return half * np.einsum("pk,k->p", self._integrand(nodes), self.gl_w)

    def integral(self, theta):
        """Integral from -pi/2 up to theta, vectorised."""
        theta = np.asarray(theta, dtype=float)
        flat = np.clip(theta.ravel(), self.lo, self.hi)
        idx = np.clip(np.searchsorted(self.edges, flat) - 1, 0,
                      len(self.edges) - 2)
        lo = self.edges[idx]
        out = self.cum[idx] + self._panel_integrals(lo, flat)
        return out.reshape(theta.shape)


def galewsky_bump(lam, theta):
    p = GALEWSKY
    # Keep the perturbation single-valued across the date line.
    lam = np.where(lam > np.pi, lam - 2 * np.pi, lam)
    return p["hp"] * np.cos(theta) * np.exp(
        -((lam / p["alpha"]) ** 2) - (((p["theta2"] - theta) / p["beta"]) ** 2))


def _galewsky(refinement, quad_degree):
    a, omega, g = EARTH_RADIUS, EARTH_OMEGA, GRAVITY
    mesh = build_icosahedral_sphere(refinement, a)
    ctx = Discretization(mesh, quad_degree)
    phys = Physics(g=g, omega=omega)
    balance = _JetBalance(a, omega)

    lam, theta = lonlat(ctx.vpoints)
    D_unshifted = -balance.integral(theta) / g + galewsky_bump(lam, theta)
    mean = ctx.integrate(D_unshifted) / ctx.mesh.total_area()
    D0 = ctx.project_W2(D_unshifted + (GALEWSKY["mean_height"] - mean))

    def u_fn(p):
        _, th = lonlat(p)
        return galewsky_jet(th)[..., None] * zonal_east(p)

    u0 = ctx.interpolate_W1(u_fn)
    return Scenario("galewsky", ctx, phys, u0, D0, dt=30.0, steps=300,
                    picard_iterations=8, picard_mode="explicit",
                    reference_height=GALEWSKY["mean_height"])
