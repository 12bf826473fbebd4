"""Shallow water operators: Hamiltonian, variations, velocity recovery,
potential vorticity, the upwinded advection/forcing operators and the five
bracket variants.

Conventions (one code path for plane and sphere):
  perp(x)     = k x x, with k the unit cell normal (z-hat on the plane);
  gradperp(s) = k x grad(s);
  vorticity   <eta, zeta> = -<gradperp(eta), u>, so q = (zeta + f)/D.

Upwind traces are always selected by the sign of the *state* (or midpoint)
velocity's facet-normal component, never by the recovered advecting fields;
this is what keeps the brackets antisymmetric.  The trace rule is: take the
+ side where the selector flows out of it (sel . n+ > 0), the - side
otherwise (ties included).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .spaces import Field


class Variant(str, Enum):
    ORIGINAL = "original"
    D_UPWIND = "d_upwind"
    FULL_UPWIND = "full_upwind"
    U_UPWIND_ONLY = "u_upwind_only"
    NON_EC = "non_ec"


EC_VARIANTS = (Variant.ORIGINAL, Variant.D_UPWIND, Variant.FULL_UPWIND,
               Variant.U_UPWIND_ONLY)


class Physics:
    """Gravity, Coriolis setup and bottom profile (W2 coefficients)."""

    def __init__(self, g, f_constant=None, omega=None, b=None):
        if (f_constant is None) == (omega is None):
            raise ValueError("specify exactly one of f_constant (plane) "
                             "or omega (sphere)")
        self.g = g
        self.f_constant = f_constant
        self.omega = omega
        self.b = b  # W2 coefficient array or None
        self._f_cache = {}

    def coriolis(self, ctx):
        """Coriolis parameter sampled at the volume quadrature points."""
        key = id(ctx)
        if key not in self._f_cache:
            if self.f_constant is not None:
                f = np.full((ctx.mesh.ncells, ctx.nq), self.f_constant)
            else:
                a = ctx.mesh.metadata["radius"]
                f = 2.0 * self.omega * ctx.vpoints[:, :, 2] / a
            self._f_cache[key] = f
        return self._f_cache[key]

    def bottom(self, ctx):
        """Bottom profile values at volume quadrature points."""
        if self.b is None:
            return np.zeros((ctx.mesh.ncells, ctx.nq))
        return ctx.eval_scalar("DG1", self.b)


@dataclass
class State:
    u: Field
    D: Field


# -- scalars ------------------------------------------------------------------


def energy(ctx, u, D, phys):
    """Total energy 1/2 int (D|u|^2 + g(D+b)^2) dx."""
    uq = ctx.eval_vec(u)
    Dq = ctx.eval_scalar("DG1", D)
    h = Dq + phys.bottom(ctx)
    return 0.5 * ctx.integrate(Dq * np.einsum("cqd,cqd->cq", uq, uq)
                               + phys.g * h * h)


def variation_u(ctx, u, D):
    """Momentum flux F = P_W1(D u)."""
    uq = ctx.eval_vec(u)
    Dq = ctx.eval_scalar("DG1", D)
    return ctx.project_W1(Dq[:, :, None] * uq)


def variation_D(ctx, u, D, phys):
    """P_W2(|u|^2/2 + g(D + b))."""
    uq = ctx.eval_vec(u)
    Dq = ctx.eval_scalar("DG1", D)
    vals = (0.5 * np.einsum("cqd,cqd->cq", uq, uq)
            + phys.g * (Dq + phys.bottom(ctx)))
    return ctx.project_W2(vals)


def recover_velocity(ctx, D, F, rtol=1e-13, x0=None):
    """The operator solving <D v, U> = <v, F> for all v in W1."""
    return ctx.solve_weighted("BDM2", D, ctx.M1 @ F, rtol=rtol, x0=x0)


def potential_vorticity(ctx, u, D, phys, rtol=1e-13):
    """Solve <eta, q D> = -<gradperp(eta), u> + <eta, f> in W0."""
    uq = ctx.eval_vec(u)
    rhs = ctx.functional_scalar_grad("CG3", np.cross(ctx.kvol, uq))
    rhs += ctx.functional_scalar("CG3", phys.coriolis(ctx))
    return ctx.solve_weighted("CG3", D, rhs, rtol=rtol)


# -- facet helpers -------------------------------------------------------------


def upwind_take_plus(ctx, selector):
    """True where the selector velocity flows out of the + side."""
    def compute():
        seln = np.einsum("fqd,fd->fq", ctx.feval_vec(selector, 0),
                         ctx.fnormal_plus)
        return seln > 0.0
    return ctx._memoized(("upwind", id(selector)), selector, compute)


def upwind_scalar_trace(ctx, coeffs, take_plus):
    tp = ctx.feval_scalar("DG1", coeffs, 0)
    tm = ctx.feval_scalar("DG1", coeffs, 1)
    return np.where(take_plus, tp, tm)


# -- operator functionals over test bases --------------------------------------


def advect_velocity_L_vec(ctx, adv, advected, selector, weight=None):
    """L_{adv}(advected; W v_i) over the W1 basis.

    Assembles +<gradperp(W v_i . perp(adv)), advected> minus the upwinded
    facet correction; W is a DG1 weight (the a-slot D factor) or 1.
    """
    advq = ctx.eval_vec(adv)
    p = np.cross(ctx.kvol, advq)                       # perp of advecting
    gradadv = ctx.eval_vec_grad(adv)
    gradp = np.cross(ctx.mesh.k[:, None, None, :],
                     gradadv.swapaxes(2, 3)).swapaxes(2, 3)
    g = np.cross(ctx.kvol, ctx.eval_vec(advected))     # perp of advected
    if weight is None:
        Wq = np.ones((ctx.mesh.ncells, ctx.nq))
        gradW = np.zeros((ctx.mesh.ncells, ctx.nq, 3))
    else:
        Wq = ctx.eval_scalar("DG1", weight)
        gradW = ctx.eval_scalar_grad("DG1", weight)
    # -int grad(W (v_i . p)) . g, expanded by the product rule.
    gdW = np.sum(g * gradW, axis=-1)
    gdp = np.matmul(gradp, g[:, :, :, None])[:, :, :, 0]
    A = -(gdW[:, :, None] * p + Wq[:, :, None] * gdp)
    T = -Wq[:, :, None, None] * p[:, :, :, None] * g[:, :, None, :]
    out = ctx.functional_vec(A) + ctx.functional_vec_grad(T)

    # Facet term: -int sum_sides s_side (utilde . t_side) dS.
    take_plus = upwind_take_plus(ctx, selector)
    adved_p = ctx.feval_vec(advected, 0)
    adved_m = ctx.feval_vec(advected, 1)
    tau = np.where(take_plus,
                   np.einsum("fqd,fd->fq", adved_p, ctx.ftangent),
                   np.einsum("fqd,fd->fq", adved_m, ctx.ftangent))
    if weight is None:
        Wp = Wm = np.ones_like(tau)
    else:
        Wp = ctx.feval_scalar("DG1", weight, 0)
        Wm = ctx.feval_scalar("DG1", weight, 1)
    p_p = np.cross(ctx.sidek[0][:, None, :], ctx.feval_vec(adv, 0))
    p_m = np.cross(ctx.sidek[1][:, None, :], ctx.feval_vec(adv, 1))
    V_plus = -(tau * Wp)[:, :, None] * p_p
    V_minus = (tau * Wm)[:, :, None] * p_m
    out += ctx.facet_functional_vec(V_plus, V_minus)
    return out


def advect_depth_LD_vec(ctx, adv, D, selector):
    """L^D_{adv}(D; phi_i) over the W2 basis: upwinded DG transport."""
    advq = ctx.eval_vec(adv)
    Dq = ctx.eval_scalar("DG1", D)
    out = ctx.functional_scalar_grad("DG1", Dq[:, :, None] * advq)
    take_plus = upwind_take_plus(ctx, selector)
    Dtilde = upwind_scalar_trace(ctx, D, take_plus)
    adv_np = np.einsum("fqd,fd->fq", ctx.feval_vec(adv, 0), ctx.fnormal_plus)
    adv_nm = np.einsum("fqd,fd->fq", ctx.feval_vec(adv, 1), ctx.fnormal_minus)
    out += ctx.facet_functional_scalar("DG1", -adv_np * Dtilde, -adv_nm * Dtilde)
    return out


def forcing_F_vec(ctx, D, selector, gamma=None, UH=None, f_q=None):
    """F_{(D, UH, gamma)}(v_i) over the W1 basis.

    gamma: pressure slot (W2 coeffs); with gamma None only the Coriolis part
    is assembled (and vice versa with f_q None).
    """
    Dq = ctx.eval_scalar("DG1", D)
    A = np.zeros((ctx.mesh.ncells, ctx.nq, 3))
    if gamma is not None:
        A -= Dq[:, :, None] * ctx.eval_scalar_grad("DG1", gamma)
    if f_q is not None:
        A -= (Dq * f_q)[:, :, None] * np.cross(ctx.kvol, ctx.eval_vec(UH))
    out = ctx.functional_vec(A)
    if gamma is not None:
        take_plus = upwind_take_plus(ctx, selector)
        Dtilde = upwind_scalar_trace(ctx, D, take_plus)
        g_p = ctx.feval_scalar("DG1", gamma, 0) * Dtilde
        g_m = ctx.feval_scalar("DG1", gamma, 1) * Dtilde
        out += ctx.facet_functional_vec(
            g_p[:, :, None] * ctx.fnormal_plus[:, None, :],
            g_m[:, :, None] * ctx.fnormal_minus[:, None, :])
    return out


def vorticity_term_vec(ctx, q, F):
    """-<w_i, q perp(F)> over the W1 basis."""
    qq = ctx.eval_scalar("CG3", q)
    Fq = ctx.eval_vec(F)
    return ctx.functional_vec(-qq[:, :, None] * np.cross(ctx.kvol, Fq))


def coriolis_term_vec(ctx, f_q, UH):
    """-<w_i, f perp(UH)> over the W1 basis (raw-test Coriolis, NON_EC)."""
    return ctx.functional_vec(
        -f_q[:, :, None] * np.cross(ctx.kvol, ctx.eval_vec(UH)))


def divergence_term_vec(ctx, gamma):
    """+<div w_i, gamma> over the W1 basis."""
    return ctx.functional_vec_div(ctx.eval_scalar("DG1", gamma))


def div_flux_vec(ctx, F):
    """-<phi_i, div F> over the W2 basis."""
    return ctx.functional_scalar("DG1", -ctx.eval_vec_div(F))


# -- bracket right-hand sides ---------------------------------------------------


def bracket_rhs(ctx, variant, u, D, phys, rtol=1e-13):
    """Semi-discrete weak RHS pair (<w_i, u_t>, <phi_i, D_t>) for a variant.

    The velocity-recovery operator applied to test functions is eliminated
    through D-weighted auxiliary solves, so only fields are ever recovered.
    """
    variant = Variant(variant)
    ctx.check_positive(D)
    sel = u
    F = variation_u(ctx, u, D)
    gamma = variation_D(ctx, u, D, phys)
    f_q = phys.coriolis(ctx)

    if variant == Variant.ORIGINAL:
        q = potential_vorticity(ctx, u, D, phys, rtol=rtol)
        ru = vorticity_term_vec(ctx, q, F) + divergence_term_vec(ctx, gamma)
        rD = div_flux_vec(ctx, F)
        return ru, rD

    UH = recover_velocity(ctx, D, F, rtol=rtol)

    if variant == Variant.D_UPWIND:
        q = potential_vorticity(ctx, u, D, phys, rtol=rtol)
        G = forcing_F_vec(ctx, D, sel, gamma=gamma)
        x = ctx.solve_weighted("BDM2", D, G, rtol=rtol)
        ru = vorticity_term_vec(ctx, q, F) + ctx.M1 @ x
        rD = advect_depth_LD_vec(ctx, UH, D, sel)
        return ru, rD

    if variant == Variant.FULL_UPWIND:
        G = advect_velocity_L_vec(ctx, UH, u, sel, weight=D)
        G += forcing_F_vec(ctx, D, sel, gamma=gamma, UH=UH, f_q=f_q)
        x = ctx.solve_weighted("BDM2", D, G, rtol=rtol)
        ru = ctx.M1 @ x
        rD = advect_depth_LD_vec(ctx, UH, D, sel)
        return ru, rD

    if variant == Variant.U_UPWIND_ONLY:
        G = advect_velocity_L_vec(ctx, UH, u, sel, weight=D)
        G += forcing_F_vec(ctx, D, sel, UH=UH, f_q=f_q)
        x = ctx.solve_weighted("BDM2", D, G, rtol=rtol)
        ru = ctx.M1 @ x + divergence_term_vec(ctx, gamma)
        rD = div_flux_vec(ctx, F)
        return ru, rD

    # NON_EC: raw-test advection and forcing; not antisymmetric.
    ru = advect_velocity_L_vec(ctx, UH, u, sel, weight=None)
    ru += divergence_term_vec(ctx, gamma)
    ru += coriolis_term_vec(ctx, f_q, UH)
    rD = advect_depth_LD_vec(ctx, UH, D, sel)
    return ru, rD


def bracket_apply(ctx, variant, u, D, phys, x, y, rtol=1e-13):
    """Evaluate the bracket with (a, alpha) in the F slots, (c, gamma_c) in
    the H slots, at state (u, D); used by the antisymmetry checks."""
    variant = Variant(variant)
    a, alpha = x
    c, gamma_c = y
    sel = u
    f_q = phys.coriolis(ctx)

    if variant == Variant.ORIGINAL:
        q = potential_vorticity(ctx, u, D, phys, rtol=rtol)
        val = a @ vorticity_term_vec(ctx, q, c)
        val += a @ divergence_term_vec(ctx, gamma_c)
        val -= ctx.integrate(ctx.eval_vec_div(c) * ctx.eval_scalar("DG1", alpha))
        return val

    Ua = ctx.solve_weighted("BDM2", D, ctx.M1 @ a, rtol=rtol)
    Uc = ctx.solve_weighted("BDM2", D, ctx.M1 @ c, rtol=rtol)

    if variant == Variant.D_UPWIND:
        q = potential_vorticity(ctx, u, D, phys, rtol=rtol)
        val = a @ vorticity_term_vec(ctx, q, c)
        val += forcing_F_vec(ctx, D, sel, gamma=gamma_c) @ Ua
        val += advect_depth_LD_vec(ctx, Uc, D, sel) @ alpha
        return val

    if variant == Variant.FULL_UPWIND:
        val = advect_velocity_L_vec(ctx, Uc, u, sel, weight=D) @ Ua
        val += forcing_F_vec(ctx, D, sel, gamma=gamma_c, UH=Uc, f_q=f_q) @ Ua
        val += advect_depth_LD_vec(ctx, Uc, D, sel) @ alpha
        return val

    if variant == Variant.U_UPWIND_ONLY:
        val = advect_velocity_L_vec(ctx, Uc, u, sel, weight=D) @ Ua
        val += forcing_F_vec(ctx, D, sel, UH=Uc, f_q=f_q) @ Ua
        val += a @ divergence_term_vec(ctx, gamma_c)
        val -= ctx.integrate(ctx.eval_vec_div(c) * ctx.eval_scalar("DG1", alpha))
        return val

    val = advect_velocity_L_vec(ctx, Uc, u, sel, weight=None) @ a
    val += advect_depth_LD_vec(ctx, Uc, D, sel) @ alpha
    val += a @ divergence_term_vec(ctx, gamma_c)
    val += a @ coriolis_term_vec(ctx, f_q, Uc)
    return val
