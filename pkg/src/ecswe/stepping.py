"""Time integration: the energy-conserving Poisson integrator, the midpoint
scheme, and the Picard solver with explicit and implicit residual variants.

The Poisson integrator evaluates the bracket's state-dependent parts at the
midpoint state (ubar, Dbar) and fills the Hamiltonian slots with the
s-averaged variations; upwind traces are selected by ubar.  Residuals never
build the velocity recovery operator on test functions: every term of the
form G(U(Dbar, w)) is eliminated through an auxiliary Dbar-weighted mass
solve, following the weighted-test-function identity.
"""

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import operators as ops
from .errors import ConfigError
from .operators import Variant


class Scheme(str, Enum):
    POISSON = "poisson"
    MIDPOINT = "midpoint"


@dataclass
class StepConfig:
    dt: float
    scheme: Scheme = Scheme.POISSON
    picard_iterations: int = 4
    picard_mode: str = "explicit"  # "explicit" | "implicit"
    picard_rtol: float | None = None
    reference_height: float = 1.0
    lin_rtol: float = 1e-13
    inner_iterations: int = 20
    inner_tol: float = 1e-12

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.picard_iterations < 1:
            raise ConfigError("picard_iterations must be >= 1")
        if self.reference_height <= 0:
            raise ConfigError("reference_height must be positive")
        if self.picard_mode not in ("explicit", "implicit"):
            raise ConfigError(f"unknown picard mode {self.picard_mode!r}")
        self.scheme = Scheme(self.scheme)


@dataclass
class StepStats:
    iterations: int = 0
    residuals: list = field(default_factory=list)
    converged: bool = True


@dataclass
class TimeAveraged:
    """s-averaged Hamiltonian variations plus midpoint state fields."""
    ubar: np.ndarray
    Dbar: np.ndarray
    Fbar: np.ndarray
    dHdDbar: np.ndarray
    Ubar: np.ndarray


def time_averaged_variations(ctx, phys, un, Dn, u1, D1, scheme=Scheme.POISSON,
                             rtol=1e-13, ubar_x0=None):
    """Closed-form s-integrals of the Hamiltonian variations along the
    segment from (un, Dn) to (u1, D1), and the recovery field Ubar."""
    ubar = 0.5 * (un + u1)
    Dbar = 0.5 * (Dn + D1)
    bq = phys.bottom(ctx)
    if Scheme(scheme) == Scheme.POISSON:
        unq = ctx.eval_vec(un)
        u1q = ctx.eval_vec(u1)
        Dnq = ctx.eval_scalar("DG1", Dn)
        D1q = ctx.eval_scalar("DG1", D1)
        Fraw = (Dnq[:, :, None] * (unq + 0.5 * u1q)
                + D1q[:, :, None] * (0.5 * unq + u1q)) / 3.0
        Fbar = ctx.project_W1(Fraw)
        ke = (np.einsum("cqd,cqd->cq", unq, unq)
              + np.einsum("cqd,cqd->cq", unq, u1q)
              + np.einsum("cqd,cqd->cq", u1q, u1q)) / 6.0
        dHdDbar = ctx.project_W2(ke + phys.g * (0.5 * (Dnq + D1q) + bq))
        Ubar = ctx.solve_weighted("BDM2", Dbar, ctx.M1 @ Fbar,
                                  rtol=rtol, x0=ubar_x0)
    else:
        ubarq = ctx.eval_vec(ubar)
        Dbarq = ctx.eval_scalar("DG1", Dbar)
        Fbar = ctx.project_W1(Dbarq[:, :, None] * ubarq)
        ke = 0.5 * np.einsum("cqd,cqd->cq", ubarq, ubarq)
        dHdDbar = ctx.project_W2(ke + phys.g * (Dbarq + bq))
        # Fbar is of flux form P(Dbar ubar), so recovery is ubar pointwise.
        Ubar = ubar.copy()
    return TimeAveraged(ubar, Dbar, Fbar, dHdDbar, Ubar)


class Stepper:
    """Advances a state through the nonlinear Picard-solved implicit step."""

    def __init__(self, ctx, phys, variant, config):
        self.ctx = ctx
        self.phys = phys
        self.variant = Variant(variant)
        self.config = config
        if (config.picard_mode == "implicit"
                and self.variant != Variant.FULL_UPWIND):
            raise ConfigError(
                "implicit Picard mode is defined for the fully upwinded "
                "bracket only")
        self.f_q = phys.coriolis(ctx)
        self._jlu = self._factor_jacobian()
        self._x_ws = None      # warm starts for the weighted solves
        self._ubar_ws = None
        self._inner_rtol = config.lin_rtol

    # -- linearised Jacobian about the rest state (0, h) ----------------------

    def _factor_jacobian(self):
        ctx = self.ctx
        cfg = self.config
        mesh = ctx.mesh
        w = ctx.vrule.weights
        v1 = ctx.tab["BDM2"]["val"]
        d1 = ctx.tab["BDM2"]["div"]
        v2 = ctx.tab["DG1"]["val"]
        phi = np.einsum("cdk,qik->cqid", mesh.J, v1) / mesh.detp[:, None, None, None]
        kxphi = np.cross(mesh.k[:, None, None, :], phi)
        C_loc = np.einsum("cq,cqjd,cqid->cij", ctx.wdet * self.f_q,
                          kxphi, phi, optimize=True)
        B_loc = np.einsum("cq,qp,qj->cpj", ctx.wdet / mesh.detp[:, None], v2, d1)

        W1, W2 = ctx.W1, ctx.W2
        sC = W1.cell_signs
        C = sp.coo_matrix((
            (C_loc * sC[:, :, None] * sC[:, None, :]).ravel(),
            (np.repeat(W1.cell_dofs, 12, axis=1).ravel(),
             np.tile(W1.cell_dofs, (1, 12)).ravel())),
            shape=(W1.dim, W1.dim)).tocsr()
        B = sp.coo_matrix((
            (B_loc * sC[:, None, :]).ravel(),
            (np.repeat(W2.cell_dofs, 12, axis=1).ravel(),
             np.tile(W1.cell_dofs, (1, 3)).ravel())),
            shape=(W2.dim, W1.dim)).tocsr()
        half_dt = 0.5 * cfg.dt
        A = sp.bmat([
            [ctx.M1 + half_dt * C, -half_dt * self.phys.g * B.T],
            [half_dt * cfg.reference_height * B, ctx.M2],
        ]).tocsc()
        return spla.splu(A)

    # -- residual ---------------------------------------------------------------

    def _rhs_vectors(self, tav):
        """Per-variant RHS functionals, split into terms paired with the raw
        test function ('direct') and terms paired with U(Dbar, w) ('lifted'),
        plus the depth-equation functional."""
        ctx = self.ctx
        sel = tav.ubar
        direct = np.zeros(ctx.W1.dim)
        lifted = np.zeros(ctx.W1.dim)
        v = self.variant
        if v in (Variant.ORIGINAL, Variant.D_UPWIND):
            qbar = ops.potential_vorticity(ctx, tav.ubar, tav.Dbar, self.phys,
                                           rtol=self._inner_rtol)
            direct += ops.vorticity_term_vec(ctx, qbar, tav.Fbar)
        if v in (Variant.ORIGINAL, Variant.U_UPWIND_ONLY, Variant.NON_EC):
            direct += ops.divergence_term_vec(ctx, tav.dHdDbar)
        if v == Variant.NON_EC:
            direct += ops.advect_velocity_L_vec(ctx, tav.Ubar, tav.ubar, sel,
                                                weight=None)
            direct += ops.coriolis_term_vec(ctx, self.f_q, tav.Ubar)
        if v in (Variant.FULL_UPWIND, Variant.U_UPWIND_ONLY):
            lifted += ops.advect_velocity_L_vec(ctx, tav.Ubar, tav.ubar, sel,
                                                weight=tav.Dbar)
            gamma = tav.dHdDbar if v == Variant.FULL_UPWIND else None
            lifted += ops.forcing_F_vec(ctx, tav.Dbar, sel, gamma=gamma,
                                        UH=tav.Ubar, f_q=self.f_q)
        if v == Variant.D_UPWIND:
            lifted += ops.forcing_F_vec(ctx, tav.Dbar, sel, gamma=tav.dHdDbar)

        if v in (Variant.FULL_UPWIND, Variant.D_UPWIND, Variant.NON_EC):
            rD = ops.advect_depth_LD_vec(ctx, tav.Ubar, tav.Dbar, sel)
        else:
            rD = ops.div_flux_vec(ctx, tav.Fbar)
        return direct, lifted, rD

    def residual(self, un, Dn, u1, D1):
        """Explicit-mode residual (Ru, RD) at the current Picard iterate."""
        ctx = self.ctx
        dt = self.config.dt
        with ctx.memo():
            tav = time_averaged_variations(ctx, self.phys, un, Dn, u1, D1,
                                           self.config.scheme,
                                           rtol=self._inner_rtol,
                                           ubar_x0=self._ubar_ws)
            self._ubar_ws = tav.Ubar
            ctx.check_positive(tav.Dbar, "midpoint depth")
            direct, lifted, rD_vec = self._rhs_vectors(tav)
            Ru = ctx.M1 @ (u1 - un) - dt * direct
            if np.any(lifted):
                x = ctx.solve_weighted("BDM2", tav.Dbar, dt * lifted,
                                       rtol=self._inner_rtol, x0=self._x_ws,
                                       check_positive=False)
                self._x_ws = x
                Ru -= ctx.M1 @ x
            RD = ctx.M2 @ (D1 - Dn) - dt * rD_vec
        return Ru, RD

    def advected_forced(self, un, Dn, u1, D1):
        """The (u_advected, u_forced, D_advected) split of the fully
        upwinded explicit residual; exposed for verification."""
        ctx = self.ctx
        dt = self.config.dt
        cfg = self.config
        tav = time_averaged_variations(ctx, self.phys, un, Dn, u1, D1,
                                       cfg.scheme, rtol=cfg.lin_rtol)
        sel = tav.ubar
        Gadv = ops.advect_velocity_L_vec(ctx, tav.Ubar, tav.ubar, sel,
                                         weight=tav.Dbar)
        Gforce = ops.forcing_F_vec(ctx, tav.Dbar, sel, gamma=tav.dHdDbar,
                                   UH=tav.Ubar, f_q=self.f_q)
        blocks = ctx.weighted_mass_blocks("BDM2", tav.Dbar)
        ua = ctx.solve_weighted("BDM2", tav.Dbar,
                                dt * Gadv + ctx.block_matvec("BDM2", blocks, un),
                                rtol=cfg.lin_rtol)
        uf = ctx.solve_weighted("BDM2", tav.Dbar, dt * Gforce, rtol=cfg.lin_rtol)
        rD = ops.advect_depth_LD_vec(ctx, tav.Ubar, tav.Dbar, sel)
        Da = Dn + ctx.mass_lu("DG1").solve(dt * rD)
        return ua, uf, Da

    def residual_implicit(self, un, Dn, u1, D1):
        """Implicit-mode residual: the advected fields solve their own
        midpoint-averaged systems and Da feeds the pressure variation."""
        ctx = self.ctx
        cfg = self.config
        dt = cfg.dt
        with ctx.memo():
            return self._residual_implicit_body(un, Dn, u1, D1, ctx, cfg, dt)

    def _residual_implicit_body(self, un, Dn, u1, D1, ctx, cfg, dt):
        tav = time_averaged_variations(ctx, self.phys, un, Dn, u1, D1,
                                       cfg.scheme, rtol=cfg.lin_rtol,
                                       ubar_x0=self._ubar_ws)
        self._ubar_ws = tav.Ubar
        ctx.check_positive(tav.Dbar, "midpoint depth")
        sel = tav.ubar

        Da = Dn.copy()
        m2lu = ctx.mass_lu("DG1")
        for _ in range(cfg.inner_iterations):
            rD_vec = ops.advect_depth_LD_vec(ctx, tav.Ubar, 0.5 * (Dn + Da), sel)
            Da_new = Dn + m2lu.solve(dt * rD_vec)
            delta = np.linalg.norm(Da_new - Da)
            Da = Da_new
            if delta <= cfg.inner_tol * max(np.linalg.norm(Da), 1e-300):
                break

        unq = ctx.eval_vec(un)
        u1q = ctx.eval_vec(u1)
        ke = (np.einsum("cqd,cqd->cq", unq, unq)
              + np.einsum("cqd,cqd->cq", unq, u1q)
              + np.einsum("cqd,cqd->cq", u1q, u1q)) / 6.0
        Dhatq = ctx.eval_scalar("DG1", 0.5 * (Dn + Da))
        gamma_hat = ctx.project_W2(ke + self.phys.g * (Dhatq + self.phys.bottom(ctx)))

        blocks = ctx.weighted_mass_blocks("BDM2", tav.Dbar)
        mw_un = ctx.block_matvec("BDM2", blocks, un)
        ua = un.copy()
        for _ in range(cfg.inner_iterations):
            Gadv = ops.advect_velocity_L_vec(ctx, tav.Ubar, 0.5 * (un + ua), sel,
                                             weight=tav.Dbar)
            ua_new = ctx.solve_weighted("BDM2", tav.Dbar, dt * Gadv + mw_un,
                                        rtol=cfg.lin_rtol, x0=ua,
                                        check_positive=False)
            delta = np.linalg.norm(ua_new - ua)
            ua = ua_new
            if delta <= cfg.inner_tol * max(np.linalg.norm(ua), 1e-300):
                break

        Gforce = ops.forcing_F_vec(ctx, tav.Dbar, sel, gamma=gamma_hat,
                                   UH=tav.Ubar, f_q=self.f_q)
        uf = ctx.solve_weighted("BDM2", tav.Dbar, dt * Gforce,
                                rtol=cfg.lin_rtol, check_positive=False)
        Ru = ctx.M1 @ (u1 - ua - uf)
        RD = ctx.M2 @ (D1 - Da)
        return Ru, RD

    # -- Picard loop -------------------------------------------------------------

    def picard_update(self, Ru, RD, u1, D1):
        """One linearised-Jacobian correction z <- z + dz, J dz = -R."""
        n1 = self.ctx.W1.dim
        dz = self._jlu.solve(-np.concatenate([Ru, RD]))
        return u1 + dz[:n1], D1 + dz[n1:]

    def step(self, un, Dn):
        cfg = self.config
        u1, D1 = un.copy(), Dn.copy()
        sD = max(np.linalg.norm(self.ctx.M2 @ Dn), 1e-300)
        # velocity residual scale, with a depth-based floor for (near-)rest
        # states where the velocity norm itself is zero
        su = max(np.linalg.norm(self.ctx.M1 @ un), 1e-12 * sD)
        res_fn = (self.residual if cfg.picard_mode == "explicit"
                  else self.residual_implicit)
        stats = StepStats()
        self._inner_rtol = cfg.lin_rtol
        for k in range(cfg.picard_iterations):
            Ru, RD = res_fn(un, Dn, u1, D1)
            rel = max(np.linalg.norm(Ru) / su, np.linalg.norm(RD) / sD)
            stats.residuals.append(rel)
            # Inexact inner solves: tighten with the outer residual.
            self._inner_rtol = min(1e-6, max(cfg.lin_rtol, 0.03 * rel))
            if cfg.picard_rtol is not None and rel <= cfg.picard_rtol:
                stats.iterations = k
                return u1, D1, stats
            u1, D1 = self.picard_update(Ru, RD, u1, D1)
            stats.iterations = k + 1
        if cfg.picard_rtol is not None:
            self._inner_rtol = cfg.lin_rtol
            Ru, RD = res_fn(un, Dn, u1, D1)
            rel = max(np.linalg.norm(Ru) / su, np.linalg.norm(RD) / sD)
            stats.residuals.append(rel)
            if rel > cfg.picard_rtol:
                stats.converged = False
                warnings.warn(
                    f"Picard stalled at relative residual {rel:.3e} after "
                    f"{cfg.picard_iterations} iterations")
        return u1, D1, stats


def poisson_step(ctx, phys, variant, config, un, Dn):
    """One-shot step helper; builds a Stepper per call."""
    stepper = Stepper(ctx, phys, variant, config)
    return stepper.step(un, Dn)
