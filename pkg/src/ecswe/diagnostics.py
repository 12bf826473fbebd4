"""Per-step scalar diagnostics: energy, mass, potential enstrophy, L2 errors.

Potential enstrophy is taken as Z = 1/2 int D q^2 dx with the diagnostic
potential vorticity q; the relative error series are measured against the
first recorded step.
"""

from dataclasses import dataclass

import numpy as np

from . import operators as ops


@dataclass
class DiagnosticsRecord:
    step: int
    time: float
    energy: float
    rel_energy_err: float
    mass: float
    enstrophy: float
    rel_enstrophy_err: float
    l2_err_u: float = None
    l2_err_D: float = None


def enstrophy(ctx, u, D, phys):
    q = ops.potential_vorticity(ctx, u, D, phys)
    qq = ctx.eval_scalar("CG3", q)
    Dq = ctx.eval_scalar("DG1", D)
    return 0.5 * ctx.integrate(Dq * qq * qq)


def l2_error_scalar(ctx, coeffs, exact_vals):
    diff = ctx.eval_scalar("DG1", coeffs) - exact_vals
    return np.sqrt(ctx.integrate(diff * diff))


def l2_error_vec(ctx, coeffs, exact_vals):
    # Discrete velocities live in the cell planes; compare against the
    # in-plane part of the reference field.
    kn = np.einsum("cqd,cqd->cq", exact_vals, np.broadcast_to(
        ctx.kvol, exact_vals.shape))
    diff = ctx.eval_vec(coeffs) - (exact_vals - kn[:, :, None] * ctx.kvol)
    return np.sqrt(ctx.integrate(np.einsum("cqd,cqd->cq", diff, diff)))


def depth_jump_seminorm(ctx, D):
    """sqrt(sum_facets int [[D]]^2 dS), the depth-discontinuity measure."""
    jump = ctx.feval_scalar("DG1", D, 0) - ctx.feval_scalar("DG1", D, 1)
    return float(np.sqrt(np.sum(ctx.fweights * jump * jump)))


def relative_energy_error(records):
    return [r.rel_energy_err for r in records]


class DiagnosticsCollector:
    """Accumulates one DiagnosticsRecord per sampled step."""

    def __init__(self, ctx, phys, analytic_u=None, analytic_D=None):
        self.ctx = ctx
        self.phys = phys
        self.analytic_u = analytic_u
        self.analytic_D = analytic_D
        self.records = []
        self._H0 = None
        self._Z0 = None

    def record(self, step, time, u, D):
        ctx = self.ctx
        H = ops.energy(ctx, u, D, self.phys)
        Z = enstrophy(ctx, u, D, self.phys)
        m = ctx.mass_scalar(D)
        if self._H0 is None:
            self._H0, self._Z0 = H, Z
        rec = DiagnosticsRecord(
            step=step, time=time, energy=H,
            rel_energy_err=(H - self._H0) / self._H0,
            mass=m, enstrophy=Z,
            rel_enstrophy_err=(Z - self._Z0) / self._Z0,
        )
        if self.analytic_D is not None:
            rec.l2_err_D = l2_error_scalar(ctx, D, self.analytic_D(ctx.vpoints))
        if self.analytic_u is not None:
            rec.l2_err_u = l2_error_vec(ctx, u, self.analytic_u(ctx.vpoints))
        self.records.append(rec)
        return rec
