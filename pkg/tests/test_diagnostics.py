import numpy as np

import oracles as orc
from conftest import random_state
from ecswe import diagnostics as diag
from ecswe import operators as ops
from ecswe.scenarios import make_scenario


def constant_field(ctx, value):
    D = np.zeros(ctx.W2.dim)
    D[ctx.W2.cell_dofs] = value
    return D


def test_enstrophy_constant_state(torus8, plane_physics):
    ctx = torus8
    h = 2.0
    Z = diag.enstrophy(ctx, np.zeros(ctx.W1.dim), constant_field(ctx, h),
                       plane_physics)
    f = plane_physics.f_constant
    expect = 0.5 * f * f / h * ctx.mesh.total_area()
    assert abs(Z - expect) <= 1e-11 * expect


def test_enstrophy_dense_oracle(torus8, plane_physics, rng):
    ctx = torus8
    u, D = random_state(ctx, rng)
    Z = diag.enstrophy(ctx, u, D, plane_physics)
    q = ops.potential_vorticity(ctx, u, D, plane_physics)
    total = 0.0
    pts, wts = orc.VOL_RULE.points, orc.VOL_RULE.weights
    for c in range(ctx.mesh.ncells):
        fr = orc.CellFrame(ctx, c)
        qq = fr.scalar("CG3", q, pts)
        Dq = fr.scalar("DG1", D, pts)
        total += 0.5 * np.sum(wts * fr.detp * Dq * qq * qq)
    assert abs(Z - total) <= 1e-11 * abs(total)


def test_l2_error_zero_for_exact(torus8, rng):
    ctx = torus8
    D = rng.normal(size=ctx.W2.dim)
    assert diag.l2_error_scalar(ctx, D, ctx.eval_scalar("DG1", D)) <= \
        1e-12 * np.abs(D).max()


def test_l2_error_constant_offset(torus8):
    ctx = torus8
    c = 1.7
    err = diag.l2_error_scalar(ctx, constant_field(ctx, 3.0),
                               np.full((ctx.mesh.ncells, ctx.nq), 3.0 + c))
    assert abs(err - c * np.sqrt(ctx.mesh.total_area())) < 1e-12


def test_jump_seminorm(torus8, rng):
    ctx = torus8
    # continuous field: zero jump
    assert diag.depth_jump_seminorm(ctx, constant_field(ctx, 5.0)) < 1e-13
    # hand-computed value for a one-cell indicator
    D = np.zeros(ctx.W2.dim)
    D[ctx.W2.cell_dofs[0]] = 1.0
    expect2 = 0.0
    for f in range(ctx.mesh.nfacets):
        cp, cm = ctx.mesh.facet_cells[f]
        if 0 in (cp, cm):
            expect2 += ctx.mesh.facet_lengths[f]
    got = diag.depth_jump_seminorm(ctx, D)
    assert abs(got - np.sqrt(expect2)) < 1e-12


def test_collector_series(torus8, plane_physics, rng):
    ctx = torus8
    u, D = random_state(ctx, rng)
    col = diag.DiagnosticsCollector(ctx, plane_physics)
    r0 = col.record(0, 0.0, u, D)
    r1 = col.record(1, 0.1, u, D)
    assert r0.rel_energy_err == 0.0 and r0.rel_enstrophy_err == 0.0
    assert r1.rel_energy_err == 0.0  # same state, same energy
    assert diag.relative_energy_error(col.records) == [0.0, 0.0]
    assert r0.l2_err_D is None


def test_collector_l2_columns():
    sc = make_scenario("williamson2", refinement=1)
    col = diag.DiagnosticsCollector(sc.ctx, sc.physics, sc.analytic_u,
                                    sc.analytic_D)
    r = col.record(0, 0.0, sc.u0, sc.D0)
    assert r.l2_err_D is not None and r.l2_err_D > 0
    assert r.l2_err_u is not None and r.l2_err_u > 0
