#!/usr/bin/env python3
"""Render field panels from a solver VTK snapshot.

Modes:
  contours  -- filled/line contours of the depth field or velocity magnitude,
               in the plane's xy coordinates or the sphere's lon-lat chart;
  latband   -- potential-vorticity contour lines in a latitude band, with a
               fixed contour spacing (negative values blue, positive red).

    plot_fields.py snap_000500.vtk --field depth --mode contours \\
        --levels 30 --vmin 0.75 --vmax 1.5 --out depth.png
    plot_fields.py snap_000500.vtk --field pv --mode latband \\
        --contour-spacing 1.25e-9 --lat-min 10 --lat-max 80 --out pv.png
"""

import argparse
import sys

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402

from vtk_reader import VtkFormatError, read_vtk  # noqa: E402

STYLE = {"figure.figsize": (7.0, 4.2), "font.size": 10}


def cell_to_point(values, cells, npts):
    """Average cell data onto vertices for contouring."""
    acc = np.zeros(npts)
    cnt = np.zeros(npts)
    for k in range(3):
        np.add.at(acc, cells[:, k], values)
        np.add.at(cnt, cells[:, k], 1.0)
    return acc / np.maximum(cnt, 1.0)


def chart(points):
    """Plot coordinates: xy for planar data, lon-lat degrees for spherical."""
    z = points[:, 2]
    if np.abs(z).max() <= 1e-12 * max(np.abs(points).max(), 1.0):
        return points[:, 0], points[:, 1], False
    r = np.linalg.norm(points, axis=1)
    lon = np.degrees(np.arctan2(points[:, 1], points[:, 0]))
    lat = np.degrees(np.arcsin(np.clip(z / r, -1.0, 1.0)))
    return lon, lat, True


def good_triangles(x, cells, spherical):
    """Mask triangles that wrap around the periodic seam / date line."""
    if not spherical:
        span = x[cells].max(axis=1) - x[cells].min(axis=1)
        return span < 0.5 * (x.max() - x.min())
    span = x[cells].max(axis=1) - x[cells].min(axis=1)
    return span < 180.0


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("vtk", help="snapshot file")
    parser.add_argument("--field", choices=["depth", "velocity", "pv"],
                        default="depth")
    parser.add_argument("--mode", choices=["contours", "latband"],
                        default="contours")
    parser.add_argument("--levels", type=int, default=30,
                        help="number of contour levels (contours mode)")
    parser.add_argument("--vmin", type=float, default=None)
    parser.add_argument("--vmax", type=float, default=None)
    parser.add_argument("--contour-spacing", type=float, default=None,
                        dest="spacing", help="contour interval (latband mode)")
    parser.add_argument("--lat-min", type=float, default=10.0)
    parser.add_argument("--lat-max", type=float, default=80.0)
    parser.add_argument("--title", default=None)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    if args.levels < 2:
        print("error: need at least 2 contour levels", file=sys.stderr)
        return 2
    try:
        data = read_vtk(args.vtk)
    except (VtkFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    points, cells = data["points"], data["cells"]
    npts = len(points)
    if args.field == "depth":
        if "depth" not in data["cell_data"]:
            print("error: snapshot lacks 'depth' cell data", file=sys.stderr)
            return 2
        vals = cell_to_point(data["cell_data"]["depth"], cells, npts)
    elif args.field == "velocity":
        if "velocity" not in data["cell_data"]:
            print("error: snapshot lacks 'velocity' cell data", file=sys.stderr)
            return 2
        vals = cell_to_point(np.linalg.norm(data["cell_data"]["velocity"],
                                            axis=1), cells, npts)
    else:
        if "potential_vorticity" not in data["point_data"]:
            print("error: snapshot lacks 'potential_vorticity' point data",
                  file=sys.stderr)
            return 2
        vals = data["point_data"]["potential_vorticity"]

    x, y, spherical = chart(points)
    tri = mtri.Triangulation(x, y, cells[good_triangles(x, cells, spherical)])

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if args.mode == "contours":
            vmin = args.vmin if args.vmin is not None else vals.min()
            vmax = args.vmax if args.vmax is not None else vals.max()
            if vmax <= vmin:
                vmax = vmin + 1.0
            levels = np.linspace(vmin, vmax, args.levels)
            m = ax.tricontourf(tri, vals, levels=levels, cmap="RdBu_r",
                               extend="both")
            ax.tricontour(tri, vals, levels=levels, colors="k",
                          linewidths=0.3)
            fig.colorbar(m, ax=ax, shrink=0.85)
        else:
            if args.spacing is None or args.spacing <= 0:
                print("error: latband mode needs a positive --contour-spacing",
                      file=sys.stderr)
                return 2
            if not spherical:
                print("error: latband mode needs a spherical snapshot",
                      file=sys.stderr)
                return 2
            sp = args.spacing
            lo = np.floor(vals.min() / sp) * sp
            hi = np.ceil(vals.max() / sp) * sp
            levels = np.arange(lo, hi + 0.5 * sp, sp)
            neg = levels[levels < -0.25 * sp]
            pos = levels[levels > 0.25 * sp]
            if len(neg):
                ax.tricontour(tri, vals, levels=neg, colors="blue",
                              linewidths=0.6)
            if len(pos):
                ax.tricontour(tri, vals, levels=pos, colors="red",
                              linewidths=0.6)
            ax.set_ylim(args.lat_min, args.lat_max)
            ax.set_xlabel("longitude [deg]")
            ax.set_ylabel("latitude [deg]")
        if spherical and args.mode == "contours":
            ax.set_xlabel("longitude [deg]")
            ax.set_ylabel("latitude [deg]")
        if args.title:
            ax.set_title(args.title)
        fig.tight_layout()
        fig.savefig(args.out, dpi=150, metadata={"Software": "plotviz"})
        plt.close(fig)
    return 0


if __name__ == "__main__":
    sys.exit(main())
