"""Reader for the solver's legacy ASCII VTK snapshots.

Parses an unstructured triangle grid with CELL_DATA scalars/vectors and
POINT_DATA scalars into plain numpy arrays.  Only the subset of the legacy
format the solver emits is supported.
"""

import numpy as np


class VtkFormatError(ValueError):
    pass


def read_vtk(path):
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0

    def expect(*words):
        nonlocal pos
        for w in words:
            if pos >= len(tokens) or tokens[pos].upper() != w:
                raise VtkFormatError(f"expected {w!r} near token {pos} in {path}")
            pos += 1

    def take(n):
        nonlocal pos
        out = tokens[pos:pos + n]
        if len(out) != n:
            raise VtkFormatError(f"unexpected end of file in {path}")
        pos += n
        return out

    # header: "# vtk DataFile Version x.y", title line, ASCII, dataset
    if tokens[0] != "#" or tokens[1].lower() != "vtk":
        raise VtkFormatError(f"{path} is not a VTK file")
    while tokens[pos].upper() != "ASCII":
        pos += 1
    expect("ASCII", "DATASET", "UNSTRUCTURED_GRID", "POINTS")
    npts = int(take(1)[0])
    take(1)  # dtype
    points = np.array(take(3 * npts), dtype=float).reshape(npts, 3)
    expect("CELLS")
    ncells = int(take(1)[0])
    take(1)  # list size
    raw = np.array(take(4 * ncells), dtype=int).reshape(ncells, 4)
    if not np.all(raw[:, 0] == 3):
        raise VtkFormatError("only triangle cells are supported")
    cells = raw[:, 1:]
    expect("CELL_TYPES")
    take(1)
    take(ncells)

    data = {"points": points, "cells": cells, "cell_data": {}, "point_data": {}}
    section = None
    while pos < len(tokens):
        word = tokens[pos].upper()
        if word == "CELL_DATA":
            pos += 2
            section = ("cell_data", ncells)
        elif word == "POINT_DATA":
            pos += 2
            section = ("point_data", npts)
        elif word == "SCALARS":
            name = tokens[pos + 1]
            pos += 4  # SCALARS name type ncomp
            expect("LOOKUP_TABLE")
            take(1)
            n = section[1]
            data[section[0]][name] = np.array(take(n), dtype=float)
        elif word == "VECTORS":
            name = tokens[pos + 1]
            pos += 3
            n = section[1]
            data[section[0]][name] = np.array(take(3 * n), dtype=float).reshape(n, 3)
        else:
            raise VtkFormatError(f"unsupported VTK section {tokens[pos]!r}")
    return data
