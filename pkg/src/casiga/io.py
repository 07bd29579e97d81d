"""Patch serialization, convergence tables and legacy VTK field files."""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from .splines import KnotVector, NurbsPatch

TABLE_COLUMNS = ("level", "elements_per_direction", "n_dof", "qoi", "e_u", "e_sigma",
                 "rate_u", "rate_sigma")


def patch_to_dict(patch):
    return {
        "degree": patch.knot_vectors[0].degree,
        "knots": [kv.knots.tolist() for kv in patch.knot_vectors],
        "control_points": patch.control_points.tolist(),
        "weights": patch.weights.tolist(),
    }


def patch_from_dict(data):
    p = int(data["degree"])
    kvs = tuple(KnotVector(k, p) for k in data["knots"])
    return NurbsPatch(kvs, np.array(data["control_points"], dtype=float),
                      np.array(data["weights"], dtype=float))


def save_patch(patch, path):
    with open(path, "w") as fh:
        json.dump(patch_to_dict(patch), fh, indent=1)
        fh.write("\n")


def load_patch(path):
    with open(path) as fh:
        return patch_from_dict(json.load(fh))


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return "%.17g" % value


def write_table(report, path):
    """Comma-separated convergence table, 17 significant digits, empty = not applicable."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for row in report.rows:
            w.writerow([_fmt(getattr(row, c if c != "elements_per_direction" else "elements"))
                        for c in TABLE_COLUMNS])


def read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (float(v) if v else float("nan")) for k, v in r.items()} for r in rows]


def _write_block(fh, array, fmt, per_line):
    flat = np.asarray(array, dtype=float).reshape(-1, per_line)
    np.savetxt(fh, flat, fmt=fmt)


def write_vtk_structured(path, fields, nu=None, title="casiga field samples", fmt="%.9g"):
    """Write sampled fields as an ASCII legacy-VTK STRUCTURED_GRID.

    ``fields`` is the dict from :func:`casiga.benchmarks.sample_grid`. Points
    are padded to 3D; for plane strain the stress tensor carries
    sigma_zz = nu (sigma_xx + sigma_yy).
    """
    x = fields["x"]
    d = x.shape[-1]
    grid_shape = x.shape[:-1][::-1]  # first direction first
    dims = list(grid_shape) + [1] * (3 - d)
    n = int(np.prod(dims))
    pts = np.zeros((n, 3))
    pts[:, :d] = x.reshape(n, d)
    u = np.zeros((n, 3))
    u[:, :d] = fields["u"].reshape(n, d)
    sig = np.zeros((n, 3, 3))
    sig[:, :d, :d] = fields["stress"].reshape(n, d, d)
    if d == 2:
        if nu is None:
            raise ValueError("plane-strain export needs Poisson's ratio")
        sig[:, 2, 2] = nu * (sig[:, 0, 0] + sig[:, 1, 1])
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n%s\nASCII\nDATASET STRUCTURED_GRID\n" % title)
        fh.write("DIMENSIONS %d %d %d\nPOINTS %d double\n" % (dims[0], dims[1], dims[2], n))
        _write_block(fh, pts, fmt, 3)
        fh.write("POINT_DATA %d\nVECTORS displacement double\n" % n)
        _write_block(fh, u, fmt, 3)
        fh.write("TENSORS stress double\n")
        _write_block(fh, sig, fmt, 3)
        fh.write("SCALARS hydrostatic_stress double 1\nLOOKUP_TABLE default\n")
        _write_block(fh, fields["hydrostatic"].reshape(n, 1), fmt, 1)
        for name, (i, j) in (("sigma_xx", (0, 0)), ("sigma_yy", (1, 1)), ("sigma_zz", (2, 2)),
                             ("sigma_xy", (0, 1))):
            fh.write("SCALARS %s double 1\nLOOKUP_TABLE default\n" % name)
            _write_block(fh, sig[:, i, j].reshape(n, 1), fmt, 1)


def read_vtk_structured(path):
    """Minimal reader for files written by :func:`write_vtk_structured`."""
    with open(path) as fh:
        lines = fh.read().split("\n")
    out = {}
    i = 0
    n = None
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        key = parts[0]
        if key == "DIMENSIONS":
            out["dimensions"] = tuple(int(v) for v in parts[1:4])
        elif key == "POINTS":
            n = int(parts[1])
            out["points"] = np.loadtxt(lines[i + 1 : i + 1 + n]).reshape(n, 3)
            i += n
        elif key == "VECTORS":
            out[parts[1]] = np.loadtxt(lines[i + 1 : i + 1 + n]).reshape(n, 3)
            i += n
        elif key == "TENSORS":
            out[parts[1]] = np.loadtxt(lines[i + 1 : i + 1 + 3 * n]).reshape(n, 3, 3)
            i += 3 * n
        elif key == "SCALARS":
            out[parts[1]] = np.loadtxt(lines[i + 2 : i + 2 + n]).reshape(n)
            i += n + 1
        i += 1
    return out
