"""Serialization: field files, tensor files, trajectories, reports.

Reports are emitted through a canonical JSON writer (sorted keys, floats at
17 significant digits) so identical runs produce byte-identical files.
Torus field files store one representative per antipodal frequency pair and
are completed through the reality map on load.
"""

import json
from pathlib import Path

import numpy as np

from quadflow import __version__
from quadflow.backend import backend_name
from quadflow.errors import UsageError
from quadflow.harmonics import SphereField, harmonic_basis, so_generators
from quadflow.polynomials import Polynomial, PolynomialField
from quadflow.tensor import QuadraticTensor
from quadflow.torus import TorusField


# ----------------------------------------------------------------------
# canonical JSON
# ----------------------------------------------------------------------

def _canonical(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            raise ValueError("non-finite float in report")
        out.append(format(v, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for q, key in enumerate(sorted(obj)):
            if q:
                out.append(",")
            if not isinstance(key, str):
                raise TypeError("report keys must be strings")
            out.append(json.dumps(key))
            out.append(":")
            _canonical(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for q, item in enumerate(obj):
            if q:
                out.append(",")
            _canonical(item, out)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _canonical(obj.tolist(), out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_canonical(obj):
    out = []
    _canonical(obj, out)
    return "".join(out) + "\n"


def provenance(seed=None, rtol=None, atol=None, **extra):
    meta = {"tool": "quadflow", "version": __version__, "backend": backend_name()}
    if seed is not None:
        meta["seed"] = int(seed)
    if rtol is not None:
        meta["rtol"] = float(rtol)
    if atol is not None:
        meta["atol"] = float(atol)
    meta.update(extra)
    return meta


def write_report(path, payload):
    text = dump_canonical(payload)
    Path(path).write_text(text)
    return text


# ----------------------------------------------------------------------
# torus fields
# ----------------------------------------------------------------------

def torus_field_document(field):
    """Representative-only record; load completes the antipodal partners."""
    terms = []
    for k, (a, b) in field.coefficients.items():
        nk = tuple(-c for c in k)
        if k < nk:
            continue  # partner carries the pair
        terms.append({"k": list(k), "a": list(map(float, a)), "b": list(map(float, b))})
    return {
        "kind": "torus-field",
        "n": field.n,
        "cutoff": float(field.cutoff),
        "terms": terms,
    }


def torus_field_from_document(doc):
    if doc.get("kind") != "torus-field":
        raise UsageError("not a torus-field document")
    coeffs = {tuple(t["k"]): (t["a"], t["b"]) for t in doc["terms"]}
    return TorusField(doc["n"], coeffs, doc.get("cutoff")).completed()


def save_torus_field(path, field):
    Path(path).write_text(dump_canonical(torus_field_document(field)))


def load_torus_field(path):
    return torus_field_from_document(json.loads(Path(path).read_text()))


# ----------------------------------------------------------------------
# polynomial and sphere fields
# ----------------------------------------------------------------------

def polynomial_field_document(field):
    comps = []
    for p in field.components:
        terms = p.sorted_terms()
        comps.append({
            "exponents": [list(e) for e, _ in terms],
            "coefficients": [float(c) for _, c in terms],
        })
    return {"kind": "polynomial-field", "nvars": field.nvars, "components": comps}


def polynomial_field_from_document(doc):
    if doc.get("kind") != "polynomial-field":
        raise UsageError("not a polynomial-field document")
    nvars = doc["nvars"]
    comps = []
    for rec in doc["components"]:
        terms = {tuple(e): c for e, c in zip(rec["exponents"], rec["coefficients"])}
        comps.append(Polynomial(nvars, terms))
    return PolynomialField(comps)


def save_polynomial_field(path, field):
    Path(path).write_text(dump_canonical(polynomial_field_document(field)))


def load_polynomial_field(path):
    return polynomial_field_from_document(json.loads(Path(path).read_text()))


def sphere_field_document(field):
    return {
        "kind": "sphere-field",
        "n": field.n,
        "max_degree": field.basis.max_degree,
        "basis_hash": field.basis.content_hash(),
        "coefficients": field.coefficients.tolist(),
    }


def sphere_field_from_document(doc):
    if doc.get("kind") != "sphere-field":
        raise UsageError("not a sphere-field document")
    basis = harmonic_basis(doc["n"], doc["max_degree"])
    if doc.get("basis_hash") and doc["basis_hash"] != basis.content_hash():
        raise UsageError("sphere-field file was written against a different basis")
    gens = so_generators(doc["n"])
    return SphereField(basis, gens, np.array(doc["coefficients"]))


def save_sphere_field(path, field):
    Path(path).write_text(dump_canonical(sphere_field_document(field)))


def load_sphere_field(path):
    return sphere_field_from_document(json.loads(Path(path).read_text()))


def load_field(path):
    """Dispatch on the document kind."""
    doc = json.loads(Path(path).read_text())
    kind = doc.get("kind")
    if kind == "torus-field":
        return torus_field_from_document(doc)
    if kind == "sphere-field":
        return sphere_field_from_document(doc)
    if kind == "polynomial-field":
        return polynomial_field_from_document(doc)
    raise UsageError(f"unknown field document kind {kind!r}")


# ----------------------------------------------------------------------
# tensors
# ----------------------------------------------------------------------

def tensor_document(tensor):
    return {
        "kind": "quadratic-tensor",
        "d": tensor.d,
        "certified": bool(tensor.certified),
        "entries": [[int(i), int(j), int(k), float(v)] for i, j, k, v in tensor.entry_list()],
    }


def tensor_from_document(doc):
    if doc.get("kind") != "quadratic-tensor":
        raise UsageError("not a quadratic-tensor document")
    return QuadraticTensor(doc["d"], doc["entries"], certified=doc.get("certified", False))


def save_tensor(path, tensor):
    Path(path).write_text(dump_canonical(tensor_document(tensor)))


def load_tensor(path):
    return tensor_from_document(json.loads(Path(path).read_text()))


# ----------------------------------------------------------------------
# trajectories and point clouds
# ----------------------------------------------------------------------

def save_trajectory_csv(path, trajectory):
    dim = trajectory.dim
    header = "t," + ",".join(f"y_{i + 1}" for i in range(dim))
    lines = [header]
    for t, row in zip(trajectory.t, trajectory.y):
        lines.append(",".join(format(v, ".17g") for v in (t, *row)))
    Path(path).write_text("\n".join(lines) + "\n")


def save_points_csv(path, times, points):
    dim = points.shape[1] if points.size else 0
    header = "t," + ",".join(f"y_{i + 1}" for i in range(dim))
    lines = [header]
    for t, row in zip(times, points):
        lines.append(",".join(format(v, ".17g") for v in (t, *row)))
    Path(path).write_text("\n".join(lines) + "\n")
