"""CSV datasets and JSON model files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .activations import exact_activation, synth_antisymmetric, synth_rbf_kernel, synth_symmetric
from .catalog import DEFAULT_PARAMS, catalog_profile
from .lp import LpGrid, LpModel
from .nullspace import Polynomial
from .rbf import RbfModel
from .sparse import NeuralModel, RidgeAtom

SCHEMA_VERSION = 1


class DatasetError(ValueError):
    pass


class ModelFileError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray | None
    source: str = ""

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def M(self) -> int:
        return self.X.shape[0]


def load_dataset(path, require_y: bool = True) -> Dataset:
    """Read a CSV with header x1..xd[,y]; every cell must be a finite number."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    has_y = header[-1] == "y"
    feats = header[:-1] if has_y else header
    if not feats or feats != [f"x{i + 1}" for i in range(len(feats))]:
        raise DatasetError(f"{path}: header must read x1..xd[,y], got {','.join(header)}")
    if require_y and not has_y:
        raise DatasetError(f"{path}: missing y column")
    if len(rows) == 1:
        raise DatasetError(f"{path}: no data rows")
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetError(f"{path}: line {i} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DatasetError(f"{path}: line {i}, column {header[j]}: non-numeric cell {cell!r}") from None
            if not math.isfinite(v):
                raise DatasetError(f"{path}: line {i}, column {header[j]}: non-finite cell {cell!r}")
            data[i - 2, j] = v
    X = data[:, : len(feats)]
    y = data[:, -1] if has_y else None
    return Dataset(X, y, str(path))


def save_dataset(path, X, y=None) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow([f"x{i + 1}" for i in range(X.shape[1])] + (["y"] if y is not None else []))
        for i, row in enumerate(X):
            cells = [repr(float(v)) for v in row]
            if y is not None:
                cells.append(repr(float(y[i])))
            wr.writerow(cells)


def write_column(path, name: str, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow([name])
        for v in np.ravel(values):
            wr.writerow([repr(float(v))])


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _profile_block(name: str, params, antisymmetric: bool) -> dict:
    return {"name": name, "params": [float(p) for p in params], "antisymmetric": bool(antisymmetric)}


def profile_params(name: str, params) -> tuple:
    if params:
        return tuple(float(p) for p in params)
    return tuple(DEFAULT_PARAMS.get(name, ()))


def model_to_dict(model, profile_name: str, params=(), antisymmetric: bool = False) -> dict:
    base = {"schema_version": SCHEMA_VERSION, "profile": _profile_block(profile_name, params, antisymmetric)}
    if isinstance(model, RbfModel):
        base.update(
            mode="rbf", n0=model.n0, d=model.d, centers=_floats(model.centers), a=_floats(model.coeffs),
            b=_floats(model.poly.coeffs), **{"lambda": model.lam}, loss=model.loss,
            kernel={"mode": model.kernel.mode, "sign": model.kernel.sign},
        )
    elif isinstance(model, NeuralModel):
        base.update(
            mode="mnorm", n0=model.poly.n0, d=model.d, b=_floats(model.poly.coeffs), **{"lambda": model.lam},
            atoms=[{"xi": _floats(a.xi), "tau": float(a.tau), "a": float(a.weight)} for a in model.atoms],
            K0=model.K0, reg_cost=model.reg_cost(), n_data=model.n_data,
        )
    elif isinstance(model, LpModel):
        g = model.grid
        base.update(
            mode="lp", n0=model.poly.n0, d=2, centers=_floats(model.centers), a=_floats(model.coeffs),
            b=_floats(model.poly.coeffs), p=model.p, **{"lambda": model.lam}, psi=model.psi,
            grid={"n_t": g.n_t, "n_theta": g.n_theta, "t_max": g.t_max, "margin": g.margin},
        )
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return base


def save_model(path, model, profile_name: str, params=(), antisymmetric: bool = False) -> None:
    # json writes floats with repr, which round-trips binary64 exactly
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, profile_name, params, antisymmetric), fh, indent=1)


def model_from_dict(doc: dict):
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ModelFileError(f"schema_version {doc.get('schema_version')!r} is not supported (expected {SCHEMA_VERSION})")
    prof_doc = doc["profile"]
    params = tuple(prof_doc.get("params", ()))
    odd = bool(prof_doc.get("antisymmetric", False))
    profile = catalog_profile(prof_doc["name"], params, antisymmetric=odd)
    mode, n0, d = doc["mode"], int(doc["n0"]), int(doc["d"])
    b = Polynomial(d, n0, np.asarray(doc["b"], dtype=float))
    if mode == "rbf":
        kdoc = doc["kernel"]
        kernel = synth_rbf_kernel(profile, d, kdoc["mode"], strict=False)
        if kdoc.get("sign", 1.0) != kernel.sign:
            kernel = kernel.negated()
        centers = np.asarray(doc["centers"], dtype=float).reshape(-1, d)
        return RbfModel(centers, np.asarray(doc["a"], dtype=float), b, kernel, float(doc["lambda"]), n0, doc.get("loss", "squared"))
    if mode == "mnorm":
        act = synth_antisymmetric(profile, strict=False) if profile.antisymmetric_variant else synth_symmetric(profile, strict=False)
        atoms = tuple(RidgeAtom(np.asarray(a["xi"], dtype=float), float(a["tau"]), float(a["a"])) for a in doc["atoms"])
        return NeuralModel(atoms, b, act, float(doc["lambda"]), n_data=int(doc.get("n_data", 0)))
    if mode == "lp":
        g = doc["grid"]
        grid = LpGrid(int(g["n_t"]), int(g["n_theta"]), g["t_max"], float(g["margin"]))
        centers = np.asarray(doc["centers"], dtype=float).reshape(-1, 2)
        return LpModel(centers, np.asarray(doc["a"], dtype=float), b, float(doc["p"]), profile, grid,
                       float(doc["lambda"]), doc.get("psi", "norm"))
    raise ModelFileError(f"unknown mode {mode!r}")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"{path}: not a model file ({exc})") from None
    return model_from_dict(doc), doc


def activation_for(name: str, params=(), antisymmetric: bool = False, exact: bool = False):
    profile = catalog_profile(name, profile_params(name, params), antisymmetric=antisymmetric)
    odd = profile.antisymmetric_variant
    if exact:
        return exact_activation(profile, odd=odd)
    return synth_antisymmetric(profile, strict=False) if odd else synth_symmetric(profile, strict=False)
