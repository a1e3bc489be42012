"""Reading and writing object series as CSV (with a ``#`` header) or JSON.

CSV layout::

    # kind=Wasserstein1D
    # M=100
    # format=samples          (optional; distributions only)
    0.12,0.40,...             one record per line

Matrix records are row-major ``p*p`` entries. With ``format=samples`` each
line holds raw draws (any count) which are turned into quantiles on the
midpoint grid. JSON files hold ``{"descriptor": {...}, "format": ...,
"records": [[...], ...]}``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidObjectError
from .frechet import ObjectSeries
from .spaces import SpaceDescriptor, SpaceKind, empirical_quantiles

SYMMETRY_TOL = 1e-6

_KIND_ALIASES = {
    "scalar": SpaceKind.SCALAR,
    "l2": SpaceKind.L2_FUNCTION,
    "l2function": SpaceKind.L2_FUNCTION,
    "function": SpaceKind.L2_FUNCTION,
    "wasserstein": SpaceKind.WASSERSTEIN_1D,
    "wasserstein1d": SpaceKind.WASSERSTEIN_1D,
    "quantile": SpaceKind.WASSERSTEIN_1D,
    "distribution": SpaceKind.WASSERSTEIN_1D,
    "frobenius": SpaceKind.FROBENIUS,
    "frobeniusmatrix": SpaceKind.FROBENIUS,
    "laplacian": SpaceKind.GRAPH_LAPLACIAN,
    "graphlaplacian": SpaceKind.GRAPH_LAPLACIAN,
    "spd": SpaceKind.LOG_EUCLIDEAN,
    "logeuclidean": SpaceKind.LOG_EUCLIDEAN,
    "logeuclideanspd": SpaceKind.LOG_EUCLIDEAN,
    "covariance": SpaceKind.LOG_EUCLIDEAN,
}


class SeriesFormatError(ValueError):
    """Malformed series file; the message names the offending line or record."""


def parse_kind(name) -> SpaceKind:
    key = str(name).replace("_", "").replace("-", "").replace(" ", "").lower()
    try:
        return _KIND_ALIASES[key]
    except KeyError:
        raise SeriesFormatError(f"unknown space kind {name!r}") from None


def _descriptor(meta: dict) -> SpaceDescriptor:
    if "kind" not in meta:
        raise SeriesFormatError("header must declare kind=...")
    kind = parse_kind(meta["kind"])
    M = meta.get("M", meta.get("grid_size"))
    p = meta.get("p", meta.get("matrix_dim"))
    try:
        return SpaceDescriptor(
            kind,
            grid_size=int(M) if M is not None else None,
            matrix_dim=int(p) if p is not None else None,
            spd_floor=float(meta.get("spd_floor", 1e-10)),
        )
    except (TypeError, ValueError) as exc:
        raise SeriesFormatError(f"invalid header: {exc}") from exc


def _records_to_payload(desc: SpaceDescriptor, rows: list[list[float]], fmt: str, labels: list[str],
                        sym_tol: float = SYMMETRY_TOL) -> np.ndarray:
    if not rows:
        raise SeriesFormatError("file contains no records")
    if fmt == "samples":
        if desc.kind is not SpaceKind.WASSERSTEIN_1D:
            raise SeriesFormatError("format=samples is only valid for distributions")
        out = []
        for row, lab in zip(rows, labels):
            try:
                out.append(empirical_quantiles(row, desc.grid_size))
            except ValueError as exc:
                raise SeriesFormatError(f"{lab}: {exc}") from exc
        return np.stack(out)
    if fmt != "values":
        raise SeriesFormatError(f"unknown format {fmt!r}; expected 'values' or 'samples'")
    width = desc.embed_dim
    for row, lab in zip(rows, labels):
        if len(row) != width:
            raise SeriesFormatError(f"{lab}: expected {width} values, found {len(row)}")
    arr = np.asarray(rows, dtype=float)
    if desc.kind.is_matrix:
        p = desc.matrix_dim
        arr = arr.reshape(-1, p, p)
        asym = np.abs(arr - np.swapaxes(arr, 1, 2)).reshape(arr.shape[0], -1).max(axis=1)
        bad = np.flatnonzero(asym > sym_tol)
        if bad.size:
            i = int(bad[0])
            raise SeriesFormatError(f"{labels[i]}: matrix is not symmetric (max asymmetry {asym[i]:.3g} > {sym_tol:g})")
        arr = 0.5 * (arr + np.swapaxes(arr, 1, 2))
        if desc.kind is SpaceKind.LOG_EUCLIDEAN:
            lam = np.linalg.eigvalsh(arr)[:, 0]
            bad = np.flatnonzero(lam < desc.spd_floor)
            if bad.size:
                i = int(bad[0])
                raise SeriesFormatError(
                    f"{labels[i]}: matrix is not positive definite (smallest eigenvalue {lam[i]:.3g}); "
                    "the log-Euclidean metric needs SPD input, e.g. add a ridge c*I to singular "
                    "correlation matrices before loading"
                )
    elif desc.kind is SpaceKind.SCALAR:
        arr = arr.reshape(-1)
    return arr


def _validated(desc, payload, labels) -> ObjectSeries:
    try:
        return ObjectSeries(desc, payload)
    except InvalidObjectError as exc:
        if exc.index is not None and exc.index < len(labels):
            raise SeriesFormatError(f"{labels[exc.index]}: {str(exc).split(': ', 1)[-1]}") from exc
        raise SeriesFormatError(str(exc)) from exc


def _parse_csv(text: str, hints: dict) -> ObjectSeries:
    meta: dict = {}
    rows: list[list[float]] = []
    labels: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            for part in body.replace(",", " ").split():
                if "=" in part:
                    k, v = part.split("=", 1)
                    meta[k.strip()] = v.strip()
            continue
        lab = f"record {len(rows) + 1} (line {lineno})"
        try:
            rows.append([float(x) for x in line.split(",") if x.strip() != ""])
        except ValueError as exc:
            raise SeriesFormatError(f"{lab}: {exc}") from exc
        labels.append(lab)
    meta.update({k: v for k, v in hints.items() if v is not None})
    desc = _descriptor(meta)
    fmt = str(meta.get("format", "values")).lower()
    return _validated(desc, _records_to_payload(desc, rows, fmt, labels), labels)


def _parse_json(text: str, hints: dict) -> ObjectSeries:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SeriesFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "records" not in doc:
        raise SeriesFormatError("JSON container needs 'descriptor' and 'records'")
    meta = dict(doc.get("descriptor", {}))
    meta.update({k: v for k, v in hints.items() if v is not None})
    desc = _descriptor(meta)
    fmt = str(meta.get("format", doc.get("format", "values"))).lower()
    rows = []
    labels = []
    for i, rec in enumerate(doc["records"], start=1):
        flat = np.asarray(rec, dtype=float).reshape(-1).tolist()
        rows.append(flat)
        labels.append(f"record {i}")
    return _validated(desc, _records_to_payload(desc, rows, fmt, labels), labels)


def parse_series(path, kind=None, M=None, p=None, fmt=None) -> ObjectSeries:
    """Load a validated series; keyword hints override or complete the file header."""
    path = Path(path)
    text = path.read_text()
    hints = {"kind": kind, "M": M, "p": p, "format": fmt}
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return _parse_json(text, hints)
    return _parse_csv(text, hints)


def write_series(series: ObjectSeries, path) -> Path:
    """Write ``series`` as CSV (or JSON when the suffix is ``.json``) with repr-exact floats."""
    path = Path(path)
    desc = series.descriptor
    flat = series.values.reshape(len(series), -1)
    if path.suffix.lower() == ".json":
        doc = {"descriptor": desc.to_dict(), "format": "values", "records": flat.tolist()}
        path.write_text(json.dumps(doc) + "\n")
        return path
    lines = [f"# kind={desc.kind.value}"]
    if desc.grid_size is not None:
        lines.append(f"# M={desc.grid_size}")
    if desc.matrix_dim is not None:
        lines.append(f"# p={desc.matrix_dim}")
    if desc.kind is SpaceKind.LOG_EUCLIDEAN:
        lines.append(f"# spd_floor={desc.spd_floor!r}")
    lines.extend(",".join(repr(float(x)) for x in row) for row in flat)
    path.write_text("\n".join(lines) + "\n")
    return path
