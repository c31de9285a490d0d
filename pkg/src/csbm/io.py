"""Text formats for datasets, labels and model configs.

Edge file::

    # csbm-edges v1 n=<n>
    i j w
    ...

0-indexed, one undirected edge per line with i < j.  Attribute file is a CSV
whose row i holds the attributes of node i, with an optional trailing
``label`` column carrying the ground truth.
"""

from __future__ import annotations

import csv
import json
import re
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .errors import ParseError, ValidationError
from .model import Dataset

EDGE_HEADER = re.compile(r"^#\s*csbm-edges\s+v1\s+n=(\d+)\s*$")
EDGES_NAME = "edges.txt"
ATTRS_NAME = "attributes.csv"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_edges(ds: Dataset, path):
    path = Path(path)
    w = ds.edge_weights
    with path.open("w") as fh:
        fh.write(f"# csbm-edges v1 n={ds.n}\n")
        for i, j, x in zip(ds.rows.tolist(), ds.cols.tolist(), w.tolist()):
            fh.write(f"{i} {j} {_fmt(x)}\n")


def read_edges(path, binary=None):
    """Parse an edge file; returns (n, rows, cols, weights).

    Lines with i > j are accepted only when the mirrored line carries the
    same weight.  ``binary=None`` infers a binary network from all weights
    being 1.
    """
    path = Path(path)
    n = None
    seen = {}
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = EDGE_HEADER.match(line)
                if m and n is None:
                    n = int(m.group(1))
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 'i j w', got {line!r}", path, lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from exc
            if i == j:
                raise ValidationError(f"{path}:{lineno}: self-loop on node {i}")
            if i < 0 or j < 0:
                raise ParseError("negative node index", path, lineno)
            key = (min(i, j), max(i, j))
            if key in seen:
                prev_w, prev_dir, prev_line = seen[key]
                if prev_dir == (i < j) or prev_w != w:
                    raise ValidationError(
                        f"{path}:{lineno}: edge {key} conflicts with line {prev_line} (asymmetric or duplicate)"
                    )
                seen[key] = (w, None, prev_line)
                continue
            seen[key] = (w, i < j, lineno)
    if n is None:
        raise ParseError("missing '# csbm-edges v1 n=<n>' header", path, 1)
    for (i, j), (w, direction, lineno) in seen.items():
        if direction is False:
            raise ValidationError(f"{path}:{lineno}: edge ({j}, {i}) given only as i > j without its mirror")
        if j >= n:
            raise ValidationError(f"{path}:{lineno}: node {j} out of range for n={n}")
    keys = sorted(seen)
    rows = np.array([k[0] for k in keys], dtype=np.int64)
    cols = np.array([k[1] for k in keys], dtype=np.int64)
    weights = np.array([seen[k][0] for k in keys], dtype=float)
    if binary is None:
        binary = bool(np.all(weights == 1.0))
    return n, rows, cols, (None if binary else weights)


def write_attributes(ds: Dataset, path, labels=True):
    path = Path(path)
    with_labels = labels and ds.z_true is not None
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        header = [f"y{k}" for k in range(ds.d)] + (["label"] if with_labels else [])
        wr.writerow(header)
        for i in range(ds.n):
            row = [_fmt(v) for v in ds.Y[i]]
            if with_labels:
                row.append(str(int(ds.z_true[i])))
            wr.writerow(row)


def read_attributes(path, n=None):
    """Returns (Y, labels-or-None)."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = None
    if rows and rows[0]:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            header = [h.strip() for h in rows[0]]
            rows = rows[1:]
    has_label = header is not None and header and header[-1] == "label"
    data, labels = [], []
    width = None
    for lineno, row in enumerate(rows, start=2 if header is not None else 1):
        if not row:
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"expected {width} columns, got {len(row)}", path, lineno)
        try:
            vals = [float(v) for v in (row[:-1] if has_label else row)]
            if has_label:
                labels.append(int(row[-1]))
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from exc
        data.append(vals)
    d = (width or 0) - (1 if has_label else 0)
    Y = np.array(data, dtype=float).reshape(len(data), d)
    if n is not None and Y.shape[0] != n:
        raise ValidationError(f"{path}: {Y.shape[0]} attribute rows but n={n}")
    return Y, (np.array(labels, dtype=np.int64) if has_label else None)


def save_dataset(ds: Dataset, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_edges(ds, directory / EDGES_NAME)
    write_attributes(ds, directory / ATTRS_NAME)
    return directory


def load_dataset(path, attributes=None, binary=None) -> Dataset:
    """Load from a directory written by :func:`save_dataset`, or from an
    explicit edge file plus attribute file."""
    path = Path(path)
    if path.is_dir():
        edges, attributes = path / EDGES_NAME, path / ATTRS_NAME
    else:
        edges = path
    n, rows, cols, weights = read_edges(edges, binary=binary)
    if attributes is not None:
        Y, z = read_attributes(attributes, n=n)
    else:
        Y, z = np.zeros((n, 0)), None
    return Dataset(n=n, rows=rows, cols=cols, weights=weights, Y=Y, z_true=z)


def write_labels(z, path):
    Path(path).write_text("".join(f"{int(v)}\n" for v in z))


def read_labels(path):
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            out.append(int(line))
        except ValueError as exc:
            raise ParseError(f"not an integer label: {line!r}", path, lineno) from exc
    return np.array(out, dtype=np.int64)


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(str(exc), path) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno) from exc
