"""Reading and writing information matrices.

Two input formats are accepted:

* Matrix Market coordinate files (``real`` or ``integer`` field,
  ``symmetric`` or ``general`` symmetry). General files must be symmetric to
  ``1e-12`` relative to the largest entry.
* JSON documents ``{"n": 3, "entries": [[row, col, value], ...], "h": [...]}``
  with 1-based indices. An entry without its transpose is mirrored; when
  both are listed they must agree to the same tolerance.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParseError, PartitionError
from .model import BlockPartition, InformationModel

SYMMETRY_RTOL = 1e-12


def _symmetrize(J, path, what="matrix"):
    scale = np.abs(J).max() if J.size else 0.0
    gap = np.abs(J - J.T)
    if scale > 0 and gap.max() > SYMMETRY_RTOL * scale:
        i, j = np.unravel_index(np.argmax(gap), gap.shape)
        raise ParseError(
            f"{what} is not symmetric: entry ({i + 1},{j + 1})={J[i, j]!r} vs "
            f"({j + 1},{i + 1})={J[j, i]!r}",
            path=path,
        )
    return 0.5 * (J + J.T)


def read_matrix_market(path) -> InformationModel:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path=path) from None
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise ParseError("missing %%MatrixMarket header", path=path, line=1)
    header = lines[0].lower().split()
    if len(header) != 5:
        raise ParseError("malformed header; expected 5 fields", path=path, line=1)
    _, obj, fmt, field, symmetry = header
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(f"only 'matrix coordinate' files are supported, got '{obj} {fmt}'", path=path, line=1)
    if field not in ("real", "integer", "double"):
        raise ParseError(f"unsupported field '{field}'", path=path, line=1)
    if symmetry not in ("symmetric", "general"):
        raise ParseError(f"unsupported symmetry '{symmetry}'", path=path, line=1)

    body = ((k + 1, ln) for k, ln in enumerate(lines) if k > 0 and ln.strip() and not ln.lstrip().startswith("%"))
    try:
        lineno, size_line = next(body)
    except StopIteration:
        raise ParseError("missing size line", path=path, line=len(lines)) from None
    try:
        rows, cols, nnz = (int(t) for t in size_line.split())
    except ValueError:
        raise ParseError(f"malformed size line {size_line.strip()!r}", path=path, line=lineno) from None
    if rows != cols or rows <= 0:
        raise ParseError(f"matrix must be square and non-empty, got {rows}x{cols}", path=path, line=lineno)
    n = rows
    J = np.zeros((n, n))
    count = 0
    for lineno, text in body:
        parts = text.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'row col value', got {text.strip()!r}", path=path, line=lineno)
        try:
            i, j, v = int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])
        except ValueError:
            raise ParseError(f"cannot parse entry {text.strip()!r}", path=path, line=lineno) from None
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"index ({i + 1},{j + 1}) out of range 1..{n}", path=path, line=lineno)
        J[i, j] += v
        if symmetry == "symmetric" and i != j:
            J[j, i] += v
        count += 1
    if count != nnz:
        raise ParseError(f"size line declares {nnz} entries but {count} were read", path=path)
    if symmetry == "general":
        J = _symmetrize(J, path)
    return InformationModel(J)


def read_json_model(path) -> InformationModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path=path) from None
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno, column=exc.colno) from None
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object", path=path)
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n <= 0:
        raise ParseError("field 'n' must be a positive integer", path=path)
    entries = doc.get("entries", doc.get("triplets"))
    if not isinstance(entries, list):
        raise ParseError("field 'entries' must be a list of [row, col, value] triplets", path=path)
    J = np.zeros((n, n))
    given = np.zeros((n, n), dtype=bool)
    for k, item in enumerate(entries):
        where = f"entries[{k}]"
        if not (isinstance(item, list) and len(item) == 3):
            raise ParseError(f"{where} must be a [row, col, value] triplet", path=path)
        i, j, v = item
        if not all(isinstance(t, int) and not isinstance(t, bool) for t in (i, j)):
            raise ParseError(f"{where} has non-integer indices", path=path)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ParseError(f"{where} has a non-numeric value", path=path)
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"{where} index ({i},{j}) out of range 1..{n}", path=path)
        if given[i - 1, j - 1]:
            raise ParseError(f"{where} repeats position ({i},{j})", path=path)
        J[i - 1, j - 1] = v
        given[i - 1, j - 1] = True
    mirror = given.T & ~given
    J[mirror] = J.T[mirror]
    J = _symmetrize(J, path, "entry list")
    h = doc.get("h")
    if h is not None:
        if not (isinstance(h, list) and len(h) == n and all(
                isinstance(t, (int, float)) and not isinstance(t, bool) for t in h)):
            raise ParseError(f"field 'h' must be a list of {n} numbers", path=path)
        h = np.array(h, dtype=float)
    return InformationModel(J, h)


def load_matrix(path, require_nonzero_diagonal: bool = True) -> InformationModel:
    """Load a model from Matrix Market or JSON, sniffing the first bytes.

    Raises:
        ParseError: malformed input, with line (and column) where known.
        ModelError: a zero diagonal entry when ``require_nonzero_diagonal``.
    """
    path = Path(path)
    try:
        with path.open() as fh:
            head = fh.read(64).lstrip()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path=path) from None
    if head.startswith("%%MatrixMarket") or head.lower().startswith("%%matrixmarket"):
        model = read_matrix_market(path)
    else:
        model = read_json_model(path)
    if require_nonzero_diagonal:
        model.check_diagonal()
    return model


def write_matrix_market(model: InformationModel, path, comment: Optional[str] = None):
    """Write the lower triangle as a symmetric coordinate file, round-trippable."""
    J = model.J
    rows, cols = np.nonzero(np.tril(J))
    with Path(path).open("w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{model.n} {model.n} {len(rows)}\n")
        for i, j in zip(rows, cols):
            fh.write(f"{i + 1} {j + 1} {float(J[i, j])!r}\n")


def write_json_model(model: InformationModel, path):
    J = model.J
    rows, cols = np.nonzero(np.triu(J))
    doc = {"n": model.n, "entries": [[int(i) + 1, int(j) + 1, float(J[i, j])] for i, j in zip(rows, cols)]}
    if model.h is not None:
        doc["h"] = [float(x) for x in model.h]
    Path(path).write_text(json.dumps(doc))


def parse_partition(text: str, n: int) -> BlockPartition:
    """Partition from inline JSON (``[[1,2],[3]]``) or a path to a JSON file."""
    candidate = Path(text)
    try:
        if candidate.is_file():
            text = candidate.read_text()
    except OSError:
        pass
    try:
        lists = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"partition is not valid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    if not isinstance(lists, list) or not all(isinstance(b, list) for b in lists):
        raise PartitionError("partition must be a JSON list of index lists")
    return BlockPartition.from_lists(lists, n, one_based=True)
