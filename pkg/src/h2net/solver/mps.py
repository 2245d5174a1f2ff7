"""Free-format MPS export."""

from __future__ import annotations

import io
import math
import os
from pathlib import Path

from ..model import EQ, GE, LE, MilpModel

MAX_NAME = 255
_ROW_TYPE = {LE: "L", GE: "G", EQ: "E"}


def _num(v: float) -> str:
    return format(float(v), ".17g")


def _names(model: MilpModel) -> tuple[list[str], list[str]]:
    cols = [model.col_name(j) for j in range(model.n_cols)]
    rows = [model.row_name(i) for i in range(model.n_rows)]
    for kind, names in (("column", cols), ("row", rows)):
        seen: set[str] = set()
        for n in names:
            if len(n) > MAX_NAME or any(ch.isspace() for ch in n):
                raise ValueError(f"{kind} name {n[:40]!r} is not a valid MPS name")
            if n in seen:
                raise ValueError(f"duplicate {kind} name {n!r}")
            seen.add(n)
    if "OBJ" in set(rows):
        raise ValueError("row name OBJ is reserved for the objective")
    return cols, rows


def export_mps(model: MilpModel) -> str:
    """Render ``model`` as free-format MPS text.

    Continuous columns come first, then every integer column inside a single
    INTORG/INTEND block. Integer columns always carry explicit bounds since
    some readers default them to [0, 1].
    """
    cols, rows = _names(model)
    out = io.StringIO()
    w = out.write
    w(f"NAME {model.name.replace(' ', '_') or 'model'}\n")
    w("ROWS\n N OBJ\n")
    for i, name in enumerate(rows):
        w(f" {_ROW_TYPE[str(model.sense[i])]} {name}\n")

    csc = model.A.tocsc()
    csc.sort_indices()
    order = [j for j in range(model.n_cols) if not model.integer[j]]
    ints = [j for j in range(model.n_cols) if model.integer[j]]
    w("COLUMNS\n")

    def column(j):
        name = cols[j]
        if model.c[j] != 0.0:
            w(f" {name} OBJ {_num(model.c[j])}\n")
        start, end = csc.indptr[j], csc.indptr[j + 1]
        for i, v in zip(csc.indices[start:end], csc.data[start:end]):
            w(f" {name} {rows[i]} {_num(v)}\n")
        if model.c[j] == 0.0 and start == end:
            # keep empty columns visible to the reader
            w(f" {name} OBJ 0\n")

    for j in order:
        column(j)
    if ints:
        w(" MARKER 'MARKER' 'INTORG'\n")
        for j in ints:
            column(j)
        w(" MARKER 'MARKER' 'INTEND'\n")

    w("RHS\n")
    if model.offset != 0.0:
        w(f" RHS OBJ {_num(-model.offset)}\n")
    for i, v in enumerate(model.rhs):
        if v != 0.0:
            w(f" RHS {rows[i]} {_num(v)}\n")

    w("BOUNDS\n")
    for j in range(model.n_cols):
        lb, ub, name = float(model.lb[j]), float(model.ub[j]), cols[j]
        explicit = bool(model.integer[j])
        if lb == ub:
            w(f" FX BND {name} {_num(lb)}\n")
            continue
        if lb == -math.inf and ub == math.inf:
            w(f" FR BND {name}\n")
            continue
        if lb == -math.inf:
            w(f" MI BND {name}\n")
        elif lb != 0.0 or explicit:
            w(f" LO BND {name} {_num(lb)}\n")
        if ub == math.inf:
            if explicit:
                w(f" PL BND {name}\n")
        else:
            w(f" UP BND {name} {_num(ub)}\n")
    w("ENDATA\n")
    return out.getvalue()


def write_mps(model: MilpModel, destination: str | os.PathLike) -> Path:
    path = Path(destination)
    text = export_mps(model)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)
    return path


__all__ = ["export_mps", "write_mps", "MAX_NAME"]
