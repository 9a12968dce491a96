"""CSV ingestion and emission of forecast-observation panels.

File layout: an optional leading metadata comment,

    # families: f1=two-piece-normal f2=normal

followed by a header row and data rows.  Required column ``y``; optional
column ``v`` (PIT randomizers in [0, 1]); forecaster i contributes columns
``f{i}_{param}`` named after its family's parameters, e.g. a two-piece-normal
forecaster 1 uses f1_mu, f1_sig1, f1_sig2.  Families may instead be supplied
programmatically (a {"f1": "normal", ...} mapping), which overrides the
metadata line.
"""

from __future__ import annotations

import csv
import io
import re

import numpy as np

from .dataset import PredictionDataset
from .distributions import get_family
from .errors import InputDataError

__all__ = ["parse_family_spec", "ingest_csv", "dump_csv"]

_FAMILY_LINE = re.compile(r"^#\s*families\s*:\s*(.+)$")
_COLUMN = re.compile(r"^f(\d+)_(\w+)$")


def parse_family_spec(text: str) -> dict[int, str]:
    """Parse 'f1=normal f2=student-t' (spaces or commas) into {1: "normal", ...}."""
    out: dict[int, str] = {}
    for token in re.split(r"[\s,]+", text.strip()):
        if not token:
            continue
        if "=" not in token:
            raise InputDataError(f"malformed family declaration {token!r}; expected fK=family-id")
        key, fam = token.split("=", 1)
        if not re.fullmatch(r"f\d+", key):
            raise InputDataError(f"malformed forecaster key {key!r}; expected f1, f2, ...")
        out[int(key[1:])] = fam
    if not out:
        raise InputDataError("empty family declaration")
    return out


def ingest_csv(path_or_buffer, families: dict[int, str] | None = None, serial: bool = False) -> PredictionDataset:
    """Read a forecast-observation CSV into a validated dataset.

    Raises
    ------
    InputDataError
        On missing/unknown columns, undeclared families, wrong parameter
        arity, non-numeric cells (with line numbers) or out-of-range
        randomizers.
    """
    if hasattr(path_or_buffer, "read"):
        text = path_or_buffer.read()
    else:
        with open(path_or_buffer, "r", encoding="utf-8") as fh:
            text = fh.read()
    lines = text.splitlines()
    offset = 0
    meta: dict[int, str] | None = None
    while offset < len(lines) and lines[offset].lstrip().startswith("#"):
        match = _FAMILY_LINE.match(lines[offset].strip())
        if match:
            meta = parse_family_spec(match.group(1))
        offset += 1
    families = families if families is not None else meta
    if families is None:
        raise InputDataError(
            "no family declarations: add a '# families: f1=... f2=...' line or pass them explicitly"
        )

    reader = csv.reader(io.StringIO("\n".join(lines[offset:])))
    try:
        header = next(reader)
    except StopIteration:
        raise InputDataError("empty CSV: no header row") from None
    header = [h.strip() for h in header]
    if "y" not in header:
        raise InputDataError("missing required column 'y'")

    indices = sorted(families)
    if indices != list(range(1, len(indices) + 1)):
        raise InputDataError(f"forecaster indices must be contiguous from 1, got {indices}")
    fams = []
    col_map: list[list[int]] = []
    for i in indices:
        fam = get_family(families[i])  # raises on unknown family id
        cols = []
        for pname in fam.param_names:
            col = f"f{i}_{pname}"
            if col not in header:
                raise InputDataError(
                    f"forecaster {i} ({fam.id}) needs column {col!r}; "
                    f"expected columns {[f'f{i}_{p}' for p in fam.param_names]}"
                )
            cols.append(header.index(col))
        fams.append(fam)
        col_map.append(cols)
    known = {f"f{i}_{p}" for i, fam in zip(indices, fams) for p in fam.param_names}
    for h in header:
        if h in ("y", "v") or h in known:
            continue
        if _COLUMN.match(h):
            raise InputDataError(f"column {h!r} matches no declared forecaster parameter")

    y_col = header.index("y")
    v_col = header.index("v") if "v" in header else None
    rows = []
    bad_lines = []
    for lineno, row in enumerate(reader, start=offset + 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            bad_lines.append((lineno, "wrong field count"))
            continue
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            bad_lines.append((lineno, "non-numeric cell"))
    if bad_lines:
        detail = "; ".join(f"line {ln}: {why}" for ln, why in bad_lines[:10])
        raise InputDataError(f"{len(bad_lines)} malformed data rows ({detail})")
    if not rows:
        raise InputDataError("no data rows")
    data = np.asarray(rows, dtype=float)
    if np.any(~np.isfinite(data)):
        bad = sorted(set(np.nonzero(~np.isfinite(data))[0] + offset + 2))
        raise InputDataError(f"missing or non-finite values on lines {bad[:10]}")

    v = data[:, v_col] if v_col is not None else None
    if v is not None and (np.any(v < 0) or np.any(v > 1)):
        raise InputDataError("column 'v' must lie in [0, 1]")
    params = tuple(data[:, cols] for cols in col_map)
    try:
        return PredictionDataset(families=tuple(fams), params=params, y=data[:, y_col], v=v, serial=serial)
    except ValueError as exc:
        raise InputDataError(str(exc)) from exc


def dump_csv(ds: PredictionDataset, path_or_buffer) -> None:
    """Write a dataset in the format :func:`ingest_csv` reads (round-trips)."""
    own = not hasattr(path_or_buffer, "write")
    fh = open(path_or_buffer, "w", encoding="utf-8", newline="") if own else path_or_buffer
    try:
        decl = " ".join(f"f{i + 1}={fam.id}" for i, fam in enumerate(ds.families))
        fh.write(f"# families: {decl}\n")
        header = ["y"] + (["v"] if ds.v is not None else [])
        for i, fam in enumerate(ds.families):
            header.extend(f"f{i + 1}_{p}" for p in fam.param_names)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t in range(ds.n_rows):
            row = [repr(float(ds.y[t]))]
            if ds.v is not None:
                row.append(repr(float(ds.v[t])))
            for mat in ds.params:
                row.extend(repr(float(x)) for x in mat[t])
            writer.writerow(row)
    finally:
        if own:
            fh.close()
