"""Table file adapters: CSV (canonical) and TBIN (columnar binary).

Cells are carried as raw lexical strings; ``None`` marks a missing cell.
The CSV adapter maps an empty field to missing on read and writes missing
as an empty field, so empty-string cells are not representable in CSV.
The TBIN adapter stores an explicit per-cell missing flag and therefore
preserves the empty-string / missing distinction.

TBIN layout (little-endian, column-major):

    magic   8 bytes  b"TBIN0001"
    ncols   u32
    per column: u16 name length + UTF-8 name bytes
    nrows   u64
    per column, nrows cells: u8 flag (0 = missing, 1 = present),
        if present: u32 byte length + UTF-8 value bytes
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Iterable, Iterator

from .errors import InputError

Cell = str | None

TBIN_MAGIC = b"TBIN0001"

TABLE_SUFFIXES = (".csv", ".tbin")


def read_table(path: str | Path) -> tuple[list[str], list[list[Cell]]]:
    """Read a whole table file; dispatches on file suffix."""
    columns, row_iter = open_table(path)
    return columns, list(row_iter)


def open_table(path: str | Path) -> tuple[list[str], Iterator[list[Cell]]]:
    """Open a table file for streaming row iteration.

    Returns the header columns and a row iterator. CSV rows stream from
    disk; TBIN loads per-column (the format is columnar) and yields rows
    from memory.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return _open_csv(path)
    if suffix == ".tbin":
        columns, rows = _read_tbin(path)
        return columns, iter(rows)
    raise InputError(f"unsupported table format: {path.name!r} (expected .csv or .tbin)")


def write_table(path: str | Path, columns: Iterable[str], rows: Iterable[Iterable[Cell]]) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        _write_csv(path, columns, rows)
    elif suffix == ".tbin":
        _write_tbin(path, columns, rows)
    else:
        raise InputError(f"unsupported table format: {path.name!r} (expected .csv or .tbin)")


def _open_csv(path: Path) -> tuple[list[str], Iterator[list[Cell]]]:
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read table file {path}: {exc}") from exc
    reader = csv.reader(handle)
    try:
        header = next(reader)
    except StopIteration:
        handle.close()
        raise InputError(f"table file {path} is empty (header row required)")
    except UnicodeDecodeError as exc:
        handle.close()
        raise InputError(f"table file {path} is not valid UTF-8: {exc}") from exc

    def rows() -> Iterator[list[Cell]]:
        ncols = len(header)
        try:
            for lineno, raw in enumerate(reader, start=2):
                if len(raw) != ncols:
                    raise InputError(
                        f"{path}:{lineno}: row has {len(raw)} cells, expected {ncols}"
                    )
                yield [cell if cell != "" else None for cell in raw]
        finally:
            handle.close()

    return header, rows()


def _write_csv(path: Path, columns: Iterable[str], rows: Iterable[Iterable[Cell]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(columns))
        for row in rows:
            writer.writerow(["" if cell is None else cell for cell in row])


def _read_tbin(path: Path) -> tuple[list[str], list[list[Cell]]]:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read table file {path}: {exc}") from exc
    if blob[:8] != TBIN_MAGIC:
        raise InputError(f"{path}: bad TBIN magic")
    try:
        return _parse_tbin(blob)
    except (struct.error, IndexError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: corrupt TBIN file: {exc}") from exc


def _parse_tbin(blob: bytes) -> tuple[list[str], list[list[Cell]]]:
    off = 8
    (ncols,) = struct.unpack_from("<I", blob, off)
    off += 4
    columns: list[str] = []
    for _ in range(ncols):
        (nlen,) = struct.unpack_from("<H", blob, off)
        off += 2
        columns.append(blob[off : off + nlen].decode("utf-8"))
        off += nlen
    (nrows,) = struct.unpack_from("<Q", blob, off)
    off += 8
    cols: list[list[Cell]] = []
    for _ in range(ncols):
        col: list[Cell] = []
        for _ in range(nrows):
            flag = blob[off]
            off += 1
            if flag == 0:
                col.append(None)
            else:
                (vlen,) = struct.unpack_from("<I", blob, off)
                off += 4
                col.append(blob[off : off + vlen].decode("utf-8"))
                off += vlen
        cols.append(col)
    rows = [[cols[c][r] for c in range(ncols)] for r in range(nrows)]
    return columns, rows


def _write_tbin(path: Path, columns: Iterable[str], rows: Iterable[Iterable[Cell]]) -> None:
    columns = list(columns)
    materialized = [list(row) for row in rows]
    parts: list[bytes] = [TBIN_MAGIC, struct.pack("<I", len(columns))]
    for name in columns:
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(struct.pack("<Q", len(materialized)))
    for c in range(len(columns)):
        for row in materialized:
            cell = row[c]
            if cell is None:
                parts.append(b"\x00")
            else:
                raw = str(cell).encode("utf-8")
                parts.append(b"\x01" + struct.pack("<I", len(raw)) + raw)
    Path(path).write_bytes(b"".join(parts))
