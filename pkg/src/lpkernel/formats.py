"""File formats: family JSONL/CSV, operator JSON.

Family JSONL: a header line ``{"space": "lp"|"c0", "p": [num, den],
"universe_size": u}`` then one ``{"id": u, "coords": [[label, num, den], ...]}``
per member (``[[label, float], ...]`` in float mode).
"""
from __future__ import annotations

import csv
import io
import json
import re
from fractions import Fraction
from typing import IO, Iterable

import numpy as np

from .operator_builder import LinearOperator, RootScale
from .sparse_space import FLOAT, ORACLE, RationalArray, SpaceDescriptor, VectorFamily

INT64_MAX = np.iinfo(np.int64).max


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _open(target, mode: str):
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        return open(target, mode, encoding="utf-8", newline="" if "w" in mode else None), True
    return target, False


def _fmt_label(lab) -> str:
    return json.dumps(lab) if not isinstance(lab, (int, np.integer)) else str(int(lab))


def write_family_jsonl(family: VectorFamily, target) -> None:
    fh, owned = _open(target, "w")
    try:
        fh.write(json.dumps(family.space.header()) + "\n")
        space = family.space
        integer_labels = isinstance(space.universe, range)
        start = space.universe.start if integer_labels else 0
        pos = family.positions
        indptr = family.indptr
        if family.mode == FLOAT:
            vals = family.values
            cells = [f"[{_fmt_label(p + start) if integer_labels else _fmt_label(space.label(p))}, {float(v)!r}]"
                     for p, v in zip(pos.tolist(), vals.tolist())]
        else:
            if isinstance(family.values, RationalArray):
                nums, dens = family.values.num.tolist(), family.values.den.tolist()
            else:
                nums = [v.numerator for v in family.values]
                dens = [v.denominator for v in family.values]
            labels = [p + start for p in pos.tolist()] if integer_labels else [_fmt_label(space.label(p)) for p in pos.tolist()]
            cells = [f"[{lab}, {a}, {b}]" for lab, a, b in zip(labels, nums, dens)]
        out = []
        for i, vid in enumerate(family.ids.tolist()):
            out.append('{"id": %d, "coords": [%s]}\n' % (vid, ", ".join(cells[indptr[i]:indptr[i + 1]])))
            if len(out) >= 65536:
                fh.write("".join(out))
                out.clear()
        fh.write("".join(out))
    finally:
        if owned:
            fh.close()


def _finish(space, ids, indptr, positions, values, mode, lines) -> VectorFamily:
    if mode == FLOAT:
        vals = np.asarray(values, dtype=np.float64)
    else:
        big = any(abs(a) > INT64_MAX or b > INT64_MAX for a, b in values)
        vals = [Fraction(a, b) for a, b in values] if big else RationalArray(
            np.asarray([a for a, _ in values], dtype=np.int64), np.asarray([b for _, b in values], dtype=np.int64))
    try:
        fam = VectorFamily(space, ids, indptr, positions, vals)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    fam.source_lines = np.asarray(lines, dtype=np.int64)
    return fam


def _append_vector(space, coords, positions, values, mode, lineno):
    row = {}
    for cell in coords:
        if len(cell) == 3:
            lab, a, b = cell
            if b == 0:
                raise FormatError("zero denominator", lineno)
            val = Fraction(int(a), int(b))
        elif len(cell) == 2:
            lab, val = cell
            if mode == ORACLE and isinstance(val, int):
                val = Fraction(val)
        else:
            raise FormatError(f"bad coordinate cell {cell!r}", lineno)
        try:
            pos = space.position(lab)
        except KeyError:
            raise FormatError(f"label {lab!r} outside the universe", lineno) from None
        row[pos] = row.get(pos, 0) + val
    for pos in sorted(row):
        v = row[pos]
        if v == 0:
            continue
        positions.append(pos)
        if mode == FLOAT:
            values.append(float(v))
        else:
            if isinstance(v, float):
                v = Fraction(v)
            values.append((v.numerator, v.denominator))


def read_family_jsonl(source, mode: str | None = None) -> VectorFamily:
    """Parse a family file. Explicit zeros are dropped (canonical form).

    ``mode`` defaults to float if any value is written as a float.
    """
    fh, owned = _open(source, "r")
    try:
        text = fh.read()
    finally:
        if owned:
            fh.close()
    if mode in (None, ORACLE):
        fast = _read_canonical(text)
        if fast is not None:
            return fast
    lines = text.splitlines()
    header = None
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON ({exc.msg})", lineno) from None
        if header is None:
            if "space" not in obj:
                raise FormatError("first line must be the space header", lineno)
            header = obj
            continue
        records.append((lineno, obj))
    if header is None:
        raise FormatError("empty family file")
    space = SpaceDescriptor.from_header(header)
    if mode is None:
        mode = FLOAT if any(len(c) == 2 and isinstance(c[1], float) for _, o in records for c in o.get("coords", [])) else ORACLE
    for lineno, obj in records:
        if "id" not in obj or "coords" not in obj:
            raise FormatError("member lines need 'id' and 'coords'", lineno)
    fast = _read_numeric(space, records, mode)
    if fast is not None:
        return fast
    ids, indptr, positions, values, where = [], [0], [], [], []
    for lineno, obj in records:
        ids.append(int(obj["id"]))
        _append_vector(space, obj["coords"], positions, values, mode, lineno)
        indptr.append(len(positions))
        where.append(lineno)
    return _finish(space, ids, indptr, positions, values, mode, where)


def _read_numeric(space, records, mode) -> VectorFamily | None:
    """Vectorised path for integer labels and plain numeric cells.

    Returns None (caller falls back to the general parser) for anything
    unusual: non-range universes, big integers, mixed cell shapes or
    repeated labels within a vector.
    """
    if not isinstance(space.universe, range) or not records:
        return None
    counts = np.fromiter((len(o["coords"]) for _, o in records), dtype=np.int64, count=len(records))
    cells = [c for _, o in records for c in o["coords"]]
    width = 3 if mode == ORACLE else 2
    try:
        arr = np.array(cells) if cells else np.zeros((0, width), dtype=np.int64)
    except ValueError:
        return None
    if arr.ndim != 2 or arr.shape[1] != width or arr.dtype.kind not in ("i", "f"):
        return None
    if mode == ORACLE and arr.dtype.kind != "i":
        return None
    labels = arr[:, 0]
    if arr.dtype.kind == "f" and np.any(labels != np.floor(labels)):
        return None
    ids = np.fromiter((int(o["id"]) for _, o in records), dtype=np.int64, count=len(records))
    lines = np.fromiter((ln for ln, _ in records), dtype=np.int64, count=len(records))
    second = arr[:, 1] if mode == ORACLE else arr[:, 1].astype(np.float64)
    third = arr[:, 2] if mode == ORACLE else None
    return _assemble(space, ids, counts, labels.astype(np.int64), second, third, lines, mode)


def _assemble(space, ids, counts, labels, second, third, lines, mode) -> VectorFamily | None:
    """CSR family from flat cell arrays; None if a vector repeats a label."""
    n = len(ids)
    rows = np.repeat(np.arange(n, dtype=np.int64), counts)
    pos = labels - space.universe.start
    bad = np.flatnonzero((pos < 0) | (pos >= space.size))
    if len(bad):
        raise FormatError(f"label {int(labels[bad[0]])} outside the universe", int(lines[rows[bad[0]]]))
    if mode == ORACLE:
        num, den = second.copy(), third.copy()
        bad = np.flatnonzero(den == 0)
        if len(bad):
            raise FormatError("zero denominator", int(lines[rows[bad[0]]]))
        sign = np.where(den < 0, -1, 1)
        num *= sign
        den *= sign
        g = np.gcd(num, den)
        g[g == 0] = 1
        num //= g
        den //= g
        keep = num != 0
    else:
        vals = second
        keep = vals != 0
    key = rows * np.int64(space.size) + pos
    order = np.argsort(key, kind="stable")
    if len(key) > 1 and np.any(key[order][1:] == key[order][:-1]):
        return None
    order = order[keep[order]]
    rows, pos = rows[order], pos[order]
    indptr = np.concatenate(([0], np.cumsum(np.bincount(rows, minlength=n)))).astype(np.int64)
    values = RationalArray(num[order], den[order]) if mode == ORACLE else vals[order]
    try:
        fam = VectorFamily(space, ids, indptr, pos, values)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    fam.source_lines = lines
    return fam


def read_family_csv(source, space: SpaceDescriptor, mode: str = ORACLE) -> VectorFamily:
    """CSV rows ``id,label,num,den`` (an optional header row is skipped).

    Rows for one id must be contiguous and ids increasing; integer labels are
    parsed as ints when the universe is a range.
    """
    fh, owned = _open(source, "r")
    try:
        rows = list(csv.reader(fh))
    finally:
        if owned:
            fh.close()
    ids, indptr, positions, values, where = [], [0], [], [], []
    current = None
    pending: list = []
    start_line = 0
    integer_labels = isinstance(space.universe, range)

    def flush():
        _append_vector(space, pending, positions, values, mode, start_line)
        indptr.append(len(positions))

    for lineno, row in enumerate(rows, start=1):
        if not row or (lineno == 1 and row[0].strip().lower() == "id"):
            continue
        if len(row) not in (3, 4):
            raise FormatError("expected id,label,num,den", lineno)
        vid = int(row[0])
        lab = int(row[1]) if integer_labels else row[1]
        if len(row) == 4:
            cell = [lab, int(row[2]), int(row[3])]
        else:
            cell = [lab, float(row[2]) if mode == FLOAT else Fraction(row[2])]
        if vid != current:
            if current is not None:
                flush()
            ids.append(vid)
            where.append(lineno)
            current, pending, start_line = vid, [], lineno
        pending.append(cell)
    if current is not None:
        flush()
    return _finish(space, ids, indptr, positions, values, mode, where)


def _scalar_cells(v) -> list:
    if isinstance(v, float):
        return [v]
    v = Fraction(v)
    return [v.numerator, v.denominator]


def operator_to_json(T: LinearOperator) -> dict:
    """``{"domain", "codomain", "triplets": [[row, col, num, den], ...]}`` sorted by (row, col).

    Symbolic scales, when present, go in ``"row_scale"``/``"col_scale"`` as
    ``[label, base, root]``.
    """
    rl, cl = T.codomain.label, T.domain.label
    out = {
        "domain": T.domain.header(),
        "codomain": T.codomain.header(),
        "triplets": [[rl(r), cl(c), *_scalar_cells(v)] for r, c, v in sorted(T.triplets())],
    }
    if T.row_scale:
        out["row_scale"] = [[rl(r), *s.to_json()] for r, s in sorted(T.row_scale.items())]
    if T.col_scale:
        out["col_scale"] = [[cl(c), *s.to_json()] for c, s in sorted(T.col_scale.items())]
    return out


def operator_from_json(data: dict) -> LinearOperator:
    dom = SpaceDescriptor.from_header(data["domain"])
    cod = SpaceDescriptor.from_header(data["codomain"])
    trip = []
    float_mode = False
    for cell in data["triplets"]:
        if len(cell) == 4:
            r, c, a, b = cell
            trip.append((r, c, Fraction(int(a), int(b))))
        elif len(cell) == 3:
            r, c, v = cell
            float_mode = float_mode or isinstance(v, float)
            trip.append((r, c, v))
        else:
            raise FormatError(f"bad triplet {cell!r}")
    rs = {cod.position(lab): RootScale.from_json([b, r]) for lab, b, r in data.get("row_scale", [])}
    cs = {dom.position(lab): RootScale.from_json([b, r]) for lab, b, r in data.get("col_scale", [])}
    if float_mode:
        trip = [(r, c, float(v)) for r, c, v in trip]
    return LinearOperator.from_triplets(dom, cod, trip, row_scale=rs, col_scale=cs,
                                        mode=FLOAT if float_mode else ORACLE)


def dumps_family(family: VectorFamily) -> str:
    buf = io.StringIO()
    write_family_jsonl(family, buf)
    return buf.getvalue()


def family_cells(family: VectorFamily) -> Iterable[list]:
    for vid, vec in family:
        yield [vid, {str(k): str(v) for k, v in vec.items()}]


def write_family_csv(family: VectorFamily, target) -> None:
    """``id,label,num,den`` rows (``id,label,value`` in float mode), with a header row."""
    fh, owned = _open(target, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label", "value"] if family.mode == FLOAT else ["id", "label", "num", "den"])
        for vid, vec in family:
            for lab, v in vec.items():
                w.writerow([vid, lab, *_scalar_cells(v)])
    finally:
        if owned:
            fh.close()


_INT = rb"-?\d{1,18}"
_CELL = rb"\[" + _INT + rb", " + _INT + rb", " + _INT + rb"\]"
_CANONICAL = re.compile(
    rb'(?:\{"id": ' + _INT + rb', "coords": \[(?:' + _CELL + rb"(?:, " + _CELL + rb")*)?\]\}\n)*")
_NUMERIC = bytes(c if chr(c) in "-0123456789" else 32 for c in range(256))


def _read_canonical(text: str) -> VectorFamily | None:
    """Byte-level parser for the exact layout :func:`write_family_jsonl` emits.

    The whole body is validated against a strict pattern first; anything
    else (other spacing, floats, big integers, label lists) returns None.
    """
    head, _, body = text.partition("\n")
    if not head.startswith("{") or "labels" in head:
        return None
    try:
        header = json.loads(head)
        space = SpaceDescriptor.from_header(header)
    except (ValueError, KeyError, TypeError):
        return None
    raw = body.encode("ascii", "replace")
    if raw and not raw.endswith(b"\n"):
        raw += b"\n"
    if _CANONICAL.fullmatch(raw) is None:
        return None
    buf = np.frombuffer(raw, dtype=np.uint8)
    newlines = np.flatnonzero(buf == ord("\n"))
    n = len(newlines)
    brackets = np.flatnonzero(buf == ord("["))
    per_line = np.diff(np.concatenate(([0], np.searchsorted(brackets, newlines))))
    counts = (per_line - 1).astype(np.int64)
    nums = np.fromstring(raw.translate(_NUMERIC), dtype=np.int64, sep=" ") if n else np.zeros(0, np.int64)
    width = 1 + 3 * counts
    starts = (np.cumsum(width) - width).astype(np.int64)
    ids = nums[starts] if n else np.zeros(0, np.int64)
    mask = np.ones(len(nums), dtype=bool)
    mask[starts] = False
    cells = nums[mask].reshape(-1, 3)
    lines = np.arange(2, n + 2, dtype=np.int64)
    return _assemble(space, ids, counts, cells[:, 0], cells[:, 1], cells[:, 2], lines, ORACLE)
