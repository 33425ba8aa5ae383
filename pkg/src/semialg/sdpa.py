"""SDPA sparse format (.dat-s) export and import.

The emitted problem is the standard SDPA primal

    min  c . x   s.t.   X = sum_i x_i F_i - F_0,  X PSD,

with x the moment vector.  Equality rows have no native SDPA encoding;
each row a.w = beta becomes two opposing 1x1 diagonal blocks
(a.w - beta >= 0 and beta - a.w >= 0), appended after the PSD pencils.
The importer recognizes such pairs and folds them back into equality
rows, which makes export -> import -> export byte-identical.

Numbers are printed with ``repr`` (shortest round-tripping form), entries
are sorted by (matrix, block, row, column), and a header comment records
a hash of the canonical body.
"""

from __future__ import annotations

import hashlib

from .errors import SdpaFormatError
from .moment import LmiRelaxation, MatrixPencil


def _body_lines(rel: LmiRelaxation) -> list[str]:
    m = rel.m
    nblocks = len(rel.blocks) + 2 * len(rel.eq_rows)
    sizes = [str(b.size) for b in rel.blocks] + ["-1"] * (2 * len(rel.eq_rows))
    c = [0.0] * m
    for j, coeff in rel.objective.items():
        c[j] = coeff

    entries = []  # (matno, blkno, i, j, value)
    for bi, block in enumerate(rel.blocks, start=1):
        for (r, col), form in sorted(block.entries.items()):
            for j, v in sorted(form.items()):
                if v != 0.0:
                    entries.append((j + 1, bi, r + 1, col + 1, v))
        for (r, col), v in sorted(block.const.items()):
            if v != 0.0:
                entries.append((0, bi, r + 1, col + 1, -v))
    base = len(rel.blocks)
    for ri, (row, rhs) in enumerate(zip(rel.eq_rows, rel.eq_rhs)):
        pos_blk = base + 2 * ri + 1
        neg_blk = base + 2 * ri + 2
        for j, v in sorted(row.items()):
            if v != 0.0:
                entries.append((j + 1, pos_blk, 1, 1, v))
                entries.append((j + 1, neg_blk, 1, 1, -v))
        if rhs != 0.0:
            entries.append((0, pos_blk, 1, 1, rhs))
            entries.append((0, neg_blk, 1, 1, -rhs))
    entries.sort()

    lines = [str(m), str(nblocks), " ".join(sizes), " ".join(repr(v) for v in c)]
    lines.extend(f"{mat} {blk} {i} {j} {repr(v)}" for mat, blk, i, j, v in entries)
    return lines


def export_sdpa(rel: LmiRelaxation) -> str:
    """Canonical .dat-s text for a relaxation (or imported structure)."""
    body = _body_lines(rel)
    digest = hashlib.sha256("\n".join(body).encode()).hexdigest()[:16]
    return "\n".join([f'"problem hash: {digest}'] + body) + "\n"


def _tokenize(text: str):
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith('"') or stripped.startswith("*"):
            continue
        for ch in ",(){}":
            line = line.replace(ch, " ")
        for tok in line.split():
            tokens.append((tok, lineno))
    return tokens


class _TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0
        self.line = 1

    def next_int(self, what: str) -> int:
        tok, line = self._next(what)
        try:
            return int(tok)
        except ValueError:
            raise SdpaFormatError(f"expected integer {what}, found {tok!r}", line, None)

    def next_float(self, what: str) -> float:
        tok, line = self._next(what)
        try:
            return float(tok)
        except ValueError:
            raise SdpaFormatError(f"expected number {what}, found {tok!r}", line, None)

    def _next(self, what: str):
        if self.pos >= len(self.tokens):
            last_line = self.tokens[-1][1] if self.tokens else 1
            raise SdpaFormatError(f"unexpected end of input, expected {what}", last_line, None)
        tok = self.tokens[self.pos]
        self.pos += 1
        self.line = tok[1]
        return tok

    def exhausted(self) -> bool:
        return self.pos >= len(self.tokens)

    def remaining(self) -> int:
        return len(self.tokens) - self.pos


def import_sdpa(text: str) -> LmiRelaxation:
    """Parse .dat-s text into structure-only relaxation data."""
    stream = _TokenStream(_tokenize(text))
    m = stream.next_int("variable count")
    nblocks = stream.next_int("block count")
    sizes = [stream.next_int(f"size of block {i + 1}") for i in range(nblocks)]
    c = [stream.next_float(f"objective entry {j + 1}") for j in range(m)]

    if stream.remaining() % 5 != 0:
        line = stream.tokens[-1][1] if stream.tokens else 1
        raise SdpaFormatError("entry lines must have 5 fields: matno blkno i j value", line, None)

    # per block: {(r, c): {matno: value}} with matno 0 the constant part
    data: list[dict] = [dict() for _ in range(nblocks)]
    while not stream.exhausted():
        mat = stream.next_int("matrix number")
        blk = stream.next_int("block number")
        row = stream.next_int("row")
        col = stream.next_int("column")
        val = stream.next_float("value")
        if not 0 <= mat <= m:
            raise SdpaFormatError(f"matrix number {mat} out of range 0..{m}", stream.line, None)
        if not 1 <= blk <= nblocks:
            raise SdpaFormatError(f"block number {blk} out of range 1..{nblocks}", stream.line, None)
        size = abs(sizes[blk - 1])
        if not (1 <= row <= size and 1 <= col <= size):
            raise SdpaFormatError(f"entry ({row},{col}) outside block {blk}", stream.line, None)
        if row > col:
            row, col = col, row
        cell = data[blk - 1].setdefault((row - 1, col - 1), {})
        cell[mat] = cell.get(mat, 0.0) + val

    def to_pencil(bi: int, label: str) -> MatrixPencil:
        entries, const = {}, {}
        for rc, forms in data[bi].items():
            lin = {matno - 1: v for matno, v in forms.items() if matno != 0 and v != 0.0}
            if lin:
                entries[rc] = lin
            v0 = forms.get(0, 0.0)
            if v0 != 0.0:
                const[rc] = -v0
        size = abs(sizes[bi])
        return MatrixPencil(size=size, label=label, entries=entries, const=const, basis=None)

    def linear_form(bi: int):
        """For a 1x1 block: (linear coefficients, rhs) of form >= rhs."""
        forms = data[bi].get((0, 0), {})
        lin = {matno - 1: v for matno, v in forms.items() if matno != 0 and v != 0.0}
        return lin, forms.get(0, 0.0)

    # fold trailing paired 1x1 diagonal blocks back into equality rows
    n_pairs = 0
    while True:
        hi = nblocks - 2 * n_pairs
        if hi < 2 or sizes[hi - 1] != -1 or sizes[hi - 2] != -1:
            break
        lin_a, rhs_a = linear_form(hi - 2)
        lin_b, rhs_b = linear_form(hi - 1)
        if lin_a and rhs_a == -rhs_b and lin_b == {j: -v for j, v in lin_a.items()}:
            n_pairs += 1
        else:
            break

    n_pencils = nblocks - 2 * n_pairs
    blocks = [to_pencil(bi, f"block:{bi}") for bi in range(n_pencils)]
    eq_rows, eq_rhs, eq_meta = [], [], []
    for pair in range(n_pairs):
        bi = n_pencils + 2 * pair
        lin, rhs = linear_form(bi)
        eq_rows.append(lin)
        eq_rhs.append(rhs)
        eq_meta.append(("imported", pair))

    return LmiRelaxation(
        m=m,
        blocks=blocks,
        eq_rows=eq_rows,
        eq_rhs=eq_rhs,
        eq_meta=eq_meta,
        objective={j: v for j, v in enumerate(c) if v != 0.0},
    )
