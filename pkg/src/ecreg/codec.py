"""(N, k) MDS erasure code: Reed-Solomon over GF(2^8) with a Vandermonde generator.

Symbol ``s`` (1-based) is the evaluation at ``x = s - 1`` of the polynomial
whose coefficients are the ``k`` stripes of the (padded) value. Any ``k``
distinct evaluation points give an invertible Vandermonde system, so any
``k`` symbols reconstruct the value. For ``k == 1`` every symbol equals the
value, i.e. the code degenerates to replication.

Byte-wise field multiplication is done with ``bytes.translate`` over
precomputed 256-entry tables and additions are XORs on big integers, which
keeps the hot path in C for the small values used in simulation.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

from .core import CodedSymbol

PRIM_POLY = 0x11D

EXP = [0] * 512
LOG = [0] * 256
_x = 1
for _i in range(255):
    EXP[_i] = _x
    LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= PRIM_POLY
for _i in range(255, 512):
    EXP[_i] = EXP[_i - 255]
del _x, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return EXP[255 - LOG[a]]


def gf_pow(a: int, e: int) -> int:
    if e == 0:
        return 1
    if a == 0:
        return 0
    return EXP[(LOG[a] * e) % 255]


MUL_TABLES = [bytes(gf_mul(c, b) for b in range(256)) for c in range(256)]


class InsufficientSymbols(ValueError):
    pass


def _scale(data: bytes, c: int) -> int:
    """``c * data`` (byte-wise in GF(256)) as a little-endian integer."""
    if c == 0:
        return 0
    if c == 1:
        return int.from_bytes(data, "little")
    return int.from_bytes(data.translate(MUL_TABLES[c]), "little")


def _combine(rows: Sequence[bytes], coeffs: Sequence[int], width: int) -> bytes:
    acc = 0
    for c, row in zip(coeffs, rows):
        acc ^= _scale(row, c)
    return acc.to_bytes(width, "little")


def invert_matrix(m: Sequence[Sequence[int]]) -> list[list[int]]:
    """Gauss-Jordan inverse over GF(256); raises ``ValueError`` if singular."""
    n = len(m)
    a = [list(row) + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            raise ValueError("singular matrix")
        a[col], a[pivot] = a[pivot], a[col]
        inv = gf_inv(a[col][col])
        a[col] = [gf_mul(inv, x) for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                c = a[r][col]
                pr = a[col]
                a[r] = [x ^ gf_mul(c, y) for x, y in zip(a[r], pr)]
    return [row[n:] for row in a]


class Codec:
    """Immutable (n, k) code over values of exactly ``value_bytes`` bytes."""

    def __init__(self, n: int, k: int, value_bytes: int):
        if not 1 <= k <= n <= 256:
            raise ValueError(f"need 1 <= k <= n <= 256, got n={n}, k={k}")
        if value_bytes < 1:
            raise ValueError("value_bytes must be positive")
        self.n = n
        self.k = k
        self.value_bytes = value_bytes
        self.symbol_bytes = -(-value_bytes // k)
        self.padded_bytes = self.symbol_bytes * k
        self.generator = [[gf_pow(s, m) for m in range(k)] for s in range(n)]

    def __repr__(self) -> str:
        return f"Codec(n={self.n}, k={self.k}, value_bytes={self.value_bytes})"

    def _stripes(self, value: bytes) -> list[bytes]:
        if len(value) != self.value_bytes:
            raise ValueError(f"value has {len(value)} bytes, codec expects {self.value_bytes}")
        padded = value + bytes(self.padded_bytes - len(value))
        w = self.symbol_bytes
        return [padded[m * w:(m + 1) * w] for m in range(self.k)]

    def encode(self, value: bytes) -> list[CodedSymbol]:
        stripes = self._stripes(value)
        w = self.symbol_bytes
        return [CodedSymbol(s + 1, _combine(stripes, self.generator[s], w)) for s in range(self.n)]

    def encode_one(self, value: bytes, index: int) -> CodedSymbol:
        """The single symbol for server ``index`` (1-based)."""
        stripes = self._stripes(value)
        return CodedSymbol(index, _combine(stripes, self.generator[index - 1], self.symbol_bytes))

    @lru_cache(maxsize=4096)
    def _decoder(self, indices: tuple[int, ...]) -> list[list[int]]:
        return invert_matrix([self.generator[i - 1] for i in indices])

    def decode(self, symbols: Iterable[CodedSymbol]) -> bytes:
        chosen: dict[int, CodedSymbol] = {}
        for sym in symbols:
            if not 1 <= sym.index <= self.n:
                raise ValueError(f"symbol index {sym.index} outside 1..{self.n}")
            if len(sym.data) != self.symbol_bytes:
                raise ValueError(f"symbol has {len(sym.data)} bytes, expected {self.symbol_bytes}")
            chosen.setdefault(sym.index, sym)
        if len(chosen) < self.k:
            raise InsufficientSymbols(
                f"insufficient symbols: {len(chosen)} distinct indices, need {self.k}")
        indices = tuple(sorted(chosen)[: self.k])
        inv = self._decoder(indices)
        rows = [chosen[i].data for i in indices]
        w = self.symbol_bytes
        out = b"".join(_combine(rows, inv[m], w) for m in range(self.k))
        return out[: self.value_bytes]
