"""Shared value types: system parameters, tags, payloads and quorum arithmetic."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Union


class ModelViolation(ValueError):
    """Parameters outside the crash-failure model (e.g. f > (N-1)/2)."""


def _check_model(n: int, f: int, nu: int) -> None:
    if n < 1 or nu < 1 or f < 0:
        raise ModelViolation(f"need N >= 1, f >= 0, nu >= 1 (got N={n}, f={f}, nu={nu})")
    if 2 * f > n - 1:
        raise ModelViolation(f"f={f} exceeds (N-1)/2 for N={n}")


def compute_k(n: int, f: int, nu: int) -> int:
    """Coding parameter ``ceil((N - 2f) / nu)``."""
    _check_model(n, f, nu)
    return -(-(n - 2 * f) // nu)


def reduce_nodes(n: int, f: int, nu: int) -> int:
    """Smallest server count ``(k-1)*nu + 2f + 1`` that keeps the same ``k``."""
    k = compute_k(n, f, nu)
    return (k - 1) * nu + 2 * f + 1


def quorum_size(n: int, f: int) -> int:
    return n - f


def min_quorum_intersection(n: int, f: int) -> int:
    # |Q1 & Q2| >= |Q1| + |Q2| - N
    return max(0, 2 * quorum_size(n, f) - n)


@dataclass(frozen=True)
class SystemParams:
    """Validated system parameters.

    ``n`` is the server count actually used, i.e. already reduced so that
    ``k == 1 + (n - (2f+1)) / nu`` holds exactly. Pass ``reduce=False`` to
    keep a non-tight ``n`` (only useful for studying the reduction itself).
    ``value_size_bits`` is rounded up to a multiple of ``8k`` so every coded
    symbol is exactly ``1/k`` of a value.
    """

    n: int
    f: int
    nu: int
    value_size_bits: int = 96
    requested_n: int = field(default=0, compare=False)
    k: int = field(init=False)

    def __init__(self, n: int, f: int, nu: int, value_size_bits: int = 96, *, reduce: bool = True):
        k = compute_k(n, f, nu)
        used = reduce_nodes(n, f, nu) if reduce else n
        if value_size_bits < 1:
            raise ValueError("value_size_bits must be positive")
        unit = 8 * k
        padded = -(-value_size_bits // unit) * unit
        object.__setattr__(self, "n", used)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "value_size_bits", padded)
        object.__setattr__(self, "requested_n", n)
        object.__setattr__(self, "k", k)

    @property
    def value_bytes(self) -> int:
        return self.value_size_bits // 8

    @property
    def symbol_bytes(self) -> int:
        return self.value_bytes // self.k

    @property
    def quorum(self) -> int:
        return self.n - self.f

    @property
    def prewrite_targets(self) -> int:
        """Number of servers (1..k+2f) that receive full replicas in a pre-write."""
        return min(self.n, self.k + 2 * self.f)

    @property
    def prewrite_acks(self) -> int:
        return min(self.n - self.f, self.k + self.f)

    def abd(self) -> "SystemParams":
        """Parameters of the replication baseline on 2f+1 servers (k = 1)."""
        return SystemParams(2 * self.f + 1, self.f, self.nu, self.value_size_bits)

    def default_value(self) -> bytes:
        return bytes(self.value_bytes)

    def as_dict(self) -> dict:
        return {"n": self.n, "f": self.f, "nu": self.nu, "k": self.k,
                "value_size_bits": self.value_size_bits}


@functools.total_ordering
@dataclass(frozen=True, eq=True)
class Tag:
    """Version identifier.

    Single-writer tags have ``writer=None``; multi-writer tags carry the
    writing client's id and order lexicographically on ``(z, writer)``.
    Comparing the two variants is a programming error.
    """

    z: int
    writer: int | None = None

    @property
    def multi(self) -> bool:
        return self.writer is not None

    def __lt__(self, other: "Tag") -> bool:
        if not isinstance(other, Tag):
            return NotImplemented
        if (self.writer is None) != (other.writer is None):
            raise TypeError(f"cannot compare single-writer and multi-writer tags: {self} vs {other}")
        if self.z != other.z:
            return self.z < other.z
        return (self.writer or 0) < (other.writer or 0)

    def __str__(self) -> str:
        return str(self.z) if self.writer is None else f"({self.z},{self.writer})"

    def to_json(self) -> list[int] | int:
        return self.z if self.writer is None else [self.z, self.writer]

    @classmethod
    def from_json(cls, raw) -> "Tag":
        if isinstance(raw, list):
            return cls(int(raw[0]), int(raw[1]))
        return cls(int(raw))


SW_ZERO = Tag(0)
MW_ZERO = Tag(0, 0)  # writer id 0 is reserved as the bottom identifier


def initial_tag(multi_writer: bool) -> Tag:
    return MW_ZERO if multi_writer else SW_ZERO


def tag_less(a: Tag, b: Tag) -> bool:
    return a < b


@dataclass(frozen=True)
class Replica:
    value: bytes

    @property
    def size(self) -> int:
        return len(self.value)


@dataclass(frozen=True)
class CodedSymbol:
    index: int  # server index, 1-based
    data: bytes

    @property
    def size(self) -> int:
        return len(self.data)


Payload = Union[Replica, CodedSymbol]


@dataclass(frozen=True)
class StoredElement:
    tag: Tag
    payload: Payload

    @property
    def coded(self) -> bool:
        return isinstance(self.payload, CodedSymbol)


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)
