"""Split a value into n symbols so that any k of them rebuild it."""

from itertools import combinations

from ecreg.codec import Codec, InsufficientSymbols

codec = Codec(n=7, k=3, value_bytes=12)
value = b"twelve bytes"
symbols = codec.encode(value)
for s in symbols:
    print(f"server {s.index}: {s.data.hex()}")

subsets = list(combinations(symbols, 3))
assert all(codec.decode(sub) == value for sub in subsets)
print(f"\nall {len(subsets)} three-symbol subsets decode to {value!r}")

try:
    codec.decode(symbols[:2])
except InsufficientSymbols as exc:
    print("two symbols:", exc)
