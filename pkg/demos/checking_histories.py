"""The tag-order test and the brute-force search on two small hand-made histories."""

from ecreg.checker import OperationRecord, brute_force_linearizable, check_tag_atomicity
from ecreg.core import SW_ZERO, Tag

v0, v1 = b"\x00" * 4, b"\x01" * 4


def op(i, client, kind, start, end, value, tag):
    return OperationRecord(i, client, kind, start, end, value, tag)


# A write that never finishes is seen by one read, then missed by a later read.
inversion = [op(1, "c1", "write", 0, None, v1, Tag(1)),
             op(2, "c2", "read", 1, 2, v1, Tag(1)),
             op(3, "c3", "read", 3, 4, v0, SW_ZERO)]
# The same history without the last read is fine.
legal = inversion[:2]

for name, h in (("inversion", inversion), ("legal", legal)):
    tags = check_tag_atomicity(h, v0, multi_writer=False)
    print(f"{name:9s} tag order: {tags.ok!s:5s} {tags.detail:45s} brute force: {brute_force_linearizable(h, v0).ok}")
