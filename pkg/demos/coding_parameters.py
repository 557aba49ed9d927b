"""How the tolerated write concurrency picks the code and trims the server count."""

from fractions import Fraction

from ecreg import SystemParams
from ecreg.metrics import abd_gap

print(f"{'N':>3} {'f':>2} {'nu':>3} {'k':>3} {'servers used':>12} {'storage':>8} {'replication':>11}")
for n, f, nu in [(7, 1, 1), (7, 1, 2), (8, 1, 2), (9, 2, 2), (13, 2, 3), (13, 2, 9)]:
    p = SystemParams(n, f, nu)
    print(f"{n:>3} {f:>2} {nu:>3} {p.k:>3} {p.n:>12} {str(Fraction(p.n, p.k)):>8} {2 * f + 1:>11}")

# The one extra server in (8, 1, 2) buys nothing: k stays 3, so 7 servers do the same job.
p = SystemParams(13, 2, 3)
diff, factored = abd_gap(p)
print(f"\nsaving over replication at (13, 2, 3): {diff} units, also (k-1)/k * (2f+1-nu) = {factored}")
