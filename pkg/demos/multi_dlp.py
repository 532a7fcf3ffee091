"""Many discrete logarithms for little more than the price of a few.

One random walk over E(F_p) serves all targets at once.  Every point the walk
revisits gives a linear relation among the unknown logarithms; once the
relations reach full rank the system is solved in one shot.  The cost grows
like sqrt(tau * n), so the per-log cost falls as tau grows.
"""

import math
import random

from cfvz_lab import random_curve
from cfvz_lab.curve import dlp_bruteforce, scalar_mul
from cfvz_lab.mdlp import solve_many_logs


def main():
    curve = random_curve(random.Random(1), 90_000, 110_000)
    n = curve.n
    print(f"prime-order curve over F_{curve.p}, n = {n}\n")
    print(f"{'tau':>4} {'additions':>10} {'sqrt(2 tau n)':>14} {'per log':>9} {'single rho x tau':>17}")
    rng = random.Random(7)
    for tau in (1, 2, 4, 8, 16, 32):
        logs = [rng.randrange(n) for _ in range(tau)]
        targets = [scalar_mul(k, curve.generator, curve) for k in logs]
        got, stats = solve_many_logs(targets, curve, seed=tau)
        assert list(got) == logs
        single = tau * math.sqrt(math.pi * n / 2)
        print(f"{tau:>4} {stats.point_additions:>10} {math.sqrt(2 * tau * n):>14.0f} "
              f"{stats.point_additions / tau:>9.0f} {single:>17.0f}")

    P = targets[0]
    print(f"\nspot check: log of {P} is {got[0]}, brute force says {dlp_bruteforce(P, curve)}")


if __name__ == "__main__":
    main()
