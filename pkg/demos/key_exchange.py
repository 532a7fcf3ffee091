"""Two parties agree on a matrix of curve points.

Alice and Bob share a public element [A Pi; 0 B] with Pi a matrix of points.
Each raises it to a private power, swaps corners, and raises the other's
corner (with the same A and B) to their own power.
"""

import random

from cfvz_lab import make_curve_params, run_key_exchange
from cfvz_lab.cfvz import random_block_element


def show(label, M):
    print(f"{label}:")
    for row in M.entries:
        print("   ", "  ".join("O" if P is None else f"({P[0]:>4},{P[1]:>4})" for P in row))


def main():
    rng = random.Random(2024)
    curve = make_curve_params(1009, 3, 7, rng)
    print(f"curve y^2 = x^3 + {curve.a}x + {curve.b} over F_{curve.p}, n = {curve.n} = {curve.l} * {curve.p_prime}")
    print(f"generator {curve.generator}\n")

    base = random_block_element(curve, 2, 3, rng)
    print("A =", base.A.tolist())
    print("B =", base.B.tolist())
    show("Pi", base.block)

    k, l = rng.randrange(1, curve.n), rng.randrange(1, curve.n)
    tr = run_key_exchange(curve, base, k, l)
    print(f"\nAlice's key k = {k}, Bob's key l = {l}")
    show("Alice publishes Pi_k", tr.alice_public)
    show("Bob publishes Pi_l", tr.bob_public)
    show("\nShared secret (Pi_l)_k = (Pi_k)_l", tr.shared)
    print("\nrecomputed from scratch:", tr.recompute())


if __name__ == "__main__":
    main()
