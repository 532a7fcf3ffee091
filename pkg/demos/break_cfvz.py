"""An eavesdropper recovers the shared secret from the public transcript.

The corners C_m of [A C; 0 B]^m satisfy a linear recurrence of length r + s,
so Alice's corner is a fixed linear combination of C_1 .. C_{r+s-1}.  After
lifting the public points to residues, the same combination applied to Bob's
corner gives the shared secret.  Everything but step 1 is linear algebra, so
the whole break costs about sqrt(rs n) point additions.
"""

import math
import random

from cfvz_lab import AttackInput, random_curve, run_attack_2rs, run_attack_3rs, run_key_exchange, verify_report
from cfvz_lab.cfvz import random_block_element


def main():
    curve = random_curve(random.Random(3), 700_000, 1_000_000)
    print(f"curve over F_{curve.p}, n = {curve.n}")
    rng = random.Random(99)
    base = random_block_element(curve, 2, 2, rng)
    tr = run_key_exchange(curve, base, rng.randrange(1, curve.n), rng.randrange(1, curve.n))
    inp = AttackInput.from_transcript(tr)

    for attack in (run_attack_3rs, run_attack_2rs):
        rep = attack(inp, seed=5)
        tau = rep.dlp_count
        print(f"\n{rep.variant}: {tau} logarithms")
        print(f"  coefficients a_i       {rep.coefficients}")
        print(f"  step 1 additions       {rep.step1_additions} (sqrt(2 tau n) = {math.sqrt(2 * tau * curve.n):.0f})")
        print(f"  remaining additions    {rep.final_additions}")
        print(f"  secret recovered       {verify_report(rep, tr)}")

    print(f"\nfor scale, one generic rho on a single log takes about {math.sqrt(math.pi * curve.n / 2):.0f} additions")


if __name__ == "__main__":
    main()
