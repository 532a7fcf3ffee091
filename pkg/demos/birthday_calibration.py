"""How many walk points are needed before tau collisions appear?

With alpha uniform draws from n values the number of equal pairs is close to
Poisson with mean alpha(alpha-1)/(2n).  This script compares that prediction
with simulation, starting from the classic 23 people and 365 birthdays.
"""

from cfvz_lab.mdlp import calibration_table, min_walks


def show(n, tau, trials, alphas=None):
    print(f"\nn = {n}, tau = {tau}: predicted median alpha = {min_walks(n, tau)}")
    print(f"{'alpha':>6} {'simulated':>10} {'Poisson':>9}")
    for alpha, emp, pred, _ in calibration_table(n, tau, trials, seed=0, alphas=alphas):
        print(f"{alpha:>6} {emp:>10.4f} {pred:>9.4f}")


def main():
    show(365, 1, 20_000, alphas=range(18, 29))
    show(10_000, 3, 5_000)
    show(10_000, 12, 5_000)


if __name__ == "__main__":
    main()
