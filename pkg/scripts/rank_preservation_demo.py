#!/usr/bin/env python3
"""For untied rankings the share of concordant pairs equals (1 + tau) / 2, so tau >= 0.5
means at least 75% of pairwise orderings survive. This draws random permutations at a
few swap levels and prints tau next to the concordant share."""

from __future__ import annotations

import random

from disclosure_scoring.analytics import kendall_tau


def perturbed(n: int, swaps: int, rng: random.Random) -> list[int]:
    order = list(range(n))
    for _ in range(swaps):
        i, j = rng.sample(range(n), 2)
        order[i], order[j] = order[j], order[i]
    return order


def main(n: int = 30, seed: int = 0) -> None:
    rng = random.Random(seed)
    base = list(range(n))
    print(f"{'swaps':>5} {'tau':>8} {'concordant':>11} {'(1+tau)/2':>10}")
    for swaps in (0, 1, 2, 5, 10, 20, 50):
        r = kendall_tau(base, perturbed(n, swaps, rng))
        print(f"{swaps:>5} {r.tau_b:>8.4f} {float(r.concordant_fraction):>11.4f} {(1 + r.tau_b) / 2:>10.4f}")


if __name__ == "__main__":
    main()
