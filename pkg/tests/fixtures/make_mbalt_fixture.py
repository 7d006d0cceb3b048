"""Regenerate ``mbalt_records.csv``: 866 synthetic lease payment histories.

The marginal counts of termination age X and truncation time Y are the
integer counts implied by the published MBALT 2017-A estimate table.  The
joint assignment of Y to X is random (any feasible joint yields the same
estimates) and fixed by the seed below.
"""

import csv
from pathlib import Path

import numpy as np

SEED = 866
DELTA, M = 3, 18
Y_COUNTS = {4: 49, 5: 36, 6: 42, 7: 29, 8: 26, 9: 20, 10: 34, 11: 21, 12: 27, 13: 37,
            14: 46, 15: 60, 16: 93, 17: 71, 18: 75, 19: 84, 20: 69, 21: 46, 22: 1}
X_COUNTS = dict(zip(range(4, 38), [0, 0, 0, 0, 1, 0, 0, 1, 2, 1, 2, 3, 7, 7, 12, 19, 35, 50,
                                   59, 68, 115, 344, 35, 35, 17, 13, 8, 16, 5, 6, 2, 2, 0, 1]))
N_CENSORED = 8


def main(out=Path(__file__).with_name("mbalt_records.csv")):
    rng = np.random.default_rng(SEED)
    pool = [y for y, c in Y_COUNTS.items() for _ in range(c)]
    xs = [x for x, c in X_COUNTS.items() for _ in range(c)]
    pairs = []
    for x in xs:
        eligible = [i for i, y in enumerate(pool) if y <= x]
        pairs.append((x, pool.pop(eligible[rng.integers(len(eligible))])))
    assert not pool
    order = rng.permutation(len(pairs))
    censored = set(range(len(pairs) - N_CENSORED, len(pairs)))
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["contract_id", "origination_month", "age", "payment", "original_term"])
        for k, idx in enumerate(order):
            x, y = pairs[idx]
            cid = f"MB{k + 1:04d}"
            t = M + DELTA + 1 - y
            amount = round(float(rng.uniform(250, 650)), 2)
            last = x if idx in censored else x + 2
            for age in range(y, last + 1):
                pay = amount if (idx in censored or age < x) else 0.0
                w.writerow([cid, t, age, f"{pay:.2f}", 24])


if __name__ == "__main__":
    main()
