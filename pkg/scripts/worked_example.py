#!/usr/bin/env python3
"""Narrated run of the five-subpacket sparse-position fixture.

Ten databases, five subpackets, secret permutation (2,5,1,3,4).  The user
is told the permuted downlink set {2,3}, recovers the true subpackets
{5,1}, trains, and pushes updates for true subpackets {1,4}, which travel
as (value, position) pairs at permuted positions 3 and 5.
"""

import pathlib
import sys
from fractions import Fraction

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from pruw.config import ExperimentConfig  # noqa: E402
from pruw.harness import run_session  # noqa: E402


def main() -> int:
    for case in (1, 2):
        cfg = ExperimentConfig(
            scheme="topr", n=10, m=3, p=5, q=127, case=case,
            r=Fraction(2, 5), r_prime=Fraction(2, 5),
            perm=(2, 5, 1, 3, 4), v_tilde=(2, 3), scores=(10, 0, 0, 9, 0), seed=1,
        )
        res = run_session(cfg)
        it = res.iterations[0]
        d = it.detail
        print(f"case {case}: permuted downlink set {d['v_tilde']} -> true subpackets "
              f"{d['v_true']}; sparse write landed at permuted positions "
              f"{d['write_positions']} (true {d['chosen_true']})")
        print(f"  verdict: {'pass' if it.verdict else 'FAIL'};"
              f" C_R = {it.ledger.c_read}, C_W = {it.ledger.c_write}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
