"""Contextuality-by-Default analysis of the trapped-ion PM data.

Prints the closed-form quantities, then cross-checks the minimal
disagreement with the coupling LP on maximum-entropy joints.

    python scripts/kirchmair_cbd.py [data.csv]
"""
import argparse
import time

from contextuality.cbd import (bundled_kirchmair, cntx, coupling_lp, delta0, delta_min,
                               ingest_expectations, s_odd, synthetic_joints)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="?", help="expectation CSV (default: bundled data)")
    args = ap.parse_args()
    system = ingest_expectations(args.csv) if args.csv else bundled_kirchmair()
    for note in system.notes:
        print(f"note: {note}")

    d0 = delta0(system)
    so = s_odd([system.correlators[c] for c in system.contexts])
    dm = delta_min(system)
    value, contextual = cntx(system)
    print(f"Delta0    = {d0:.4f}")
    print(f"s_odd     = {so:.4f}")
    print(f"Delta_min = {dm:.4f}")
    print(f"CNTX      = {value:.4f}  contextual: {contextual}")

    t0 = time.perf_counter()
    res = coupling_lp(system, synthetic_joints(system), synthetic=True)
    print(f"coupling LP on synthetic joints: {res.value:.10f} "
          f"(|diff| {abs(res.value - dm):.2e}, {res.atoms} atoms, {time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
