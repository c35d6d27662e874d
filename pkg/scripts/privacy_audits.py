#!/usr/bin/env python3
"""Run the full privacy audit battery for every scheme, plus the
noise-disabled power check, and write the results JSON into ./results."""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from pruw.audit import default_audit_suite  # noqa: E402

SAMPLES = 100_000


def main() -> int:
    out_dir = pathlib.Path(__file__).resolve().parent.parent / "results"
    out_dir.mkdir(exist_ok=True)
    payload = {}
    all_ok = True
    for scheme in ("basic", "topr", "random"):
        live = default_audit_suite(scheme, samples=SAMPLES, q=5, seed=0)
        control = default_audit_suite(scheme, samples=SAMPLES, q=5, seed=0,
                                      disable_noise=True)
        payload[scheme] = {
            "audits": [r.as_dict() for r in live],
            "noise_disabled_control": [r.as_dict() for r in control],
        }
        ok = all(r.passed for r in live) and not any(r.passed for r in control)
        all_ok &= ok
        print(f"{scheme}: audits "
              f"{'pass' if all(r.passed for r in live) else 'FAIL'}, "
              f"control {'fails as expected' if not any(r.passed for r in control) else 'UNEXPECTEDLY PASSES'}")
    path = out_dir / "privacy_audits.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(f"wrote {path}")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
