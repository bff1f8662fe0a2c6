#!/usr/bin/env python3
"""Run every dimc subcommand and validate its report against schemas/report.schema.json."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main():
    cli, root = sys.argv[1], Path(sys.argv[2])
    models = root / "models"
    schema = json.loads((root / "schemas" / "report.schema.json").read_text())
    validator = jsonschema.Draft202012Validator(schema)
    tmp = Path(tempfile.mkdtemp(prefix="dimc_schema_"))
    policy, compiled = tmp / "policy.json", tmp / "compiled.json"

    runs = [
        ("validate", ["validate", "--model", models / "relay.json"], 0),
        ("validate urgent", ["validate", "--model", models / "app_att_urgent.json"], 0),
        ("simulate", ["simulate", "--model", models / "app_att_urgent.json",
                      "--profile", models / "urgent_commit_t.profile.json", "--samples", "2000", "--seed", "1"], 0),
        ("solve", ["solve", "--model", models / "ping_pong.json", "--p", "1/2", "--exact", "--oracle",
                   "-o", policy], 0),
        ("emulate", ["emulate", "--model", models / "ping_pong.json", "--policy", policy,
                     "--i", "1,2", "--samples", "500", "--seed", "2"], None),
        ("compile-decpomdp", ["compile-decpomdp", "--in", models / "decpomdp" / "coin_match.json",
                              "--out", compiled], 0),
        ("check-reduction", ["check-reduction", "--in", models / "decpomdp" / "geometric.json",
                             "--profile", models / "decpomdp" / "geometric.profile.json",
                             "--horizon", "5", "--samples", "2000", "--seed", "3"], 0),
        ("sched-test", ["sched-test", "--model", models / "four_modules.json",
                        "--profile", models / "four_modules.profile.json", "--samples", "2000", "--seed", "4"], 0),
        ("error report", ["solve", "--model", models / "app_att_urgent.json", "--p", "1/2"], 1),
        ("deterministic", ["--deterministic", "simulate", "--model", models / "app_att_urgent.json",
                           "--profile", models / "urgent_commit_t.profile.json", "--samples", "100", "--seed", "1"], 0),
    ]

    failed = 0
    for name, args, expected in runs:
        proc = subprocess.run([cli] + [str(a) for a in args], capture_output=True, text=True)
        text = Path(args[args.index("-o") + 1]).read_text() if "-o" in args else proc.stdout
        problems = []
        if expected is not None and proc.returncode != expected:
            problems.append(f"exit {proc.returncode}, expected {expected}")
        try:
            report = json.loads(text)
            problems += [e.message for e in validator.iter_errors(report)]
            if name == "deterministic" and ("timestamp" in report or "elapsed_seconds" in report):
                problems.append("deterministic report carries timing fields")
            if name == "error report" and "error" not in report:
                problems.append("missing error object")
        except json.JSONDecodeError as e:
            problems.append(f"not JSON: {e}")
        print(("PASS " if not problems else "FAIL ") + name + ("" if not problems else ": " + "; ".join(problems)))
        failed += bool(problems)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
