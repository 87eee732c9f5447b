#!/usr/bin/env python3
"""End-to-end checks of the nullot CLI: exit codes, report schema, determinism.

usage: cli_check.py BINARY SCHEMA CONFIG_DIR CASE
"""
import filecmp
import json
import os
import subprocess
import sys
import tempfile

import jsonschema

BINARY, SCHEMA, CONFIGS, CASE = sys.argv[1:5]
VALIDATOR = jsonschema.Draft202012Validator(json.load(open(SCHEMA)))


def run(config, out, *extra, env=None):
    proc = subprocess.run([BINARY, "check", config, "--out", out, *extra], capture_output=True, text=True, env=env)
    report_path = os.path.join(out, "report.json")
    report = json.load(open(report_path)) if os.path.exists(report_path) else None
    if report is not None:
        errors = sorted(VALIDATOR.iter_errors(report), key=str)
        for e in errors:
            print("schema:", e.message, list(e.path))
        expect(not errors, "report matches the schema")
        expect(report["exit_status"] == proc.returncode, "exit_status field equals the exit code")
    return proc.returncode, report, proc.stderr


FAILED = []


def expect(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        FAILED.append(what)


def cfg(name):
    return os.path.join(CONFIGS, name)


def write_tmp(tmp, text):
    path = os.path.join(tmp, "config.json")
    with open(path, "w") as f:
        f.write(text)
    return path


with tempfile.TemporaryDirectory() as tmp:
    out = os.path.join(tmp, "out")
    if CASE == "horizon":
        rc, rep, _ = run(cfg("schwarzschild_horizon_hawking.json"), out)
        expect(rc == 0, "Schwarzschild horizon exits 0")
        hawking = rep["checks"][0]
        expect(hawking["check"] == "hawking" and hawking["verdict"] == "pass", "hawking verdict pass")
        expect(hawking["details"]["equality"] is True, "equality flag set")
        expect(abs(hawking["details"]["relative_gap"]) <= 1e-8, "relative area gap within 1e-8")
        expect(rep["checks"][1]["verdict"] == "pass", "rigidity verdict pass")
    elif CASE == "adversarial":
        rc, rep, _ = run(cfg("adversarial_nc1.json"), out)
        expect(rc == 1, "adversarial weight exits 1")
        nc1 = rep["checks"][0]
        expect(nc1["verdict"] == "fail" and nc1["worst_margin"] < -nc1["tolerance"], "nc1 fails beyond tolerance")
        loc = nc1["worst_location"]
        expect(loc is not None and isinstance(loc["node"], int) and 0 < loc["t"] <= 0.9, "violation location serialized")
        expect(len(loc["x"]) == 4 and len(loc["u"]) == 2, "location carries chart point and section parameters")
        expect(os.path.exists(os.path.join(out, "nc1.csv")), "margin curve written")
        # margin-report mode keeps the verdict but not the exit code
        text = open(cfg("adversarial_nc1.json")).read().replace('"N": 6,', '"N": 6, "policy": "margin-report",')
        rc, rep, _ = run(write_tmp(tmp, text), os.path.join(tmp, "soft"))
        expect(rc == 0 and rep["checks"][0]["verdict"] == "fail", "margin-report policy exits 0 with a failed verdict")
        rc, rep, _ = run(cfg("adversarial_nc1.json"), os.path.join(tmp, "loose"), "--tolerance-scale", "1e6")
        expect(rc == 0 and abs(rep["checks"][0]["tolerance"] - 0.1) <= 1e-15, "--tolerance-scale rescales tolerances")
    elif CASE == "unknown":
        rc, rep, _ = run(cfg("unknown_metric.json"), out)
        expect(rc == 3, "unknown metric exits 3")
        expect(any("unknown metric" in v for v in rep["violations"]), "violation names the metric")
    elif CASE == "parse_error":
        rc, rep, err = run(write_tmp(tmp, '{\n  "metric": {"name": "minkowski"},\n  "checks": [nc1]\n}\n'), out)
        expect(rc == 3, "malformed JSON exits 3")
        expect(rep["error"]["kind"] == "ParseError", "ParseError reported")
        expect(rep["violations"][0].startswith("line 3, column 15"), "line and column of the bad token")
    elif CASE == "validation":
        text = json.dumps({"metric": {"name": "minkowski", "params": {"n": 4}},
                           "hypersurface": {"kind": "cone", "grid": [4, 16], "colour": 1},
                           "N": 2, "weight": "sin(", "checks": ["nc1", "hawking"]})
        rc, rep, _ = run(write_tmp(tmp, text), out)
        v = rep["violations"]
        expect(rc == 3, "invalid config exits 3")
        expect(any("N must exceed 2" in s for s in v), "N = 2 rejected")
        expect(any("grid sizes must be at least 8" in s for s in v), "small grid rejected")
        expect(any(s.startswith("hypersurface.colour: unknown key") for s in v), "unknown key rejected")
        expect(any(s.startswith("weight:") for s in v), "bad weight expression rejected")
        expect(any("hawking needs" in s for s in v), "hawking on a cone rejected")
        expect(len(v) >= 5, "all violations listed")
        rc, rep, _ = run(cfg("adversarial_nc1.json"), os.path.join(tmp, "bad"), "--bogus")
        expect(rc == 3 and rep is None, "unknown flag exits 3")
    elif CASE == "determinism":
        config = cfg("schwarzschild_cone.json")
        a, b, c = (os.path.join(tmp, d) for d in ("a", "b", "c"))
        env = dict(os.environ, NULLOT_THREADS="3")
        rc_a, _, _ = run(config, a, "--threads", "1")
        rc_b, _, _ = run(config, b, "--threads", "1")
        rc_c, _, _ = run(config, c, env=env)
        expect(rc_a == rc_b == rc_c == 0, "three runs exit 0")
        files = sorted(os.listdir(a))
        expect(files == sorted(os.listdir(b)) == sorted(os.listdir(c)), "same artifact set")
        for f in files:
            same = filecmp.cmp(os.path.join(a, f), os.path.join(b, f), shallow=False)
            expect(same, f + " byte-identical across repeated runs")
            same = filecmp.cmp(os.path.join(a, f), os.path.join(c, f), shallow=False)
            expect(same, f + " byte-identical across thread counts")
        rc, rep, _ = run(config, os.path.join(tmp, "seed"), "--seed", "8")
        expect(rep["seed"] == 8, "--seed overrides the config seed")
        with open(os.path.join(a, "lightcone.csv")) as f:
            cells = [x for line in f.read().splitlines()[1:] for x in line.split(",")]
        digits = [len(x.lstrip("-").split("e")[0].replace(".", "").lstrip("0")) for x in cells]
        expect(max(digits) == 17 and min(digits) >= 1, "CSV floats carry 17 significant digits")
    elif CASE == "stability":
        rc, rep, _ = run(cfg("stability_conformal_well.json"), out)
        expect(rc == 0, "stability scenario exits 0")
        d = rep["checks"][0]["details"]
        expect(d["limit_gap"] <= 1e-6 and d["resolution_monotone"], "eps -> 0 matches the base run")
        expect(open(os.path.join(out, "stability.csv")).readline().startswith("eps,amplitude,margin_64"), "table written")
    else:
        print("unknown case", CASE)
        sys.exit(2)

sys.exit(1 if FAILED else 0)
