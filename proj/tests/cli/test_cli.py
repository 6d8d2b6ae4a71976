"""End-to-end checks of the command-line tool: exit codes, outputs and determinism."""
import json
import pathlib
import re
import shutil
import subprocess
import sys
import tempfile

EXE = sys.argv[1]
ROOT = pathlib.Path(sys.argv[2])
PATIENT = ROOT / "data" / "patients" / "adult_01.json"
SCENARIO = ROOT / "data" / "scenarios" / "three_meals.json"
FIXTURES = ROOT / "tests" / "fixtures"
failed = []


def run(*args, expect=0):
    p = subprocess.run([EXE, *map(str, args)], capture_output=True, text=True)
    if p.returncode != expect:
        raise AssertionError(f"{args[0]} exited {p.returncode}, expected {expect}\n{p.stdout}\n{p.stderr}")
    return p


def check(name, cond, detail=""):
    print(("ok    " if cond else "FAIL  ") + name + (f": {detail}" if detail and not cond else ""))
    if not cond:
        failed.append(name)


def pipeline(d):
    d.mkdir(parents=True, exist_ok=True)
    run("gen-data", "--patient", PATIENT, "--out", d / "log.csv", "--seed", 7)
    run("fit", "--data", d / "log.csv", "--orders", "5,9,3", "--out", d / "params.json", "--seed", 1)
    run("tighten", "--params", d / "params.json", "--base", "55,300", "--N", 12, "--min-width", 150,
        "--patient", PATIENT, "--out", d / "ctrl.json")
    run("simulate", "--patient", PATIENT, "--controller", d / "ctrl.json", "--scenario", SCENARIO,
        "--out", d / "trace.csv")
    m = run("metrics", "--trace", d / "trace.csv", "--out", d / "metrics.json")
    run("plot", "--trace", d / "trace.csv", "--out-dir", d / "fig")
    return m.stdout


def main():
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="chokimpc_cli_"))
    try:
        out = pipeline(tmp / "a")
        a = tmp / "a"
        report = json.loads(out)
        check("metrics prints the report", "tir" in report and "gri" in report and "cvga" in report)
        rows = (a / "trace.csv").read_text().strip().splitlines()
        check("3-day trace has 864 rows", len(rows) == 865, str(len(rows)))
        svg = (a / "fig" / "bg.svg").read_text()
        pts = re.findall(r'points="([^"]*)"', svg)
        check("bg.svg series has 864 points", len(pts) == 1 and len(pts[0].split()) == 864)
        check("insulin.svg written", (a / "fig" / "insulin.svg").exists())
        check("target band shaded", "<rect" in svg)

        before = {p.relative_to(a): p.read_bytes() for p in a.rglob("*") if p.is_file()}
        pipeline(a)
        for f, data in sorted(before.items()):
            check(f"rerun reproduces {f}", (a / f).read_bytes() == data)

        fx = tmp / "fx"
        fx.mkdir()
        run("fit", "--data", FIXTURES / "log.csv", "--orders", "5,9,3", "--out", fx / "params.json", "--seed", 7)
        check("fit fixture reproduced bit-exactly",
              (fx / "params.json").read_bytes() == (FIXTURES / "params.json").read_bytes())

        bad = tmp / "bad.json"
        fields = json.loads(PATIENT.read_text())
        fields["carb_ratio"] = "lots"
        bad.write_text(json.dumps(fields))
        p = run("simulate", "--patient", bad, "--scenario", SCENARIO, "--out", tmp / "x.csv", "--open-loop", expect=2)
        check("bad patient names the field", "carb_ratio" in p.stderr, p.stderr)
        run("fit", "--data", tmp / "missing.csv", "--out", tmp / "p.json", expect=2)
        run("fit", "--data", FIXTURES / "log.csv", "--orders", "5,x,3", "--out", tmp / "p.json", expect=2)
        run("frobnicate", expect=2)
        check("configuration errors exit 2", True)

        blow = json.loads(SCENARIO.read_text())
        blow["initial_bg"] = 1e300
        (tmp / "blow.json").write_text(json.dumps(blow))
        p = run("simulate", "--patient", PATIENT, "--scenario", tmp / "blow.json", "--out", tmp / "blow.csv",
                "--open-loop", expect=3)
        check("runtime fault exits 3", True)
    except AssertionError as e:
        print("FAIL  " + str(e))
        failed.append("command")
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    print(f"{len(failed)} failures")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
