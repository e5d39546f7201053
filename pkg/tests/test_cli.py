import json
import subprocess
import sys

from epsk1.cli import JobSpec, run

FLAGSHIP_INPUT = {
    "tower": {"l": 13, "d0": 1, "p": 3, "s": 2, "n": 1, "e": 4, "m_delta": 1},
}


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_tower_verify_flagship(tmp_path):
    inp = write(tmp_path, "tower.json", FLAGSHIP_INPUT)
    out = str(tmp_path / "report.json")
    code, report = run(JobSpec("tower-verify", inp, out))
    assert code == 0
    assert report["status"] == "pass"
    blob = json.loads((tmp_path / "report.json").read_text())
    assert blob["lambda_signs"] == [1, 1]
    assert all(c["status"] == "pass" for c in blob["checks"])


def test_tower_verify_check_filter(tmp_path):
    inp = write(tmp_path, "tower.json", FLAGSHIP_INPUT)
    code, report = run(JobSpec("tower-verify", inp, check="m3"))
    assert code == 0
    assert all(c["name"].lower().startswith("m3") for c in report["checks"])


def test_tower_verify_malformed_spec(tmp_path):
    bad = {"tower": dict(FLAGSHIP_INPUT["tower"], e=2)}
    inp = write(tmp_path, "bad.json", bad)
    code, report = run(JobSpec("tower-verify", inp))
    assert code == 2
    assert "realizability" in report["error"]


def test_eps_abelian_trivial_target(tmp_path):
    inp = write(tmp_path, "eps.json", {
        "datum": {"l": 3, "d": 1, "a": 1, "target": [], "seed": 0},
        "p": 2,
    })
    code, report = run(JobSpec("eps-abelian", inp))
    assert code == 0
    terms = report["element"]["terms"]
    assert terms == [[[], {"N": [3, 1, 2, 0, 1], "coeffs": [[0, 0, 0, -1, 0]]}]]


def test_gauss_sum_cli(tmp_path):
    inp = write(tmp_path, "gauss.json", {
        "datum": {"l": 3, "d": 1, "a": 1, "target": [2], "seed": 0},
        "p": 2,
        "chi": [1],
    })
    code, report = run(JobSpec("gauss-sum", inp))
    assert code == 0
    # zeta3 - zeta3^2 = 1 + 2 zeta3 on the power basis
    assert report["value"]["coeffs"] == [[0, 0, 0, 1, 0], [1, 0, 0, 2, 0]]
    # product with the partner is the derived l-power
    assert report["product_is_l_power"]["coeffs"] == [[0, 0, 0, 3, 0]]


def test_property_suite_cli(tmp_path):
    inp = write(tmp_path, "suite.json", {
        "datum": {"l": 3, "d": 1, "a": 2, "target": [6], "seed": 0},
        "p": 2,
    })
    code, report = run(JobSpec("property-suite", inp))
    assert code == 0


def test_beta_and_integral_log_cli(tmp_path):
    inp = write(tmp_path, "tower.json", dict(FLAGSHIP_INPUT, random_count=3))
    code, _report = run(JobSpec("beta-check", inp))
    assert code == 0
    code, report = run(JobSpec("integral-log", inp, precision=4))
    assert code == 0
    assert report["precision"] == 4


def test_reports_are_deterministic(tmp_path):
    inp = write(tmp_path, "tower.json", FLAGSHIP_INPUT)
    out1 = str(tmp_path / "r1.json")
    out2 = str(tmp_path / "r2.json")
    run(JobSpec("tower-verify", inp, out1, seed=7))
    run(JobSpec("tower-verify", inp, out2, seed=7))
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()


def test_no_floats_in_reports(tmp_path):
    inp = write(tmp_path, "tower.json", FLAGSHIP_INPUT)
    code, report = run(JobSpec("tower-verify", inp))

    def scan(node):
        assert not isinstance(node, float)
        if isinstance(node, dict):
            for v in node.values():
                scan(v)
        elif isinstance(node, list):
            for v in node:
                scan(v)

    scan(report)


def test_toml_input(tmp_path):
    path = tmp_path / "tower.toml"
    path.write_text(
        "[tower]\nl = 13\nd0 = 1\np = 3\ns = 2\nn = 1\ne = 4\nm_delta = 1\n")
    code, report = run(JobSpec("tower-verify", str(path)))
    assert code == 0


def test_cli_entry_point(tmp_path):
    inp = write(tmp_path, "eps.json", {
        "datum": {"l": 3, "d": 1, "a": 1, "target": [2], "seed": 0},
        "p": 2,
    })
    proc = subprocess.run(
        [sys.executable, "-m", "epsk1.cli", "eps-abelian", "--input", inp],
        capture_output=True, text=True)
    assert proc.returncode == 0
    blob = json.loads(proc.stdout)
    assert blob["status"] == "pass"


def test_missing_input_file():
    code, report = run(JobSpec("tower-verify", "/nonexistent/input.json"))
    assert code == 2
