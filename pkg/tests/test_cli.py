import json
import os
import subprocess
import sys

import pytest


def run_cli(*args, check=True, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    proc = subprocess.run([sys.executable, "-m", "symon.cli", *args],
                          capture_output=True, text=True, env=env)
    if check and proc.returncode != 0:
        raise AssertionError(f"cli failed ({proc.returncode}): {proc.stderr}")
    return proc


def test_orders_report():
    out = json.loads(run_cli("orders", "--g", "2", "--n", "15", "--q", "2").stdout)
    assert out["sp_orders"] == {"3": "51840", "5": "9360000"}
    assert out["class_order"] == str(4 * 51840 * 9360000)
    assert out["q_order_mod_n"] == 4
    inf = json.loads(run_cli("orders", "--g", "2", "--n", "3", "--q", "inf").stdout)
    assert inf["class_order"] == "103680"


def test_verify_counts_small_grid():
    proc = run_cli("verify-counts", "--ells", "3", "--q", "2,inf")
    report = json.loads(proc.stdout)
    assert report["counts"]["fail"] == 0
    names = {c["name"] for c in report["checks"]}
    assert {"order-recursion", "order-enumeration", "class-order-enumeration",
            "block-availability", "core-cardinality", "full-cardinality",
            "composite-density-product"} <= names


def test_verify_counts_rejects_ell_2():
    proc = run_cli("verify-counts", "--ells", "2,3", "--q", "2", check=False)
    assert proc.returncode == 2
    assert "ell-2" in proc.stderr or "(ell-2)" in proc.stderr


def test_verify_counts_tamper_negative_control():
    proc = run_cli("verify-counts", "--ells", "3", "--q", "2", "--tamper", check=False)
    assert proc.returncode == 1
    report = json.loads(proc.stdout)
    assert report["counts"]["fail"] == 1


def test_special_set_build_verify_rebuild(tmp_path):
    out = tmp_path / "set3.txt"
    proc = run_cli("special-set", "build", "--ell", "3", "--q", "2",
                   "--level", "union", "--out", str(out))
    built = json.loads(proc.stdout)
    assert built["cardinality"] == "8208"
    assert built["lines"] == 8208
    text = out.read_text()
    assert text.splitlines()[0] == "# dim=4 mod=3"
    assert len(text.splitlines()) == 1 + 8208
    sidecar = json.loads((tmp_path / "set3.txt.json").read_text())
    assert sidecar["cardinality"] == "8208"
    assert sidecar["seed-independent"] is True

    # deterministic rebuild: byte-identical dump
    out2 = tmp_path / "again.txt"
    run_cli("special-set", "build", "--ell", "3", "--q", "2",
            "--level", "union", "--out", str(out2))
    assert out2.read_text() == text

    proc = run_cli("special-set", "verify", "--dump", str(out), "--rebuild")
    assert json.loads(proc.stdout)["status"] == "ok"


def test_special_set_verify_catches_corruption(tmp_path):
    out = tmp_path / "core.txt"
    run_cli("special-set", "build", "--ell", "3", "--q", "inf",
            "--level", "core", "--lam", "1", "--out", str(out))
    lines = out.read_text().splitlines()
    lines[1] = "1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1"   # identity is not a core member
    out.write_text("\n".join(lines) + "\n")
    proc = run_cli("special-set", "verify", "--dump", str(out), check=False)
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["problems"]


def test_special_set_requires_lam_for_core():
    proc = run_cli("special-set", "build", "--ell", "3", "--q", "inf",
                   "--level", "core", "--out", "/tmp/unused.txt", check=False)
    assert proc.returncode == 2


def test_series_part_a_usage_error():
    proc = run_cli("series", "part-a", "--g", "1", "--q", "2", check=False)
    assert proc.returncode == 2


def test_series_reports(tmp_path):
    proc = run_cli("series", "part-a", "--g", "2", "--q", "2", "--ell-max", "100")
    rep = json.loads(proc.stdout)
    assert rep["rows"][0]["ell"] == 3
    partials = [int(r["partial_num"]) / int(r["partial_den"]) for r in rep["rows"]]
    assert all(b > a for a, b in zip(partials, partials[1:]))

    csv = run_cli("series", "part-b", "--g", "2", "--e", "2", "--ell-max", "100",
                  "--format", "csv").stdout
    lines = csv.splitlines()
    assert lines[0].startswith("ell,")
    assert len(lines) == 1 + 25   # 25 primes up to 100
    out = tmp_path / "b.json"
    run_cli("series", "part-b", "--g", "2", "--e", "2", "--ell-max", "100",
            "--out", str(out))
    rep = json.loads(out.read_text())
    assert "tail_bound" in rep


def test_simulate_hit_frequency_prime_and_composite():
    rep = json.loads(run_cli("simulate", "hit-frequency", "--n", "5", "--q", "2",
                             "--samples", "2000", "--seed", "42").stdout)
    assert rep["event"] == "set-hit(5)"
    assert abs(rep["estimate_float"] - rep["exact_value_float"]) <= 5 * rep["std_error"]
    rep = json.loads(run_cli("simulate", "hit-frequency", "--n", "15", "--q", "2",
                             "--samples", "500", "--seed", "42").stdout)
    assert rep["event"] == "joint-set-hit(3,5)"


def test_simulate_independence():
    rep = json.loads(run_cli("simulate", "independence", "--n", "15", "--q", "2",
                             "--samples", "2000", "--seed", "7").stdout)
    assert len(rep["marginals"]) == 2
    assert rep["within_4se"] in (True, False)
    prod = rep["product_of_marginals_float"]
    joint = rep["joint"]["estimate_float"]
    assert abs(joint - prod) <= 6 * rep["combined_std_error"] + 1e-9


def test_simulate_mu_x_and_borel_cantelli():
    rep = json.loads(run_cli("simulate", "mu-x", "--g", "2", "--ell", "3",
                             "--e", "2", "--samples", "1500", "--seed", "3").stdout)
    assert rep["estimate_float"] <= rep["bound_float"] + 4 * rep["std_error"]
    rep = json.loads(run_cli("simulate", "borel-cantelli", "--g", "2", "--q", "2",
                             "--ells", "3,5", "--e", "1", "--samples", "800",
                             "--seed", "11").stdout)
    assert rep["regime"] == "part-a"
    assert sum(rep["hit_histogram"].values()) == 800


def test_enumerate_stream_and_budget():
    proc = run_cli("enumerate", "--g", "1", "--ell", "3", "--lam", "1")
    lines = proc.stdout.splitlines()
    assert lines[0] == "# dim=2 mod=3"
    assert len(lines) == 1 + 24
    proc = run_cli("enumerate", "--g", "2", "--ell", "7", "--budget", "1000",
                   check=False)
    assert proc.returncode == 2


def test_budget_env_var():
    proc = run_cli("enumerate", "--g", "1", "--ell", "7", check=False,
                   env_extra={"SYMON_BUDGET": "1000"})
    assert proc.returncode == 2          # 7^4 = 2401 candidates > 1000
    proc = run_cli("enumerate", "--g", "1", "--ell", "7", "--budget", "5000",
                   env_extra={"SYMON_BUDGET": "1000"})
    assert proc.returncode == 0          # the flag outranks the environment


def test_special_set_build_explicit_strategy(tmp_path):
    out = tmp_path / "exp.txt"
    proc = run_cli("special-set", "build", "--ell", "3", "--q", "2",
                   "--level", "union", "--strategy", "explicit-g2",
                   "--out", str(out))
    built = json.loads(proc.stdout)
    assert built["strategy"] == "explicit-g2"
    assert built["cardinality"] == "8208"   # 12-block pool coincides in size at 3
    assert json.loads(run_cli("special-set", "verify", "--dump",
                              str(out)).stdout)["status"] == "ok"


@pytest.mark.parametrize("argv", [
    ("orders", "--g", "2", "--n", "15", "--q", "2"),
    ("series", "part-b", "--g", "2", "--e", "2", "--ell-max", "50"),
    ("simulate", "hit-frequency", "--n", "5", "--q", "2",
     "--samples", "400", "--seed", "1"),
])
def test_rerun_is_byte_identical(argv):
    assert run_cli(*argv).stdout == run_cli(*argv).stdout
