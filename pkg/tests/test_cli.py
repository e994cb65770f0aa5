from __future__ import annotations

import json
import subprocess
import sys

import pytest

import fkcable.fk
from fkcable.cli import CACHE_ENV, RunConfig, main, parse_config
from fkcable.laurent import LaurentPoly


@pytest.fixture
def cache(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "cache"))
    return tmp_path / "cache"


@pytest.fixture
def fast_fk(monkeypatch, fk_result):
    calls = []

    def fake(r=9, m_max=151, R=24, seed_window=97):
        calls.append((r, m_max, R))
        return fk_result

    monkeypatch.setattr(fkcable.fk, "compute_fk", fake)
    return calls


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_jones_constant(capsys, cache):
    code, out, _ = run(capsys, "jones", "--cable", "9,2", "--n", "1")
    assert code == 0
    assert LaurentPoly.from_json_obj(json.loads(out)["value"]) == 1


def test_jones_text_and_csv(capsys, cache):
    _, text, _ = run(capsys, "jones", "--n", "2", "--format", "text")
    assert text.strip() == "q^2 - q + q^-4 + q^-6 - q^-7 + q^-8 - q^-9 + q^-12 - q^-13"
    _, csv, _ = run(capsys, "jones", "--n", "2", "--format", "csv")
    lines = csv.splitlines()
    assert lines[0] == "exponent,coefficient" and len(lines) == 10


def test_jones_unnormalized_and_knots(capsys, cache):
    _, out, _ = run(capsys, "jones", "--knot", "fig8", "--n", "2", "--format", "text")
    assert out.strip() == "q^2 - q + 1 - q^-1 + q^-2"
    _, out, _ = run(capsys, "jones", "--knot", "unknot", "--n", "3", "--unnormalized", "--format", "text")
    assert out.strip() == "q + 1 + q^-1"


def test_alexander_expand_csv(capsys, cache):
    code, out, _ = run(capsys, "alexander", "--cable", "9,2", "--expand", "40", "--format", "csv")
    rows = dict(line.split(",") for line in out.splitlines()[1:])
    assert code == 0
    assert rows["11"] == "1" and rows["29"] == "-1" and rows["39"] == "610" and rows["13"] == "0"


def test_cache_hit_is_byte_identical(capsys, cache, fast_fk, caplog):
    caplog.set_level("INFO", logger="fkcable")
    _, first, _ = run(capsys, "fk", "--m-max", "151")
    _, second, _ = run(capsys, "fk", "--m-max", "151")
    assert first == second
    assert len(fast_fk) == 1
    assert any("cache hit" in r.message for r in caplog.records)
    assert len(list(cache.glob("fk-*.json"))) == 1


def test_cached_equals_fresh(capsys, cache, fast_fk):
    _, cached, _ = run(capsys, "fk", "--m-max", "31", "--hbar-orders", "2")
    _, cached2, _ = run(capsys, "fk", "--m-max", "31", "--hbar-orders", "2")
    _, fresh, _ = run(capsys, "fk", "--m-max", "31", "--hbar-orders", "2", "--no-cache")
    assert cached == cached2 == fresh
    payload = json.loads(fresh)
    assert [item["m"] for item in payload["fm"]] == list(range(1, 32, 2))
    assert "conjectures" not in payload


def test_fk_outputs(capsys, cache, fast_fk, tmp_path):
    out_file = tmp_path / "fk.json"
    _, out, _ = run(capsys, "fk", "--m-max", "151", "--report-conjectures", "--out", str(out_file))
    payload = json.loads(out)
    assert out_file.read_text() == out
    assert all(c["passed"] for c in payload["conjectures"]["checks"])
    assert payload["hbar_table"]["orders"] == 3
    _, csv, _ = run(capsys, "fk", "--m-max", "151", "--format", "csv")
    lines = csv.splitlines()
    assert lines[0] == "m,exponent,coefficient"
    assert lines[1] == "11,5,1"


def test_ahat_emit(capsys, cache, tmp_path):
    path = tmp_path / "coef.json"
    code, out, _ = run(capsys, "ahat", "--r", "9", "--emit-coefficients", str(path), "--verify-annihilation", "--n-max", "3")
    assert code == 0
    payload = json.loads(out)
    assert payload["fm_recursion"]["span"] == 98
    assert payload["annihilation"] == {"1": True, "2": True, "3": True}
    emitted = json.loads(path.read_text())
    assert set(emitted["alpha_delta"]) == {"alpha", "beta", "gamma", "delta"}
    assert len(emitted["taps"]) == len(payload["fm_recursion"]["offsets"])


@pytest.mark.parametrize(
    "argv",
    [
        ["jones", "--bogus"],
        ["jones", "--cable", "9,3"],
        ["jones", "--cable", "7,2"],
        ["jones", "--n", "0"],
        ["fk", "--m-max", "150"],
        ["fk", "--hbar-orders", "40"],
        ["verify"],
        ["nonsense"],
    ],
)
def test_config_errors(capsys, cache, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert json.loads(err.strip().splitlines()[-1])["error"] == "config"


def test_computation_error(capsys, cache, monkeypatch):
    import fkcable.jones

    def boom(*a, **k):
        raise ArithmeticError("synthetic failure")

    monkeypatch.setattr(fkcable.jones, "colored_jones", boom)
    code, _, err = run(capsys, "jones", "--n", "2", "--no-cache")
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1]) == {
        "error": "computation",
        "message": "synthetic failure",
        "type": "ArithmeticError",
    }


def test_properties_seeded(capsys, cache):
    _, a, _ = run(capsys, "verify", "--properties", "--seed", "5")
    _, b, _ = run(capsys, "verify", "--properties", "--seed", "5")
    assert a == b and json.loads(a)["passed"]


def test_config_defaults():
    cfg = parse_config(["fk"])
    assert (cfg.r, cfg.m_max, cfg.R, cfg.hbar_orders) == (9, 151, 24, 3)
    assert RunConfig("jones").config_hash() == RunConfig("jones", format="csv").config_hash()
    assert RunConfig("jones").config_hash() != RunConfig("jones", n=2).config_hash()


def test_module_entry_point(tmp_path):
    env_cmd = [sys.executable, "-m", "fkcable", "jones", "--n", "1", "--format", "text", "--cache-dir", str(tmp_path)]
    res = subprocess.run(env_cmd, capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.strip() == "1"
    assert "cache store" in res.stderr


def test_verify_goldens(capsys, cache, fast_fk):
    code, out, _ = run(capsys, "verify", "--paper-goldens", "--format", "text")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 10 and all(line.startswith("[pass]") for line in lines)
