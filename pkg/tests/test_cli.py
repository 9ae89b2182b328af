import cmath
import json

import pytest
from click.testing import CliRunner
from hypothesis import given, strategies as st

from toroidal_lab.cliverify import (ConfigError, canonical_complex, exit_code, main,
                                    parse_complex, resolve, sweep_table)


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def test_parse_complex_forms():
    assert parse_complex("0.5-0.25i") == 0.5 - 0.25j
    assert parse_complex("0.5-0.25j") == 0.5 - 0.25j
    assert parse_complex("2") == 2
    assert abs(parse_complex("1.1@0.9") - 1.1 * cmath.exp(0.9j)) < 1e-15
    with pytest.raises(ConfigError):
        parse_complex("1.1@x")
    with pytest.raises(ConfigError):
        parse_complex("one")


@given(re=st.floats(-5, 5), im=st.floats(-5, 5))
def test_canonical_complex_roundtrip(re, im):
    text = canonical_complex(f"{re!r}{'+' if im >= 0 else '-'}{abs(im)!r}i")
    assert parse_complex(text) == complex(re, im)
    assert canonical_complex(text) == text


def test_config_hash_semantics():
    base = resolve("fermion", {})
    assert resolve("fermion", {"q2": "1.10@0.9"}).config_hash() == base.config_hash()
    assert resolve("fermion", {"report": "x.json"}).config_hash() == base.config_hash()
    assert resolve("fermion", {"tol": 1e-9}).config_hash() != base.config_hash()
    assert resolve("fermion", {"seed": 8}).config_hash() != base.config_hash()


@pytest.mark.parametrize("suite,given", [
    ("fermion", {"modes": 3}),             # option the suite does not use
    ("contractions", {"degree": 3}),
    ("f22", {"M": 1, "N": 2}),             # N is fixed by M
    ("level2", {"M": 2}),                  # needs odd M
    ("fermion", {"q2": "1.0"}),            # degenerate parameters
    ("fermion", {"tol": -1.0}),
    ("nonsense", {}),
    (None, {}),
])
def test_resolve_rejects(suite, given):
    with pytest.raises((ConfigError, ValueError)):
        resolve(suite, given)


def test_exit_code_rules():
    assert exit_code({"pass": 3, "fail": 0, "inconclusive": 0}) == 0
    assert exit_code({"pass": 3, "fail": 1, "inconclusive": 1}) == 1
    assert exit_code({"pass": 3, "fail": 0, "inconclusive": 1}) == 2
    assert exit_code({"pass": 0, "fail": 0, "inconclusive": 0}) == 2


def test_report_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert invoke("verify", "fermion", "--report", str(path)).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["summary"]["fail"] == 0 and rep["summary"]["pass"] == len(rep["checks"])
    assert all(c["ms"] == 0 for c in rep["checks"])
    assert len(rep["config"]["hash"]) == 16


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# contractions at a smaller order\nsuite = contractions\nmodes = 6\ntol=1e-9\n")
    out = tmp_path / "r.json"
    res = invoke("verify", "--config", str(cfg), "--modes", "8", "--report", str(out))
    assert res.exit_code == 0, res.output
    conf = json.loads(out.read_text())["config"]
    assert conf["suite"] == "contractions" and conf["modes"] == 8 and conf["tol"] == 1e-9


@pytest.mark.parametrize("args", [
    ["verify"],
    ["verify", "contractions", "--degree", "3"],
    ["verify", "level2", "--M", "2"],
    ["verify", "f22", "--M", "1", "--N", "2"],
    ["verify", "fermion", "--q2", "1"],
    ["verify", "all", "--M", "1"],
    ["sweep", "fermion", "--degrees", "3"],
])
def test_config_errors_exit_2(args):
    res = invoke(*args)
    assert res.exit_code == 2


def test_failing_check_exits_1(tmp_path):
    out = tmp_path / "f.json"
    res = invoke("verify", "level2", "--degree", "2", "--norm-mutation", "0.01",
                 "--report", str(out))
    assert res.exit_code == 1
    failed = [c["name"] for c in json.loads(out.read_text())["checks"] if c["status"] == "fail"]
    assert failed and all("relative to the delta side" in n for n in failed)


def test_sweep_table_flags():
    rows = {"flat": [1e-15, 1e-15], "grows": [1e-10, 1e-9], "bad": [1e-3, 1e-2],
            "noisy": [1e-13, 2e-8]}
    floors = {"noisy": [2e-8, 5e-7]}
    flags = {r["name"]: r["flag"] for r in sweep_table(rows, 1e-6, [2, 3], floors)}
    assert flags == {"flat": "ok", "grows": "non-monotone", "bad": "fail", "noisy": "ok"}


def test_sweep_command(tmp_path):
    out = tmp_path / "s.json"
    res = invoke("sweep", "fermion", "--degrees", "2,3", "--report", str(out))
    assert res.exit_code == 0
    rep = json.loads(out.read_text())
    assert rep["config"]["degrees"] == [2, 3]
    assert rep["summary"]["fail"] == 0 and rep["summary"]["non-monotone"] == 0
