import io
import json
import math

import pytest

from fracpoisson import cli
from fracpoisson.errors import ConfigurationError


def run_to_string(config):
    buf = io.StringIO()
    diag = io.StringIO()
    status, rows, meta = cli.run_convergence(config, stream=buf, diag=diag)
    return status, rows, buf.getvalue(), diag.getvalue()


@pytest.fixture(scope="module")
def small_run():
    config = cli.RunConfig(domain="square", s=0.25, r=0.5, k=1,
                           min_level=2, max_level=4, timings=False)
    return run_to_string(config)


def test_csv_schema(small_run):
    status, rows, text, _ = small_run
    assert status == 0
    lines = text.strip().splitlines()
    comments = [ln for ln in lines if ln.startswith("# ")]
    assert any(ln.startswith("# domain=square") for ln in comments)
    assert any(ln.startswith("# s=0.25") for ln in comments)
    assert any(ln.startswith("# k=1") for ln in comments)
    assert any(ln.startswith("# d=2") for ln in comments)
    header = [ln for ln in lines if not ln.startswith("#")][0]
    assert header == ("level,h,n,M,M_tilde,N,h1alpha_error,fitted_rate,"
                      "mean_cg_iters,setup_ms,eig_ms,solve_ms")
    data = [ln for ln in lines if not ln.startswith("#")][1:]
    assert len(data) == 3
    first = data[0].split(",")
    assert first[0] == "2"
    assert first[7] == "nan"
    assert float(first[6]) > 0


def test_rows_consistency(small_run):
    _, rows, _, _ = small_run
    for row in rows:
        assert row["N"] == row["n"] * row["M_tilde"]
    errs = [row["h1alpha_error"] for row in rows]
    assert errs[0] > errs[1] > errs[2]
    rate = rows[-1]["fitted_rate"]
    assert rate == pytest.approx(
        math.log(errs[-2] / errs[-1]) / math.log(rows[-2]["h"] / rows[-1]["h"]))


def test_byte_identical_rerun():
    config = cli.RunConfig(domain="square", s=0.5, r=2.0, k=1,
                           min_level=2, max_level=3, timings=False)
    _, _, text1, _ = run_to_string(config)
    _, _, text2, _ = run_to_string(config)
    assert text1 == text2


def test_numeric_columns_deterministic_with_timings():
    config = cli.RunConfig(domain="square", s=0.5, r=2.0, k=1,
                           min_level=2, max_level=3, timings=True)
    _, rows1, _, _ = run_to_string(config)
    _, rows2, _, _ = run_to_string(config)
    skip = {"setup_ms", "eig_ms", "solve_ms"}
    for a, b in zip(rows1, rows2):
        for key in a:
            if key not in skip:
                assert a[key] == b[key] or (isinstance(a[key], float)
                                            and math.isnan(a[key]) and math.isnan(b[key]))


def test_json_output_fields():
    config = cli.RunConfig(domain="square", s=0.25, r=0.5, k=1,
                           min_level=2, max_level=3, fmt="json", timings=False)
    buf = io.StringIO()
    status, rows, _ = cli.run_convergence(config, stream=buf, diag=io.StringIO())
    payload = json.loads(buf.getvalue())
    assert status == 0
    assert payload["config"]["domain"] == "square"
    assert len(payload["rows"]) == 2
    assert payload["rows"][0]["fitted_rate"] is None
    for col in cli.CSV_HEADER.split(","):
        assert col in payload["rows"][0]
    spectra = payload["spectrum"]
    assert set(spectra.keys()) == {"2", "3"} or set(spectra.keys()) == {2, 3}
    level2 = spectra[list(spectra.keys())[0]]
    assert len(level2["values"]) == len(level2["multiplicity"])
    assert sum(level2["multiplicity"]) >= len(level2["values"])


def test_partial_rows_on_failure(tmp_path):
    # an unreachable cube tolerance fails fast but the file is still written
    config = cli.RunConfig(domain="cube", s=0.25, r=0.5, k=1,
                           min_level=1, max_level=2, timings=False)
    buf = io.StringIO()
    diag = io.StringIO()
    status, rows, _ = cli.run_convergence(config, stream=buf, diag=diag)
    assert status == 1
    assert "error:" in diag.getvalue()
    assert cli.CSV_HEADER in buf.getvalue()


def test_arg_parsing_and_main(tmp_path):
    out = tmp_path / "run.csv"
    status = cli.main(["--domain", "square", "--s", "0.5", "--r", "2.0",
                       "--order", "1", "--levels", "2..3",
                       "--out", str(out), "--no-timings"])
    assert status == 0
    text = out.read_text()
    assert cli.CSV_HEADER in text
    assert ",0,0,0" in text.replace("\r", "")


def test_bad_levels_argument():
    assert cli.main(["--levels", "oops"]) == 2


def test_config_validation():
    with pytest.raises(ConfigurationError):
        cli.RunConfig(min_level=5, max_level=2)
    with pytest.raises(ConfigurationError):
        cli.RunConfig(s=1.5)
    with pytest.raises(ConfigurationError):
        cli.RunConfig(fmt="xml")
