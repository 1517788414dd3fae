import json

import pytest

from schemeflow.cli import (
    EXIT_ERROR,
    EXIT_FAILED,
    EXIT_OK,
    EXIT_REFUSED,
    SchemeFileError,
    load_scheme,
    main,
)

LINE_SCHEME = {
    "variables": ["x", "y"],
    "ideal": ["y^2"],
    "derivation": {"x": "1", "y": "y"},
    "flow_closed_form": ["x + t", "y*exp(t)"],
    "options": {"horizon": 20.0},
    "declared_flags": {"germ_determined": True},
}

SQUARE_SCHEME = {
    "variables": ["x", "y"],
    "region": ["x^2 - 1", "y^2 - 1"],
    "derivation": {"x": "-y", "y": "x"},
    "options": {"horizon": 20.0},
    "declared_flags": {"germ_determined": True},
}


@pytest.fixture
def line_path(tmp_path):
    p = tmp_path / "line.json"
    p.write_text(json.dumps(LINE_SCHEME))
    return str(p)


@pytest.fixture
def square_path(tmp_path):
    p = tmp_path / "square.json"
    p.write_text(json.dumps(SQUARE_SCHEME))
    return str(p)


class TestLoadScheme:
    def test_well_formed(self, line_path):
        sf = load_scheme(line_path)
        assert sf.scheme.vars.names == ("x", "y")
        assert len(sf.field.coeffs) == 2
        assert sf.flow_closed_form is not None
        assert sf.options.horizon == 20.0
        assert sf.declared_flags["germ_determined"] is True

    def test_derivation_must_cover_variables(self, tmp_path):
        bad = dict(LINE_SCHEME, derivation={"x": "1"})
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(bad))
        with pytest.raises(SchemeFileError, match="derivation"):
            load_scheme(str(p))

    def test_unknown_keys_rejected(self, tmp_path):
        bad = dict(LINE_SCHEME, extra_field=1)
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(bad))
        with pytest.raises(SchemeFileError, match="unknown keys"):
            load_scheme(str(p))

    def test_expression_errors_reported(self, tmp_path):
        bad = dict(LINE_SCHEME, ideal=["abs(y)"])
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(bad))
        with pytest.raises(SchemeFileError, match="non-smooth"):
            load_scheme(str(p))


class TestCheckCommand:
    def test_certified_exits_zero(self, line_path, capsys):
        code = main(["check", "--scheme", line_path])
        assert code == EXIT_OK
        assert "certified" in capsys.readouterr().out

    def test_failing_derivation_exits_two(self, tmp_path, capsys):
        bad = dict(LINE_SCHEME, derivation={"x": "0", "y": "1"})
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(bad))
        code = main(["check", "--scheme", str(p)])
        assert code == EXIT_FAILED
        out = capsys.readouterr().out
        assert "2*y" in out

    def test_malformed_file_exits_one(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        assert main(["check", "--scheme", str(p)]) == EXIT_ERROR
        assert main(["check", "--scheme", str(tmp_path / "missing.json")]) == EXIT_ERROR


class TestCurveCommand:
    def test_translation_rows(self, line_path, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        code = main([
            "curve", "--scheme", line_path, "--point", "2,0",
            "--samples", "5", "--out", str(out),
        ])
        assert code == EXIT_OK
        lines = out.read_text().strip().splitlines()
        assert lines[1] == "t,x1,x2,residual"
        for row in lines[2:]:
            t, x1, x2, _ = row.split(",")
            assert abs(float(x1) - (2.0 + float(t))) <= 1e-6
            assert abs(float(x2)) <= 1e-9

    def test_corner_single_row(self, square_path, tmp_path):
        out = tmp_path / "corner.csv"
        code = main([
            "curve", "--scheme", square_path, "--point", "1,1", "--out", str(out),
        ])
        assert code == EXIT_OK
        lines = out.read_text().strip().splitlines()
        assert "singleton" in lines[0]
        assert len(lines) == 3

    def test_point_off_scheme_exits_two(self, line_path):
        assert main(["curve", "--scheme", line_path, "--point", "0,0.5"]) == EXIT_FAILED


class TestFlowCommand:
    def test_flow_value(self, line_path, capsys):
        code = main(["flow", "--scheme", line_path, "--point", "1,0", "--time", "2"])
        assert code == EXIT_OK
        x, y = capsys.readouterr().out.strip().split(",")
        assert abs(float(x) - 3.0) <= 1e-9
        assert abs(float(y)) <= 1e-12

    def test_corner_time_exits_two(self, square_path):
        code = main(["flow", "--scheme", square_path, "--point", "1,1", "--time", "0.5"])
        assert code == EXIT_FAILED


class TestDomainCommand:
    def test_csv_written(self, line_path, tmp_path):
        out = tmp_path / "domain.csv"
        code = main([
            "domain", "--scheme", line_path, "--grid", "9",
            "--box=-3:3,-1:1", "--out", str(out),
        ])
        assert code == EXIT_OK
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "x1,x2,Kp_lo,Kp_hi,lo_closed,hi_closed,class"
        assert len(lines) == 10
        assert all("horizon-complete" in ln for ln in lines[1:])

    def test_deterministic_bytes(self, line_path, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        args = ["domain", "--scheme", line_path, "--grid", "7", "--box=-3:3,-1:1"]
        assert main(args + ["--out", str(a)]) == EXIT_OK
        assert main(args + ["--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestGroupoidCommand:
    def test_passes_on_complete_field(self, line_path, capsys):
        code = main([
            "groupoid", "--scheme", line_path, "--samples", "50", "--box=-3:3,-1:1",
        ])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "verdict: pass" in out
        assert "pullback identities" in out

    def test_refuses_incomplete_field(self, square_path, capsys):
        code = main(["groupoid", "--scheme", square_path, "--samples", "10"])
        assert code == EXIT_REFUSED
        assert "refused" in capsys.readouterr().err


class TestValidateCommand:
    def test_reports_and_exits_zero(self, line_path, capsys):
        assert main(["validate", "--scheme", line_path]) == EXIT_OK
        out = capsys.readouterr().out
        assert "t=0 identity ok" in out
        assert out.strip().endswith("ok")

    def test_bad_closed_form_exits_one(self, tmp_path):
        bad = dict(LINE_SCHEME, flow_closed_form=["x + t + 1", "y"])
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(bad))
        assert main(["validate", "--scheme", str(p)]) == EXIT_ERROR
