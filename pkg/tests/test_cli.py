import csv
import subprocess
import sys

import pytest

from mivarnet import load_net
from mivarnet.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_ok(capsys, data_dir):
    code, out, _ = run(capsys, "validate", data_dir / "triangle.xml")
    assert code == 0 and out.strip() == "n=3, m=3, OK"


def test_validate_empty_rules(capsys, data_dir):
    code, out, _ = run(capsys, "validate", data_dir / "empty_rules.xml")
    assert code == 0 and out.strip() == "n=1, m=0, OK"


def test_validate_dangling_reference(capsys, data_dir, tmp_path):
    bad = tmp_path / "bad.xml"
    bad.write_text((data_dir / "triangle.xml").read_text().replace('initId="P2,P3"', 'initId="P2,P9"'))
    code, _, err = run(capsys, "validate", bad)
    assert code == 3 and "P9" in err


def test_validate_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "validate", tmp_path / "nope.xml")
    assert code == 3 and err.startswith("error:")


def test_solve_triangle(capsys, data_dir):
    code, out, _ = run(capsys, "solve", data_dir / "triangle.xml", "--given", "P2=60,P3=60", "--find", "P1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "path: R1"
    assert lines[1] == "P1 = 60"
    assert lines[2].startswith("stats: known_marks=")


def test_solve_repeatable_flags(capsys, data_dir):
    code, out, _ = run(capsys, "solve", data_dir / "triangle.xml", "--given", "P2=60", "--given", "P3=60", "--find", "P1")
    assert code == 0 and "P1 = 60" in out


def test_solve_missing_data(capsys, data_dir):
    code, out, _ = run(capsys, "solve", data_dir / "triangle.xml", "--given", "P1=10", "--find", "P3")
    assert code == 4
    assert "unreached: P3" in out.splitlines()


def test_solve_overlap_is_usage_error(capsys, data_dir):
    code, _, err = run(capsys, "solve", data_dir / "triangle.xml", "--given", "P1=5", "--find", "P1")
    assert code == 2 and "error:" in err


@pytest.mark.parametrize("given", ["P1", "P1=abc", "1P=2"])
def test_solve_bad_given(capsys, data_dir, given):
    code, _, _ = run(capsys, "solve", data_dir / "triangle.xml", "--given", given, "--find", "P3")
    assert code == 2


def test_solve_unknown_id(capsys, data_dir):
    code, _, _ = run(capsys, "solve", data_dir / "triangle.xml", "--given", "P1=1,P2=1", "--find", "P7")
    assert code == 2


def test_solve_eval_error(capsys, tmp_path):
    kb = tmp_path / "div.xml"
    kb.write_text(
        '<root><parametr><parametr id="P1" value="" description="" /><parametr id="P2" value="" description="" />'
        '<parametr id="P3" value="" description="" /></parametr><rules>'
        '<rule id="R1" resultId="P3" initId="P1,P2" value="P1/P2" description="" /></rules>'
        '<metadata><idParametr inc="3" /><idRule inc="1" /></metadata></root>'
    )
    code, _, err = run(capsys, "solve", kb, "--given", "P1=1,P2=0", "--find", "P3")
    assert code == 5 and "R1" in err
    code, out, _ = run(capsys, "solve", kb, "--given", "P1=1,P2=0", "--find", "P3", "--no-eval")
    assert code == 0 and out.startswith("path: R1")


def test_solve_writes_dot(capsys, data_dir, tmp_path):
    dot = tmp_path / "g.dot"
    code, _, _ = run(capsys, "solve", data_dir / "triangle.xml", "--given", "P2=60,P3=60", "--find", "P1", "--dot", dot)
    assert code == 0 and dot.read_text().startswith("digraph")


def test_trace_matches_golden(capsys, data_dir):
    code, out, _ = run(
        capsys, "solve", data_dir / "worked_example.xml", "--given", "P1=1,P2=2,P3=3", "--find", "P6", "--trace"
    )
    assert code == 0
    golden = (data_dir / "worked_example.trace.txt").read_text()
    assert out.startswith(golden)


def test_trace_too_large(capsys, tmp_path):
    kb = tmp_path / "big.tsv"
    assert run(capsys, "generate", 2000, "-o", kb)[0] == 0
    code, _, err = run(capsys, "solve", kb, "--given", "P1=10,P2=10", "--find", "P2000", "--trace")
    assert code == 2 and "cap" in err


def test_export_dot(capsys, data_dir, tmp_path):
    code, out, _ = run(capsys, "export-dot", data_dir / "triangle.xml", "--given", "P2=1,P3=1", "--find", "P1")
    assert code == 0 and '"r:R1"' in out
    target = tmp_path / "t.dot"
    code, _, _ = run(capsys, "export-dot", data_dir / "triangle.xml", "--given", "P2=1,P3=1", "--find", "P1", "-o", target)
    assert code == 0 and target.read_text() == out
    code, _, _ = run(capsys, "export-dot", data_dir / "triangle.xml", "--given", "P1=1", "--find", "P3")
    assert code == 4


@pytest.mark.parametrize("fmt", ["tsv", "xml"])
def test_generate_to_file(capsys, tmp_path, fmt):
    path = tmp_path / f"chain.{fmt}"
    code, out, _ = run(capsys, "generate", 1000, "-o", path)
    assert code == 0 and out.splitlines() == ["objects: 1000", "rules: 2994"]
    net, _ = load_net(path)
    assert (net.n, net.m) == (1000, 2994)


def test_generate_small(capsys):
    assert run(capsys, "generate", 3)[1].splitlines()[-1] == "rules: 3"
    assert run(capsys, "generate", "1e1", "--no-inverses")[1].splitlines()[-1] == "rules: 8"


@pytest.mark.parametrize("n", ["2", "abc", "3.5"])
def test_generate_bad_size(capsys, n):
    try:
        code = main(["generate", n])
    except SystemExit as e:
        code = e.code
    assert code == 2


def test_bench_self_test(capsys, tmp_path):
    out_csv = tmp_path / "b.csv"
    code, out, _ = run(capsys, "bench", "--self-test", "-o", out_csv)
    assert code == 0 and "slope=1.0000 r2=1.0000" in out
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["n_objects", "n_rules", "run", "solve_ms", "path_len", "counter_decrements"]


def test_bench_single_size(capsys, tmp_path):
    out_csv = tmp_path / "b.csv"
    code, out, _ = run(capsys, "bench", "--sizes", "1e3", "--repeats", "2", "-o", out_csv)
    assert code == 0 and "insufficient data" in out
    rows = list(csv.reader(out_csv.open()))
    assert [r[2] for r in rows[1:]] == ["1", "2", "median"]
    assert rows[1][:2] == ["1000", "2994"] and rows[1][4] == "998"


def test_usage_errors():
    for argv in ([], ["frobnicate"], ["solve"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2


def test_module_entry_point(data_dir):
    proc = subprocess.run(
        [sys.executable, "-m", "mivarnet", "solve", str(data_dir / "triangle.xml"), "--given", "P2=60,P3=60", "--find", "P1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and "P1 = 60" in proc.stdout
