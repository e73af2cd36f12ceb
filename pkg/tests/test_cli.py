"""CLI subcommands: outputs, exit codes, diagnostics on stderr."""

from __future__ import annotations

import json
import struct

import pytest

from bcscad.cli import main


@pytest.fixture()
def demo(tmp_path):
    path = tmp_path / "demo.bcs"
    path.write_text(
        "// bracket\n"
        "w = 20;\n"
        "difference() {\n"
        "    cube([w, 10, 10]);\n"
        "    translate([10, 5, -1]) cylinder(h=12, r=3);\n"
        "}\n"
        "translate([0, 15, 0]) sphere(3);\n")
    return path


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_compile_prints_summary(capsys, demo):
    code, out, err = run(capsys, "compile", demo)
    assert code == 0
    summary = json.loads(out)
    assert summary["parts"] == 2
    assert summary["csg_nodes"] >= 6
    assert err == ""


def test_compile_reports_parse_errors_with_position(capsys, tmp_path):
    bad = tmp_path / "bad.bcs"
    bad.write_text("cube(2\n")
    code, out, err = run(capsys, "compile", bad)
    assert code == 1
    assert out == ""
    assert f"{bad}:1:" in err and "error" in err


def test_compile_reports_eval_errors(capsys, tmp_path):
    bad = tmp_path / "bad.bcs"
    bad.write_text("sphere(-1);\n")
    code, _, err = run(capsys, "compile", bad)
    assert code == 1
    assert "non-positive dimension" in err


def test_export_writes_stl(capsys, demo, tmp_path):
    out_path = tmp_path / "demo.stl"
    code, _, _ = run(capsys, "export", demo, "-o", out_path)
    assert code == 0
    data = out_path.read_bytes()
    count = struct.unpack("<I", data[80:84])[0]
    assert len(data) == 84 + 50 * count and count > 0


def test_export_empty_intersection_is_a_valid_stl(capsys, tmp_path):
    src = tmp_path / "empty.bcs"
    src.write_text("intersection() {}\n")
    out_path = tmp_path / "empty.stl"
    code, _, _ = run(capsys, "export", src, "-o", out_path)
    assert code == 0
    data = out_path.read_bytes()
    assert len(data) == 84
    assert struct.unpack("<I", data[80:84])[0] == 0


def test_export_ascii(capsys, demo, tmp_path):
    out_path = tmp_path / "demo.stl"
    code, _, _ = run(capsys, "export", demo, "-o", out_path,
                     "--format", "ascii")
    assert code == 0
    assert out_path.read_text().startswith("solid")


def test_pick_prints_hit_and_menu(capsys, demo):
    code, out, _ = run(capsys, "pick", demo, "--ray", "1,5,20,0,0,-1")
    assert code == 0
    result = json.loads(out)
    assert result["leaf_id"] == "0.0"
    assert result["t"] == pytest.approx(10.0)
    assert [e["label"] for e in result["entries"]] == \
        ["cube", "difference", "root"]


def test_pick_miss_prints_nulls(capsys, demo):
    code, out, _ = run(capsys, "pick", demo, "--ray", "99,99,20,0,0,-1")
    assert code == 0
    result = json.loads(out)
    assert result["leaf_id"] is None and result["entries"] == []


def test_pick_rejects_malformed_ray(capsys, demo):
    code, _, err = run(capsys, "pick", demo, "--ray", "1,2,3")
    assert code == 1 and "--ray" in err


def test_select_prints_highlight_state(capsys, demo):
    code, out, _ = run(capsys, "select", demo, "--node", "0")
    assert code == 0
    state = json.loads(out)
    assert state["target_node_ids"] == ["", "0"]
    assert len(state["ghosts"]) == 1


def test_search_forward(capsys, demo):
    source = demo.read_text()
    start = source.index("sphere")
    code, out, _ = run(capsys, "search", demo,
                       "--span", f"{start}..{start + 6}")
    assert code == 0
    state = json.loads(out)
    assert state["target_node_ids"][-1] == "1.0"


def test_search_variable(capsys, demo):
    source = demo.read_text()
    start = source.index("w = 20")
    code, out, _ = run(capsys, "search", demo, "--span",
                       f"{start}..{start + 1}", "--variable")
    assert code == 0
    state = json.loads(out)
    assert state["impacted_node_ids"] == ["0.0"]
    assert state["target_node_ids"] == []


def test_search_rejects_bad_spans(capsys, demo):
    code, _, err = run(capsys, "search", demo, "--span", "five..six")
    assert code == 1 and "--span" in err
    code, _, err = run(capsys, "search", demo, "--span", "50..10")
    assert code == 1 and "--span" in err


def test_transform_translate_prints_rewritten_source(capsys, demo):
    code, out, _ = run(capsys, "transform", demo, "--node", "1",
                       "--translate", "0,0,5")
    assert code == 0
    assert "translate([0, 15, 5]) sphere(3);" in out
    assert out.count("sphere") == 1


def test_transform_rotate_and_scale(capsys, demo):
    code, out, _ = run(capsys, "transform", demo, "--node", "0",
                       "--rotate", "z,15")
    assert code == 0 and "rotate([0, 0, 15]) difference()" in out

    code, out, _ = run(capsys, "transform", demo, "--node", "1.0",
                       "--scale", "2", "--primitive")
    assert code == 0 and "sphere(6);" in out

    code, out, _ = run(capsys, "transform", demo, "--node", "1.0",
                       "--scale", "1,1,2")
    assert code == 0 and "scale([1, 1, 2]) sphere(3);" in out


def test_transform_bad_node_exits_nonzero(capsys, demo):
    code, out, err = run(capsys, "transform", demo, "--node", "99",
                         "--translate", "1,0,0")
    assert code == 1
    assert out == ""
    assert "stale node id" in err


def test_report_writes_csv_and_figure(capsys, demo, tmp_path):
    out_dir = tmp_path / "report"
    code, out, _ = run(capsys, "report", demo, "-o", out_dir)
    assert code == 0
    summary = json.loads(out)
    assert summary["parts"] == 2

    header, *rows = (out_dir / "parts.csv").read_text().strip().splitlines()
    assert header.startswith("node_id,label,triangles,volume")
    assert len(rows) == 2
    assert rows[0].split(",")[1] == "difference"

    figure = (out_dir / "scene.png").read_bytes()
    assert figure[:8] == b"\x89PNG\r\n\x1a\n"
