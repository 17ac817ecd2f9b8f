import json
import math
import re
import shutil
import xml.etree.ElementTree as ET

import pytest

from conftest import WORLDS
from oracles import circle_plan_oracle, enumerate_plan_dense
from pathmap.cli import main
from pathmap.render import parse_trace_log
from pathmap.errors import ParseError

SVG = "{http://www.w3.org/2000/svg}"
STATS = re.compile(r"^paths=(\d+) objects=(\d+) ticks=(\d+) distance=(\d+\.\d{3})$")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out.strip(), err.strip()


def svg_parts(path):
    root = ET.parse(path).getroot()
    boundary = [e for e in root.iter(f"{SVG}path") if e.get("id") == "boundary"]
    plan = [e for e in root.iter(f"{SVG}g") if e.get("id") == "plan"]
    objects = [e for e in root.iter() if e.get("class") == "object"]
    return boundary, plan, objects


# ----------------------------------------------------------------------- map


@pytest.fixture(scope="module")
def square_map(tmp_path_factory):
    out = tmp_path_factory.mktemp("square")
    code = main(["map", str(WORLDS / "square.json"), "--alpha", "2", "--out-dir", str(out), "--trace"])
    return code, out


def test_map_empty_room(square_map, capsys):
    code, out = square_map
    assert code == 0
    doc = json.loads((out / "map.json").read_text())
    assert set(doc) == {"boundary", "shape", "objects", "stats", "config"}
    assert doc["shape"] == "convex" and doc["objects"] == []
    assert doc["config"]["alpha"] == 2.0
    assert doc["stats"]["paths_traversed"] > 0


def test_map_prints_the_stats_line(tmp_path, capsys):
    code, out, _ = run(capsys, "map", WORLDS / "square.json", "--alpha", "2", "--out-dir", tmp_path)
    assert code == 0
    m = STATS.match(out)
    assert m and m.group(2) == "0"
    assert int(m.group(1)) == json.loads((tmp_path / "map.json").read_text())["stats"]["paths_traversed"]


def test_map_svg_structure(square_map):
    _, out = square_map
    boundary, plan, objects = svg_parts(out / "map.svg")
    assert len(boundary) == 1 and len(plan) == 1 and objects == []
    doc = json.loads((out / "map.json").read_text())
    assert len(list(plan[0])) == doc["stats"]["paths_traversed"]


def test_map_room_with_notch_and_object(tmp_path, capsys):
    code, out, _ = run(capsys, "map", WORLDS / "intrinsic_and_extrinsic.json", "--alpha", "1", "--out-dir", tmp_path)
    assert code == 0
    assert STATS.match(out).group(2) == "1"
    doc = json.loads((tmp_path / "map.json").read_text())
    # the notch (4..6, 0..2) pushes the traced boundary up to about y = 2 + d between x = 4 and 6
    assert doc["shape"] == "concave"
    notch = [p for p in doc["boundary"] if 4.0 <= p[0] <= 6.4 and 1.9 <= p[1] <= 2.5]
    assert len(notch) >= 2
    _, _, objects = svg_parts(tmp_path / "map.svg")
    assert len(objects) == 1


def test_map_invalid_world_lists_violations(tmp_path, capsys):
    code, out, err = run(capsys, "map", WORLDS / "bad_clearance.json", "--out-dir", tmp_path)
    assert code == 2
    assert "clearance" in err and out == ""
    assert not (tmp_path / "map.json").exists()


def test_map_malformed_world_is_a_validation_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"outer": ')
    code, _, err = run(capsys, "map", bad, "--out-dir", tmp_path)
    assert code == 2 and "line 1" in err


def test_map_tick_budget_gives_timeout(tmp_path, capsys):
    code, _, err = run(capsys, "map", WORLDS / "square.json", "--max-ticks", "100", "--out-dir", tmp_path)
    assert code == 3 and "timeout" in err


def test_map_bad_flags(tmp_path, capsys):
    code, _, _ = run(capsys, "map", WORLDS / "square.json", "--alpha", "-1", "--out-dir", tmp_path)
    assert code == 2
    with pytest.raises(SystemExit):
        main(["map", str(WORLDS / "square.json"), "--noise", "loud"])


def test_batch_maps_every_world(tmp_path, capsys):
    src = tmp_path / "in"
    src.mkdir()
    shutil.copy(WORLDS / "square.json", src / "a.json")
    shutil.copy(WORLDS / "bad_clearance.json", src / "b.json")
    code, out, err = run(capsys, "map", "--batch", src, "--alpha", "2", "--jobs", "2", "--out-dir", tmp_path / "out")
    assert code == 2
    assert out.startswith("a: paths=")
    assert "b.json" in err
    assert (tmp_path / "out" / "a" / "map.json").exists()
    assert not (tmp_path / "out" / "b").exists()


# ----------------------------------------------------------------------- plan


def test_plan_unit_square(tmp_path, capsys):
    code, out, _ = run(capsys, "plan", WORLDS / "boundaries" / "unit_square.json", "--alpha", "0.5", "--out-dir", tmp_path)
    assert (code, out) == (0, "paths=10")
    doc = json.loads((tmp_path / "plan.json").read_text())
    assert len(doc["entries"]) == 10
    assert set(doc["entries"][0]) == {"line_id", "part_id", "start", "end", "angle_rad"}
    _, plan, _ = svg_parts(tmp_path / "plan.svg")
    assert len(list(plan[0])) == 10


def test_plan_l_shape_matches_oracle(tmp_path, capsys):
    verts = json.loads((WORLDS / "boundaries" / "l_boundary.json").read_text())["polygon"]
    expected = len(enumerate_plan_dense([tuple(v) for v in verts], 0.5))
    code, out, _ = run(capsys, "plan", WORLDS / "boundaries" / "l_boundary.json", "--alpha", "0.5", "--out-dir", tmp_path)
    assert (code, out) == (0, f"paths={expected}")


def test_plan_circle(tmp_path, capsys):
    code, out, _ = run(capsys, "plan", WORLDS / "boundaries" / "unit_circle.json", "--alpha", str(math.pi / 2), "--out-dir", tmp_path)
    assert (code, out) == (0, f"paths={circle_plan_oracle(math.pi / 2)}")


def test_plan_warns_on_huge_alpha(tmp_path, capsys):
    code, out, err = run(capsys, "plan", WORLDS / "boundaries" / "unit_square.json", "--alpha", "3", "--out-dir", tmp_path)
    assert code == 0 and out == "paths=2"
    assert err.startswith("warning:")


def test_plan_of_a_world_uses_its_reachable_region(tmp_path, capsys):
    code, out, _ = run(capsys, "plan", WORLDS / "intrinsic_and_extrinsic.json", "--alpha", "2", "--out-dir", tmp_path)
    assert code == 0 and out.startswith("paths=")
    doc = json.loads((tmp_path / "plan.json").read_text())
    starts = {tuple(e["start"]) for e in doc["entries"]}
    assert (6.0, 2.0) in starts or (4.0, 2.0) in starts


# --------------------------------------------------------------------- replay


def test_replay_of_a_square_run(square_map, tmp_path, capsys):
    _, out = square_map
    log_text = (out / "trace.log").read_text()
    n_ticks = sum(1 for line in log_text.splitlines() if line and not line.startswith("#"))
    code, msg, _ = run(capsys, "replay", out / "trace.log", "--every", "5000", "--out-dir", tmp_path)
    frames = sorted(tmp_path.glob("frame_*.svg"))
    assert code == 0 and msg == f"frames={len(frames)}"
    assert len(frames) == math.ceil(n_ticks / 5000)
    ET.parse(frames[-1])


def test_replay_is_deterministic(square_map, tmp_path, capsys):
    _, out = square_map
    for sub in ("a", "b"):
        run(capsys, "replay", out / "trace.log", "--every", "20000", "--out-dir", tmp_path / sub)
    a = [p.read_bytes() for p in sorted((tmp_path / "a").iterdir())]
    b = [p.read_bytes() for p in sorted((tmp_path / "b").iterdir())]
    assert a == b and a


def test_replay_empty_log(tmp_path, capsys):
    log = tmp_path / "empty.log"
    log.write_text("")
    code, out, _ = run(capsys, "replay", log, "--out-dir", tmp_path / "frames")
    assert (code, out) == (0, "frames=0")


def test_replay_truncated_log_reports_the_line(square_map, tmp_path, capsys):
    _, out = square_map
    lines = (out / "trace.log").read_text().splitlines()
    # cut the tenth line mid-record
    broken = "\n".join(lines[:9] + [lines[9][:5]]) + "\n"
    log = tmp_path / "cut.log"
    log.write_text(broken)
    with pytest.raises(ParseError) as exc:
        parse_trace_log(broken)
    assert "line 10" in str(exc.value)
    code, _, err = run(capsys, "replay", log, "--out-dir", tmp_path / "frames")
    assert code == 2 and "line 10" in err
