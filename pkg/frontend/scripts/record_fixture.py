"""Record a protocol exchange for the thin-client replay test.

Drives the real session handler through the exact scenario that
tests/replay.test.ts re-issues through the SessionClient, and stores
every request/response pair in tests/fixtures/session_log.json. The
replay test then asserts the client emits byte-identical requests and
derives all of its state from the logged responses alone.

Must mirror the client's envelope policy: requests carry no id here
(the client adds its own; the fake transport strips it), and the
revision field is attached to exactly the methods the client treats as
revision-scoped, once a first compile has happened.

Run from this directory with the Python package installed:

    python3 record_fixture.py
"""

from __future__ import annotations

import json
import pathlib

from bcscad.session import Session, handle_request

# methods the client sends with its current revision attached
REVISIONED = {
    "pick", "menu", "select", "forwardSearch", "variableSearch",
    "beginDrag", "updateDrag", "applyTransform",
}

SOURCE = """\
// étui — non-ASCII text shifts byte offsets ✂
base_w = 40;
module foot() { cylinder(h = 3, r = 2, $fn = 8); }
difference() {
  cube([base_w, 24, 6]);
  translate([8, 12, -1]) cylinder(h = 8, r = 3, $fn = 12);
  translate([32, 12, -1]) cylinder(h = 8, r = 3, $fn = 12);
}
translate([4, 4, -3]) foot();
translate([36, 20, -3]) foot();
"""

BROKEN_SOURCE = SOURCE + "translate([1, 2)) foot();\n"
EXTENDED_SOURCE = SOURCE + "translate([20, 12, 6]) sphere(r = 4, $fn = 8);\n"


def main() -> None:
    session = Session()
    log: list[dict] = []

    def call(method: str, **fields):
        request = {"method": method, **fields}
        if method in REVISIONED and session.revision > 0:
            request["revision"] = session.revision
        response = handle_request(session, dict(request))
        log.append({"request": request, "response": response})
        return response

    # open and a miss + hit pick
    call("open", source=SOURCE)
    call("pick", origin=[500.0, 500.0, 50.0], dir=[0.0, 0.0, -1.0])
    hit = call("pick", origin=[20.0, 12.0, 50.0], dir=[0.0, 0.0, -1.0])
    assert hit["leaf_id"] and not hit["is_ghost"]

    # the element's code menu, then hover along it
    menu = call("menu", leaf_id=hit["leaf_id"])
    entries = menu["entries"]
    assert [e["label"] for e in entries] == ["cube", "difference", "root"]
    call("select", node_id=entries[0]["node_id"])              # leaf: no ghosts
    ghosted = call("select", node_id=entries[1]["node_id"])    # difference
    assert len(ghosted["ghosts"]) == 2
    call("getScene")                                           # ghosts appear
    plain = call("select", node_id=entries[0]["node_id"])      # back to leaf
    assert not plain["ghosts"]
    call("getScene")                                           # ghosts cleared

    # search from the code side: the shared foot body, then a variable
    body_stmt = "cylinder(h = 3, r = 2, $fn = 8);"
    start = SOURCE.encode("utf-8").index(body_stmt.encode("utf-8"))
    shared = call("forwardSearch",
                  span=[start, start + len(body_stmt.encode("utf-8"))])
    assert len(shared["impacted_node_ids"]) == 2 and not shared["target_node_ids"]
    var_use = SOURCE.encode("utf-8").index(b"base_w, 24")
    varline = call("variableSearch", span=[var_use, var_use + len(b"base_w")])
    assert varline["impacted_spans"]

    # second foot: its call-site translate absorbs a one-shot transform
    foot_hit = call("pick", origin=[36.0, 20.0, -50.0], dir=[0.0, 0.0, 1.0])
    assert foot_hit["leaf_id"]
    foot_menu = call("menu", leaf_id=foot_hit["leaf_id"])
    foot_labels = [e["label"] for e in foot_menu["entries"]]
    assert foot_labels == ["cylinder", "module foot", "translate", "root"]
    moved = call("applyTransform", node_id=foot_menu["entries"][1]["node_id"],
                 kind="translate", params={"delta": [0.0, 0.0, 2.0]})
    assert moved["action"] == "modified_existing"
    call("getSource")

    # drag the whole difference: ticks recompute against the snapshot
    begun = call("beginDrag", node_id=entries[1]["node_id"], kind="translate")
    assert "frame" in begun
    tick1 = call("updateDrag", delta=[5.0, 0.0, 0.0])
    assert tick1["action"] == "inserted_new"
    tick2 = call("updateDrag", delta=[5.0, 0.0, 2.5])
    assert tick2["action"] == "inserted_new"
    call("endDrag")
    call("getSource")

    # full-text replacement: a broken buffer is transactional, a fixed
    # one compiles to a fresh revision
    broken = call("setSource", text=BROKEN_SOURCE)
    assert any(d["severity"] == "error" for d in broken["diagnostics"])
    call("getSource")
    extended = call("setSource", text=EXTENDED_SOURCE)
    assert not extended["diagnostics"]
    call("getSource")

    out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "session_log.json"
    entries = ",\n".join(json.dumps(e, separators=(",", ":")) for e in log)
    path.write_text(f"[\n{entries}\n]\n", encoding="utf-8")
    print(f"wrote {path} with {len(log)} exchanges, "
          f"{path.stat().st_size / 1024:.0f} KiB")


if __name__ == "__main__":
    main()
