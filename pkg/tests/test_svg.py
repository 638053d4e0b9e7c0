import xml.etree.ElementTree as ET

import numpy as np

from synchrony import svg
from synchrony.netgen import make_regular_ring

NS = "{http://www.w3.org/2000/svg}"


def _parse(text):
    return ET.fromstring(text.encode("utf-8"))


def test_line_chart_structure():
    root = _parse(svg.line_chart([("a<1", [0, 0.5, 1]), ("b&c", [1, 2], [0.2, 0.4])], title="x & y",
                                 xlabel="tick t", ylabel="Pro(t)"))
    assert len(root.findall(f"{NS}polyline")) == 2
    labels = [t.text for t in root.iter(f"{NS}text") if t.get("class") == "legend"]
    assert labels == ["a<1", "b&c"]
    assert [t.text for t in root.iter(f"{NS}text") if t.get("class") == "xlabel"] == ["tick t"]
    assert [t.text for t in root.iter(f"{NS}text") if t.get("class") == "ylabel"] == ["Pro(t)"]


def test_line_chart_skips_nan():
    root = _parse(svg.line_chart([("s", [0.1, np.nan, 0.3])]))
    pts = root.find(f"{NS}polyline").get("points").split()
    assert len(pts) == 2


def test_overlay_has_two_series_and_legend():
    root = _parse(svg.overlay_chart([f"m{i}" for i in range(6)], [1, 0, 3, 2, 0, 1], [1.2, 0.5, 2, 2, 1, 0]))
    assert len([r for r in root.iter(f"{NS}rect") if r.get("class") == "observed"]) == 6
    assert len(root.findall(f"{NS}polyline")) == 1
    legend = [t.text for t in root.iter(f"{NS}text") if t.get("class") == "legend"]
    assert legend == ["observed", "simulated"]


def test_snapshot_colours():
    g = make_regular_ring(6, 2)
    root = _parse(svg.network_snapshot(g, [1, 0, 0, 1, 0, 0], title="t=0"))
    circles = root.findall(f"{NS}circle")
    assert [c.get("fill") for c in circles] == [svg.ACTOR, svg.IDLE, svg.IDLE, svg.ACTOR, svg.IDLE, svg.IDLE]
    assert svg.ACTOR != svg.IDLE
    assert len(root.findall(f"{NS}line")) == 6


def test_output_is_deterministic(tmp_path):
    a = svg.line_chart([("s", [0.1, 0.2])])
    svg.write(tmp_path / "a.svg", a)
    assert (tmp_path / "a.svg").read_text() == svg.line_chart([("s", [0.1, 0.2])])
