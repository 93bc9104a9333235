import math
import xml.etree.ElementTree as ET

from artifact.svg import Series, line_chart

NS = "{http://www.w3.org/2000/svg}"


def test_chart_is_valid_svg_with_one_polyline_per_series():
    svg = line_chart(
        [Series("a", [0, 1, 2], [0.0, 0.5, 1.0]), Series("b", [0, 1, 2], [1.0, 0.25, 0.0], step=True)],
        title="demo", xlabel="t", ylabel="y",
    )
    root = ET.fromstring(svg)
    assert root.tag == NS + "svg"
    assert len(root.findall(f".//{NS}polyline")) == 2
    texts = [t.text for t in root.iter(NS + "text")]
    assert "demo" in texts and "a" in texts and "b" in texts


def test_tick_labels_use_three_significant_digits():
    svg = line_chart([Series("s", [0.0, 1.23456], [0.0, 9.87654])])
    texts = [t.text for t in ET.fromstring(svg).iter(NS + "text")]
    numeric = [t for t in texts if t and t.replace(".", "").replace("-", "").replace("e", "").replace("+", "").isdigit()]
    assert numeric
    for t in numeric:
        assert len(t.replace("-", "").replace(".", "").lstrip("0")) <= 3 or "e" in t


def test_missing_values_split_the_line():
    svg = line_chart([Series("gap", [0, 1, 2, 3], [0.0, 1.0, math.nan, 2.0])])
    assert len(ET.fromstring(svg).findall(f".//{NS}polyline")) == 2
