"""Structural checks on the SVG renderers."""

import math
import re
from xml.dom import minidom

import numpy as np
import pytest

from calibwalk import (
    PlotStyle,
    bb_test,
    bm_test,
    build_dataset,
    cumulative_process,
    render_binned_calibration_plot,
    render_cumulative_plot,
    render_study_figures,
    run_null_study,
    run_power_study,
    walk_statistics,
)
from calibwalk.stattests import _rank_group_bounds
from calibwalk.svgplot import binned_plot_map, cumulative_plot_map

STYLE = PlotStyle()


def _dataset(seed=3, n=200, lo=0.05, hi=0.6):
    rng = np.random.default_rng(seed)
    p = np.sort(rng.uniform(lo, hi, n))
    y = (rng.random(n) < p).astype(float)
    return build_dataset(p, y)


def _polyline_points(svg, index=0):
    matches = re.findall(r'<polyline[^>]*points="([^"]+)"', svg)
    return [tuple(float(c) for c in pair.split(","))
            for pair in matches[index].split()]


def _lines(svg, color):
    out = []
    for attrs in re.findall(r"<line ([^/]+)/>", svg):
        d = dict(re.findall(r'([\w-]+)="([^"]*)"', attrs))
        if d.get("stroke") == color:
            out.append(d)
    return out


@pytest.fixture(scope="module")
def rendered():
    data = _dataset()
    proc = cumulative_process(data)
    bm = bm_test(data)
    bb = bb_test(data)
    return {
        "data": data,
        "proc": proc,
        "bm": bm,
        "bb": bb,
        "svg_bm": render_cumulative_plot(proc, "bm", bm, STYLE),
        "svg_bb": render_cumulative_plot(proc, "bb", bb, STYLE),
    }


class TestCumulativePlot:
    def test_well_formed_xml(self, rendered):
        for key in ("svg_bm", "svg_bb"):
            doc = minidom.parseString(rendered[key])
            assert doc.documentElement.tagName == "svg"

    def test_no_external_references(self, rendered):
        for key in ("svg_bm", "svg_bb"):
            assert "href" not in rendered[key]
            assert "url(" not in rendered[key]

    def test_deterministic(self, rendered):
        again = render_cumulative_plot(
            rendered["proc"], "bm", rendered["bm"], STYLE
        )
        assert again == rendered["svg_bm"]

    def test_polyline_vertex_count(self, rendered):
        points = _polyline_points(rendered["svg_bm"])
        assert len(points) == rendered["data"].n + 1

    def test_polyline_matches_transform(self, rendered):
        amap = cumulative_plot_map(rendered["proc"], "bm", STYLE)
        points = _polyline_points(rendered["svg_bm"])
        assert points[0] == pytest.approx(amap.to_px(0.0, 0.0), abs=1e-6)
        proc = rendered["proc"]
        for (px, py), t, s in zip(points[1:], proc.times, proc.walk):
            ex, ey = amap.to_px(float(t), float(s))
            assert px == pytest.approx(ex, abs=1e-6)
            assert py == pytest.approx(ey, abs=1e-6)

    def test_transform_roundtrip(self, rendered):
        proc = rendered["proc"]
        for mode in ("bm", "bb"):
            amap = cumulative_plot_map(proc, mode, STYLE)
            for t, s in zip(proc.times, proc.walk):
                px, py = amap.to_px(float(t), float(s))
                back = amap.to_data(px, py)
                fwd = amap.to_px(*back)
                assert fwd[0] == pytest.approx(px, abs=1e-6)
                assert fwd[1] == pytest.approx(py, abs=1e-6)

    def test_max_marker_hits_walk_extremum(self, rendered):
        # miscalibrated-shaped sample: the marker ordinate must equal the
        # transformed walk maximum to sub-pixel accuracy
        stats = walk_statistics(rendered["proc"])
        amap = cumulative_plot_map(rendered["proc"], "bm", STYLE)
        markers = [d for d in _lines(rendered["svg_bm"],
                                     STYLE.max_marker_color)
                   if d.get("stroke-width") == "2"]
        assert len(markers) == 1
        m = markers[0]
        i = stats.argmax_bm.index - 1
        ex, ey = amap.to_px(float(rendered["proc"].times[i]),
                            float(rendered["proc"].walk[i]))
        assert float(m["x1"]) == pytest.approx(ex, abs=0.5)
        assert float(m["y2"]) == pytest.approx(ey, abs=0.5)

    def test_bb_markers_and_chord(self, rendered):
        svg = rendered["svg_bb"]
        chord = _lines(svg, STYLE.bridge_color)
        assert len(chord) == 1
        critical = [d for d in _lines(svg, STYLE.critical_color)
                    if d.get("stroke-dasharray")]
        assert len(critical) == 1
        # critical line is parallel to the chord
        c, k = chord[0], critical[0]
        chord_slope = (float(c["y2"]) - float(c["y1"])) / (
            float(c["x2"]) - float(c["x1"]))
        crit_slope = (float(k["y2"]) - float(k["y1"])) / (
            float(k["x2"]) - float(k["x1"]))
        assert crit_slope == pytest.approx(chord_slope, abs=1e-9)

    def test_bb_degenerate_chord_on_axis(self):
        data = build_dataset([0.5, 0.5], [0, 1])
        proc = cumulative_process(data)
        with pytest.warns(UserWarning):
            result = bb_test(data)
        assert result.s_n == 0.0
        svg = render_cumulative_plot(proc, "bb", result, STYLE)
        amap = cumulative_plot_map(proc, "bb", STYLE)
        _, zero_py = amap.to_px(0.0, 0.0)
        chord = _lines(svg, STYLE.bridge_color)[0]
        assert float(chord["y1"]) == pytest.approx(zero_py, abs=1e-6)
        assert float(chord["y2"]) == pytest.approx(zero_py, abs=1e-6)
        # bridged-maximum marker length equals b_star in data units
        marker = [d for d in _lines(svg, STYLE.max_marker_color)
                  if d.get("stroke-width") == "2"][0]
        length_px = abs(float(marker["y2"]) - float(marker["y1"]))
        assert length_px == pytest.approx(
            result.b_star * abs(amap.y_scale), abs=1e-6
        )

    def test_triangle_and_secondary_axis_toggles(self, rendered):
        bare = PlotStyle(show_triangle=False, show_secondary_axis=False)
        svg = render_cumulative_plot(rendered["proc"], "bm", rendered["bm"],
                                     bare)
        assert "<polygon" not in svg
        assert 'fill="#555555"' not in svg  # secondary-axis labels
        assert "<polygon" in rendered["svg_bm"]
        assert 'fill="#555555"' in rendered["svg_bm"]

    def test_mismatched_result_rejected(self, rendered):
        other = bm_test(_dataset(seed=99))
        with pytest.raises(ValueError, match="not computed from"):
            render_cumulative_plot(rendered["proc"], "bm", other, STYLE)
        with pytest.raises(ValueError, match="not computed from"):
            render_cumulative_plot(rendered["proc"], "bb", rendered["bm"],
                                   STYLE)

    def test_unknown_mode(self, rendered):
        with pytest.raises(ValueError, match="mode"):
            render_cumulative_plot(rendered["proc"], "loess", rendered["bm"],
                                   STYLE)


class TestBinnedPlot:
    def test_perfectly_calibrated_groups_on_identity(self):
        p = [0.1] * 100
        y = ([1] + [0] * 9) * 10
        data = build_dataset(p, y)
        svg = render_binned_calibration_plot(data, groups=10)
        amap = binned_plot_map(data, 10)
        circles = re.findall(r'<circle cx="([^"]+)" cy="([^"]+)"', svg)
        assert len(circles) == 10
        for cx, cy in circles:
            gx, gy = amap.to_data(float(cx), float(cy))
            assert gx == pytest.approx(0.1, abs=1e-6)
            assert gy == pytest.approx(0.1, abs=1e-6)

    def test_marker_count_and_whiskers(self):
        data = _dataset(seed=4, n=1000, lo=0.2, hi=0.8)
        svg = render_binned_calibration_plot(data, groups=10)
        amap = binned_plot_map(data, 10)
        circles = re.findall(r'<circle cx="([^"]+)" cy="([^"]+)"', svg)
        whiskers = _lines(svg, "#777777")
        assert len(circles) == 10
        assert len(whiskers) == 10
        bounds = _rank_group_bounds(data.n, 10)
        for g, ((cx, cy), w) in enumerate(zip(circles, whiskers)):
            lo, hi = bounds[g], bounds[g + 1]
            prop = float(data.outcomes[lo:hi].mean())
            mean_p = float(data.predictions[lo:hi].mean())
            gx, gy = amap.to_data(float(cx), float(cy))
            assert gx == pytest.approx(mean_p, abs=1e-6)
            assert gy == pytest.approx(prop, abs=1e-6)
            half = math.sqrt(prop * (1 - prop) / (hi - lo))
            length_px = abs(float(w["y2"]) - float(w["y1"]))
            assert length_px == pytest.approx(
                2 * half * abs(amap.y_scale), abs=1e-6
            )

    def test_deterministic(self):
        data = _dataset(seed=5, n=120)
        assert render_binned_calibration_plot(data) == \
            render_binned_calibration_plot(data)

    def test_too_many_groups(self):
        with pytest.raises(ValueError):
            render_binned_calibration_plot(_dataset(n=5, seed=1), groups=10)


class TestStudyFigures:
    def test_null_grid_panel_count(self):
        summaries = run_null_study([-2.0, -1.0, 0.0], [20, 30, 40, 50],
                                   replications=3, seed=1)
        panels = render_study_figures(summaries)
        assert len(panels) == 12
        for svg in panels.values():
            minidom.parseString(svg)

    def test_power_panel_has_four_bars(self):
        summaries = run_power_study("logit_linear", [0.0], [1.0], [60],
                                    replications=3, seed=1)
        panels = render_study_figures(summaries)
        assert len(panels) == 1
        svg = next(iter(panels.values()))
        bars = re.findall(
            r'<rect [^/]*fill="(#ffffff|#bbbbbb|#1f77b4|#ff7f0e)" '
            r'stroke="#000000"', svg,
        )
        assert len(bars) == 4

    def test_annotation_matches_rejections(self):
        summaries = run_null_study([-1.0], [40], replications=5, seed=2)
        svg = next(iter(render_study_figures(summaries).values()))
        s = summaries[0]
        assert f"BM: {s.rejections['bm']:.3f}" in svg
        assert f"BB: {s.rejections['bb']:.3f}" in svg

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            render_study_figures([])


class TestPlotStyle:
    def test_validation(self):
        with pytest.raises(ValueError):
            PlotStyle(width=0)
        with pytest.raises(ValueError):
            PlotStyle(significance_level=0.0)
