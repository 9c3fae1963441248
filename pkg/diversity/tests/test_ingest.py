import dataclasses
import io

import numpy as np
import pytest

from diversity.exceptions import ConfigurationError, EdgeListParseError, EmptyInputError
from diversity.utils.graph_core import TemporalEdgeList
from diversity.utils.ingest import (
    ScenarioConfig,
    build_connected_series,
    build_full_series,
    make_timepoints,
    node_counts,
    parse_edge_file,
    read_manifest,
    series_points,
    series_snapshot,
    write_edge_file,
)


def parse_text(text: str, **kwargs) -> TemporalEdgeList:
    return parse_edge_file(io.BytesIO(text.encode("utf-8")), **kwargs)


def test_parse_basic_file():
    elist = parse_text("% sym unweighted\n% 3 3 3\n1 2 1 30\n2 3 1 10\n3 1 1 20\n")
    assert elist.t.tolist() == [10, 20, 30]
    assert elist.u.tolist() == [2, 3, 1]
    assert not elist.bipartite


def test_parse_drops_self_loops():
    elist = parse_text("1 1 1 1\n1 2 1 2\n")
    assert len(elist) == 1
    assert elist.dropped_self_loops == 1


def test_parse_keeps_duplicate_rows():
    elist = parse_text("1 2 1 5\n1 2 1 5\n")
    assert len(elist) == 2


def test_parse_accepts_zero_and_negative_timestamps():
    elist = parse_text("1 2 1 0\n2 3 1 -4\n")
    assert elist.t.tolist() == [-4, 0]


def test_missing_timestamp():
    with pytest.raises(EdgeListParseError, match="missing timestamp"):
        parse_text("1 2\n2 3\n")


def test_assume_order_uses_file_order():
    elist = parse_text("1 2\n2 3\n", assume_order=True)
    assert elist.t.tolist() == [0, 1]


def test_parse_error_reports_line_number():
    with pytest.raises(EdgeListParseError) as info:
        parse_text("% sym unweighted\n1 2 1 1\n1 x 1 2\n")
    assert info.value.line_no == 3
    assert str(info.value).startswith("line 3:")


def test_empty_file():
    with pytest.raises(EmptyInputError):
        parse_text("% sym unweighted\n")


def test_bipartite_ids_are_offset():
    elist = parse_text("% bip unweighted\n1 1 1 10\n2 1 1 11\n1 2 1 12\n")
    assert elist.bipartite
    assert elist.right_offset == 2
    assert elist.v.tolist() == [3, 3, 4]
    # the header only sets the partition flag and offset
    assert {f.name for f in dataclasses.fields(elist)} == {
        "u", "v", "t", "bipartite", "right_offset", "node_count_hint", "dropped_self_loops",
    }


@pytest.mark.parametrize("text", [
    "% sym unweighted\n1 2 1 3\n2 3 1 3\n5 1 1 7\n",
    "% bip unweighted\n1 1 1 10\n2 1 1 11\n1 2 1 12\n",
])
def test_canonical_file_round_trip(text):
    elist = parse_text(text)
    buf = io.StringIO()
    write_edge_file(elist, buf)
    assert parse_edge_file(io.StringIO(buf.getvalue())) == elist


def test_read_manifest(tmp_path):
    (tmp_path / "a.tsv").write_text("1 2 1 1\n")
    manifest = tmp_path / "datasets.tsv"
    manifest.write_text("# name\tpath\tkind\nalpha\ta.tsv\tunipartite\nbeta\t/abs/b.tsv\tbipartite\tlisted later\n")
    datasets = read_manifest(manifest)
    assert [d.name for d in datasets] == ["alpha", "beta"]
    assert datasets[0].path == tmp_path / "a.tsv"
    assert datasets[1].bipartite and datasets[1].notes == "listed later"


def test_manifest_duplicate_names(tmp_path):
    manifest = tmp_path / "datasets.tsv"
    manifest.write_text("a\tx.tsv\tunipartite\na\ty.tsv\tunipartite\n")
    with pytest.raises(ConfigurationError, match="duplicate"):
        read_manifest(manifest)


def test_make_timepoints():
    counts = make_timepoints(250, 100)
    assert len(counts) == 100
    assert counts[-1] == 250
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    assert counts[0] == 2
    assert make_timepoints(7, 1) == [7]


def test_make_timepoints_too_few_edges():
    with pytest.raises(ConfigurationError):
        make_timepoints(50, 100)


def test_full_series_matches_timepoints(growing_elist):
    config = ScenarioConfig("full").validate()
    series = build_full_series(growing_elist, config)
    assert [g.m for g in series] == make_timepoints(250, 100)
    sizes = [g.n for g in series]
    assert all(b >= a for a, b in zip(sizes, sizes[1:]))


def test_full_series_parallel_build_is_identical(growing_elist):
    config = ScenarioConfig("full", timepoints=20, t1=15)
    one = build_full_series(growing_elist, config, jobs=1)
    four = build_full_series(growing_elist, config, jobs=4)
    assert [(g.n, g.m) for g in one] == [(g.n, g.m) for g in four]


def test_connected_series(growing_elist):
    config = ScenarioConfig("connected").validate()
    anchor, series = build_connected_series(growing_elist, config)
    assert len(series) == 26
    assert len(anchor) == 60
    assert all(g.n == 60 and g.is_connected for g in series)
    edges = [g.m for g in series]
    assert all(b >= a for a, b in zip(edges, edges[1:]))


def test_connected_series_without_anchor(growing_elist):
    config = ScenarioConfig("connected", include_anchor=False).validate()
    _, series = build_connected_series(growing_elist, config)
    assert len(series) == 25


def test_series_points_rebuild_both_scenarios(growing_elist):
    full = ScenarioConfig("full", timepoints=20, t1=15).validate()
    anchor, points = series_points(growing_elist, full)
    assert anchor is None
    assert [t for t, _ in points] == list(range(1, 21))
    assert [series_snapshot(growing_elist, c).m for _, c in points] == [g.m for g in build_full_series(growing_elist, full)]

    connected = ScenarioConfig("connected", timepoints=20, t1=15).validate()
    anchor, points = series_points(growing_elist, connected)
    expected_anchor, expected = build_connected_series(growing_elist, connected)
    assert anchor.tolist() == expected_anchor.tolist()
    assert [t for t, _ in points] == list(range(15, 21))
    rebuilt = [series_snapshot(growing_elist, c, anchor) for _, c in points]
    assert [(g.n, g.m) for g in rebuilt] == [(g.n, g.m) for g in expected]


def test_connected_series_excludes_outside_vertices():
    # vertices 10, 11 only meet the component after t1
    pairs = [(i, i + 1) for i in range(1, 9)] + [(10, 11)] + [(1, 3)] * 2 + [(10, 1)] * 1
    elist = TemporalEdgeList.from_pairs(pairs)
    config = ScenarioConfig("connected", timepoints=12, t1=9).validate()
    anchor, series = build_connected_series(elist, config)
    assert 10 not in anchor.tolist() and 11 not in anchor.tolist()
    assert all(g.n == len(anchor) for g in series)


def test_node_counts(growing_elist):
    counts = [1, 10, 59, 250]
    assert node_counts(growing_elist, counts).tolist() == [2, 11, 60, 60]


def test_scenario_config_validation():
    with pytest.raises(ConfigurationError):
        ScenarioConfig("full", timepoints=10, t1=10).validate()
    with pytest.raises(ConfigurationError):
        ScenarioConfig("weekly").validate()
    assert np.array_equal(ScenarioConfig("connected").series_timepoints(), list(range(75, 101)))
