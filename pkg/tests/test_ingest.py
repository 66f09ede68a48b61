import gzip
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfd.errors import EmptyTrainingSet, MalformedLine, NonFiniteTimestamp
from tfd.ingest import (
    HEADER,
    FeatureMatrix,
    NormalizationStats,
    PacketRecord,
    Segment,
    apply_normalization,
    extract_features,
    fit_normalization,
    format_packets,
    parse_packets,
    read_packets,
    segment_stream,
    write_packets,
)

HEAD = ",".join(HEADER) + "\n"


def pkt(ts, length=100):
    return PacketRecord(ts, "10.0.0.2", 5501, "10.0.0.1", 80, "TCP", length)


def test_parse_single_record():
    recs = parse_packets((HEAD + "0.000,10.0.0.2,5501,10.0.0.1,80,TCP,60\n").encode())
    assert recs == [PacketRecord(0.0, "10.0.0.2", 5501, "10.0.0.1", 80, "TCP", 60)]


def test_parse_empty_body():
    assert parse_packets(HEAD.encode()) == []


def test_parse_bad_timestamp_reports_line():
    with pytest.raises(MalformedLine) as exc:
        parse_packets(HEAD + "abc,10.0.0.2,5501,10.0.0.1,80,TCP,60\n")
    assert exc.value.line == 2


@pytest.mark.parametrize(
    "row, line",
    [
        ("0.1,10.0.0.2,5501,10.0.0.1,80,TCP\n", 2),
        ("0.1,10.0.0.2,99999,10.0.0.1,80,TCP,60\n", 2),
        ("0.1,10.0.0.2,5501,10.0.0.1,80,ICMP,60\n", 2),
        ("0.1,10.0.0.2,5501,10.0.0.1,80,TCP,60\n0.2,a,1,b,2,UDP,x\n", 3),
        ("-1,10.0.0.2,5501,10.0.0.1,80,TCP,60\n", 2),
    ],
)
def test_parse_malformed(row, line):
    with pytest.raises(MalformedLine) as exc:
        parse_packets(HEAD + row)
    assert exc.value.line == line


@pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
def test_parse_non_finite(bad):
    with pytest.raises(NonFiniteTimestamp):
        parse_packets(HEAD + f"{bad},10.0.0.2,5501,10.0.0.1,80,TCP,60\n")


def test_parse_bad_header():
    with pytest.raises(MalformedLine) as exc:
        parse_packets("time,src\n")
    assert exc.value.line == 1


def test_csv_and_gzip_round_trip(tmp_path):
    recs = [pkt(0.5, 60), PacketRecord(1.25, "::1", 1, "::2", 443, "UDP", 1500)]
    for name in ("t.csv", "t.csv.gz"):
        write_packets(recs, tmp_path / name)
        assert read_packets(tmp_path / name) == recs
    with gzip.open(tmp_path / "t.csv.gz", "rt") as fh:
        assert fh.read() == format_packets(recs)


def test_parse_accepts_file_objects():
    data = (HEAD + "1.0,a,1,b,2,OTHER,3\n").encode()
    assert len(parse_packets(io.BytesIO(data))) == 1
    assert len(parse_packets(io.StringIO(data.decode()))) == 1


def test_record_validation():
    with pytest.raises(ValueError):
        pkt(float("nan"))
    with pytest.raises(ValueError):
        PacketRecord(0.0, "a", 70000, "b", 80, "TCP", 1)
    with pytest.raises(ValueError):
        pkt(0.0, 70000)


def test_segment_boundaries():
    segs = segment_stream([pkt(0.5), pkt(9.9), pkt(10.1)])
    assert [len(s) for s in segs] == [2, 1]


def test_segment_gap_emits_empty_window():
    segs = segment_stream([pkt(0.0), pkt(25.0)])
    assert [len(s) for s in segs] == [1, 0, 1]
    assert [s.window_start for s in segs] == [0.0, 10.0, 20.0]


def test_segment_six_hours_gives_2160():
    ts = np.arange(0.0, 21600.0, 0.37)
    assert len(segment_stream([pkt(float(t)) for t in ts])) == 2160


def test_segment_empty_input():
    assert segment_stream([]) == []
    assert [len(s) for s in segment_stream([], origin=0.0, n_windows=3)] == [0, 0, 0]


def test_segment_sorts_and_ids_unique():
    segs = segment_stream([pkt(12.0), pkt(1.0), pkt(3.0)])
    assert [p.ts for p in segs[0].packets] == [1.0, 3.0]
    assert len({s.segment_id for s in segs}) == len(segs)


def test_features_hand_computed():
    seg = Segment("s", 0.0, [pkt(0.0, 60), pkt(0.1, 1500), pkt(0.35, 40)])
    fm = extract_features(seg)
    assert np.allclose(fm.t[:3], [0.0, 0.1, 0.25]) and np.all(fm.t[3:] == 0)
    assert np.array_equal(fm.l[:3], [60, 1500, 40]) and np.all(fm.l[3:] == 0)


def test_features_empty_segment():
    assert np.array_equal(extract_features(Segment("s", 0.0)).values, np.zeros((16, 2)))


def test_features_truncate_to_16():
    seg = Segment("s", 0.0, [pkt(0.1 * k, 100 + k) for k in range(20)])
    fm = extract_features(seg)
    assert np.array_equal(fm.l, 100 + np.arange(16))
    assert np.all(fm.t[1:] > 0)


def test_fit_normalization_examples():
    m = FeatureMatrix(np.linspace(0, 2, 16), np.linspace(0, 1500, 16))
    assert fit_normalization([m]) == NormalizationStats(0.0, 2.0, 0.0, 1500.0)
    z = FeatureMatrix(np.zeros(16), np.zeros(16))
    assert fit_normalization([z, z]) == NormalizationStats(0.0, 0.0, 0.0, 0.0)
    a = FeatureMatrix(np.full(16, 0.5), np.full(16, 100.0))
    b = FeatureMatrix(np.full(16, 0.2), np.full(16, 900.0))
    assert fit_normalization([a, b]) == NormalizationStats(0.2, 0.5, 100.0, 900.0)
    with pytest.raises(EmptyTrainingSet):
        fit_normalization([])


def test_apply_normalization_examples():
    s = NormalizationStats(0.0, 2.0, 60.0, 1500.0)
    fm = FeatureMatrix(np.array([0.1, 0.0, 2.0, 5.0] + [0.0] * 12), np.array([60.0, 1500.0, 3000.0] + [60.0] * 13))
    out = apply_normalization(fm, s)
    assert isinstance(out, FeatureMatrix)
    assert out.t[0] == pytest.approx(0.05) and out.t[1] == 0.0 and out.t[2] == 1.0 and out.t[3] == 1.0
    assert out.l[0] == 0.0 and out.l[1] == 1.0 and out.l[2] == 1.0
    flat = apply_normalization(fm, NormalizationStats(1.0, 1.0, 5.0, 5.0))
    assert np.all(flat.values == 0.0)


packet_times = st.lists(st.floats(0.0, 500.0, allow_nan=False), max_size=200)


@given(packet_times)
@settings(max_examples=200, deadline=None)
def test_partition_and_window_membership(times):
    pkts = [pkt(t) for t in times]
    segs = segment_stream(pkts)
    assert sum(len(s) for s in segs) == len(pkts)
    for s in segs:
        assert all(s.window_start <= p.ts < s.window_start + 10.0 for p in s.packets)
        assert all(a.ts <= b.ts for a, b in zip(s.packets, s.packets[1:]))


@given(packet_times)
@settings(max_examples=200, deadline=None)
def test_feature_shape_and_gap_sum(times):
    seg = Segment("s", 0.0, [pkt(t) for t in sorted(times)])
    fm = extract_features(seg)
    assert fm.values.shape == (16, 2) and np.all(fm.values >= 0)
    used = seg.packets[:16]
    if len(used) >= 2:
        assert np.sum(fm.t) == pytest.approx(used[-1].ts - used[0].ts, abs=1e-9)


@given(st.lists(st.floats(0, 100), min_size=16, max_size=16), st.lists(st.floats(0, 100), min_size=16, max_size=16))
@settings(max_examples=100, deadline=None)
def test_normalization_monotone_and_idempotent(t, l):
    fm = FeatureMatrix(np.array(t), np.array(l))
    s = fit_normalization([fm])
    out = apply_normalization(fm, s)
    assert np.all((out.values >= 0) & (out.values <= 1))
    order = np.argsort(fm.t, kind="stable")
    assert np.all(np.diff(out.t[order]) >= 0)
    again = apply_normalization(out, fit_normalization([out]))
    assert np.allclose(again.values, out.values, atol=1e-12)
