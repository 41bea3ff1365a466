from __future__ import annotations

import random

import pytest

from jobsift.aggregate import (
    AdAttributes,
    AggregateError,
    FeatureRecord,
    aggregate,
    build_maj,
    percentiles,
    top_k,
)
from jobsift.corpus import JobAdRecord


def ad(ad_id, acquired, compiled, state=None):
    return JobAdRecord(ad_id, "t", "b", compiled, date_acquired=acquired, state=state)


class TestBuildMaj:
    def test_direct_span(self):
        index = build_maj([ad("a", "2024-01", "2024-03")])
        assert index.active_months("a") == ["2024-01", "2024-02", "2024-03"]
        assert not index.provenance["a"].adjusted

    def test_anomalous_month_adjusts(self):
        index = build_maj([ad("a", "2016-01", "2016-07")])
        assert index.active_months("a") == ["2016-05", "2016-06", "2016-07"]
        assert index.provenance["a"].adjusted

    def test_missing_acquired_adjusts(self):
        index = build_maj([ad("a", None, "2024-06")])
        assert index.active_months("a") == ["2024-04", "2024-05", "2024-06"]
        assert index.provenance["a"].adjusted

    def test_single_month(self):
        index = build_maj([ad("a", "2024-02", "2024-02")])
        assert index.active_months("a") == ["2024-02"]

    def test_conservation(self):
        rng = random.Random(42)
        ads = []
        for i in range(500):
            start = 2015 * 12 + rng.randrange(0, 100)
            span = rng.randrange(0, 8)
            acquired = f"{start // 12:04d}-{start % 12 + 1:02d}"
            end = start + span
            compiled = f"{end // 12:04d}-{end % 12 + 1:02d}"
            ads.append(ad(f"a{i}", acquired if rng.random() > 0.1 else None, compiled))
        index = build_maj(ads)
        total = sum(len(ids) for ids in index.months.values())
        assert total == sum(a.span_months for a in index.provenance.values())

    def test_custom_offset(self):
        index = build_maj([ad("a", None, "2024-06")], fallback_offset=1)
        assert index.active_months("a") == ["2024-05", "2024-06"]


def oracle_aggregate(features, index, group_spec, attrs):
    """Naive two-loop recomputation: for each month, for each active ad."""
    counts = {}
    for month in sorted(index.months):
        active = index.months[month]
        for feat in features:
            if feat.ad_id not in active:
                continue
            a = attrs.get(feat.ad_id, AdAttributes())
            key = []
            skip = False
            for dim in group_spec:
                if dim == "month":
                    key.append(month)
                elif dim == "state":
                    if a.state is None:
                        skip = True
                    key.append(a.state)
                elif dim == "soc2":
                    if a.soc is None:
                        skip = True
                    else:
                        key.append(a.soc.replace("-", "")[:2])
                elif dim == "naics2":
                    if a.naics is None:
                        skip = True
                    else:
                        key.append(a.naics[:2])
            if skip:
                continue
            counts[(tuple(key), feat.kind, feat.code)] = counts.get(
                (tuple(key), feat.kind, feat.code), 0) + 1
    return counts


class TestAggregate:
    def test_single_ad_three_months(self):
        index = build_maj([ad("a", "2024-01", "2024-03")])
        rows = aggregate([FeatureRecord("a", "task", "T1")], index, ["month"]).rows
        assert [(r.group_key["month"], r.count) for r in rows] == [
            ("2024-01", 1), ("2024-02", 1), ("2024-03", 1)
        ]

    def test_empty_features(self):
        index = build_maj([ad("a", "2024-01", "2024-01")])
        assert aggregate([], index, ["month"]).rows == []

    def test_matches_two_loop_oracle(self):
        rng = random.Random(7)
        ads, attrs = [], {}
        for i in range(40):
            start = 2023 * 12 + rng.randrange(0, 12)
            end = start + rng.randrange(0, 4)
            ads.append(ad(
                f"a{i}", f"{start // 12:04d}-{start % 12 + 1:02d}",
                f"{end // 12:04d}-{end % 12 + 1:02d}",
            ))
            attrs[f"a{i}"] = AdAttributes(
                soc=rng.choice(["15-1252", "35-2014", None]),
                naics=rng.choice(["722511", "44", None]),
                state=rng.choice(["IL", "TX", None]),
            )
        features = [
            FeatureRecord(f"a{rng.randrange(40)}", rng.choice(["task", "skill"]),
                          rng.choice(["X", "Y", "Z"]))
            for _ in range(300)
        ]
        index = build_maj(ads)
        for spec in (["month"], ["month", "state"], ["month", "soc2"], ["month", "naics2"]):
            got = {
                (tuple(r.group_key[d] for d in spec), r.kind, r.code): r.count
                for r in aggregate(features, index, spec, attrs).rows
            }
            assert got == oracle_aggregate(features, index, spec, attrs)

    def test_shares_sum_to_one_per_partition(self):
        index = build_maj([ad("a", "2024-01", "2024-02"), ad("b", "2024-01", "2024-01")])
        features = [
            FeatureRecord("a", "task", "T1"), FeatureRecord("a", "task", "T2"),
            FeatureRecord("b", "task", "T1"), FeatureRecord("b", "skill", "S1"),
        ]
        rows = aggregate(features, index, ["month"]).rows
        partitions = {}
        for r in rows:
            partitions.setdefault((r.group_key["month"], r.kind), 0.0)
            partitions[(r.group_key["month"], r.kind)] += r.share
        for total in partitions.values():
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_unknown_ad_excluded_with_count(self):
        index = build_maj([ad("a", "2024-01", "2024-01")])
        out = aggregate([FeatureRecord("ghost", "task", "T1")], index, ["month"])
        assert out.rows == [] and out.unknown_ad_ids == 1

    def test_numeric_features_get_stats(self):
        index = build_maj([ad(c, "2024-01", "2024-01") for c in "abcde"])
        features = [
            FeatureRecord(c, "wage", None, value=v)
            for c, v in zip("abcde", [30000.0, 40000.0, 50000.0, 60000.0, 70000.0])
        ]
        (row,) = aggregate(features, index, ["month"]).rows
        assert row.count == 5
        assert row.mean == pytest.approx(50000.0)
        assert row.pct["p50"] == 50000.0
        assert row.pct["p10"] == 30000.0
        assert row.pct["p90"] == 70000.0

    def test_outliers_dropped_by_default(self):
        index = build_maj([ad("a", "2024-01", "2024-01"), ad("b", "2024-01", "2024-01")])
        features = [
            FeatureRecord("a", "wage", None, value=50000.0),
            FeatureRecord("b", "wage", None, value=3.0e6, outlier=True),
        ]
        rows = aggregate(features, index, ["month"]).rows
        assert rows[0].count == 1
        rows = aggregate(features, index, ["month"], include_outliers=True).rows
        assert rows[0].count == 2

    def test_batch_order_independent(self):
        index = build_maj([ad("a", "2024-01", "2024-02"), ad("b", "2024-02", "2024-03")])
        features = [
            FeatureRecord("a", "task", "T1"), FeatureRecord("b", "task", "T2"),
            FeatureRecord("a", "wage", None, value=41000.0),
            FeatureRecord("b", "wage", None, value=52000.0),
        ]
        fwd = aggregate(features, index, ["month"]).rows
        rev = aggregate(list(reversed(features)), index, ["month"]).rows
        assert fwd == rev


FIREFIGHTER_COUNTS = [
    ("Participate in firefighting efforts.", 15611),
    ("Drive and operate fire fighting vehicles and equipment.", 8226),
    ("Conduct wildland firefighting training.", 6619),
    ("Clean and maintain fire stations and fire fighting equipment and apparatus.", 4017),
    ("Work with or remove hazardous material.", 2441),
    ("Rescue and evacuate injured persons.", 2164),
    ("Conduct fire, safety, and sanitation inspections.", 2118),
    ("Communicate fire details to superiors, subordinates, or interagency dispatch centers, using two-way radios.", 1961),
    ("Develop training materials and conduct training sessions on fire protection.", 1867),
    ("Interview and hire applicants.", 1529),
    ("Assign duties to other staff and give instructions regarding work methods and routines.", 1473),
    ("Operate safety equipment and use safe work habits.", 1460),
    ("Direct, and participate in, forest fire suppression.", 1305),
    ("Maintain knowledge of fire laws and fire prevention techniques and tactics.", 995),
    ("Supervise activities of other forestry workers.", 905),
]


class TestTopK:
    def test_fewer_codes_than_k(self):
        index = build_maj([ad("a", "2024-01", "2024-01")])
        rows = aggregate([FeatureRecord("a", "task", "T1")], index, ["month"]).rows
        assert len(top_k(rows, 5)) == 1

    def test_firefighter_ranking(self):
        # seed the published per-task counts and expect them back in order
        index = build_maj(
            [ad(f"a{i}", "2024-01", "2024-01") for i in range(1)]
        )
        features = []
        for task, count in FIREFIGHTER_COUNTS:
            features.extend(FeatureRecord("a0", "task", task) for _ in range(count))
        rows = aggregate(features, index, ["month"]).rows
        ranked = top_k(rows, 15)
        assert [(r.code, r.count) for r in ranked] == FIREFIGHTER_COUNTS

    def test_ties_order_by_code(self):
        index = build_maj([ad("a", "2024-01", "2024-01")])
        features = [FeatureRecord("a", "task", c) for c in ("B", "A", "C")]
        rows = aggregate(features, index, ["month"]).rows
        ranked = top_k(rows, 2)
        assert [r.code for r in ranked] == ["A", "B"]

    def test_topk_nested(self):
        index = build_maj([ad("a", "2024-01", "2024-01")])
        features = (
            [FeatureRecord("a", "task", "X")] * 3
            + [FeatureRecord("a", "task", "Y")] * 2
            + [FeatureRecord("a", "task", "Z")]
        )
        rows = aggregate(features, index, ["month"]).rows
        smaller = {r.code for r in top_k(rows, 2)}
        larger = {r.code for r in top_k(rows, 3)}
        assert smaller <= larger


class TestPercentiles:
    def test_single_value(self):
        assert percentiles([42.0], [0, 10, 50, 90, 100]) == [42.0] * 5

    def test_nearest_rank_1_to_100(self):
        values = [float(i) for i in range(1, 101)]
        assert percentiles(values, [50]) == [50.0]
        assert percentiles(values, [25]) == [25.0]
        assert percentiles(values, [90]) == [90.0]

    def test_p0_p100_are_min_max(self):
        values = [5.0, 1.0, 9.0, 3.0]
        assert percentiles(values, [0, 100]) == [1.0, 9.0]

    def test_empty_errors(self):
        with pytest.raises(AggregateError):
            percentiles([], [50])

    def test_small_sets_nearest_rank(self):
        # n=4: p50 -> ceil(0.5*4)=2nd value
        assert percentiles([10.0, 20.0, 30.0, 40.0], [50]) == [20.0]


class TestGroupDimensions:
    def test_soc_and_naics_prefixes(self):
        index = build_maj([ad("a", "2024-01", "2024-01")])
        attrs = {"a": AdAttributes(soc="15-1252", naics="722511", state="IL")}
        features = [FeatureRecord("a", "task", "T1")]
        for spec, expected in [
            (["soc2"], {"soc2": "15"}),
            (["soc4"], {"soc4": "15-12"}),
            (["soc6"], {"soc6": "15-1252"}),
            (["naics2"], {"naics2": "72"}),
            (["naics4"], {"naics4": "7225"}),
            (["naics6"], {"naics6": "722511"}),
            (["month", "state", "soc2"],
             {"month": "2024-01", "state": "IL", "soc2": "15"}),
        ]:
            (row,) = aggregate(features, index, spec, attrs).rows
            assert row.group_key == expected

    def test_short_naics_excluded_from_deeper_grouping(self):
        index = build_maj([ad("a", "2024-01", "2024-01")])
        attrs = {"a": AdAttributes(naics="72")}
        features = [FeatureRecord("a", "task", "T1")]
        assert aggregate(features, index, ["naics6"], attrs).rows == []
        (row,) = aggregate(features, index, ["naics2"], attrs).rows
        assert row.group_key == {"naics2": "72"}
