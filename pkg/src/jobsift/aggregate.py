"""Monthly-active-jobs index and grouped feature statistics.

An ad is active every month from its acquisition month through its
compilation month. Acquisition months that are absent or fall in a known
anomalous month are replaced by compilation minus a fallback offset
(two months by default) and flagged as adjusted. Aggregation fans each
ad's features out over its active months, then reduces per group key:
counts and partition shares for coded features, means and nearest-rank
percentiles for numeric ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import JobAdRecord
from .months import month_index, month_range, shift_month

# acquisition months known to be collection artifacts, not real starts
DEFAULT_ANOMALOUS_MONTHS = frozenset({"2015-01", "2016-01", "2017-01"})
DEFAULT_FALLBACK_OFFSET = 2

GROUP_DIMENSIONS = (
    "month", "soc2", "soc4", "soc6", "naics2", "naics4", "naics6", "state",
)
PERCENTILE_POINTS = (10, 25, 50, 75, 90)


class AggregateError(ValueError):
    pass


@dataclass(frozen=True)
class AdActivity:
    ad_id: str
    start_month: str
    end_month: str
    adjusted: bool

    @property
    def span_months(self) -> int:
        return month_index(self.end_month) - month_index(self.start_month) + 1


@dataclass
class MonthlyActiveIndex:
    months: dict[str, set[str]] = field(default_factory=dict)
    provenance: dict[str, AdActivity] = field(default_factory=dict)

    def active_months(self, ad_id: str) -> list[str]:
        activity = self.provenance[ad_id]
        return month_range(activity.start_month, activity.end_month)

    def total_active(self) -> int:
        return sum(len(ids) for ids in self.months.values())


def build_maj(
    ads: Sequence[JobAdRecord],
    anomalous_months: frozenset[str] | set[str] = DEFAULT_ANOMALOUS_MONTHS,
    fallback_offset: int = DEFAULT_FALLBACK_OFFSET,
) -> MonthlyActiveIndex:
    """Index ads by the months they were active.

    start = acquisition month, unless it is absent or anomalous, in which
    case start = compilation month minus the fallback offset (flagged
    adjusted). end = compilation month always.
    """
    index = MonthlyActiveIndex()
    for ad in ads:
        end = ad.date_compiled
        if ad.date_acquired is None or ad.date_acquired in anomalous_months:
            start = shift_month(end, -fallback_offset)
            adjusted = True
        else:
            start = ad.date_acquired
            adjusted = False
        activity = AdActivity(ad.id, start, end, adjusted)
        index.provenance[ad.id] = activity
        for month in month_range(start, end):
            index.months.setdefault(month, set()).add(ad.id)
    return index


@dataclass(frozen=True)
class FeatureRecord:
    """One extracted feature: a coded hit or a numeric value for an ad."""

    ad_id: str
    kind: str                 # task | skill | uci | tag | title_feature | wage ...
    code: str | None = None
    value: float | None = None
    outlier: bool = False


@dataclass(frozen=True)
class AdAttributes:
    """Per-ad grouping attributes recovered by upstream extractors."""

    soc: str | None = None     # e.g. "15-1252"
    naics: str | None = None   # 2-6 digits
    state: str | None = None


def _soc_prefix(soc: str, digits: int) -> str | None:
    flat = soc.replace("-", "").split(".")[0]
    if len(flat) < digits:
        return None
    cut = flat[:digits]
    return cut if digits <= 2 else f"{cut[:2]}-{cut[2:]}"


def _dim_value(dim: str, month: str, attrs: AdAttributes) -> str | None:
    if dim == "month":
        return month
    if dim == "state":
        return attrs.state
    if dim.startswith("soc"):
        if attrs.soc is None:
            return None
        return _soc_prefix(attrs.soc, int(dim[3:]))
    if dim.startswith("naics"):
        digits = int(dim[5:])
        if attrs.naics is None or len(attrs.naics) < digits:
            return None
        return attrs.naics[:digits]
    raise AggregateError(f"unknown group dimension: {dim}")


def percentiles(values: Sequence[float], ps: Sequence[int]) -> list[float]:
    """Nearest-rank percentiles: the value at ceil(p/100 * n), 1-indexed
    over the sorted values; p=0 gives the minimum."""
    if not values:
        raise AggregateError("percentiles of empty values")
    ordered = sorted(values)
    n = len(ordered)
    out = []
    for p in ps:
        if not 0 <= p <= 100:
            raise AggregateError(f"percentile out of range: {p}")
        rank = max(1, math.ceil(p / 100 * n))
        out.append(ordered[rank - 1])
    return out


@dataclass
class AggregateRow:
    group_key: dict[str, str]
    kind: str
    code: str | None
    count: int
    share: float | None = None
    mean: float | None = None
    pct: dict[str, float] | None = None

    def to_json(self) -> dict:
        obj: dict = dict(self.group_key)
        obj["metric"] = self.kind
        obj["code"] = self.code
        obj["count"] = self.count
        obj["share"] = None if self.share is None else round(self.share, 9)
        obj["mean"] = None if self.mean is None else round(self.mean, 6)
        for p in PERCENTILE_POINTS:
            obj[f"p{p}"] = None if self.pct is None else self.pct[f"p{p}"]
        return obj


@dataclass
class AggregateOutput:
    rows: list[AggregateRow] = field(default_factory=list)
    unknown_ad_ids: int = 0


def aggregate(
    features: Iterable[FeatureRecord],
    index: MonthlyActiveIndex,
    group_spec: Sequence[str],
    ad_attrs: Mapping[str, AdAttributes] | None = None,
    include_outliers: bool = False,
) -> AggregateOutput:
    """Reduce a feature stream into per-group statistic rows.

    Each ad contributes its features to every month it is active. Coded
    features produce counts and within-partition shares (the partition is
    the group key plus the feature kind); numeric features produce count,
    mean, and percentiles. Numeric records flagged as outliers are
    dropped unless include_outliers is set. Rows come back sorted.
    """
    for dim in group_spec:
        if dim not in GROUP_DIMENSIONS:
            raise AggregateError(f"unknown group dimension: {dim}")
    ad_attrs = ad_attrs or {}
    counts: dict[tuple, int] = {}
    numeric: dict[tuple, list[float]] = {}
    output = AggregateOutput()
    for feat in features:
        if feat.ad_id not in index.provenance:
            output.unknown_ad_ids += 1
            continue
        if feat.value is not None and feat.outlier and not include_outliers:
            continue
        attrs = ad_attrs.get(feat.ad_id, AdAttributes())
        for month in index.active_months(feat.ad_id):
            dims = tuple(
                (dim, _dim_value(dim, month, attrs)) for dim in group_spec
            )
            if any(value is None for _, value in dims):
                continue
            key = (dims, feat.kind, feat.code)
            counts[key] = counts.get(key, 0) + 1
            if feat.value is not None:
                numeric.setdefault(key, []).append(feat.value)

    partition_totals: dict[tuple, int] = {}
    for (dims, kind, _code), count in counts.items():
        partition_totals[(dims, kind)] = partition_totals.get((dims, kind), 0) + count

    for key in sorted(counts, key=_row_sort_key):
        dims, kind, code = key
        count = counts[key]
        row = AggregateRow(
            group_key={dim: value for dim, value in dims},
            kind=kind,
            code=code,
            count=count,
            share=count / partition_totals[(dims, kind)],
        )
        if key in numeric:
            values = numeric[key]
            row.mean = sum(sorted(values)) / len(values)
            pct_values = percentiles(values, PERCENTILE_POINTS)
            row.pct = {
                f"p{p}": v for p, v in zip(PERCENTILE_POINTS, pct_values)
            }
        output.rows.append(row)
    return output


def _row_sort_key(key: tuple) -> tuple:
    dims, kind, code = key
    return (tuple(value for _, value in dims), kind, code or "")


def top_k(
    rows: Sequence[AggregateRow], k: int, by: str = "count"
) -> list[AggregateRow]:
    """Per (group key, kind): the k highest-count codes, ties by code."""
    if k < 1:
        raise AggregateError("k must be >= 1")
    if by != "count":
        raise AggregateError(f"unsupported ranking field: {by}")
    groups: dict[tuple, list[AggregateRow]] = {}
    for row in rows:
        gkey = (tuple(sorted(row.group_key.items())), row.kind)
        groups.setdefault(gkey, []).append(row)
    out: list[AggregateRow] = []
    for gkey in sorted(groups):
        ranked = sorted(groups[gkey], key=lambda r: (-r.count, r.code or ""))
        out.extend(ranked[:k])
    return out
