"""Post-level design matrix and response assembly.

The response is log(likes / (time difference + c)) with c = 5 and time
difference measured in days. Covariates follow the four-setting layout:

    common    user dummies (reference level dropped) + time difference
    nonimage  common + content/time/tag counts + caption topic indicators
    image     common + image label topic indicators + representative colors
    all       the union

Row order is user_id, then posted_at, then post_id, so rebuilding a matrix
from the same inputs is reproducible column-for-column and row-for-row.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .colorlab import MUNSELL_HUE_ORDER
from .corpus import Corpus, PostRecord, RESPONSE_OFFSET_DAYS, SECONDS_PER_DAY

SETTINGS = ("all", "nonimage", "image", "common")

HOUR_BIN_NAMES = tuple(f"hour_{3*i:02d}_{3*(i+1):02d}" for i in range(8))
SEASON_NAMES = ("spring", "summer", "fall", "winter")


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureMatrix:
    column_names: tuple[str, ...]
    rows: np.ndarray
    post_ids: tuple[str, ...]
    group_labels: np.ndarray  # user_id per row

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.column_names.index(name)]


@dataclass(frozen=True)
class ResponseVector:
    values: np.ndarray


@dataclass(frozen=True)
class TopicBits:
    """Binarized topic indicators per post, with the topic name order."""
    names: tuple[str, ...]
    bits: dict[str, tuple[int, ...]]


def response_transform(like_count: int, posted_at: int, crawled_at: int,
                       c: float = RESPONSE_OFFSET_DAYS) -> float:
    """Natural log of max(likes, 1) over (time difference in days + c)."""
    if crawled_at < posted_at:
        raise FeatureError(f"crawled_at {crawled_at} precedes posted_at {posted_at}")
    td_days = (crawled_at - posted_at) / SECONDS_PER_DAY
    return math.log(max(like_count, 1) / (td_days + c))


def _local(posted_at: int, tz_offset_hours: float) -> dt.datetime:
    return dt.datetime.fromtimestamp(posted_at + tz_offset_hours * 3600.0,
                                     dt.timezone.utc)


def season_of_month(month: int) -> str:
    if 3 <= month <= 5:
        return "spring"
    if 6 <= month <= 8:
        return "summer"
    if 9 <= month <= 11:
        return "fall"
    return "winter"


def time_features(posted_at: int, prev_posted_at_same_user: int | None,
                  holiday_calendar: set[dt.date],
                  tz_offset_hours: float = 0.0) -> dict:
    """Calendar bundle for one post: weekday flag, 3-hour bin, season,
    holiday flag, and hours since the user's previous post (None for a
    user's first observed post; the matrix builder imputes)."""
    if prev_posted_at_same_user is not None and prev_posted_at_same_user > posted_at:
        raise FeatureError("previous post is later than the current post")
    local = _local(posted_at, tz_offset_hours)
    period = (None if prev_posted_at_same_user is None
              else (posted_at - prev_posted_at_same_user) / 3600.0)
    return {
        "weekdays": 1 if local.weekday() < 5 else 0,
        "hour_bin": local.hour // 3,
        "season": season_of_month(local.month),
        "holiday": 1 if local.date() in holiday_calendar else 0,
        "period_hours": period,
    }


def column_order(corpus_user_ids: list[int],
                 caption_topic_names: tuple[str, ...],
                 label_topic_names: tuple[str, ...]) -> tuple[list[str], dict[str, str]]:
    """Full Setting-All column order plus the column -> group manifest."""
    users = sorted(corpus_user_ids)
    cols: list[str] = []
    groups: dict[str, str] = {}

    def add(name, group):
        cols.append(name)
        groups[name] = group

    for uid in users[1:]:  # lowest id is the reference level
        add(f"user_{uid}", "common")
    add("time_difference", "common")

    for name in ("n_images", "n_reels", "public", "weekdays"):
        add(name, "nonimage")
    for name in HOUR_BIN_NAMES:
        add(name, "nonimage")
    add("holiday", "nonimage")
    for s in SEASON_NAMES:
        add(f"season_{s}", "nonimage")
    for name in ("period_hours", "period_missing", "tagged_place",
                 "n_tagged_ids", "n_hashtags"):
        add(name, "nonimage")
    for t in caption_topic_names:
        add(f"caption_topic_{t}", "nonimage")

    for t in label_topic_names:
        add(f"label_topic_{t}", "image")
    for hue in MUNSELL_HUE_ORDER:
        add(f"color_{hue.name.lower()}", "image")
    return cols, groups


def setting_columns(all_columns: list[str], groups: dict[str, str],
                    setting: str) -> list[str]:
    if setting not in SETTINGS:
        raise FeatureError(f"unknown setting {setting!r}; expected one of {SETTINGS}")
    wanted = {
        "all": {"common", "nonimage", "image"},
        "nonimage": {"common", "nonimage"},
        "image": {"common", "image"},
        "common": {"common"},
    }[setting]
    return [c for c in all_columns if groups[c] in wanted]


def ordered_posts(corpus: Corpus, post_ids=None) -> list[PostRecord]:
    posts = corpus.posts if post_ids is None else [corpus.post_by_id(p) for p in post_ids]
    return sorted(posts, key=lambda p: (p.user_id, p.posted_at, p.post_id))


def user_periods(corpus: Corpus) -> dict[str, float | None]:
    """Hours since the same user's previous post, keyed by post_id.

    Computed against the user's full timeline; a user's first observed
    post maps to None.
    """
    out: dict[str, float | None] = {}
    for u in corpus.users:
        prev = None
        for pid in u.post_ids:
            p = corpus.post_by_id(pid)
            out[pid] = None if prev is None else (p.posted_at - prev) / 3600.0
            prev = p.posted_at
    return out


def period_medians(corpus: Corpus, post_ids=None) -> dict[int, float]:
    """Per-user median period over the given posts (training rows in CV),
    used to impute a first post's missing period."""
    periods = user_periods(corpus)
    wanted = set(post_ids) if post_ids is not None else None
    by_user: dict[int, list[float]] = {}
    for p in corpus.posts:
        if wanted is not None and p.post_id not in wanted:
            continue
        v = periods[p.post_id]
        if v is not None:
            by_user.setdefault(p.user_id, []).append(v)
    overall = [v for vs in by_user.values() for v in vs]
    global_median = float(np.median(overall)) if overall else 0.0
    return {u.user_id: (float(np.median(by_user[u.user_id]))
                        if by_user.get(u.user_id) else global_median)
            for u in corpus.users}


def build_matrix(corpus: Corpus, caption_topics: TopicBits, label_topics: TopicBits,
                 color_bits: dict[str, tuple[int, ...]], setting: str,
                 post_ids=None, tz_offset_hours: float = 0.0,
                 medians: dict[int, float] | None = None,
                 ) -> tuple[FeatureMatrix, ResponseVector]:
    """Assemble one row per post for the requested setting.

    post_ids restricts (and never reorders) the rows; medians, when given,
    supply the period imputation fit on training rows only.
    """
    all_cols, groups = column_order([u.user_id for u in corpus.users],
                                    caption_topics.names, label_topics.names)
    cols = setting_columns(all_cols, groups, setting)
    col_pos = {c: i for i, c in enumerate(cols)}
    posts = ordered_posts(corpus, post_ids)
    periods = user_periods(corpus)
    if medians is None:
        medians = period_medians(corpus, post_ids)

    n, p = len(posts), len(cols)
    X = np.zeros((n, p))
    y = np.zeros(n)
    users = np.zeros(n, dtype=np.int64)
    pids = []

    def put(i, name, value):
        j = col_pos.get(name)
        if j is not None:
            X[i, j] = value

    for i, post in enumerate(posts):
        for artifact, label in ((caption_topics.bits, "caption topics"),
                                (label_topics.bits, "label topics"),
                                (color_bits, "color vector")):
            if post.post_id not in artifact:
                raise FeatureError(f"post {post.post_id}: missing {label}")
        pids.append(post.post_id)
        users[i] = post.user_id
        y[i] = response_transform(post.like_count, post.posted_at, post.crawled_at)

        put(i, f"user_{post.user_id}", 1.0)
        td_days = (post.crawled_at - post.posted_at) / SECONDS_PER_DAY
        put(i, "time_difference", td_days)

        put(i, "n_images", float(post.n_images))
        put(i, "n_reels", float(post.n_reels))
        put(i, "public", 1.0 if post.likes_public else 0.0)
        tf = time_features(post.posted_at, None, corpus.holiday_calendar, tz_offset_hours)
        put(i, "weekdays", float(tf["weekdays"]))
        put(i, HOUR_BIN_NAMES[tf["hour_bin"]], 1.0)
        put(i, "holiday", float(tf["holiday"]))
        put(i, f"season_{tf['season']}", 1.0)
        period = periods[post.post_id]
        if period is None:
            put(i, "period_hours", medians[post.user_id])
            put(i, "period_missing", 1.0)
        else:
            put(i, "period_hours", period)
        put(i, "tagged_place", 1.0 if post.has_tagged_place else 0.0)
        put(i, "n_tagged_ids", float(post.n_tagged_ids))
        put(i, "n_hashtags", float(post.n_hashtags))

        for t, bit in zip(caption_topics.names, caption_topics.bits[post.post_id]):
            put(i, f"caption_topic_{t}", float(bit))
        for t, bit in zip(label_topics.names, label_topics.bits[post.post_id]):
            put(i, f"label_topic_{t}", float(bit))
        for hue, bit in zip(MUNSELL_HUE_ORDER, color_bits[post.post_id]):
            put(i, f"color_{hue.name.lower()}", float(bit))

    return (FeatureMatrix(tuple(cols), X, tuple(pids), users),
            ResponseVector(y))


def schema_manifest(corpus: Corpus, caption_topics: TopicBits,
                    label_topics: TopicBits) -> dict:
    cols, groups = column_order([u.user_id for u in corpus.users],
                                caption_topics.names, label_topics.names)
    return {"columns": cols, "groups": groups,
            "settings": {s: setting_columns(cols, groups, s) for s in SETTINGS}}
