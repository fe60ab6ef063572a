"""Corpus data model, JSON-lines loading/validation, and the planted-effect
synthetic generator that stands in for the private crawl data.

A corpus directory holds three files:

    posts.jsonl     one JSON object per post, annotations embedded under "images"
    users.json      JSON array of user ids
    holidays.json   JSON array of ISO dates

The synthetic generator additionally writes truth.json (planted
coefficients, user intercepts, and per-setting irreducible error) and
seeds.json (seed-word lists matching the generated vocabularies).
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .colorlab import MUNSELL_HUE_ORDER, rgb_to_munsell_hue
from .vision import ImageAnnotation, annotation_to_dict, parse_vision_response

SECONDS_PER_DAY = 86400.0
RESPONSE_OFFSET_DAYS = 5.0  # the c in log(likes / (time difference + c))


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class UserRecord:
    user_id: int
    post_ids: tuple[str, ...]


@dataclass(frozen=True)
class PostRecord:
    post_id: str
    user_id: int
    posted_at: int
    crawled_at: int
    like_count: int
    likes_public: bool
    n_images: int
    n_reels: int
    has_tagged_place: bool
    n_tagged_ids: int
    n_hashtags: int
    caption: str
    image_ids: tuple[str, ...]


@dataclass(frozen=True)
class Violation:
    entity: str
    rule: str
    detail: str

    def __str__(self):
        return f"{self.entity}: {self.rule} ({self.detail})"


@dataclass
class Corpus:
    users: list[UserRecord]
    posts: list[PostRecord]
    annotations: dict[str, list[ImageAnnotation]]
    holiday_calendar: set[dt.date]

    def post_by_id(self, post_id: str) -> PostRecord:
        return self._post_index[post_id]

    def __post_init__(self):
        self._post_index = {p.post_id: p for p in self.posts}


def validate(corpus: Corpus) -> list[Violation]:
    """Check every structural invariant; violations are data, not failures."""
    out: list[Violation] = []
    user_ids = [u.user_id for u in corpus.users]
    seen_users = set()
    for uid in user_ids:
        if uid in seen_users:
            out.append(Violation(f"user {uid}", "unique user_id", "duplicate id"))
        seen_users.add(uid)
    post_ids = set()
    posts_by_user: dict[int, list[PostRecord]] = {}
    for p in corpus.posts:
        if p.post_id in post_ids:
            out.append(Violation(f"post {p.post_id}", "unique post_id", "duplicate id"))
        post_ids.add(p.post_id)
        posts_by_user.setdefault(p.user_id, []).append(p)
        if p.user_id not in seen_users:
            out.append(Violation(f"post {p.post_id}", "user exists", f"unknown user {p.user_id}"))
        if p.crawled_at < p.posted_at:
            out.append(Violation(f"post {p.post_id}", "crawled_at >= posted_at",
                                 f"crawled {p.crawled_at} < posted {p.posted_at}"))
        if p.like_count < 0:
            out.append(Violation(f"post {p.post_id}", "like_count >= 0", str(p.like_count)))
        if p.n_images != len(p.image_ids):
            out.append(Violation(f"post {p.post_id}", "n_images = len(image_ids)",
                                 f"{p.n_images} != {len(p.image_ids)}"))
        if not 0 <= p.n_images <= 10:
            out.append(Violation(f"post {p.post_id}", "0 <= n_images <= 10", str(p.n_images)))
        if p.n_reels < 0:
            out.append(Violation(f"post {p.post_id}", "n_reels >= 0", str(p.n_reels)))
        if p.n_images == 0:
            rule = "post has content" if p.n_reels == 0 else "post has at least one image"
            detail = "post has no content" if p.n_reels == 0 else "video-only posts are excluded"
            out.append(Violation(f"post {p.post_id}", rule, detail))
        if p.n_tagged_ids < 0 or p.n_hashtags < 0:
            out.append(Violation(f"post {p.post_id}", "tag counts >= 0",
                                 f"tagged_ids={p.n_tagged_ids} hashtags={p.n_hashtags}"))
        anns = corpus.annotations.get(p.post_id)
        if anns is None:
            out.append(Violation(f"post {p.post_id}", "annotations present", "no annotation entry"))
        elif len(anns) != p.n_images:
            out.append(Violation(f"post {p.post_id}", "annotation count = n_images",
                                 f"{len(anns)} annotations for {p.n_images} images"))
    for pid in corpus.annotations:
        if pid not in post_ids:
            out.append(Violation(f"annotation {pid}", "post exists", "annotation for unknown post"))
    for u in corpus.users:
        if not u.post_ids:
            out.append(Violation(f"user {u.user_id}", "post_ids non-empty", "user has no posts"))
            continue
        times = [corpus.post_by_id(pid).posted_at for pid in u.post_ids if pid in post_ids]
        if times != sorted(times):
            out.append(Violation(f"user {u.user_id}", "post_ids sorted by posted_at", "out of order"))
        declared = {pid for pid in u.post_ids}
        actual = {p.post_id for p in posts_by_user.get(u.user_id, [])}
        if declared != actual:
            out.append(Violation(f"user {u.user_id}", "post_ids match posts", "post list mismatch"))
    return out


# ---------------------------------------------------------------------------
# serialization

def _post_to_dict(p: PostRecord, annotations: list[ImageAnnotation]) -> dict:
    return {
        "post_id": p.post_id,
        "user_id": p.user_id,
        "posted_at": p.posted_at,
        "crawled_at": p.crawled_at,
        "like_count": p.like_count,
        "likes_public": p.likes_public,
        "n_reels": p.n_reels,
        "has_tagged_place": p.has_tagged_place,
        "n_tagged_ids": p.n_tagged_ids,
        "n_hashtags": p.n_hashtags,
        "caption": p.caption,
        "images": [annotation_to_dict(a) for a in annotations],
    }


def save_corpus(corpus: Corpus, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "posts.jsonl", "w") as fh:
        for p in corpus.posts:
            fh.write(json.dumps(_post_to_dict(p, corpus.annotations[p.post_id]),
                                sort_keys=True, separators=(",", ":")))
            fh.write("\n")
    with open(path / "users.json", "w") as fh:
        json.dump([u.user_id for u in corpus.users], fh)
        fh.write("\n")
    with open(path / "holidays.json", "w") as fh:
        json.dump(sorted(d.isoformat() for d in corpus.holiday_calendar), fh)
        fh.write("\n")


def load_corpus(path) -> Corpus:
    """Load and validate a corpus directory; raises CorpusError on the first
    parse failure (with line number) or invariant violation (naming the post)."""
    path = Path(path)
    posts_file = path / "posts.jsonl"
    if not posts_file.exists():
        raise CorpusError(f"{posts_file}: not found")
    try:
        declared_users = json.load(open(path / "users.json"))
    except FileNotFoundError:
        raise CorpusError(f"{path / 'users.json'}: not found")
    except json.JSONDecodeError as e:
        raise CorpusError(f"users.json: parse error: {e}")
    holidays = set()
    holidays_file = path / "holidays.json"
    if holidays_file.exists():
        try:
            holidays = {dt.date.fromisoformat(s) for s in json.load(open(holidays_file))}
        except (json.JSONDecodeError, ValueError) as e:
            raise CorpusError(f"holidays.json: parse error: {e}")

    posts: list[PostRecord] = []
    annotations: dict[str, list[ImageAnnotation]] = {}
    with open(posts_file) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"posts.jsonl line {lineno}: parse error: {e}")
            try:
                post, anns = _parse_post(raw)
            except (KeyError, TypeError, ValueError) as e:
                raise CorpusError(f"posts.jsonl line {lineno}: {e}")
            posts.append(post)
            annotations[post.post_id] = anns

    users = _users_from_posts(declared_users, posts)
    corpus = Corpus(users=users, posts=posts, annotations=annotations,
                    holiday_calendar=holidays)
    problems = validate(corpus)
    if problems:
        raise CorpusError("; ".join(str(v) for v in problems[:5])
                          + (f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""))
    return corpus


def _parse_post(raw: dict) -> tuple[PostRecord, list[ImageAnnotation]]:
    anns = [parse_vision_response(img) for img in raw["images"]]
    post = PostRecord(
        post_id=str(raw["post_id"]),
        user_id=int(raw["user_id"]),
        posted_at=int(raw["posted_at"]),
        crawled_at=int(raw["crawled_at"]),
        like_count=int(raw["like_count"]),
        likes_public=bool(raw["likes_public"]),
        n_images=len(anns),
        n_reels=int(raw["n_reels"]),
        has_tagged_place=bool(raw["has_tagged_place"]),
        n_tagged_ids=int(raw["n_tagged_ids"]),
        n_hashtags=int(raw["n_hashtags"]),
        caption=str(raw["caption"]),
        image_ids=tuple(a.image_id for a in anns),
    )
    return post, anns


def _users_from_posts(declared_ids, posts: list[PostRecord]) -> list[UserRecord]:
    by_user: dict[int, list[PostRecord]] = {int(uid): [] for uid in declared_ids}
    for p in posts:
        by_user.setdefault(p.user_id, []).append(p)
    users = []
    for uid in sorted(by_user):
        ordered = sorted(by_user[uid], key=lambda p: (p.posted_at, p.post_id))
        users.append(UserRecord(uid, tuple(p.post_id for p in ordered)))
    return users


# ---------------------------------------------------------------------------
# synthetic generator

LABEL_TOPIC_NAMES = ("food", "body", "beauty", "fashion", "daily")
CAPTION_TOPIC_NAMES = ("event", "health", "beauty", "fashion", "daily")

LABEL_SEEDS = {
    "food": ["food", "noodle", "pastry", "cooking", "pasta", "fries"],
    "body": ["body", "neck", "shoulder", "thigh", "muscle", "chest"],
    "beauty": ["lipstick", "cosmetics", "nail", "eyeshadow", "eyeliner", "jewelry"],
    "fashion": ["sleeve", "fashion", "trousers", "jacket", "coat", "style"],
    "daily": ["travel", "leisure", "shopping", "festival", "photography", "sunset"],
}
LABEL_EXTRAS = {
    "food": ["plate", "brunch", "dessert", "sauce", "bowl", "grill", "snack", "drink"],
    "body": ["waist", "knee", "skin", "arm", "leg", "posture", "gym", "stretch"],
    "beauty": ["mascara", "palette", "gloss", "blush", "perfume", "mirror", "brush", "serum"],
    "fashion": ["denim", "blazer", "sneaker", "dress", "knit", "scarf", "outfit", "hem"],
    "daily": ["street", "park", "market", "museum", "picnic", "wave", "trail", "lantern"],
}
BACKGROUND_LABELS = [
    "sky", "tableware", "furniture", "plant", "window", "wall", "light", "shadow",
    "floor", "tree", "cloud", "building", "water", "grass", "road", "door",
    "hand", "glass", "table", "chair", "phone", "paper", "flower", "sign",
]

CAPTION_SEEDS = {
    "event": ["event", "giveaway", "discount", "promotion", "winner", "coupon"],
    "health": ["diet", "vitamin", "protein", "workout", "wellness", "nutrition"],
    "beauty": ["makeup", "skincare", "lipbalm", "ampoule", "cleanser", "toner"],
    "fashion": ["outfit", "styling", "lookbook", "denim", "knitwear", "accessory"],
    "daily": ["weather", "weekend", "coffeetime", "brunch", "diary", "mood"],
}
CAPTION_EXTRAS = {
    "event": ["launch", "sale", "entry", "deadline", "prize", "sponsor", "code", "offer"],
    "health": ["yoga", "detox", "fiber", "calorie", "hydrate", "balance", "routine", "plank"],
    "beauty": ["glow", "moisture", "primer", "shade", "lash", "sunscreen", "masking", "tint"],
    "fashion": ["wardrobe", "trend", "layering", "vintage", "capsule", "heel", "belt", "fitting"],
    "daily": ["morning", "evening", "walk", "rain", "playlist", "homemade", "cozy", "errand"],
}
BACKGROUND_CAPTION = [
    "today", "really", "little", "thanks", "love", "time", "back", "good",
    "new", "best", "finally", "still", "maybe", "soon", "happy", "great",
]

CRAWL_AT = 1648123200  # 2022-03-24T12:00:00Z
TD_MIN_DAYS = 0.25
TD_MAX_DAYS = 240.0
RECENT_WINDOW_DAYS = 21.0
STALE_THRESHOLD_DAYS = 150.0
# every post draws 1..3 active topics (without replacement) per model
ACTIVE_COUNT_PROBS = (0.55, 0.33, 0.12)
TOPIC_WORD_PROB = 0.9  # vs. background
IMAGE_COUNT_CHOICES = (1, 2, 3)
LABELS_PER_IMAGE = (24, 40)   # inclusive-exclusive draw range
CAPTION_TOKENS = (14, 26)


def topic_marginal_prob() -> float:
    """P(a given topic is active) under the active-count distribution."""
    return sum((k + 1) * p for k, p in enumerate(ACTIVE_COUNT_PROBS)) / 5.0


def topic_pair_prob() -> float:
    """P(two given distinct topics are both active)."""
    return sum((k + 1) * k * p for k, p in enumerate(ACTIVE_COUNT_PROBS)) / 20.0

DEFAULT_HOLIDAYS = (
    "2021-08-15", "2021-09-20", "2021-09-21", "2021-09-22", "2021-10-03",
    "2021-10-09", "2021-12-25", "2022-01-01", "2022-01-31", "2022-02-01",
    "2022-02-02", "2022-03-01",
)


def default_effect_sizes() -> dict[str, float]:
    return {
        "base": 5.0,
        "user_sd": 1.0,
        "td_per_day": -0.009,
        "recent_boost": 1.3,
        "stale_drop": -0.6,
        "weekday": -0.10,
        "label_topic:food": 0.30,
        "label_topic:body": 0.80,
        "label_topic:beauty": 0.45,
        "label_topic:fashion": 0.35,
        "label_topic:daily": 0.20,
        "caption_topic:event": 0.30,
        "color:gy": 0.35,
        "color:pb": 0.30,
        "interaction:body*pb": 1.60,
    }


@dataclass
class SynthConfig:
    n_users: int = 40
    posts_per_user: int = 100
    rng_seed: int = 20220324
    effect_sizes: dict[str, float] = field(default_factory=default_effect_sizes)
    noise_sd: float = 0.25

    def validated(self) -> "SynthConfig":
        if self.n_users < 2:
            raise ValueError("n_users must be >= 2")
        if self.posts_per_user < 10:
            raise ValueError("posts_per_user must be >= 10")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")
        return self


@dataclass
class SynthTruth:
    """Planted ground truth emitted next to a synthetic corpus."""
    config: SynthConfig
    coefficients: dict[str, float]
    nonlinear_terms: dict[str, dict]
    user_intercepts: dict[int, float]
    irreducible_rmse: dict[str, float]
    post_label_topics: dict[str, list[str]]
    post_caption_topics: dict[str, list[str]]

    def to_json(self) -> dict:
        return {
            "config": {
                "n_users": self.config.n_users,
                "posts_per_user": self.config.posts_per_user,
                "rng_seed": self.config.rng_seed,
                "effect_sizes": self.config.effect_sizes,
                "noise_sd": self.config.noise_sd,
            },
            "coefficients": self.coefficients,
            "nonlinear_terms": self.nonlinear_terms,
            "user_intercepts": {str(k): v for k, v in self.user_intercepts.items()},
            "irreducible_rmse": self.irreducible_rmse,
            "post_label_topics": self.post_label_topics,
            "post_caption_topics": self.post_caption_topics,
        }


# Per-family exemplar chips: anchor chip plus darker variants. Uniform
# scaling preserves the HSV hue angle, so all variants classify to the
# family by construction (asserted at import).
_FAMILY_BASE_RGB = {
    "r": (226, 117, 124), "yr": (206, 137, 72), "y": (175, 153, 46),
    "gy": (125, 166, 62), "g": (24, 172, 123), "bg": (0, 170, 165),
    "b": (0, 160, 194), "pb": (108, 140, 213), "p": (158, 122, 187),
    "rp": (209, 110, 159),
}
_FAMILY_PALETTE = {}
for _fam, _rgb in _FAMILY_BASE_RGB.items():
    chips = []
    for scale in (1.0, 0.85, 0.65):
        chip = tuple(int(round(c * scale)) for c in _rgb)
        assert rgb_to_munsell_hue(chip).name.lower() == _fam
        chips.append(chip)
    _FAMILY_PALETTE[_fam] = tuple(chips)
_FAMILY_ORDER = tuple(h.name.lower() for h in MUNSELL_HUE_ORDER)


def _draw_active(rng, topic_names) -> list[str]:
    k = int(rng.choice(len(ACTIVE_COUNT_PROBS), p=ACTIVE_COUNT_PROBS)) + 1
    picks = sorted(rng.choice(len(topic_names), size=k, replace=False))
    return [topic_names[i] for i in picks]


def _draw_tokens(rng, n, active_names, seeds, extras, background):
    pool = []
    for name in active_names:
        pool.extend(seeds[name])
        pool.extend(extras[name])
    tokens = []
    for _ in range(n):
        if pool and rng.random() < TOPIC_WORD_PROB:
            tokens.append(pool[rng.integers(0, len(pool))])
        else:
            tokens.append(background[rng.integers(0, len(background))])
    return tokens


def _weekday_indicator(posted_at: int) -> int:
    d = dt.datetime.fromtimestamp(posted_at, dt.timezone.utc)
    return 1 if d.weekday() < 5 else 0


def synth_corpus(cfg: SynthConfig) -> tuple[Corpus, SynthTruth]:
    """Generate a corpus with planted, recoverable effects.

    The planted model on the log response (log of likes per offset time
    difference) is:

        r = base + user intercept
            + td_per_day * td + recent_boost * [td < 21 days]
            + stale_drop * [td > 150 days]
            + weekday * [weekday post]
            + sum of label-topic lifts over active topics
            + caption-topic lifts + color lifts
            + interaction (body topic x PB color)
            + Gaussian noise

    and like_count = round((td_days + 5) * exp(r)), so recomputing the
    response transform recovers r up to integer rounding. The two step
    terms and the interaction are the planted nonlinearities a model
    linear in the covariates cannot remove.
    """
    cfg = cfg.validated()
    eff = dict(default_effect_sizes())
    eff.update(cfg.effect_sizes)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.rng_seed))

    user_ids = list(range(1, cfg.n_users + 1))
    intercepts = {uid: eff["user_sd"] * rng.standard_normal() for uid in user_ids}

    label_lift = {t: eff.get(f"label_topic:{t}", 0.0) for t in LABEL_TOPIC_NAMES}
    caption_lift = {t: eff.get(f"caption_topic:{t}", 0.0) for t in CAPTION_TOPIC_NAMES}
    color_lift = {f: eff.get(f"color:{f}", 0.0) for f in _FAMILY_ORDER}
    interaction = eff.get("interaction:body*pb", 0.0)

    posts: list[PostRecord] = []
    annotations: dict[str, list[ImageAnnotation]] = {}
    post_label_topics: dict[str, list[str]] = {}
    post_caption_topics: dict[str, list[str]] = {}
    image_counter = 0

    for uid in user_ids:
        td_days = np.sort(rng.uniform(TD_MIN_DAYS, TD_MAX_DAYS, size=cfg.posts_per_user))[::-1]
        for j, td in enumerate(td_days):
            post_id = f"u{uid:03d}p{j:04d}"
            posted_at = CRAWL_AT - int(round(td * SECONDS_PER_DAY))
            td_exact = (CRAWL_AT - posted_at) / SECONDS_PER_DAY

            label_active = _draw_active(rng, LABEL_TOPIC_NAMES)
            caption_active = _draw_active(rng, CAPTION_TOPIC_NAMES)
            post_label_topics[post_id] = label_active
            post_caption_topics[post_id] = caption_active
            n_images = IMAGE_COUNT_CHOICES[rng.integers(0, len(IMAGE_COUNT_CHOICES))]

            image_anns = []
            families = []
            for _ in range(n_images):
                fam = _FAMILY_ORDER[rng.integers(0, 10)]
                families.append(fam)
                chip = _FAMILY_PALETTE[fam][rng.integers(0, 3)]
                rep_frac = float(rng.uniform(0.25, 0.6))
                colors = [{"rgb": list(chip), "pixel_fraction": round(rep_frac, 6)}]
                for _ in range(int(rng.integers(2, 5))):
                    filler = [int(c) for c in rng.integers(0, 256, size=3)]
                    frac = float(rng.uniform(0.02, rep_frac - 0.05))
                    colors.append({"rgb": filler, "pixel_fraction": round(frac, 6)})
                n_lab = int(rng.integers(*LABELS_PER_IMAGE))
                tokens = _draw_tokens(rng, n_lab, label_active, LABEL_SEEDS,
                                      LABEL_EXTRAS, BACKGROUND_LABELS)
                labels = [{"description": w, "score": round(float(rng.uniform(0.5, 0.995)), 6)}
                          for w in tokens]
                # low-score noise labels, dropped by the 0.5 filter downstream
                for _ in range(2):
                    w = BACKGROUND_LABELS[rng.integers(0, len(BACKGROUND_LABELS))]
                    labels.append({"description": w, "score": round(float(rng.uniform(0.05, 0.45)), 6)})
                image_counter += 1
                image_anns.append(parse_vision_response({
                    "image_id": f"img{image_counter:06d}",
                    "labels": labels,
                    "colors": colors,
                }))

            n_cap = int(rng.integers(*CAPTION_TOKENS))
            cap_tokens = _draw_tokens(rng, n_cap, caption_active, CAPTION_SEEDS,
                                      CAPTION_EXTRAS, BACKGROUND_CAPTION)
            n_hashtags = min(int(rng.poisson(3.0)), 10)
            for _ in range(n_hashtags):
                tag = _draw_tokens(rng, 1, caption_active, CAPTION_SEEDS,
                                   CAPTION_EXTRAS, BACKGROUND_CAPTION)[0]
                cap_tokens.append("#" + tag)
            caption = " ".join(cap_tokens)

            color_present = {fam: fam in families for fam in _FAMILY_ORDER}
            r = eff["base"] + intercepts[uid]
            r += eff["td_per_day"] * td_exact
            if td_exact < RECENT_WINDOW_DAYS:
                r += eff["recent_boost"]
            if td_exact > STALE_THRESHOLD_DAYS:
                r += eff["stale_drop"]
            r += eff["weekday"] * _weekday_indicator(posted_at)
            r += sum(label_lift[t] for t in label_active)
            r += sum(caption_lift[t] for t in caption_active)
            r += sum(color_lift[f] for f in _FAMILY_ORDER if color_present[f])
            if "body" in label_active and color_present["pb"]:
                r += interaction
            r += cfg.noise_sd * rng.standard_normal()

            like_count = int(round((td_exact + RESPONSE_OFFSET_DAYS) * math.exp(r)))
            posts.append(PostRecord(
                post_id=post_id,
                user_id=uid,
                posted_at=posted_at,
                crawled_at=CRAWL_AT,
                like_count=max(like_count, 0),
                likes_public=bool(rng.random() < 0.92),
                n_images=n_images,
                n_reels=int(rng.choice([0, 1, 2], p=[0.7, 0.2, 0.1])),
                has_tagged_place=bool(rng.random() < 0.4),
                n_tagged_ids=min(int(rng.poisson(1.2)), 20),
                n_hashtags=n_hashtags,
                caption=caption,
                image_ids=tuple(a.image_id for a in image_anns),
            ))
            annotations[post_id] = image_anns

    users = _users_from_posts(user_ids, posts)
    corpus = Corpus(users=users, posts=posts, annotations=annotations,
                    holiday_calendar={dt.date.fromisoformat(s) for s in DEFAULT_HOLIDAYS})

    truth = SynthTruth(
        config=cfg,
        coefficients=_planted_coefficients(eff),
        nonlinear_terms={
            "recent_boost": {"amount": eff["recent_boost"], "window_days": RECENT_WINDOW_DAYS},
            "stale_drop": {"amount": eff["stale_drop"], "threshold_days": STALE_THRESHOLD_DAYS},
            "interaction:label_topic_body*color_pb": {"amount": interaction},
        },
        user_intercepts=intercepts,
        irreducible_rmse=irreducible_rmse(eff, cfg.noise_sd),
        post_label_topics=post_label_topics,
        post_caption_topics=post_caption_topics,
    )
    return corpus, truth


def _planted_coefficients(eff: dict[str, float]) -> dict[str, float]:
    coef = {
        "time_difference": eff["td_per_day"],
        "weekdays": eff["weekday"],
        "caption_topic_event": eff.get("caption_topic:event", 0.0),
    }
    for t in LABEL_TOPIC_NAMES:
        coef[f"label_topic_{t}"] = eff.get(f"label_topic:{t}", 0.0)
    for f in _FAMILY_ORDER:
        coef[f"color_{f}"] = eff.get(f"color:{f}", 0.0)
    return coef


def color_presence_prob() -> float:
    """P(a given hue family appears in a post) under the generator."""
    q = 1.0 / 10.0
    return 1.0 - sum((1.0 - q) ** n for n in IMAGE_COUNT_CHOICES) / len(IMAGE_COUNT_CHOICES)


def expected_group_difference(eff: dict[str, float], topic: str) -> float:
    """Closed-form E[r | topic active] - E[r | topic inactive].

    Topic actives are independent Bernoullis, so the difference is the
    topic's own lift plus, for the body topic, the interaction times the
    probability that a PB color is present.
    """
    full = dict(default_effect_sizes())
    full.update(eff)
    diff = full.get(f"label_topic:{topic}", 0.0)
    if topic == "body":
        diff += full.get("interaction:body*pb", 0.0) * color_presence_prob()
    return diff


def irreducible_rmse(eff: dict[str, float], noise_sd: float) -> dict[str, float]:
    """Closed-form irreducible test RMSE per evaluation setting.

    For a flexible learner the irreducible error in a setting is the noise
    plus the variance of every planted term whose driving covariate is
    invisible in that setting. The lm_all entry adds the variance a model
    linear in the Setting-All columns cannot remove: the additive residual
    of the body x PB interaction and the linear-fit residual of the
    recent-post boost.
    """
    p_t = TOPIC_ACTIVE_PROB
    var_topic = {t: eff.get(f"label_topic:{t}", 0.0) ** 2 * p_t * (1 - p_t)
                 for t in LABEL_TOPIC_NAMES}
    var_caption = sum(eff.get(f"caption_topic:{t}", 0.0) ** 2 * p_t * (1 - p_t)
                      for t in CAPTION_TOPIC_NAMES)
    p_c = color_presence_prob()
    var_color = sum(eff.get(f"color:{f}", 0.0) ** 2 * p_c * (1 - p_c)
                    for f in _FAMILY_ORDER)
    ix = eff.get("interaction:body*pb", 0.0)
    p_joint = p_t * p_c
    var_ix_full = ix ** 2 * p_joint * (1 - p_joint)
    var_ix_additive_resid = ix ** 2 * p_t * (1 - p_t) * p_c * (1 - p_c)
    var_weekday = eff.get("weekday", 0.0) ** 2 * (5 / 7) * (2 / 7)

    # step terms: residual variance of boost*[td<21] + drop*[td>150] after
    # the best linear fit in td, with td uniform on the posting window
    span = TD_MAX_DAYS - TD_MIN_DAYS
    mean_td = TD_MIN_DAYS + span / 2.0
    var_td = span ** 2 / 12.0
    boost = eff.get("recent_boost", 0.0)
    drop = eff.get("stale_drop", 0.0)
    p1 = (RECENT_WINDOW_DAYS - TD_MIN_DAYS) / span
    p2 = (TD_MAX_DAYS - STALE_THRESHOLD_DAYS) / span
    cov1 = p1 * ((TD_MIN_DAYS + RECENT_WINDOW_DAYS) / 2.0 - mean_td)
    cov2 = p2 * ((STALE_THRESHOLD_DAYS + TD_MAX_DAYS) / 2.0 - mean_td)
    var_g = (boost ** 2 * p1 * (1 - p1) + drop ** 2 * p2 * (1 - p2)
             - 2.0 * boost * drop * p1 * p2)
    cov_g_td = boost * cov1 + drop * cov2
    var_steps_linear_resid = var_g - cov_g_td ** 2 / var_td

    noise = noise_sd ** 2
    invisible_common = (sum(var_topic.values()) + var_caption + var_color
                        + var_ix_full + var_weekday)
    invisible_nonimage = sum(var_topic.values()) + var_color + var_ix_full
    invisible_image = var_caption + var_weekday
    return {
        "all": math.sqrt(noise),
        "nonimage": math.sqrt(noise + invisible_nonimage),
        "image": math.sqrt(noise + invisible_image),
        "common": math.sqrt(noise + invisible_common),
        "lm_all": math.sqrt(noise + var_ix_additive_resid + var_steps_linear_resid),
    }


def default_seed_spec() -> dict[str, dict[str, list[str]]]:
    """Seed words matching the generator's vocabularies, as plain data."""
    return {
        "caption": {t: list(CAPTION_SEEDS[t]) for t in CAPTION_TOPIC_NAMES},
        "label": {t: list(LABEL_SEEDS[t]) for t in LABEL_TOPIC_NAMES},
    }


def save_truth(truth: SynthTruth, path) -> None:
    with open(path, "w") as fh:
        json.dump(truth.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
