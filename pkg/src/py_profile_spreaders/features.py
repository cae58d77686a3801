"""
Motivational feature extraction.

Every labeled user is described by ten values, always in this order:
five lexicon rates (tentativeness, discrepancy, certainty, anxiety, lack of
control), social engagement, influence, popularity, and the two boosting
differences. A value that cannot be computed is masked, stored as 0 and
excluded from statistics; it is never imputed here.
"""

import concurrent.futures
import csv
import io
import logging
import math
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import fsspec

from .corpus import (
    NewsLabel,
    SpreaderClass,
    SpreaderLabel,
    TweetRecord,
    UserDocument,
    UserRecord,
    group_by_user,
)
from .lexicon import CategoryLexicon, tokenize

logger = logging.getLogger(__name__)

# Lexicon category per linguistic feature, in feature order.
LINGUISTIC_CATEGORIES = ("tentat", "discrep", "certain", "anx", "futurefocus")

FEATURE_NAMES = (
    "tentat",
    "discrep",
    "certain",
    "anx",
    "futurefocus",
    "engagement",
    "influence",
    "popularity",
    "boost_rt",
    "boost_like",
)

FEATURE_DISPLAY_NAMES = (
    "Tentativeness",
    "Discrepancy",
    "Certainty",
    "Anxiety",
    "Lack of Control",
    "Social Engagement",
    "Influence",
    "Popularity",
    "Boosting #retweets",
    "Boosting #likes",
)

N_FEATURES = len(FEATURE_NAMES)
MATRIX_HEADER = ["user_id", "label", *FEATURE_NAMES, "mask"]

SECONDS_PER_DAY = 86400


class FeatureError(ValueError):
    """Raised when feature inputs are inconsistent."""


@dataclass(frozen=True)
class FeatureVector:
    values: Tuple[float, ...]
    missing_mask: Tuple[bool, ...]

    def __post_init__(self):
        if len(self.values) != N_FEATURES or len(self.missing_mask) != N_FEATURES:
            raise FeatureError(
                f"A feature vector holds exactly {N_FEATURES} values and mask flags"
            )

    @classmethod
    def from_optional(cls, values: Sequence[Optional[float]]) -> "FeatureVector":
        """Builds a vector where ``None`` marks a missing value."""
        return cls(
            values=tuple(0.0 if v is None else float(v) for v in values),
            missing_mask=tuple(v is None for v in values),
        )

    @property
    def mask_string(self) -> str:
        return "".join("1" if missing else "0" for missing in self.missing_mask)


@dataclass(frozen=True)
class LabeledFeatureRow:
    user_id: str
    label: SpreaderClass
    features: FeatureVector


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def linguistic_features(
    doc: Optional[UserDocument], lexicon: CategoryLexicon
) -> Tuple[Optional[float], ...]:
    """
    Mean per-tweet rate of each linguistic category over the document.

    A tweet that tokenizes to nothing contributes a rate of 0. A missing or
    empty document yields five missing values.
    """
    lexicon.require(LINGUISTIC_CATEGORIES)
    if doc is None or not doc.tweets:
        return (None,) * len(LINGUISTIC_CATEGORIES)

    per_tweet = [
        lexicon.rates(tokenize(tweet.text), LINGUISTIC_CATEGORIES)
        for tweet in doc.tweets
    ]
    return tuple(
        _mean([rates[category] for rates in per_tweet])
        for category in LINGUISTIC_CATEGORIES
    )


def social_engagement(user: UserRecord, now: datetime) -> float:
    """Tweets per day over the account lifetime, with at least one day."""
    if user.account_created_at > now:
        raise FeatureError(
            f"User {user.user_id!r} was created at {user.account_created_at}, "
            f"after the reference time {now}"
        )
    age = now - user.account_created_at
    age_days = math.floor(age.total_seconds() / SECONDS_PER_DAY)
    return user.statuses_count / max(1, age_days)


def influence(user: Optional[UserRecord]) -> Optional[int]:
    return None if user is None else user.followees_count


def popularity(user: Optional[UserRecord]) -> Optional[int]:
    return None if user is None else user.followers_count


def boosting_features(
    user_tweets: Sequence[TweetRecord], news_tweet_ids: Set[str]
) -> Tuple[Optional[float], Optional[float]]:
    """
    Engagement on news-sharing tweets minus the user's overall engagement.

    Returns (boost_retweets, boost_likes); both are missing when the user has
    no tweets or none of them shares a story.
    """
    if not user_tweets:
        return None, None
    news_tweets = [t for t in user_tweets if t.tweet_id in news_tweet_ids]
    if not news_tweets:
        return None, None
    boost_retweets = _mean([t.retweet_count for t in news_tweets]) - _mean(
        [t.retweet_count for t in user_tweets]
    )
    boost_likes = _mean([t.like_count for t in news_tweets]) - _mean(
        [t.like_count for t in user_tweets]
    )
    return boost_retweets, boost_likes


def news_tweet_ids(
    tweets: Iterable[TweetRecord], news_labels: Iterable[NewsLabel]
) -> Set[str]:
    """Ids of tweets that share a story with a known veracity (fake or real)."""
    known = {label.news_id for label in news_labels}
    return {t.tweet_id for t in tweets if t.news_id is not None and t.news_id in known}


def assemble(
    user: Optional[UserRecord],
    doc: Optional[UserDocument],
    lexicon: CategoryLexicon,
    tweets: Sequence[TweetRecord],
    news_ids: Set[str],
    now: datetime,
    label: SpreaderLabel,
) -> LabeledFeatureRow:
    """Builds the ten-feature row of one user; missing inputs become masks."""
    linguistic = linguistic_features(doc, lexicon)
    engagement = None if user is None else social_engagement(user, now)
    boost_retweets, boost_likes = boosting_features(tweets, news_ids)

    vector = FeatureVector.from_optional(
        [
            *linguistic,
            engagement,
            influence(user),
            popularity(user),
            boost_retweets,
            boost_likes,
        ]
    )
    return LabeledFeatureRow(user_id=label.user_id, label=label.label, features=vector)


_Job = Tuple[
    Optional[UserRecord], Optional[UserDocument], List[TweetRecord], SpreaderLabel
]


def _assemble_batch(
    jobs: List[_Job],
    lexicon: CategoryLexicon,
    news_ids: Set[str],
    now: datetime,
) -> List[LabeledFeatureRow]:
    return [
        assemble(user, doc, lexicon, tweets, news_ids, now, label)
        for user, doc, tweets, label in jobs
    ]


def build_feature_rows(
    spreader_labels: Sequence[SpreaderLabel],
    documents: Sequence[UserDocument],
    users: Sequence[UserRecord],
    tweets: Sequence[TweetRecord],
    news_labels: Sequence[NewsLabel],
    lexicon: CategoryLexicon,
    now: datetime,
    max_workers: int = 1,
) -> List[LabeledFeatureRow]:
    """
    Assembles the feature row of every labeled user, sorted by user_id.

    With ``max_workers > 1`` users are split into chunks that run on a process
    pool; the result does not depend on the worker count.
    """
    lexicon.require(LINGUISTIC_CATEGORIES)
    docs_by_user = {doc.user_id: doc for doc in documents}
    users_by_id = {user.user_id: user for user in users}
    tweets_by_user = group_by_user(tweets)
    news_ids = news_tweet_ids(tweets, news_labels)

    jobs = [
        (
            users_by_id.get(label.user_id),
            docs_by_user.get(label.user_id),
            tweets_by_user.get(label.user_id, []),
            label,
        )
        for label in sorted(spreader_labels, key=lambda s: s.user_id)
    ]
    missing_users = sum(1 for user, *_ in jobs if user is None)
    if missing_users:
        logger.warning(
            f"{missing_users} labeled user(s) have no account record; "
            "engagement, influence and popularity are masked for them."
        )

    if max_workers <= 1 or len(jobs) < 2:
        rows = _assemble_batch(jobs, lexicon, news_ids, now)
    else:
        chunk_size = math.ceil(len(jobs) / max_workers)
        chunks = [jobs[i : i + chunk_size] for i in range(0, len(jobs), chunk_size)]
        logger.info(f"Extracting features over {len(chunks)} worker chunk(s).")
        rows = []
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=max_workers
        ) as executor:
            futures = [
                executor.submit(_assemble_batch, chunk, lexicon, news_ids, now)
                for chunk in chunks
            ]
            for future in futures:
                rows.extend(future.result())

    rows.sort(key=lambda row: row.user_id)
    logger.info(f"Assembled feature rows for {len(rows)} users.")
    return rows


def format_float(value: float) -> str:
    """Shortest round-trip representation, so re-reads are bit-exact."""
    return repr(float(value))


def write_feature_matrix(rows: Iterable[LabeledFeatureRow], uri: str) -> int:
    """Writes the feature matrix CSV and returns the number of data rows."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(MATRIX_HEADER)
    count = 0
    for row in rows:
        writer.writerow(
            [
                row.user_id,
                row.label.value,
                *(format_float(v) for v in row.features.values),
                row.features.mask_string,
            ]
        )
        count += 1
    with fsspec.open(uri, "w", encoding="utf-8", newline="") as f:
        f.write(buffer.getvalue())
    return count


def read_feature_matrix(uri: str) -> List[LabeledFeatureRow]:
    """Reads a feature matrix CSV written by `write_feature_matrix`."""
    with fsspec.open(uri, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != MATRIX_HEADER:
            raise FeatureError(
                f"{uri} is not a feature matrix; "
                f"expected header {','.join(MATRIX_HEADER)}"
            )
        rows = []
        for line_number, record in enumerate(reader, start=2):
            if len(record) != len(MATRIX_HEADER):
                raise FeatureError(f"{uri} line {line_number}: wrong number of columns")
            mask = record[-1]
            if len(mask) != N_FEATURES or set(mask) - {"0", "1"}:
                raise FeatureError(f"{uri} line {line_number}: bad mask {mask!r}")
            try:
                label = SpreaderClass(record[1])
                values = tuple(float(v) for v in record[2:-1])
            except ValueError as e:
                raise FeatureError(f"{uri} line {line_number}: {e}") from e
            rows.append(
                LabeledFeatureRow(
                    user_id=record[0],
                    label=label,
                    features=FeatureVector(
                        values=values, missing_mask=tuple(c == "1" for c in mask)
                    ),
                )
            )
    return rows


def feature_columns(
    rows: Sequence[LabeledFeatureRow], index: int
) -> Dict[SpreaderClass, List[float]]:
    """Unmasked values of one feature, split by spreader class."""
    columns: Dict[SpreaderClass, List[float]] = {cls: [] for cls in SpreaderClass}
    for row in rows:
        if not row.features.missing_mask[index]:
            columns[row.label].append(row.features.values[index])
    return columns
