"""
Handles loading of the raw social-media corpus.

This module reads tweet, user and news-veracity files, tags every posting user
as a fake- or real-news spreader, and builds one text document per user from
their most recent posts.

Loaders are resilient to bad input: a malformed line is rejected as an
`InvalidRecordError` returned alongside the good records, while problems that
make a whole file unusable raise `CorpusLoadError`.
"""

import csv
import io
import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

import fsspec
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from typing_extensions import Annotated

logger = logging.getLogger(__name__)

NonNegativeCount = Annotated[int, Field(ge=0, strict=True)]

LABELS_HEADER = ["news_id", "veracity"]
DEFAULT_SPREADER_THRESHOLD = 3
DEFAULT_TARGET_WORDS = 150


class CorpusLoadError(Exception):
    """Raised when a corpus file cannot be used at all."""


class InvalidRecordError(Exception):
    """A single rejected input record, reported as a warning rather than raised."""

    def __init__(self, message, line_number=None, partial_data=None):
        self.message = message
        self.line_number = line_number
        self.partial_data = partial_data or {}
        super().__init__(self.message)

    def __str__(self):
        location = f"line {self.line_number}: " if self.line_number else ""
        return f"{location}{self.message} (Partial Data: {self.partial_data})"


class Veracity(str, Enum):
    FAKE = "Fake"
    REAL = "Real"


class SpreaderClass(str, Enum):
    FAKE = "FakeSpreader"
    REAL = "RealSpreader"


def _ensure_utc(value: datetime) -> datetime:
    if value.tzinfo is None:
        raise ValueError("timestamp must carry a UTC offset (RFC 3339)")
    return value.astimezone(timezone.utc)


class TweetRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    tweet_id: str
    user_id: str
    text: str
    created_at: datetime
    retweet_count: NonNegativeCount
    like_count: NonNegativeCount
    # Required key, null when the post shares no story.
    news_id: Optional[str]

    @field_validator("created_at")
    @classmethod
    def validate_created_at(cls, v: datetime) -> datetime:
        return _ensure_utc(v)


class UserRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    user_id: str
    followers_count: NonNegativeCount
    followees_count: NonNegativeCount
    statuses_count: NonNegativeCount
    account_created_at: datetime

    @field_validator("account_created_at")
    @classmethod
    def validate_account_created_at(cls, v: datetime) -> datetime:
        return _ensure_utc(v)


class NewsLabel(BaseModel):
    model_config = ConfigDict(frozen=True)

    news_id: str
    veracity: Veracity


class SpreaderLabel(BaseModel):
    model_config = ConfigDict(frozen=True)

    user_id: str
    label: SpreaderClass
    fake_share_count: NonNegativeCount


@dataclass(frozen=True)
class UserDocument:
    """The recent posts of one user, most recent first, capped near the target."""

    user_id: str
    tweets: Tuple[TweetRecord, ...]
    word_count: int


@dataclass(frozen=True)
class CorpusSummaryRow:
    label: SpreaderClass
    users: int
    tweets: int


def word_count(text: str) -> int:
    """Plain whitespace word count on raw text."""
    return len(text.split())


def _iter_lines(path: str) -> Iterator[Tuple[int, bytes]]:
    try:
        with fsspec.open(path, "rb") as f:
            for line_number, raw_line in enumerate(f, start=1):
                yield line_number, raw_line
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as e:
        raise CorpusLoadError(f"Cannot read corpus file {path}: {e}") from e


def _parse_json_lines(
    path: str, model: type
) -> Iterator[Tuple[int, BaseModel | InvalidRecordError]]:
    for line_number, raw_line in _iter_lines(path):
        if not raw_line.strip():
            continue
        payload: Any = None
        try:
            payload = json.loads(raw_line.decode("utf-8"))
            if not isinstance(payload, dict):
                raise ValueError("record is not a JSON object")
            record = model.model_validate(payload)
        except UnicodeDecodeError as e:
            yield line_number, InvalidRecordError(
                f"Invalid UTF-8: {e}", line_number=line_number
            )
            continue
        except (ValueError, ValidationError) as e:
            partial = payload if isinstance(payload, dict) else {}
            yield line_number, InvalidRecordError(
                f"Malformed {model.__name__}: {e}",
                line_number=line_number,
                partial_data={k: partial.get(k) for k in ("tweet_id", "user_id")},
            )
            continue
        yield line_number, record


def _log_warnings(path: str, warnings: List[InvalidRecordError]) -> None:
    for warning in warnings:
        logger.warning(f"{path}: {warning}")
    if warnings:
        logger.warning(f"{path}: {len(warnings)} record(s) rejected.")


def load_tweets(path: str) -> Tuple[List[TweetRecord], List[InvalidRecordError]]:
    """
    Loads a newline-delimited JSON tweets file.

    Returns the well-formed records in line order together with the rejected
    lines. A repeated tweet_id keeps the first occurrence.
    """
    records: List[TweetRecord] = []
    warnings: List[InvalidRecordError] = []
    seen_ids = set()
    for line_number, item in _parse_json_lines(path, TweetRecord):
        if isinstance(item, InvalidRecordError):
            warnings.append(item)
            continue
        if item.tweet_id in seen_ids:
            warnings.append(
                InvalidRecordError(
                    f"Duplicate tweet_id {item.tweet_id!r} ignored",
                    line_number=line_number,
                    partial_data={"tweet_id": item.tweet_id},
                )
            )
            continue
        seen_ids.add(item.tweet_id)
        records.append(item)
    _log_warnings(path, warnings)
    logger.info(f"Loaded {len(records)} tweets from {path}.")
    return records, warnings


def load_users(path: str) -> Tuple[List[UserRecord], List[InvalidRecordError]]:
    """
    Loads a newline-delimited JSON users file.

    A repeated user_id is replaced by its later line (one warning per repeat).
    """
    users: Dict[str, UserRecord] = {}
    warnings: List[InvalidRecordError] = []
    for line_number, item in _parse_json_lines(path, UserRecord):
        if isinstance(item, InvalidRecordError):
            warnings.append(item)
            continue
        if item.user_id in users:
            warnings.append(
                InvalidRecordError(
                    f"Duplicate user_id {item.user_id!r}; later line wins",
                    line_number=line_number,
                    partial_data={"user_id": item.user_id},
                )
            )
        users[item.user_id] = item
    _log_warnings(path, warnings)
    logger.info(f"Loaded {len(users)} users from {path}.")
    return list(users.values()), warnings


def load_news_labels(path: str) -> Tuple[List[NewsLabel], List[InvalidRecordError]]:
    """
    Loads the news veracity CSV (header ``news_id,veracity``).

    Veracity is case-insensitive; anything other than fake/real rejects the row.
    """
    try:
        with fsspec.open(path, "r", encoding="utf-8", newline="") as f:
            text = f.read()
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as e:
        raise CorpusLoadError(f"Cannot read labels file {path}: {e}") from e

    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != LABELS_HEADER:
        raise CorpusLoadError(
            f"Labels file {path} must start with the header 'news_id,veracity'"
        )

    labels: Dict[str, NewsLabel] = {}
    warnings: List[InvalidRecordError] = []
    for line_number, row in enumerate(reader, start=2):
        if not row or not any(cell.strip() for cell in row):
            continue
        if len(row) != 2:
            warnings.append(
                InvalidRecordError(
                    f"Expected 2 columns, found {len(row)}", line_number=line_number
                )
            )
            continue
        news_id, veracity = row[0].strip(), row[1].strip().lower()
        try:
            label = NewsLabel(news_id=news_id, veracity=Veracity(veracity.title()))
        except ValueError:
            warnings.append(
                InvalidRecordError(
                    f"Unknown veracity {row[1]!r}",
                    line_number=line_number,
                    partial_data={"news_id": news_id},
                )
            )
            continue
        if not news_id:
            warnings.append(
                InvalidRecordError("Empty news_id", line_number=line_number)
            )
            continue
        if news_id in labels:
            warnings.append(
                InvalidRecordError(
                    f"Duplicate news_id {news_id!r}; later row wins",
                    line_number=line_number,
                    partial_data={"news_id": news_id},
                )
            )
        labels[news_id] = label
    _log_warnings(path, warnings)
    logger.info(f"Loaded {len(labels)} news labels from {path}.")
    return list(labels.values()), warnings


def label_spreaders(
    tweets: Iterable[TweetRecord],
    labels: Iterable[NewsLabel],
    threshold: int = DEFAULT_SPREADER_THRESHOLD,
) -> Tuple[List[SpreaderLabel], List[InvalidRecordError]]:
    """
    Tags every posting user as a fake- or real-news spreader.

    The count is the number of DISTINCT fake stories a user shared; users at or
    above ``threshold`` are fake-news spreaders. Tweets that reference a story
    missing from ``labels`` are ignored for counting and reported as warnings.
    Output is sorted by user_id.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be a positive integer, got {threshold}")

    veracity_by_news = {label.news_id: label.veracity for label in labels}
    fake_stories: Dict[str, set] = defaultdict(set)
    warnings: List[InvalidRecordError] = []

    for tweet in tweets:
        stories = fake_stories[tweet.user_id]
        if tweet.news_id is None:
            continue
        veracity = veracity_by_news.get(tweet.news_id)
        if veracity is None:
            warnings.append(
                InvalidRecordError(
                    f"Tweet references unknown news_id {tweet.news_id!r}",
                    partial_data={"tweet_id": tweet.tweet_id, "news_id": tweet.news_id},
                )
            )
        elif veracity is Veracity.FAKE:
            stories.add(tweet.news_id)

    for warning in warnings:
        logger.warning(str(warning))

    result = []
    for user_id in sorted(fake_stories):
        count = len(fake_stories[user_id])
        result.append(
            SpreaderLabel(
                user_id=user_id,
                label=SpreaderClass.FAKE if count >= threshold else SpreaderClass.REAL,
                fake_share_count=count,
            )
        )
    return result, warnings


def _recency_key(tweet: TweetRecord) -> Tuple[datetime, str]:
    return tweet.created_at, tweet.tweet_id


def group_by_user(tweets: Iterable[TweetRecord]) -> Dict[str, List[TweetRecord]]:
    """Groups tweets per user, each list most recent first (ties by tweet_id)."""
    grouped: Dict[str, List[TweetRecord]] = defaultdict(list)
    for tweet in tweets:
        grouped[tweet.user_id].append(tweet)
    for user_tweets in grouped.values():
        user_tweets.sort(key=_recency_key, reverse=True)
    return dict(grouped)


def build_documents(
    tweets: Iterable[TweetRecord], target_words: int = DEFAULT_TARGET_WORDS
) -> List[UserDocument]:
    """
    Builds one document per user from their most recent posts.

    Tweets are taken most recent first until the whitespace word count reaches
    ``target_words``; the tweet that crosses the target is included.
    """
    if target_words < 1:
        raise ValueError(f"target_words must be a positive integer, got {target_words}")

    documents = []
    for user_id, user_tweets in sorted(group_by_user(tweets).items()):
        selected: List[TweetRecord] = []
        total = 0
        for tweet in user_tweets:
            selected.append(tweet)
            total += word_count(tweet.text)
            if total >= target_words:
                break
        documents.append(
            UserDocument(user_id=user_id, tweets=tuple(selected), word_count=total)
        )
    return documents


def summarize_corpus(
    spreader_labels: Iterable[SpreaderLabel], tweets: Iterable[TweetRecord]
) -> List[CorpusSummaryRow]:
    """Counts users and tweets per spreader class (fake first)."""
    class_by_user = {label.user_id: label.label for label in spreader_labels}
    users = {cls: 0 for cls in SpreaderClass}
    tweet_counts = {cls: 0 for cls in SpreaderClass}
    for cls in class_by_user.values():
        users[cls] += 1
    for tweet in tweets:
        cls = class_by_user.get(tweet.user_id)
        if cls is not None:
            tweet_counts[cls] += 1
    return [
        CorpusSummaryRow(label=cls, users=users[cls], tweets=tweet_counts[cls])
        for cls in SpreaderClass
    ]


def format_timestamp(value: datetime) -> str:
    """RFC 3339 rendering used for every timestamp the package writes."""
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def tweet_to_dict(tweet: TweetRecord) -> Dict[str, Any]:
    return {
        "tweet_id": tweet.tweet_id,
        "user_id": tweet.user_id,
        "text": tweet.text,
        "created_at": format_timestamp(tweet.created_at),
        "retweet_count": tweet.retweet_count,
        "like_count": tweet.like_count,
        "news_id": tweet.news_id,
    }


def user_to_dict(user: UserRecord) -> Dict[str, Any]:
    return {
        "user_id": user.user_id,
        "followers_count": user.followers_count,
        "followees_count": user.followees_count,
        "statuses_count": user.statuses_count,
        "account_created_at": format_timestamp(user.account_created_at),
    }
