"""
A small synthetic corpus that makes every subcommand runnable out of the box.

The corpus is generated, not shipped, so it is identical for a given seed on
every machine. Its spreader counts are planned: user ``k`` shares ``k mod 7``
distinct fake stories (the first of them twice) and ``1 + k mod 3`` real
stories, and users with ``k mod 10 = 9`` have no account record.
"""

import csv
import io
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from .config import CONFIG_FILE_NAME
from .corpus import (
    LABELS_HEADER,
    NewsLabel,
    TweetRecord,
    UserRecord,
    Veracity,
    tweet_to_dict,
    user_to_dict,
)

logger = logging.getLogger(__name__)

DEFAULT_DEMO_USERS = 50
N_STORIES = 10
DEMO_BASE_TIME = datetime(2021, 3, 1, tzinfo=timezone.utc)
DEMO_REFERENCE_NOW = DEMO_BASE_TIME + timedelta(days=1)

TWEETS_FILE = "tweets.jsonl"
USERS_FILE = "users.jsonl"
LABELS_FILE = "labels.csv"

_FILLER = [
    "the", "news", "today", "people", "story", "report", "this", "government",
    "video", "city", "about", "just", "read", "again", "official", "week",
]
_ALARMED = ["worried", "afraid", "nervous", "scared", "always", "never", "definitely"]
_HEDGED = ["maybe", "perhaps", "possibly", "guess", "should", "would", "hope"]
_FUTURE = ["will", "soon", "tomorrow", "going", "future"]


@dataclass(frozen=True)
class DemoCorpus:
    tweets: List[TweetRecord]
    users: List[UserRecord]
    news_labels: List[NewsLabel]


def planned_fake_shares(k: int) -> int:
    """Distinct fake stories shared by demo user ``k``."""
    return k % 7


def planned_real_shares(k: int) -> int:
    return 1 + k % 3


def has_account_record(k: int) -> bool:
    return k % 10 != 9


def demo_user_id(k: int) -> str:
    return f"user{k:03d}"


def _sentence(rng: np.random.Generator, flavour: List[str], n_words: int) -> str:
    words = [str(w) for w in rng.choice(_FILLER, size=n_words)]
    for position in rng.choice(n_words, size=min(2, n_words), replace=False):
        words[int(position)] = str(rng.choice(flavour))
    return " ".join(words)


def build_demo_corpus(seed: int = 0, n_users: int = DEFAULT_DEMO_USERS) -> DemoCorpus:
    rng = np.random.default_rng(seed)
    news_labels = [
        NewsLabel(news_id=f"fake-{i:02d}", veracity=Veracity.FAKE)
        for i in range(N_STORIES)
    ] + [
        NewsLabel(news_id=f"real-{i:02d}", veracity=Veracity.REAL)
        for i in range(N_STORIES)
    ]

    tweets: List[TweetRecord] = []
    users: List[UserRecord] = []
    for k in range(n_users):
        user_id = demo_user_id(k)
        fake_ids = [
            f"fake-{(k + j) % N_STORIES:02d}" for j in range(planned_fake_shares(k))
        ]
        real_ids = [
            f"real-{(k + j) % N_STORIES:02d}" for j in range(planned_real_shares(k))
        ]
        posts: List[tuple] = []
        for i, news_id in enumerate(fake_ids + fake_ids[:1]):
            text = _sentence(rng, _ALARMED, 9) + f" #breaking http://t.co/{k}f{i}"
            posts.append((text, news_id, 40))
        for i, news_id in enumerate(real_ids):
            text = _sentence(rng, _HEDGED, 9) + f" @newsdesk http://t.co/{k}r{i}"
            posts.append((text, news_id, 10))
        for _ in range(2 + k % 4):
            posts.append((_sentence(rng, _FUTURE + _HEDGED, 10), None, 5))

        for i, (text, news_id, scale) in enumerate(posts):
            tweets.append(
                TweetRecord(
                    tweet_id=f"{user_id}-t{i:02d}",
                    user_id=user_id,
                    text=text,
                    created_at=DEMO_BASE_TIME - timedelta(hours=3 * i + k),
                    retweet_count=int(rng.integers(0, scale)),
                    like_count=int(rng.integers(0, 2 * scale)),
                    news_id=news_id,
                )
            )
        if has_account_record(k):
            users.append(
                UserRecord(
                    user_id=user_id,
                    followers_count=int(rng.integers(10, 5000)),
                    followees_count=int(rng.integers(10, 2000)),
                    statuses_count=int(rng.integers(100, 20000)),
                    account_created_at=DEMO_BASE_TIME - timedelta(days=30 + 11 * k),
                )
            )
    return DemoCorpus(tweets=tweets, users=users, news_labels=news_labels)


def _jsonl(records: List[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def write_demo_corpus(
    out_dir: str,
    seed: int = 0,
    n_users: int = DEFAULT_DEMO_USERS,
    config_overrides: Optional[dict] = None,
) -> Path:
    """
    Writes the demo corpus and a matching config file into ``out_dir``.

    Returns the path of the written config file.
    """
    out = Path(out_dir).resolve()
    out.mkdir(parents=True, exist_ok=True)
    corpus = build_demo_corpus(seed, n_users)

    tweets = _jsonl([tweet_to_dict(t) for t in corpus.tweets])
    (out / TWEETS_FILE).write_text(tweets, "utf-8")
    (out / USERS_FILE).write_text(
        _jsonl([user_to_dict(u) for u in corpus.users]), "utf-8"
    )
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(LABELS_HEADER)
    for label in corpus.news_labels:
        writer.writerow([label.news_id, label.veracity.value])
    (out / LABELS_FILE).write_text(buffer.getvalue(), "utf-8")

    config = {
        "tweets_path": str(out / TWEETS_FILE),
        "users_path": str(out / USERS_FILE),
        "labels_path": str(out / LABELS_FILE),
        "output_dir": str(out / "output"),
        "reference_now": DEMO_REFERENCE_NOW.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "seed": seed,
        "baseline_embed": True,
    }
    config.update(config_overrides or {})
    config_path = out / CONFIG_FILE_NAME
    config_path.write_text(yaml.safe_dump(config, sort_keys=True), "utf-8")
    logger.info(
        f"Wrote demo corpus of {n_users} users ({len(corpus.tweets)} tweets) to {out}."
    )
    return config_path
