"""
Tests for loading the corpus files, spreader labeling and user documents.
"""
import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from py_profile_spreaders.corpus import (
    CorpusLoadError,
    InvalidRecordError,
    NewsLabel,
    SpreaderClass,
    TweetRecord,
    Veracity,
    build_documents,
    label_spreaders,
    load_news_labels,
    load_tweets,
    load_users,
    summarize_corpus,
)

BASE = datetime(2021, 3, 1, tzinfo=timezone.utc)


def make_tweet(tweet_id, user_id="u", text="hello", hours_ago=0, news_id=None, rt=0, likes=0):
    return TweetRecord(
        tweet_id=tweet_id,
        user_id=user_id,
        text=text,
        created_at=BASE - timedelta(hours=hours_ago),
        retweet_count=rt,
        like_count=likes,
        news_id=news_id,
    )


def tweet_line(**overrides) -> str:
    record = {
        "tweet_id": "t1",
        "user_id": "u1",
        "text": "hello world",
        "created_at": "2021-02-01T00:00:00Z",
        "retweet_count": 0,
        "like_count": 0,
        "news_id": None,
    }
    record.update(overrides)
    return json.dumps(record)


LABELS = [
    NewsLabel(news_id="a", veracity=Veracity.FAKE),
    NewsLabel(news_id="b", veracity=Veracity.FAKE),
    NewsLabel(news_id="c", veracity=Veracity.FAKE),
    NewsLabel(news_id="x", veracity=Veracity.REAL),
]


# --- loaders -----------------------------------------------------------------


def test_load_fixture_tweets(data_dir: Path):
    """
    Tests that every valid line of the fixture becomes a record, in line order,
    and that the blank line is skipped without a warning.
    """
    tweets, warnings = load_tweets(str(data_dir / "tweets.jsonl"))
    assert len(tweets) == 14
    assert warnings == []
    assert [t.tweet_id for t in tweets][:3] == ["t01", "t02", "t03"]
    assert tweets[3].news_id is None
    assert tweets[0].created_at == datetime(2021, 2, 20, 10, tzinfo=timezone.utc)


def test_load_tweets_counts_malformed_lines(tmp_path: Path):
    path = tmp_path / "tweets.jsonl"
    path.write_text(
        "\n".join(
            [
                tweet_line(tweet_id="t1"),
                "{not json",
                tweet_line(tweet_id="t2", retweet_count=3),
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    tweets, warnings = load_tweets(str(path))
    assert [t.tweet_id for t in tweets] == ["t1", "t2"]
    assert len(warnings) == 1
    assert isinstance(warnings[0], InvalidRecordError)
    assert warnings[0].line_number == 2


@pytest.mark.parametrize(
    "bad_line",
    [
        tweet_line(retweet_count=-1),
        tweet_line(like_count="3"),
        tweet_line(created_at="2021-02-01T00:00:00"),
        tweet_line(extra_field=1),
        json.dumps({"tweet_id": "t1", "user_id": "u1"}),
        json.dumps(["not", "an", "object"]),
    ],
)
def test_load_tweets_rejects_invalid_records(tmp_path: Path, bad_line: str):
    """
    Tests negative counts, non-integer counts, naive timestamps, unknown and
    missing keys all reject the line instead of failing the file.
    """
    path = tmp_path / "tweets.jsonl"
    path.write_text(bad_line + "\n" + tweet_line(tweet_id="ok") + "\n", encoding="utf-8")
    tweets, warnings = load_tweets(str(path))
    assert [t.tweet_id for t in tweets] == ["ok"]
    assert len(warnings) == 1


def test_load_tweets_keeps_first_duplicate(tmp_path: Path):
    path = tmp_path / "tweets.jsonl"
    path.write_text(
        tweet_line(tweet_id="t1", text="first") + "\n" + tweet_line(tweet_id="t1", text="second") + "\n",
        encoding="utf-8",
    )
    tweets, warnings = load_tweets(str(path))
    assert [t.text for t in tweets] == ["first"]
    assert len(warnings) == 1


def test_load_tweets_rejects_invalid_utf8(tmp_path: Path):
    path = tmp_path / "tweets.jsonl"
    path.write_bytes(b'{"text": "\xff\xfe"}\n' + tweet_line().encode("utf-8") + b"\n")
    tweets, warnings = load_tweets(str(path))
    assert len(tweets) == 1
    assert "UTF-8" in warnings[0].message


def test_load_empty_file(tmp_path: Path):
    path = tmp_path / "tweets.jsonl"
    path.write_text("", encoding="utf-8")
    assert load_tweets(str(path)) == ([], [])


def test_missing_file_is_fatal(tmp_path: Path):
    with pytest.raises(CorpusLoadError, match="missing.jsonl"):
        load_tweets(str(tmp_path / "missing.jsonl"))


def test_load_users_later_duplicate_wins(tmp_path: Path):
    line = '{{"user_id": "u1", "followers_count": {f}, "followees_count": 1, "statuses_count": 1, "account_created_at": "2020-01-01T00:00:00Z"}}'
    path = tmp_path / "users.jsonl"
    path.write_text(line.format(f=10) + "\n" + line.format(f=25) + "\n", encoding="utf-8")
    users, warnings = load_users(str(path))
    assert len(users) == 1
    assert users[0].followers_count == 25
    assert len(warnings) == 1


def test_load_users_rejects_negative_count(tmp_path: Path):
    path = tmp_path / "users.jsonl"
    path.write_text(
        '{"user_id": "u1", "followers_count": -1, "followees_count": 1, "statuses_count": 1, "account_created_at": "2020-01-01T00:00:00Z"}\n',
        encoding="utf-8",
    )
    users, warnings = load_users(str(path))
    assert users == []
    assert len(warnings) == 1


def test_load_news_labels_fixture(data_dir: Path):
    """
    Tests that veracity parsing is case-insensitive.
    """
    labels, warnings = load_news_labels(str(data_dir / "labels.csv"))
    assert warnings == []
    veracity = {label.news_id: label.veracity for label in labels}
    assert veracity == {
        "n1": Veracity.FAKE,
        "n2": Veracity.FAKE,
        "n3": Veracity.FAKE,
        "r1": Veracity.REAL,
        "r2": Veracity.REAL,
    }


def test_load_news_labels_rejects_unknown_veracity(tmp_path: Path):
    path = tmp_path / "labels.csv"
    path.write_text("news_id,veracity\nn1,fake\nn2,real\nn3,maybe\n", encoding="utf-8")
    labels, warnings = load_news_labels(str(path))
    assert [(l.news_id, l.veracity) for l in labels] == [
        ("n1", Veracity.FAKE),
        ("n2", Veracity.REAL),
    ]
    assert len(warnings) == 1
    assert warnings[0].line_number == 4


def test_load_news_labels_requires_header(tmp_path: Path):
    path = tmp_path / "labels.csv"
    path.write_text("n1,fake\n", encoding="utf-8")
    with pytest.raises(CorpusLoadError, match="header"):
        load_news_labels(str(path))


# --- labeling ----------------------------------------------------------------


def test_label_spreaders_counts_distinct_fake_stories():
    tweets = [
        make_tweet("1", "abc", news_id="a"),
        make_tweet("2", "abc", news_id="b"),
        make_tweet("3", "abc", news_id="c"),
        make_tweet("4", "abx", news_id="a"),
        make_tweet("5", "abx", news_id="b"),
        make_tweet("6", "abx", news_id="x"),
        *(make_tweet(f"r{i}", "repeat", news_id="a") for i in range(5)),
    ]
    labels, warnings = label_spreaders(tweets, LABELS)
    by_user = {label.user_id: label for label in labels}
    assert warnings == []
    assert (by_user["abc"].label, by_user["abc"].fake_share_count) == (SpreaderClass.FAKE, 3)
    assert (by_user["abx"].label, by_user["abx"].fake_share_count) == (SpreaderClass.REAL, 2)
    assert (by_user["repeat"].label, by_user["repeat"].fake_share_count) == (SpreaderClass.REAL, 1)


def test_label_spreaders_fixture(data_dir: Path):
    tweets, _ = load_tweets(str(data_dir / "tweets.jsonl"))
    news, _ = load_news_labels(str(data_dir / "labels.csv"))
    labels, _ = label_spreaders(tweets, news)
    assert [(l.user_id, l.label, l.fake_share_count) for l in labels] == [
        ("u1", SpreaderClass.FAKE, 3),
        ("u2", SpreaderClass.REAL, 2),
        ("u3", SpreaderClass.REAL, 1),
        ("u4", SpreaderClass.REAL, 0),
    ]


def test_label_spreaders_warns_about_unknown_news():
    tweets = [make_tweet("1", "u", news_id="zzz"), make_tweet("2", "u", news_id="a")]
    labels, warnings = label_spreaders(tweets, LABELS)
    assert labels[0].fake_share_count == 1
    assert len(warnings) == 1
    assert warnings[0].partial_data["news_id"] == "zzz"


def test_label_spreaders_rejects_zero_threshold():
    with pytest.raises(ValueError):
        label_spreaders([], LABELS, threshold=0)


def test_labeling_matches_brute_force_and_is_threshold_monotone():
    """
    Tests fake_share_count against a set-size recount over a random corpus and
    that raising the threshold never turns a real spreader into a fake one.
    """
    rng = random.Random(42)
    stories = [f"f{i}" for i in range(8)] + [f"r{i}" for i in range(8)]
    labels = [
        NewsLabel(news_id=s, veracity=Veracity.FAKE if s.startswith("f") else Veracity.REAL)
        for s in stories
    ]
    tweets = [
        make_tweet(
            str(i),
            f"user{rng.randrange(300)}",
            news_id=rng.choice(stories + [None]),
        )
        for i in range(10_000)
    ]
    expected = {}
    for tweet in tweets:
        expected.setdefault(tweet.user_id, set())
        if tweet.news_id and tweet.news_id.startswith("f"):
            expected[tweet.user_id].add(tweet.news_id)

    previous = None
    for threshold in range(1, 8):
        result, _ = label_spreaders(tweets, labels, threshold=threshold)
        assert {l.user_id for l in result} == set(expected)
        for label in result:
            assert label.fake_share_count == len(expected[label.user_id])
            assert (label.label is SpreaderClass.FAKE) == (label.fake_share_count >= threshold)
        fakes = {l.user_id for l in result if l.label is SpreaderClass.FAKE}
        if previous is not None:
            assert fakes <= previous
        previous = fakes


# --- documents ---------------------------------------------------------------


def words(n: int) -> str:
    return " ".join(["word"] * n)


def test_one_long_tweet_is_a_whole_document():
    docs = build_documents([make_tweet("1", text=words(200))])
    assert len(docs[0].tweets) == 1
    assert docs[0].word_count == 200


def test_four_fifty_word_tweets_stop_at_the_target():
    tweets = [make_tweet(str(i), text=words(50), hours_ago=i) for i in range(4)]
    doc = build_documents(tweets)[0]
    assert [t.tweet_id for t in doc.tweets] == ["0", "1", "2"]
    assert doc.word_count == 150


def test_short_history_is_exhausted():
    doc = build_documents([make_tweet("1", text=words(10))])[0]
    assert len(doc.tweets) == 1
    assert doc.word_count == 10


def test_documents_take_most_recent_first_and_ignore_input_order():
    tweets = [
        make_tweet(str(i), user_id=f"u{i % 3}", text=words(40 + i), hours_ago=(i * 7) % 13)
        for i in range(12)
    ]
    shuffled = list(tweets)
    random.Random(1).shuffle(shuffled)
    docs = build_documents(tweets)
    assert docs == build_documents(shuffled)
    for doc in docs:
        times = [t.created_at for t in doc.tweets]
        assert times == sorted(times, reverse=True)
        assert all(t.user_id == doc.user_id for t in doc.tweets)
        assert doc.word_count == sum(len(t.text.split()) for t in doc.tweets)


def test_summarize_corpus(data_dir: Path):
    tweets, _ = load_tweets(str(data_dir / "tweets.jsonl"))
    news, _ = load_news_labels(str(data_dir / "labels.csv"))
    labels, _ = label_spreaders(tweets, news)
    rows = summarize_corpus(labels, tweets)
    assert [(r.label, r.users, r.tweets) for r in rows] == [
        (SpreaderClass.FAKE, 1, 4),
        (SpreaderClass.REAL, 3, 10),
    ]
