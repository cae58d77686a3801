"""
Category lexicons and per-tweet category word percentages.

A lexicon file is plain UTF-8 text. A line such as ``[tentat]`` opens a
category; every following non-empty, non-comment line is a pattern. A pattern
is either a literal word or a stem ending in ``*`` that matches any token
starting with the stem.

Tweets are tokenized by deleting URLs, hashtags and mentions, stripping
punctuation and symbol characters, lowercasing and splitting on whitespace.
"""

import logging
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import fsspec

logger = logging.getLogger(__name__)

STEM_MARKER = "*"

STARTER_LEXICON = """\
# Starter lexicon: the exemplar words of each psycholinguistic category.
# Replace with a richer lexicon in the same format for real studies.
[discrep]
should
would
could

[tentat]
maybe
perhaps
guess

[certain]
always
never

[anx]
nervous
afraid
tense

[futurefocus]
may
will
soon
"""

_URL_RE = re.compile(r"(?:https?://|(?<!\S)www\.)\S*", re.IGNORECASE)
_TAG_RE = re.compile(r"(?<!\S)[#@]\S*")


class LexiconParseError(ValueError):
    """Raised for a lexicon file that violates the format."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        location = f"line {line_number}: " if line_number else ""
        super().__init__(f"{location}{message}")


class UnknownCategoryError(KeyError):
    """Raised when a category is not defined by the lexicon."""

    def __init__(self, category: str):
        self.category = category
        super().__init__(category)

    def __str__(self):
        return f"Unknown lexicon category: {self.category!r}"


class _PunctuationTable(dict):
    """str.translate table deleting Unicode punctuation (P*) and symbols (S*)."""

    def __missing__(self, codepoint: int) -> Optional[int]:
        category = unicodedata.category(chr(codepoint))
        value = None if category[0] in "PS" else codepoint
        self[codepoint] = value
        return value


_PUNCTUATION_TABLE = _PunctuationTable()


def tokenize(text: str) -> List[str]:
    """
    Splits a post into lowercase word tokens.

    URLs (``http://``, ``https://`` and bare ``www.`` links) and whole
    hashtag/mention tokens are deleted first, then punctuation and symbol
    characters are stripped, so ``"can't"`` becomes ``"cant"``.
    """
    text = _URL_RE.sub(" ", text)
    text = _TAG_RE.sub(" ", text)
    text = text.translate(_PUNCTUATION_TABLE)
    return text.lower().split()


def match_pattern(token: str, pattern: str) -> bool:
    """Literal patterns need equality; ``stem*`` patterns need a prefix match."""
    if pattern.endswith(STEM_MARKER):
        return token.startswith(pattern[:-1])
    return token == pattern


@dataclass(frozen=True)
class CategoryLexicon:
    """
    Named pattern lists for psycholinguistic categories.

    Matching goes through a token -> categories index (exact words plus a
    prefix table of stems), cached per token, so scoring a corpus costs one
    dictionary lookup per repeated token.
    """

    categories: Mapping[str, Tuple[str, ...]]
    _exact: Dict[str, FrozenSet[str]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )
    _stems: Dict[str, FrozenSet[str]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )
    _token_cache: Dict[str, FrozenSet[str]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self):
        exact: Dict[str, set] = {}
        stems: Dict[str, set] = {}
        for category, patterns in self.categories.items():
            for pattern in patterns:
                if pattern.endswith(STEM_MARKER):
                    stems.setdefault(pattern[:-1], set()).add(category)
                else:
                    exact.setdefault(pattern, set()).add(category)
        self._exact.update({k: frozenset(v) for k, v in exact.items()})
        self._stems.update({k: frozenset(v) for k, v in stems.items()})

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self.categories)

    def patterns(self, category: str) -> Tuple[str, ...]:
        try:
            return self.categories[category]
        except KeyError:
            raise UnknownCategoryError(category) from None

    def require(self, categories: Iterable[str]) -> None:
        for category in categories:
            if category not in self.categories:
                raise UnknownCategoryError(category)

    def categories_for_token(self, token: str) -> FrozenSet[str]:
        cached = self._token_cache.get(token)
        if cached is not None:
            return cached
        found = set(self._exact.get(token, ()))
        for end in range(len(token) + 1):
            found.update(self._stems.get(token[:end], ()))
        result = frozenset(found)
        self._token_cache[token] = result
        return result

    def rate(self, tokens: List[str], category: str) -> float:
        self.require((category,))
        if not tokens:
            return 0.0
        hits = sum(
            1 for token in tokens if category in self.categories_for_token(token)
        )
        return 100.0 * hits / len(tokens)

    def rates(self, tokens: List[str], categories: Iterable[str]) -> Dict[str, float]:
        """All requested category rates in a single pass over the tokens."""
        wanted = tuple(categories)
        self.require(wanted)
        hits = dict.fromkeys(wanted, 0)
        cached = self._token_cache.get
        for token in tokens:
            found = cached(token)
            if found is None:
                found = self.categories_for_token(token)
            for category in found:
                if category in hits:
                    hits[category] += 1
        if not tokens:
            return dict.fromkeys(wanted, 0.0)
        return {c: 100.0 * hits[c] / len(tokens) for c in wanted}


def category_rate(tokens: List[str], lexicon: CategoryLexicon, category: str) -> float:
    """Percentage of tokens matching any pattern of ``category`` (0 when empty)."""
    return lexicon.rate(tokens, category)


def _validate_pattern(pattern: str, line_number: int) -> str:
    if any(ch.isspace() for ch in pattern):
        raise LexiconParseError(f"Pattern {pattern!r} contains whitespace", line_number)
    if STEM_MARKER in pattern[:-1]:
        raise LexiconParseError(
            f"Pattern {pattern!r} has '*' before its final character", line_number
        )
    if pattern == STEM_MARKER:
        raise LexiconParseError("Empty stem pattern '*'", line_number)
    return pattern


def parse_lexicon(text: str) -> CategoryLexicon:
    """
    Parses lexicon text into a CategoryLexicon.

    Category names and patterns are lowercased; repeated patterns within a
    category are dropped. A repeated category header or a malformed pattern
    raises LexiconParseError.
    """
    categories: Dict[str, List[str]] = {}
    current: Optional[str] = None

    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if not name:
                raise LexiconParseError("Empty category name", line_number)
            if name in categories:
                raise LexiconParseError(f"Duplicate category [{name}]", line_number)
            categories[name] = []
            current = name
            continue
        if current is None:
            raise LexiconParseError(
                f"Pattern {line!r} appears before any category header", line_number
            )
        pattern = _validate_pattern(line.lower(), line_number)
        if pattern not in categories[current]:
            categories[current].append(pattern)

    return CategoryLexicon(
        categories={name: tuple(patterns) for name, patterns in categories.items()}
    )


def load_lexicon(path: str) -> CategoryLexicon:
    """Reads and parses a lexicon file from any fsspec-supported location."""
    with fsspec.open(path, "r", encoding="utf-8") as f:
        lexicon = parse_lexicon(f.read())
    logger.info(f"Loaded lexicon {path} with categories: {', '.join(lexicon.names)}")
    return lexicon


def starter_lexicon() -> CategoryLexicon:
    return parse_lexicon(STARTER_LEXICON)
