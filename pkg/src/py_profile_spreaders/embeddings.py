"""
User embeddings: the text representation half of the fusion input.

Two sources ship with the package. `HashedEmbeddingSource` computes a signed,
hashed term-frequency vector per user document so the whole pipeline runs
offline. `FileEmbeddingSource` reads vectors produced elsewhere (for example
by a sentence encoder) from a CSV whose first column is the user_id.
"""

import csv
import io
import logging
from dataclasses import dataclass
from importlib import metadata
from typing import Any, Dict, Sequence

import fsspec
import numpy as np
from sklearn.utils import murmurhash3_32

from .corpus import UserDocument
from .interfaces import EmbeddingSource
from .lexicon import tokenize

logger = logging.getLogger(__name__)

ENTRY_POINT_GROUP = "py_profile_spreaders.embedders"
DEFAULT_EMBEDDING_DIM = 256


class EmbeddingLoadError(ValueError):
    """Raised for an unusable embeddings file."""


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: Dict[str, np.ndarray]

    def __post_init__(self):
        if self.dim < 1:
            raise EmbeddingLoadError(
                f"Embedding dimension must be positive, got {self.dim}"
            )
        for user_id, vector in self.vectors.items():
            if vector.shape != (self.dim,):
                raise EmbeddingLoadError(
                    f"Vector of {user_id!r} has shape {vector.shape}, "
                    f"expected ({self.dim},)"
                )
            if not np.all(np.isfinite(vector)):
                raise EmbeddingLoadError(
                    f"Vector of {user_id!r} has non-finite entries"
                )

    def __contains__(self, user_id: str) -> bool:
        return user_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def baseline_embed(doc: UserDocument, dim: int = DEFAULT_EMBEDDING_DIM) -> np.ndarray:
    """
    Signed hashed term-frequency vector of a document, L2-normalized.

    Each token goes to bucket ``|h| mod dim`` with the sign of its 32-bit
    murmur hash ``h``. A document without tokens maps to the zero vector.
    """
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    vector = np.zeros(dim, dtype=float)
    for tweet in doc.tweets:
        for token in tokenize(tweet.text):
            h = murmurhash3_32(token, seed=0, positive=False)
            vector[abs(h) % dim] += 1.0 if h >= 0 else -1.0
    norm = np.linalg.norm(vector)
    if norm == 0:
        return vector
    return vector / norm


def load_embeddings(path: str) -> EmbeddingTable:
    """
    Reads an embeddings CSV: user_id, then one real value per dimension.

    Every row must have the same width and only finite values. A leading row
    whose value cells are not numbers is treated as a header and skipped.
    """
    try:
        with fsspec.open(path, "r", encoding="utf-8", newline="") as f:
            text = f.read()
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as e:
        raise EmbeddingLoadError(f"Cannot read embeddings file {path}: {e}") from e

    vectors: Dict[str, np.ndarray] = {}
    dim = None
    for line_number, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row:
            continue
        user_id, cells = row[0].strip(), row[1:]
        try:
            values = np.array([float(cell) for cell in cells], dtype=float)
        except ValueError as e:
            if line_number == 1:
                continue
            raise EmbeddingLoadError(f"{path} line {line_number}: {e}") from e
        if not cells:
            raise EmbeddingLoadError(f"{path} line {line_number}: no vector values")
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise EmbeddingLoadError(
                f"{path} line {line_number}: dimension {len(values)} differs from {dim}"
            )
        if not np.all(np.isfinite(values)):
            raise EmbeddingLoadError(f"{path} line {line_number}: non-finite entry")
        if user_id in vectors:
            logger.warning(
                f"{path} line {line_number}: duplicate user {user_id!r}; "
                "later row wins"
            )
        vectors[user_id] = values

    if dim is None:
        raise EmbeddingLoadError(f"{path} contains no embedding rows")
    logger.info(f"Loaded {len(vectors)} embeddings of dimension {dim} from {path}.")
    return EmbeddingTable(dim=dim, vectors=vectors)



class HashedEmbeddingSource(EmbeddingSource):
    """Offline baseline: hashed term frequencies of each user document."""

    def __init__(self, dim: int = DEFAULT_EMBEDDING_DIM, **_: Any):
        self.dim = dim

    @property
    def name(self) -> str:
        return f"hashed-{self.dim}"

    def embed(self, documents: Sequence[UserDocument]) -> EmbeddingTable:
        return EmbeddingTable(
            dim=self.dim,
            vectors={doc.user_id: baseline_embed(doc, self.dim) for doc in documents},
        )


class FileEmbeddingSource(EmbeddingSource):
    """Precomputed vectors read from an embeddings CSV."""

    def __init__(self, path: str, **_: Any):
        self.path = path

    @property
    def name(self) -> str:
        return f"file:{self.path}"

    def embed(self, documents: Sequence[UserDocument]) -> EmbeddingTable:
        table = load_embeddings(self.path)
        missing = [doc.user_id for doc in documents if doc.user_id not in table]
        if missing:
            logger.warning(
                f"{len(missing)} user(s) have no vector in {self.path} "
                f"(e.g. {', '.join(missing[:3])})."
            )
        return table


_BUILTIN_SOURCES = {"hashed": HashedEmbeddingSource, "file": FileEmbeddingSource}


def get_embedding_source(name: str, **options: Any) -> EmbeddingSource:
    """
    Factory returning the embedding source registered under ``name``.

    Sources are discovered via the `py_profile_spreaders.embedders` entry-point
    group; the built-in sources are used when the package metadata is not
    installed.
    """
    try:
        registered = {
            ep.name: ep for ep in metadata.entry_points(group=ENTRY_POINT_GROUP)
        }
    except Exception as e:
        raise RuntimeError(f"Could not load entry points: {e}") from e

    if name in registered:
        source_class = registered[name].load()
    elif name in _BUILTIN_SOURCES:
        source_class = _BUILTIN_SOURCES[name]
    else:
        available = sorted(set(registered) | set(_BUILTIN_SOURCES))
        raise ValueError(
            f"No registered embedding source '{name}'. Available sources: {available}"
        )

    try:
        return source_class(**options)
    except TypeError as e:
        raise ValueError(f"Invalid options for embedding source '{name}': {e}") from e
