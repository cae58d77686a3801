from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Sequence

from .corpus import UserDocument

if TYPE_CHECKING:
    from .embeddings import EmbeddingTable


class EmbeddingSource(ABC):
    """
    Abstract Base Class for user embedding sources.

    An embedding source turns user documents into one fixed-width vector per
    user (the text representation that the fusion classifier extends with the
    motivational features). Concrete sources are registered under the
    `py_profile_spreaders.embedders` entry-point group, so an external encoder
    can be plugged in without modifying the package.
    """

    @abstractmethod
    def embed(self, documents: Sequence[UserDocument]) -> EmbeddingTable:
        """Return an EmbeddingTable covering the users of ``documents``."""
        raise NotImplementedError

    @property
    @abstractmethod
    def name(self) -> str:
        """Short identifier used in logs and reports."""
        raise NotImplementedError
