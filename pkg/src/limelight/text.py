"""Tweet tokenization and the preprocessing pipeline.

Pipeline: tokenize -> drop stopwords/pronouns -> stem -> re-filter.
Hashtag tokens ('#...') pass through untouched apart from lowercasing.
The stemmer runs to a fixed point and stopwords are filtered again
afterwards, which makes the whole pipeline idempotent: feeding its own
output back through it returns the same tokens.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

from .stemmer import stem_to_fixpoint

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_TOKEN_RE = re.compile(r"#?\w+")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; URLs and @-mentions dropped, '#' kept."""
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def _load_wordlist(name: str) -> frozenset[str]:
    raw = resources.files("limelight.data").joinpath(name).read_text("utf-8")
    words = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


@lru_cache(maxsize=None)
def stop_and_pronoun_set() -> frozenset[str]:
    return _load_wordlist("stopwords.txt") | _load_wordlist("pronouns.txt")


def remove_stop_and_pronouns(tokens: list[str]) -> list[str]:
    """Drop tokens found in the bundled lists; hashtags are never dropped."""
    stopset = stop_and_pronoun_set()
    return [t for t in tokens if t.startswith("#") or t not in stopset]


def stem_token(token: str) -> str:
    """Single Porter pass; hashtag tokens returned unchanged."""
    if token.startswith("#"):
        return token
    from .stemmer import stem

    return stem(token)


def _stem_stable(token: str) -> str:
    if token.startswith("#"):
        return token
    return stem_to_fixpoint(token)


def preprocess(text: str) -> list[str]:
    """Full pipeline from raw text to normalized tokens.

    Stopwords are filtered both before and after stemming: a stem can
    land on a list entry (e.g. "ares" -> "are") and the output contract
    is that no stopword survives.
    """
    tokens = remove_stop_and_pronouns(tokenize(text))
    tokens = [_stem_stable(t) for t in tokens]
    return [t for t in remove_stop_and_pronouns(tokens) if t]


def preprocess_light(text: str) -> list[str]:
    """Tokenize only (no stopword removal, no stemming).

    Used when explaining external classifiers that consume natural
    text; the instance tokens stay recognizable words.
    """
    return tokenize(text)
