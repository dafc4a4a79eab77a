"""Reference external classifier for the limelight-blackbox protocol.

Runs as a child process of the explainer and answers probability
requests over stdin/stdout (UTF-8 JSON Lines, handshake first, one
response per request, flush after every line). Ships a stdlib-only
keyword scorer so the protocol can be exercised with no ML stack
installed, plus an optional hook that wraps a Hugging Face text
classification pipeline when the transformers package is available.

Usage:
    python3 limelight_adapter.py                 # keyword scorer
    python3 limelight_adapter.py --hf-model NAME # transformers wrapper
"""

from __future__ import annotations

import argparse
import json
import re
import sys

PROTOCOL_NAME = "limelight-blackbox"
PROTOCOL_VERSION = 1
CLASS_NAMES = ("hate", "offensive", "none")

HATE_KEYWORDS = frozenset({
    "hate", "hateful", "hating", "despise", "bigot", "bigoted", "racist",
})
OFFENSIVE_KEYWORDS = frozenset({
    "stupid", "idiot", "moron", "trash", "ugly", "loser", "dumb",
})

_WORD_RE = re.compile(r"[a-z0-9']+")
_KEYWORD_POINTS = 2.0


class KeywordModel:
    """Transparent scorer: each keyword hit adds points to its class.

    Every class starts at 1 point; a text with no keyword at all gives
    the extra points to "none" instead. A text containing at least one
    hate keyword and no offensive keyword therefore always scores the
    hate class strictly highest.
    """

    class_names = CLASS_NAMES

    def predict(self, texts):
        return [self._score(t) for t in texts]

    @staticmethod
    def _score(text):
        words = set(_WORD_RE.findall(text.lower()))
        hate_hits = len(words & HATE_KEYWORDS)
        offensive_hits = len(words & OFFENSIVE_KEYWORDS)
        scores = [1.0 + _KEYWORD_POINTS * hate_hits,
                  1.0 + _KEYWORD_POINTS * offensive_hits,
                  1.0]
        if hate_hits == 0 and offensive_hits == 0:
            scores[2] += _KEYWORD_POINTS
        return scores


class TransformersModel:
    """Optional wrapper around a Hugging Face text-classification pipeline.

    Expects the wrapped model to emit one score per class; scores are
    mapped onto (hate, offensive, none) by label order. Excluded from
    the conformance tests; the keyword scorer is the reference vehicle.
    """

    class_names = CLASS_NAMES

    def __init__(self, model_name):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise SystemExit(
                "the --hf-model hook needs the 'transformers' package "
                f"installed ({exc})"
            )
        self._pipe = pipeline("text-classification", model=model_name,
                              top_k=None, truncation=True)

    def predict(self, texts):
        rows = []
        for result in self._pipe(list(texts)):
            by_label = {entry["label"].lower(): entry["score"] for entry in result}
            rows.append([by_label.get(name, 0.0) for name in self.class_names])
        return rows


def _normalized(row):
    total = float(sum(row))
    if total <= 0:
        return [1.0 / len(row)] * len(row)
    return [float(v) / total for v in row]


def serve(model, stdin=None, stdout=None) -> int:
    """Answer requests until EOF on stdin; returns the exit code."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def emit(payload):
        stdout.write(json.dumps(payload) + "\n")
        stdout.flush()

    emit({"protocol": PROTOCOL_NAME, "version": PROTOCOL_VERSION,
          "classes": list(model.class_names)})

    for line in stdin:
        line = line.strip()
        if not line:
            continue
        request_id = None
        try:
            request = json.loads(line)
            request_id = request.get("id") if isinstance(request, dict) else None
            texts = request["texts"]
            if not isinstance(texts, list) or not all(
                    isinstance(t, str) for t in texts):
                raise ValueError("'texts' must be a list of strings")
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            emit({"id": request_id, "error": f"bad request: {exc}"})
            continue
        try:
            rows = [_normalized(row) for row in model.predict(texts)]
        except Exception as exc:  # a bad model must not kill the channel
            emit({"id": request_id, "error": f"scoring failed: {exc}"})
            continue
        emit({"id": request_id, "probabilities": rows})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="limelight-blackbox reference adapter")
    parser.add_argument("--hf-model", metavar="NAME",
                        help="wrap a transformers text-classification model "
                             "instead of the built-in keyword scorer")
    args = parser.parse_args(argv)
    model = TransformersModel(args.hf_model) if args.hf_model else KeywordModel()
    return serve(model)


if __name__ == "__main__":
    sys.exit(main())
