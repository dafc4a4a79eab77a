"""Error analysis and report rendering.

Confusion counts with explicit tie tracking, per-class percentage
breakdowns with false-positive/negative rates, top-k frequency tables
per class, and explanation rendering to JSON, plain text or a
self-contained HTML page.
"""

from __future__ import annotations

import html
import json
import logging
import random
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import CLASS_NAMES, ClassLabel, LabeledDocument
from .engine import Explanation
from .errors import DataError, UsageError

logger = logging.getLogger(__name__)

N = len(CLASS_NAMES)
POSITIVE_CLASSES = frozenset({ClassLabel.HATE, ClassLabel.OFFENSIVE})


@dataclass
class ConfusionMatrix:
    """3x3 counts (rows = truth, columns = prediction) plus per-truth-class
    tie counts. A document ties when its two largest predicted
    probabilities are exactly equal; tied documents are tallied here and
    never assigned to a predicted class."""

    counts: np.ndarray          # (3, 3) int
    ties: np.ndarray            # (3,) int, indexed by truth class

    @property
    def total(self) -> int:
        return int(self.counts.sum() + self.ties.sum())

    @property
    def tie_count(self) -> int:
        return int(self.ties.sum())


def confusion(truth, probabilities, predictions=None,
              tie_epsilon: float = 0.0) -> ConfusionMatrix:
    """Count (truth, argmax) pairs, diverting exact-tie rows to the tie tally.

    `predictions` overrides the argmax for non-tied rows when given.
    `tie_epsilon` > 0 relaxes the tie test from bitwise equality to a
    tolerance.
    """
    probabilities = np.asarray(probabilities, dtype=float)
    truth = [ClassLabel(t) for t in truth]
    if len(truth) == 0:
        raise DataError("cannot build a confusion matrix from no documents")
    if probabilities.shape[0] != len(truth):
        raise DataError(
            f"{len(truth)} truth labels but {probabilities.shape[0]} probability rows"
        )
    if predictions is not None and len(predictions) != len(truth):
        raise DataError(
            f"{len(truth)} truth labels but {len(predictions)} predictions"
        )
    counts = np.zeros((N, N), dtype=int)
    ties = np.zeros(N, dtype=int)
    for i, t in enumerate(truth):
        row = probabilities[i]
        top = np.sort(row)[::-1]
        is_tie = (top[0] == top[1]) if tie_epsilon == 0.0 else (top[0] - top[1] <= tie_epsilon)
        if is_tie:
            ties[int(t)] += 1
        else:
            pred = int(predictions[i]) if predictions is not None else int(row.argmax())
            counts[int(t), pred] += 1
    return ConfusionMatrix(counts=counts, ties=ties)


@dataclass
class ErrorBreakdown:
    """Percentages derived from a ConfusionMatrix.

    A tied document is not a correct classification, so it counts toward
    the overall error rate and toward FP/FN according to its truth class.
    Row percentages (including the tie share) each sum to 100.
    """

    row_percentages: dict[str, dict[str, float]]
    overall_error_rate: float
    false_positive_rate: float
    false_negative_rate: float
    tie_rate: float

    def to_dict(self) -> dict:
        return {
            "rows": self.row_percentages,
            "overall_error_rate": self.overall_error_rate,
            "false_positive_rate": self.false_positive_rate,
            "false_negative_rate": self.false_negative_rate,
            "tie_rate": self.tie_rate,
        }

    def render_text(self) -> str:
        lines = ["Per-class outcome percentages (rows sum to 100):"]
        header = "truth      " + "".join(f"->{n:<11}" for n in CLASS_NAMES) + "tie"
        lines.append(header)
        for name, row in self.row_percentages.items():
            cells = "".join(f"{row['->' + n]:<13.1f}" for n in CLASS_NAMES)
            lines.append(f"{name:<11}{cells}{row['tie']:.1f}")
        lines.append("")
        lines.append(f"overall error rate: {self.overall_error_rate * 100:.2f}%")
        lines.append(f"false positives:    {self.false_positive_rate * 100:.2f}%")
        lines.append(f"false negatives:    {self.false_negative_rate * 100:.2f}%")
        lines.append(f"exact ties:         {self.tie_rate * 100:.2f}%")
        return "\n".join(lines) + "\n"


def error_breakdown(matrix: ConfusionMatrix,
                    positive_classes=POSITIVE_CLASSES) -> ErrorBreakdown:
    total = matrix.total
    if total == 0:
        raise DataError("empty confusion matrix")
    correct = int(np.trace(matrix.counts))
    errors = total - correct

    fp = 0  # truth outside positive classes, not correctly classified
    fn = 0  # truth in positive classes, not correctly classified
    for c in ClassLabel:
        wrong = int(matrix.counts[c].sum() - matrix.counts[c, c] + matrix.ties[c])
        if c in positive_classes:
            fn += wrong
        else:
            fp += wrong

    rows: dict[str, dict[str, float]] = {}
    for c in ClassLabel:
        row_total = int(matrix.counts[c].sum() + matrix.ties[c])
        row: dict[str, float] = {}
        for p in ClassLabel:
            row[f"->{p.display}"] = (
                100.0 * matrix.counts[c, p] / row_total if row_total else 0.0
            )
        row["tie"] = 100.0 * matrix.ties[c] / row_total if row_total else 0.0
        rows[c.display] = row

    return ErrorBreakdown(
        row_percentages=rows,
        overall_error_rate=errors / total,
        false_positive_rate=fp / total,
        false_negative_rate=fn / total,
        tie_rate=matrix.tie_count / total,
    )


@dataclass
class FrequencyTable:
    class_label: ClassLabel
    items: list[tuple[str, int]]  # count-descending, ties lexicographic

    def to_csv(self) -> str:
        lines = ["rank,token,count"]
        for rank, (token, count) in enumerate(self.items, start=1):
            quoted = '"' + token.replace('"', '""') + '"' if ("," in token or '"' in token) else token
            lines.append(f"{rank},{quoted},{count}")
        return "\n".join(lines) + "\n"


def top_frequent_words(docs: list[LabeledDocument], class_label: ClassLabel,
                       k: int = 60) -> FrequencyTable:
    """Most frequent tokens over the documents of one class."""
    counter: Counter = Counter()
    found = False
    for doc in docs:
        if doc.label == class_label:
            found = True
            counter.update(doc.tokens)
    if not found:
        logger.warning("no documents with class %s; frequency table is empty",
                       class_label.display)
    ranked = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
    return FrequencyTable(class_label=class_label, items=ranked[:k])


def frequency_svg(table: FrequencyTable, width: int = 640, bar_height: int = 16) -> str:
    """Deterministic horizontal bar chart for a frequency table."""
    pad, label_w = 4, 160
    height = pad * 2 + len(table.items) * (bar_height + pad) + 20
    max_count = max((c for _, c in table.items), default=1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="12">',
        f'<text x="{pad}" y="14" font-weight="bold">'
        f'{html.escape(table.class_label.display)}: top {len(table.items)} tokens</text>',
    ]
    y = 24
    for token, count in table.items:
        bar_w = max(1, int((width - label_w - 60) * count / max_count))
        parts.append(
            f'<text x="{label_w - pad}" y="{y + bar_height - 4}" '
            f'text-anchor="end">{html.escape(token)}</text>'
        )
        parts.append(
            f'<rect x="{label_w}" y="{y}" width="{bar_w}" height="{bar_height}" '
            f'fill="#4a90d9"/>'
        )
        parts.append(
            f'<text x="{label_w + bar_w + pad}" y="{y + bar_height - 4}">{count}</text>'
        )
        y += bar_height + pad
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def sample_per_class(docs: list[LabeledDocument], per_class: int = 50,
                     seed: int = 42) -> list[LabeledDocument]:
    """Seeded sample of `per_class` documents from each class, in class order."""
    rng = random.Random(seed)
    out: list[LabeledDocument] = []
    for label in ClassLabel:
        group = [d for d in docs if d.label == label]
        if len(group) < per_class:
            raise DataError(
                f"class {label.display} has {len(group)} documents; "
                f"need {per_class} to sample"
            )
        rng.shuffle(group)
        out.extend(group[:per_class])
    return out


# --- explanation rendering ------------------------------------------------

_POSITIVE_RGB = (230, 126, 34)   # orange for weights pushing toward the class
_NEGATIVE_RGB = (52, 152, 219)   # blue for weights pushing away

_HTML_STYLE = """
body { font-family: sans-serif; max-width: 52em; margin: 2em auto; color: #222; }
.bar-row { display: flex; align-items: center; margin: 2px 0; }
.bar-label { width: 7em; }
.bar-track { flex: 1; background: #eee; height: 18px; }
.bar-fill { background: #4a90d9; height: 18px; color: white;
            font-size: 12px; padding-left: 4px; white-space: nowrap; }
.doc { line-height: 1.9; background: #fafafa; padding: 0.8em; border: 1px solid #ddd; }
.tok { padding: 1px 2px; border-radius: 3px; }
table { border-collapse: collapse; margin: 0.5em 0; }
td, th { border: 1px solid #ccc; padding: 2px 8px; text-align: left; }
footer { margin-top: 2em; color: #999; font-size: 12px; }
"""


def _highlight_token(token: str, weight: float, max_abs: float) -> str:
    # zero-weight features keep their marker span (so occurrences stay
    # countable) but get no color: visually unhighlighted
    if weight == 0.0 or max_abs == 0.0:
        return f'<span class="tok" title="+0.0000">{html.escape(token)}</span>'
    rgb = _POSITIVE_RGB if weight > 0 else _NEGATIVE_RGB
    alpha = 0.15 + 0.85 * (abs(weight) / max_abs)
    return (
        f'<span class="tok" style="background: rgba({rgb[0]},{rgb[1]},{rgb[2]},'
        f'{alpha:.3f})" title="{weight:+.4f}">{html.escape(token)}</span>'
    )


def render_html(explanation: Explanation, timestamp: str | None = None) -> str:
    """Self-contained single-file report; deterministic unless a
    timestamp string is passed in."""
    exp = explanation
    parts = [
        "<!DOCTYPE html>",
        '<html><head><meta charset="utf-8"><title>limelight explanation</title>',
        f"<style>{_HTML_STYLE}</style></head><body>",
        "<h1>Prediction probability</h1>",
    ]
    for name, p in zip(exp.class_names, exp.prediction):
        parts.append(
            '<div class="bar-row">'
            f'<span class="bar-label">{html.escape(name)}</span>'
            '<div class="bar-track">'
            f'<div class="bar-fill" style="width: {p * 100:.1f}%">{p:.3f}</div>'
            "</div></div>"
        )
    for fit in exp.fits:
        name = exp.class_names[fit.class_index]
        weight_by_token = {
            exp.instance.features[i]: w
            for i, w in zip(fit.feature_indices, fit.weights)
        }
        max_abs = max((abs(w) for w in fit.weights), default=0.0)
        parts.append(
            f"<h2>Class {html.escape(name)}</h2>"
            f"<p>intercept {fit.intercept:+.4f}, local fit R&#178; {fit.local_score:.3f}</p>"
        )
        rendered = [
            _highlight_token(tok, weight_by_token[tok], max_abs)
            if tok in weight_by_token else html.escape(tok)
            for tok in exp.instance.tokens
        ]
        parts.append(f'<p class="doc">{" ".join(rendered)}</p>')
        parts.append("<table><tr><th>token</th><th>weight</th></tr>")
        for token, weight in fit.ranked(exp.instance):
            parts.append(
                f"<tr><td>{html.escape(token)}</td><td>{weight:+.4f}</td></tr>"
            )
        parts.append("</table>")
    if timestamp is not None:
        parts.append(f"<footer>generated {html.escape(timestamp)}</footer>")
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"


def render_text(explanation: Explanation) -> str:
    exp = explanation
    lines = ["Prediction probability"]
    for name, p in zip(exp.class_names, exp.prediction):
        lines.append(f"  {name:<10} {p:.3f}")
    for fit in exp.fits:
        name = exp.class_names[fit.class_index]
        lines.append("")
        lines.append(
            f"Class {name}  (intercept {fit.intercept:+.4f}, "
            f"local fit R^2 {fit.local_score:.3f})"
        )
        for token, weight in fit.ranked(exp.instance):
            lines.append(f"  {token:<16} {weight:+.4f}")
    return "\n".join(lines) + "\n"


def render_explanation_report(explanation: Explanation, fmt: str,
                              timestamp: str | None = None) -> str:
    if fmt == "json":
        return explanation.to_json() + "\n"
    if fmt == "html":
        return render_html(explanation, timestamp=timestamp)
    if fmt == "text":
        return render_text(explanation)
    raise UsageError(f"unknown report format: {fmt!r} (expected json, html or text)")


def analysis_report(matrix: ConfusionMatrix, breakdown: ErrorBreakdown) -> dict:
    return {
        "confusion": {
            "counts": matrix.counts.tolist(),
            "ties": matrix.ties.tolist(),
            "total": matrix.total,
        },
        "breakdown": breakdown.to_dict(),
    }


def render_confusion_text(matrix: ConfusionMatrix) -> str:
    lines = ["Confusion matrix (rows = truth, columns = prediction):"]
    header = "truth      " + "".join(f"{n:<11}" for n in CLASS_NAMES) + "tie"
    lines.append(header)
    for c in ClassLabel:
        cells = "".join(f"{int(matrix.counts[c, p]):<11d}" for p in ClassLabel)
        lines.append(f"{c.display:<11}{cells}{int(matrix.ties[c])}")
    lines.append(f"documents: {matrix.total}")
    return "\n".join(lines) + "\n"


def to_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
