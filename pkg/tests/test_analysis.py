"""Confusion/error analysis, frequency tables and report rendering."""

import json
import logging

import numpy as np
import pytest

from limelight.analysis import (
    confusion,
    error_breakdown,
    frequency_svg,
    render_explanation_report,
    render_html,
    sample_per_class,
    top_frequent_words,
)
from limelight.corpus import ClassLabel
from limelight.engine import (
    Explanation,
    Instance,
    KernelConfig,
    SurrogateConfig,
    SurrogateFit,
)
from limelight.errors import DataError, UsageError

from conftest import GOLDEN_DIR, make_doc


def rows_for(label: int, n: int):
    """Probability rows that argmax to `label` without ties."""
    row = [0.1, 0.1, 0.1]
    row[label] = 0.8
    return [list(row) for _ in range(n)]


def fig4_fixture() -> Explanation:
    instance = Instance(original_text="ass f**k redskin",
                        features=("ass", "f**k", "redskin"),
                        tokens=("ass", "f**k", "redskin"))
    fit = SurrogateFit(class_index=0, feature_indices=(0, 1, 2),
                       weights=(0.5, 0.49, 0.35), intercept=0.05,
                       local_score=0.92)
    return Explanation(instance=instance, prediction=(0.61, 0.25, 0.14),
                       class_names=("Hate", "Offensive", "None"), fits=(fit,),
                       kernel=KernelConfig(), surrogate=SurrogateConfig())


def paper_150_matrix():
    """The published 150-document analysis, rebuilt from its percentages.

    Hate: 78% correct, 18% -> Offensive, 4% -> None.
    Offensive: 74% correct, 22% -> Hate, 2% -> None, 2% tie.
    None: 84% correct, 2% -> Offensive, 14% -> Hate.
    """
    truth, probas = [], []

    def add(t, p, n):
        truth.extend([t] * n)
        probas.extend(rows_for(p, n))

    def add_tie(t, n):
        truth.extend([t] * n)
        probas.extend([[0.4, 0.4, 0.2]] * n)

    add(0, 0, 39); add(0, 1, 9); add(0, 2, 2)
    add(1, 1, 37); add(1, 0, 11); add(1, 2, 1); add_tie(1, 1)
    add(2, 2, 42); add(2, 1, 1); add(2, 0, 7)
    return confusion(truth, probas)


class TestConfusion:
    def test_all_correct_is_diagonal(self):
        truth = [0, 1, 2, 0]
        probas = rows_for(0, 1) + rows_for(1, 1) + rows_for(2, 1) + rows_for(0, 1)
        matrix = confusion(truth, probas)
        assert np.trace(matrix.counts) == 4
        assert matrix.counts.sum() == 4
        assert matrix.tie_count == 0

    def test_hate_row_percentages(self):
        truth = [0] * 50
        probas = rows_for(0, 39) + rows_for(1, 9) + rows_for(2, 2)
        matrix = confusion(truth, probas)
        breakdown = error_breakdown(matrix)
        row = breakdown.row_percentages["Hate"]
        assert row["->Hate"] == pytest.approx(78.0)
        assert row["->Offensive"] == pytest.approx(18.0)
        assert row["->None"] == pytest.approx(4.0)

    def test_exact_tie_counted_separately(self):
        matrix = confusion([0], [[0.4, 0.4, 0.2]])
        assert matrix.tie_count == 1
        assert matrix.counts.sum() == 0

    def test_near_tie_is_not_a_tie_without_epsilon(self):
        matrix = confusion([0], [[0.4, 0.4 - 1e-12, 0.2 + 1e-12]])
        assert matrix.tie_count == 0
        matrix = confusion([0], [[0.4, 0.4 - 1e-12, 0.2 + 1e-12]], tie_epsilon=1e-9)
        assert matrix.tie_count == 1

    def test_explicit_predictions_override_argmax(self):
        matrix = confusion([0], [[0.2, 0.7, 0.1]], predictions=[2])
        assert matrix.counts[0, 2] == 1

    def test_length_mismatch(self):
        with pytest.raises(DataError, match="probability rows"):
            confusion([0, 1], [[1.0, 0.0, 0.0]])


class TestErrorBreakdown:
    def test_perfect_matrix_all_zero_rates(self):
        probas = rows_for(0, 2) + rows_for(1, 2) + rows_for(2, 2)
        breakdown = error_breakdown(confusion([0, 0, 1, 1, 2, 2], probas))
        assert breakdown.overall_error_rate == 0.0
        assert breakdown.false_positive_rate == 0.0
        assert breakdown.false_negative_rate == 0.0
        assert breakdown.tie_rate == 0.0

    def test_paper_150_document_fixture(self):
        matrix = paper_150_matrix()
        assert matrix.total == 150
        breakdown = error_breakdown(matrix)
        # within one document of the published 21% error rate
        assert abs(breakdown.overall_error_rate - 0.21) <= 1 / 150
        # FP + FN must equal the overall error rate exactly
        assert breakdown.false_positive_rate + breakdown.false_negative_rate == (
            pytest.approx(breakdown.overall_error_rate, abs=1e-12))
        assert breakdown.false_negative_rate == pytest.approx(24 / 150, abs=1e-12)
        assert breakdown.false_positive_rate == pytest.approx(8 / 150, abs=1e-12)
        assert breakdown.tie_rate == pytest.approx(1 / 150, abs=1e-12)

    def test_rows_sum_to_one_hundred(self):
        matrix = paper_150_matrix()
        for row in error_breakdown(matrix).row_percentages.values():
            assert sum(row.values()) == pytest.approx(100.0, abs=0.1)

    def test_only_none_truth_errors_means_no_false_negatives(self):
        probas = rows_for(0, 2) + rows_for(1, 2) + rows_for(0, 2)  # None -> Hate
        breakdown = error_breakdown(confusion([0, 0, 1, 1, 2, 2], probas))
        assert breakdown.false_negative_rate == 0.0
        assert breakdown.false_positive_rate > 0.0


class TestFrequencies:
    def test_counts_and_order(self):
        docs = [make_doc(0, ClassLabel.HATE, ("bad", "bad", "sad"))]
        table = top_frequent_words(docs, ClassLabel.HATE)
        assert table.items == [("bad", 2), ("sad", 1)]

    def test_k_larger_than_vocabulary(self):
        docs = [make_doc(0, ClassLabel.NONE, ("x", "y"))]
        table = top_frequent_words(docs, ClassLabel.NONE, k=100)
        assert len(table.items) == 2

    def test_document_order_does_not_matter(self):
        docs = [
            make_doc(0, ClassLabel.HATE, ("a", "b")),
            make_doc(1, ClassLabel.HATE, ("b", "c")),
        ]
        forward = top_frequent_words(docs, ClassLabel.HATE)
        backward = top_frequent_words(list(reversed(docs)), ClassLabel.HATE)
        assert forward.items == backward.items

    def test_ties_break_lexicographically(self):
        docs = [make_doc(0, ClassLabel.HATE, ("zeta", "alpha", "mid"))]
        table = top_frequent_words(docs, ClassLabel.HATE)
        assert table.items == [("alpha", 1), ("mid", 1), ("zeta", 1)]

    def test_absent_class_warns_and_is_empty(self, caplog):
        docs = [make_doc(0, ClassLabel.HATE, ("a",))]
        with caplog.at_level(logging.WARNING):
            table = top_frequent_words(docs, ClassLabel.NONE)
        assert table.items == []
        assert any("no documents with class None" in r.message for r in caplog.records)

    def test_csv_shape(self):
        docs = [make_doc(0, ClassLabel.HATE, ("bad", "bad", "sad"))]
        csv_text = top_frequent_words(docs, ClassLabel.HATE).to_csv()
        assert csv_text.splitlines() == ["rank,token,count", "1,bad,2", "2,sad,1"]

    def test_svg_is_deterministic_and_contains_tokens(self):
        docs = [make_doc(0, ClassLabel.HATE, ("bad", "bad", "sad"))]
        table = top_frequent_words(docs, ClassLabel.HATE)
        svg_a, svg_b = frequency_svg(table), frequency_svg(table)
        assert svg_a == svg_b
        assert "bad" in svg_a and "sad" in svg_a and "<svg" in svg_a


class TestSamplePerClass:
    def make_docs(self, per_class=60):
        docs = []
        i = 0
        for label in ClassLabel:
            for _ in range(per_class):
                docs.append(make_doc(i, label, ("w",)))
                i += 1
        return docs

    def test_fifty_per_class_seeded(self):
        docs = self.make_docs()
        sampled = sample_per_class(docs, per_class=50, seed=7)
        assert len(sampled) == 150
        for label in ClassLabel:
            assert sum(1 for d in sampled if d.label == label) == 50
        again = sample_per_class(docs, per_class=50, seed=7)
        assert [d.id for d in sampled] == [d.id for d in again]

    def test_insufficient_class_errors_by_name(self):
        docs = self.make_docs(per_class=10)
        with pytest.raises(DataError, match="class Hate has 10"):
            sample_per_class(docs, per_class=50)


class TestRendering:
    def test_fig4_html_matches_golden(self):
        golden = (GOLDEN_DIR / "fig4.html").read_text(encoding="utf-8")
        assert render_html(fig4_fixture()) == golden

    def test_fig4_highlights_exactly_the_three_tokens_and_hate_bar_tallest(self):
        html_out = render_html(fig4_fixture())
        assert html_out.count('<span class="tok"') == 3
        for token in ("ass", "f**k", "redskin"):
            assert token in html_out
        widths = {
            name: float(html_out.split(f'>{name}</span><div class="bar-track">'
                                       '<div class="bar-fill" style="width: ')[1]
            .split("%")[0])
            for name in ("Hate", "Offensive", "None")
        }
        assert widths["Hate"] > widths["Offensive"] > widths["None"]

    def test_all_zero_weights_render_without_highlights(self):
        instance = Instance("calm words", ("calm", "words"), ("calm", "words"))
        fit = SurrogateFit(0, (0, 1), (0.0, 0.0), 0.4, 1.0)
        explanation = Explanation(instance, (0.5, 0.3, 0.2),
                                  ("Hate", "Offensive", "None"), (fit,))
        html_out = render_html(explanation)
        doc_block = html_out.split('<p class="doc">')[1].split("</p>")[0]
        assert "rgba(" not in doc_block  # no colored highlight anywhere
        assert "0.500" in html_out  # probabilities still rendered

    def test_every_occurrence_highlighted(self):
        instance = Instance("go go stop", ("go", "stop"), ("go", "go", "stop"))
        fit = SurrogateFit(0, (0, 1), (0.9, -0.2), 0.0, 1.0)
        explanation = Explanation(instance, (0.6, 0.3, 0.1),
                                  ("Hate", "Offensive", "None"), (fit,))
        html_out = render_html(explanation)
        assert html_out.count('<span class="tok"') == 3

    def test_json_report_round_trips(self):
        explanation = fig4_fixture()
        rendered = render_explanation_report(explanation, "json")
        rebuilt = Explanation.from_dict(json.loads(rendered))
        assert rebuilt.to_dict() == explanation.to_dict()

    def test_text_report_contains_ranked_weights(self):
        rendered = render_explanation_report(fig4_fixture(), "text")
        assert "Prediction probability" in rendered
        assert rendered.index("ass") < rendered.index("redskin")

    def test_unknown_format_rejected(self):
        with pytest.raises(UsageError, match="unknown report format"):
            render_explanation_report(fig4_fixture(), "pdf")

    def test_timestamp_only_when_requested(self):
        with_ts = render_html(fig4_fixture(), timestamp="2026-01-01T00:00:00")
        without = render_html(fig4_fixture())
        assert "generated 2026-01-01T00:00:00" in with_ts
        assert "footer>" not in without.replace("footer {", "")
