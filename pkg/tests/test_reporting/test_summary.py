"""Tests for RunSummary."""

import logging

import pytest

from crosscut.models import EvalReport, Pose
from crosscut.reporting import RunSummary


def _report(q, precision, recall):
    return EvalReport(q_positions=q, precision=precision, recall=recall,
                      global_alignment=Pose())


class TestRunSummary:
    """Operation log and the closing tables."""

    def test_empty_summary_has_only_the_title(self):
        assert RunSummary("Solve").get_summary().strip() == "Solve Summary:"

    def test_failures_are_listed(self, caplog):
        summary = RunSummary()
        with caplog.at_level(logging.WARNING):
            summary.log_operation(False, "UnsolvableError: no 0-loop", item="p.ccpuzzle")
        summary.log_operation(True, "Wrote s.ccsol", item="q.ccpuzzle", outputs=["s.ccsol"])
        assert [op.item for op in summary.failures] == ["p.ccpuzzle"]
        text = summary.get_summary()
        assert "Items with errors:" in text
        assert "p.ccpuzzle  UnsolvableError: no 0-loop" in text
        assert "Files written: 1" in text
        assert "no 0-loop" in caplog.text

    def test_scores_table_and_means(self):
        summary = RunSummary("Evaluate")
        summary.log_operation(True, "a", item="a", evaluation=_report(1.0, 1.0, 1.0))
        summary.log_operation(True, "b", item="b", evaluation=_report(0.5, 0.8, None))
        means = summary.mean_scores()
        assert means["q_positions"] == pytest.approx(0.75)
        assert means["precision"] == pytest.approx(0.9)
        assert means["recall"] == pytest.approx(1.0)
        assert means["count"] == 2
        text = summary.get_summary()
        assert "Scores:" in text
        assert "n/a" in text
        mean_row = next(line for line in text.splitlines() if line.strip().startswith("Mean"))
        assert "0.7500" in mean_row and "0.9000" in mean_row

    def test_no_scores_without_evaluations(self):
        summary = RunSummary()
        summary.log_operation(True, "Wrote x", outputs=["x"])
        assert summary.mean_scores() is None
        assert "Scores:" not in summary.get_summary()

    def test_failed_operations_do_not_count_as_written(self):
        summary = RunSummary()
        summary.log_operation(False, "boom", outputs=["never.ccsol"])
        assert "Files written" not in summary.get_summary()
