"""Per-run operation log and the aligned summary tables printed at the end."""

import logging
from typing import List, Optional

import numpy as np

from crosscut.models import EvalReport, RunRecord

logger = logging.getLogger(__name__)


class RunSummary:
    """Collects what each step did to each item and formats the closing summary."""

    def __init__(self, title: str = "Run"):
        self.title = title
        self.operations: List[RunRecord] = []

    def log_operation(
        self,
        success: bool,
        message: str,
        item: Optional[str] = None,
        evaluation: Optional[EvalReport] = None,
        outputs: Optional[List[str]] = None,
    ) -> None:
        """Record an operation and log it."""
        self.operations.append(
            RunRecord(
                success=success,
                message=message,
                item=item,
                evaluation=evaluation,
                outputs=outputs or [],
            )
        )
        if success:
            logger.info(message)
        else:
            logger.warning(message)

    @property
    def failures(self) -> List[RunRecord]:
        return [op for op in self.operations if not op.success]

    def evaluations(self) -> List[RunRecord]:
        return [op for op in self.operations if op.success and op.evaluation is not None]

    def mean_scores(self) -> Optional[dict]:
        """Dataset means of the scores; recall averages only over defined values."""
        rows = self.evaluations()
        if not rows:
            return None
        recalls = [op.evaluation.recall for op in rows if op.evaluation.recall is not None]
        return {
            "q_positions": float(np.mean([op.evaluation.q_positions for op in rows])),
            "precision": float(np.mean([op.evaluation.precision for op in rows])),
            "recall": float(np.mean(recalls)) if recalls else None,
            "count": len(rows),
        }

    def get_summary(self) -> str:
        summary = [f"\n{self.title} Summary:"]

        failures = self.failures
        if failures:
            summary.append("\nItems with errors:")
            width = max(len(op.item or "-") for op in failures)
            summary.extend(f"  {op.item or '-':<{width}}  {op.message}" for op in failures)

        rows = self.evaluations()
        if rows:
            summary.append("\nScores:")
            width = max(len("Puzzle"), *(len(op.item or "-") for op in rows))
            summary.append(
                f"  {'Puzzle':<{width}}  {'Q_pos':>8}  {'Precision':>9}  {'Recall':>8}"
            )
            for op in rows:
                ev = op.evaluation
                recall = "n/a" if ev.recall is None else f"{ev.recall:.4f}"
                summary.append(
                    f"  {op.item or '-':<{width}}  {ev.q_positions:>8.4f}  "
                    f"{ev.precision:>9.4f}  {recall:>8}"
                )
            means = self.mean_scores()
            recall = "n/a" if means["recall"] is None else f"{means['recall']:.4f}"
            summary.append(
                f"  {'Mean':<{width}}  {means['q_positions']:>8.4f}  "
                f"{means['precision']:>9.4f}  {recall:>8}"
            )

        written = [path for op in self.operations if op.success for path in op.outputs]
        if written:
            summary.append(f"\nFiles written: {len(written)}")
            summary.extend(f"  {path}" for path in written)

        return "\n".join(summary)
