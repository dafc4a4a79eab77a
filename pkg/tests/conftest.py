import sys
from pathlib import Path

import numpy as np
import pytest

from limelight.corpus import ClassLabel, LabeledDocument

TESTS_DIR = Path(__file__).parent
GOLDEN_DIR = TESTS_DIR / "golden"
STUB = [sys.executable, str(TESTS_DIR / "stub_adapter.py")]


def stub_command(mode: str = "hash", arg: str | None = None) -> list[str]:
    cmd = STUB + [mode]
    if arg is not None:
        cmd.append(arg)
    return cmd


def make_doc(doc_id: int, label: ClassLabel, tokens, raw_text: str | None = None):
    return LabeledDocument(
        id=doc_id, label=label, raw_text=raw_text or " ".join(tokens),
        tokens=tuple(tokens),
    )


def make_corpus(counts: dict[ClassLabel, int]) -> list[LabeledDocument]:
    docs, next_id = [], 0
    for label, n in counts.items():
        for _ in range(n):
            docs.append(make_doc(next_id, label, (f"tok{next_id % 7}", "fill")))
            next_id += 1
    return docs


def wls_oracle(Z, y, w, lam):
    """Independent weighted-ridge solve: stack sqrt(w)-scaled rows plus
    sqrt(lam) penalty rows (intercept unpenalized) and run lstsq."""
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n, d = Z.shape
    X = np.column_stack([np.ones(n), Z])
    rows = X * np.sqrt(w)[:, None]
    targets = y * np.sqrt(w)
    if lam > 0:
        penalty = np.sqrt(lam) * np.eye(d + 1)[1:]
        rows = np.vstack([rows, penalty])
        targets = np.concatenate([targets, np.zeros(d)])
    beta, *_ = np.linalg.lstsq(rows, targets, rcond=None)
    return beta[1:], float(beta[0])


@pytest.fixture
def run_cli(capsys):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    from limelight.cli import main

    def invoke(*argv):
        code = main([str(a) for a in argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return invoke
