"""Uniform black-box classifier handles.

Two realizations of the same contract (texts in, normalized per-class
probability rows out): the in-process baseline, and an external child
process speaking newline-delimited JSON over stdin/stdout so that a
classifier written in any language can be explained.

Wire protocol (version 1), one JSON object per line, UTF-8:

  adapter -> {"protocol": "limelight-blackbox", "version": 1, "classes": [...]}
  client  -> {"id": 1, "texts": ["...", ...]}
  adapter -> {"id": 1, "probabilities": [[...], ...]}
  adapter -> {"id": 2, "error": "message"}        (per-request failure)

EOF on the adapter's stdout is fatal; the handle restarts the child
once and re-sends the in-flight request before giving up.
"""

from __future__ import annotations

import json
import logging
import queue
import shlex
import subprocess
import threading
from itertools import count

import numpy as np

from .corpus import CLASS_NAMES
from .errors import ProtocolError
from .text import preprocess

logger = logging.getLogger(__name__)

PROTOCOL_NAME = "limelight-blackbox"
PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT = 5.0
DEFAULT_BATCH_TIMEOUT = 30.0
MAX_TEXTS_PER_REQUEST = 256

ROW_SUM_TOLERANCE = 1e-6


def validate_probability_matrix(rows, n_texts: int, n_classes: int) -> np.ndarray:
    """Boundary check applied to every batch before it reaches the engine."""
    if not isinstance(rows, list) or len(rows) != n_texts:
        got = len(rows) if isinstance(rows, list) else type(rows).__name__
        raise ProtocolError(f"expected {n_texts} probability rows, got {got}")
    matrix = np.empty((n_texts, n_classes))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n_classes:
            raise ProtocolError(f"row {i}: expected {n_classes} entries, got {row!r}")
        try:
            values = np.array([float(v) for v in row])
        except (TypeError, ValueError):
            raise ProtocolError(f"row {i}: non-numeric entry in {row!r}") from None
        if not np.isfinite(values).all() or (values < 0).any():
            raise ProtocolError(f"row {i}: entries must be finite and >= 0: {row!r}")
        total = float(values.sum())
        if abs(total - 1.0) > ROW_SUM_TOLERANCE:
            raise ProtocolError(f"row {i}: probabilities sum to {total!r}, not 1")
        matrix[i] = values
    return matrix


class ClassifierHandle:
    """Common surface: ordered class names and batched prediction."""

    kind = "abstract"

    def __init__(self, class_names: tuple[str, ...]):
        if not class_names:
            raise ProtocolError("a classifier handle needs at least one class")
        self.class_names = tuple(class_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def predict_proba_batch(self, texts: list[str]) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class InProcessHandle(ClassifierHandle):
    """Wraps the baseline classifier; preprocessing happens here, so the
    handle consumes raw text like the external one does."""

    kind = "in_process"

    def __init__(self, classifier):
        super().__init__(CLASS_NAMES)
        self._classifier = classifier

    def predict_proba_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.n_classes))
        token_lists = [tuple(preprocess(t)) for t in texts]
        matrix = self._classifier.predict_proba_tokens(token_lists)
        return validate_probability_matrix(matrix.tolist(), len(texts), self.n_classes)


class CallableHandle(ClassifierHandle):
    """Adapts any texts->rows function; handy for tests and custom models."""

    kind = "in_process"

    def __init__(self, fn, class_names: tuple[str, ...] = CLASS_NAMES):
        super().__init__(class_names)
        self._fn = fn

    def predict_proba_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.n_classes))
        rows = self._fn(list(texts))
        rows = rows.tolist() if isinstance(rows, np.ndarray) else [list(r) for r in rows]
        return validate_probability_matrix(rows, len(texts), self.n_classes)


class _ChildDied(Exception):
    """Internal signal: the adapter process is gone (EOF or broken pipe)."""


class _ChildProcess:
    """One spawned adapter: process, reader thread, line queue."""

    def __init__(self, argv: list[str]):
        try:
            self.proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot spawn adapter {argv!r}: {exc}") from None
        self.lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(None)  # EOF sentinel

    def read_line(self, timeout: float):
        try:
            return self.lines.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError from None

    def write_line(self, payload: str) -> None:
        try:
            self.proc.stdin.write(payload + "\n")
            self.proc.stdin.flush()
        except (OSError, ValueError):  # broken pipe / closed stream
            raise _ChildDied from None

    def alive(self) -> bool:
        return self.proc.poll() is None

    def shutdown(self) -> None:
        try:
            if self.proc.stdin:
                self.proc.stdin.close()
            self.proc.wait(timeout=2)
        except (OSError, subprocess.TimeoutExpired):
            self.proc.kill()
            self.proc.wait()


class ExternalHandle(ClassifierHandle):
    """Child-process classifier behind the JSONL protocol.

    Concurrent callers are allowed; a lock serializes round-trips over
    the single duplex channel, so ordering between concurrent calls is
    FIFO by acquisition and every response is matched to its request id.
    """

    kind = "external"

    def __init__(self, command, expected_classes: tuple[str, ...],
                 timeout: float = DEFAULT_BATCH_TIMEOUT,
                 handshake_timeout: float = HANDSHAKE_TIMEOUT):
        super().__init__(expected_classes)
        self._argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._timeout = timeout
        self._handshake_timeout = handshake_timeout
        self._ids = count(1)
        self._lock = threading.Lock()
        self._child = self._start()

    def _start(self) -> _ChildProcess:
        child = _ChildProcess(self._argv)
        try:
            line = child.read_line(self._handshake_timeout)
        except TimeoutError:
            child.shutdown()
            raise ProtocolError(
                f"adapter did not send a handshake within {self._handshake_timeout:g}s"
            ) from None
        if line is None:
            child.shutdown()
            raise ProtocolError("adapter exited before sending a handshake")
        try:
            handshake = json.loads(line)
        except json.JSONDecodeError:
            child.shutdown()
            raise ProtocolError(f"handshake is not valid JSON: {line!r}") from None
        if handshake.get("protocol") != PROTOCOL_NAME:
            child.shutdown()
            raise ProtocolError(f"unknown protocol in handshake: {handshake!r}")
        if handshake.get("version") != PROTOCOL_VERSION:
            child.shutdown()
            raise ProtocolError(
                f"protocol version mismatch: adapter speaks "
                f"{handshake.get('version')!r}, this tool speaks {PROTOCOL_VERSION}"
            )
        classes = tuple(handshake.get("classes") or ())
        if [c.lower() for c in classes] != [c.lower() for c in self.class_names]:
            child.shutdown()
            raise ProtocolError(
                f"adapter classes {list(classes)} do not match expected "
                f"{list(self.class_names)}"
            )
        return child

    def predict_proba_batch(self, texts: list[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.n_classes))
        chunks = [
            texts[i:i + MAX_TEXTS_PER_REQUEST]
            for i in range(0, len(texts), MAX_TEXTS_PER_REQUEST)
        ]
        with self._lock:
            parts = [self._round_trip(chunk) for chunk in chunks]
        return np.vstack(parts)

    def _round_trip(self, texts: list[str]) -> np.ndarray:
        request_id = next(self._ids)
        payload = json.dumps({"id": request_id, "texts": texts}, ensure_ascii=False)
        restarted = False
        while True:
            try:
                self._child.write_line(payload)
                rows = self._await_response(request_id)
                return validate_probability_matrix(rows, len(texts), self.n_classes)
            except _ChildDied:
                if restarted:
                    raise ProtocolError(
                        "adapter died again after one restart; giving up"
                    ) from None
                logger.warning("adapter died; restarting once and re-sending request %d",
                               request_id)
                restarted = True
                self._child.shutdown()
                self._child = self._start()

    def _await_response(self, request_id: int):
        while True:
            try:
                line = self._child.read_line(self._timeout)
            except TimeoutError:
                if not self._child.alive():
                    raise _ChildDied from None
                raise ProtocolError(
                    f"adapter did not answer request {request_id} within "
                    f"{self._timeout:.0f}s"
                ) from None
            if line is None:
                raise _ChildDied
            try:
                response = json.loads(line)
            except json.JSONDecodeError:
                raise ProtocolError(f"adapter sent a malformed line: {line!r}") from None
            got_id = response.get("id")
            if got_id != request_id:
                if isinstance(got_id, int) and got_id < request_id:
                    logger.debug("ignoring stale response id %s", got_id)
                    continue  # duplicate of an already-answered request
                raise ProtocolError(
                    f"response id {got_id!r} does not echo request id {request_id}"
                )
            if "error" in response:
                raise ProtocolError(f"adapter error: {response['error']}")
            if "probabilities" not in response:
                raise ProtocolError(f"response lacks 'probabilities': {response!r}")
            return response["probabilities"]

    def close(self) -> None:
        self._child.shutdown()


def open_external(command, expected_classes: tuple[str, ...] = CLASS_NAMES,
                  timeout: float = DEFAULT_BATCH_TIMEOUT) -> ExternalHandle:
    """Spawn an adapter, complete the handshake, return a live handle."""
    return ExternalHandle(command, expected_classes, timeout=timeout)
