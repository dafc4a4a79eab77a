"""Configurable protocol stub used by the test suite.

Speaks the limelight-blackbox v1 wire protocol over stdin/stdout with
selectable (mis)behaviors so boundary validation, restart and timeout
paths can all be exercised without the real adapter package.
"""

import hashlib
import json
import sys
import time

CLASSES = ["Hate", "Offensive", "None"]


def hash_row(text: str) -> list[float]:
    """Deterministic pseudo-distribution derived from the text bytes."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    raw = [1 + digest[0], 1 + digest[1], 1 + digest[2]]
    total = sum(raw)
    return [v / total for v in raw]


def const_row(spec: str) -> list[float]:
    return [float(v) for v in spec.split(",")]


def main(argv) -> int:
    mode = argv[1] if len(argv) > 1 else "hash"
    arg = argv[2] if len(argv) > 2 else None

    if mode == "silent":  # never sends a handshake
        time.sleep(30)
        return 0
    if mode == "die-before-handshake":
        return 1

    handshake = {"protocol": "limelight-blackbox", "version": 1, "classes": CLASSES}
    if mode == "wrong-classes":
        handshake["classes"] = ["Hate", "Offensive"]
    elif mode == "bad-version":
        handshake["version"] = 99
    elif mode == "bad-protocol":
        handshake["protocol"] = "something-else"
    sys.stdout.write(json.dumps(handshake) + "\n")
    sys.stdout.flush()

    answered = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        request_id, texts = request["id"], request["texts"]

        if mode == "die-after" and answered >= int(arg):
            return 1
        if mode == "slow-response":
            time.sleep(float(arg or 3))

        if mode == "const":
            rows = [const_row(arg or "1,0,0") for _ in texts]
        elif mode == "bad-sum":
            rows = [[0.5, 0.3, 0.1] for _ in texts]
        elif mode == "negative":
            rows = [[1.2, -0.1, -0.1] for _ in texts]
        elif mode == "bad-count":
            rows = [hash_row(t) for t in texts[:-1]] or [[1, 0, 0]]
        elif mode == "garbage":
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
            continue
        elif mode == "error-response":
            sys.stdout.write(json.dumps({"id": request_id, "error": "boom"}) + "\n")
            sys.stdout.flush()
            continue
        else:  # "hash" and "dup"
            rows = [hash_row(t) for t in texts]

        response = json.dumps({"id": request_id, "probabilities": rows})
        sys.stdout.write(response + "\n")
        if mode == "dup":
            sys.stdout.write(response + "\n")
        sys.stdout.flush()
        answered += 1
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
