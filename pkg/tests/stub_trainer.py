"""Minimal line-protocol trainer used by the subprocess wiring tests.

Answers every prune request with the exact target and a fixed accuracy rule,
so the parent can assert the full round trip without any training machinery.
"""

import json
import sys

AXIS = {"depth": "d", "width": "w", "resolution": "r"}


def main() -> None:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        action = request.get("action")
        if action == "handshake":
            response = {"status": "ok", "protocol": request.get("protocol")}
        elif action == "shutdown":
            print(json.dumps({"status": "ok"}), flush=True)
            return
        elif action == "prune_finetune":
            coords = {"d": 1.0, "w": 1.0, "r": 1.0}
            coords[AXIS[request["dimension"]]] = request["target"]
            accuracy = 0.5 + 0.1 * (coords["d"] + coords["w"] + coords["r"]) / 3.0
            response = {"status": "ok", **coords, "accuracy": accuracy}
        else:
            response = {"status": "error", "message": f"unknown action {action!r}"}
        print(json.dumps(response), flush=True)


if __name__ == "__main__":
    main()
