"""Line-protocol server: one JSON request in, one JSON response out.

The adapter reads newline-delimited JSON requests on stdin and answers each
with exactly one line on stdout, in order, never batching. A handshake
naming protocol version ``prune-planner/1`` must succeed before any
prune request is honored; a ``shutdown`` request is answered and then the
process exits cleanly. Malformed input of any kind gets an error-status
response and the loop continues, so a confused client cannot wedge the
trainer side.

Without hooks the adapter runs in synthetic mode: it echoes the requested
ratio exactly (optionally jittered) and reports the built-in surface's
accuracy (optionally noised), which makes it a deterministic, training-free
counterparty for integration tests and dry runs.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from typing import IO, Optional

from .hooks import HookSet, Point
from .surface import synthetic_accuracy

PROTOCOL_VERSION = "prune-planner/1"
DIMENSIONS = ("depth", "width", "resolution")

_AXIS_INDEX = {"depth": 0, "width": 1, "resolution": 2}
BASE_POINT: Point = (1.0, 1.0, 1.0)


def _error(message: str) -> dict:
    return {"status": "error", "message": message}


@dataclass
class Adapter:
    """Protocol state machine: hand it requests, it hands back responses.

    Tracks the per-dimension chain (last achieved point per dimension) so
    hook-mode pruning can continue from the previous round's model, and
    refuses prune requests until a handshake has pinned the protocol version.
    """

    hooks: Optional[HookSet] = None
    noise_sd: float = 0.0
    echo_jitter: float = 0.0
    seed: int = 0
    handshaken: bool = field(default=False, init=False)
    chains: dict = field(default_factory=lambda: {d: BASE_POINT for d in DIMENSIONS}, init=False)

    def __post_init__(self) -> None:
        self._rng = random.Random(self.seed)

    # -- request handlers -------------------------------------------------

    def respond(self, request: object) -> tuple[dict, bool]:
        """Response document plus a flag marking a clean shutdown."""
        if not isinstance(request, dict):
            return _error("request must be a JSON object"), False
        action = request.get("action")
        if action == "handshake":
            return self._handshake(request), False
        if action == "shutdown":
            return {"status": "ok"}, True
        if action == "prune_finetune":
            return self._prune(request), False
        return _error(f"unknown action: {action!r}"), False

    def _handshake(self, request: dict) -> dict:
        protocol = request.get("protocol")
        if protocol != PROTOCOL_VERSION:
            return _error(f"unsupported protocol: {protocol!r}")
        self.handshaken = True
        return {"status": "ok", "protocol": PROTOCOL_VERSION}

    def _prune(self, request: dict) -> dict:
        if not self.handshaken:
            return _error("handshake required before prune_finetune")
        dimension = request.get("dimension")
        if dimension not in DIMENSIONS:
            return _error(f"unknown dimension: {dimension!r}")
        target = request.get("target")
        if not isinstance(target, (int, float)) or isinstance(target, bool):
            return _error("target must be a number")
        if not 0.0 < target <= 1.0:
            return _error(f"target must lie in (0, 1], got {target}")
        round_no = request.get("round")
        if not isinstance(round_no, int) or isinstance(round_no, bool) or round_no < 1:
            return _error("round must be a positive integer")
        if self.hooks is not None:
            hook = self.hooks.get(dimension)
            if hook is None:
                return _error(f"no hook registered for {dimension}")
            point, accuracy = hook(
                dimension, float(target), round_no, self.chains[dimension]
            )
        else:
            point, accuracy = self._synthetic(dimension, float(target))
        d, w, r = (float(x) for x in point)
        self.chains[dimension] = (d, w, r)
        return {
            "status": "ok",
            "d": d,
            "w": w,
            "r": r,
            "accuracy": min(max(float(accuracy), 0.0), 1.0),
        }

    def _synthetic(self, dimension: str, target: float) -> tuple[Point, float]:
        achieved = target
        if self.echo_jitter > 0.0:
            achieved += self._rng.uniform(-self.echo_jitter, self.echo_jitter)
        achieved = min(max(achieved, 1e-9), 1.0)
        point = [1.0, 1.0, 1.0]
        point[_AXIS_INDEX[dimension]] = achieved
        accuracy = synthetic_accuracy(*point)
        if self.noise_sd > 0.0:
            accuracy += self._rng.gauss(0.0, self.noise_sd)
        return (point[0], point[1], point[2]), accuracy


def serve(adapter: Adapter, stdin: IO[str] | None = None, stdout: IO[str] | None = None) -> int:
    """Run the read/answer loop until shutdown or end of input."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request: object = json.loads(line)
        except json.JSONDecodeError:
            request = None
            response, done = _error("invalid JSON"), False
        else:
            response, done = adapter.respond(request)
        stdout.write(json.dumps(response, separators=(",", ":")) + "\n")
        stdout.flush()
        if done:
            return 0
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="prune-planner-adapter",
        description="Synthetic-mode trainer adapter for the prune-planner line protocol.",
    )
    parser.add_argument("--noise-sd", type=float, default=0.0, help="Gaussian accuracy noise (fraction).")
    parser.add_argument("--jitter", type=float, default=0.0, help="Uniform echo jitter on the changed ratio.")
    parser.add_argument("--seed", type=int, default=0, help="Seed for noise and jitter.")
    args = parser.parse_args(argv)
    if args.noise_sd < 0 or args.jitter < 0:
        parser.error("--noise-sd and --jitter must be >= 0")
    adapter = Adapter(noise_sd=args.noise_sd, echo_jitter=args.jitter, seed=args.seed)
    return serve(adapter)


if __name__ == "__main__":
    sys.exit(main())
