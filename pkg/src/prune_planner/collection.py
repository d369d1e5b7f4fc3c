"""Iterative sample collection against a pluggable trainer.

A collection run owns one trainer exclusively and drives it through a
handshake, a fixed schedule of prune-and-finetune rounds (one dimension at a
time, each dimension restarting from the base model so the regression gets
clean axis-aligned slices), and a shutdown. Every request/response pair is a
single line of JSON; the verbatim alternating line log is the transcript,
which makes interrupted runs resumable and completed runs replayable without
touching the trainer again.

Wire protocol (newline-delimited JSON over the child's stdin/stdout):

    -> {"action":"handshake","protocol":"prune-planner/1"}
    <- {"status":"ok","protocol":"prune-planner/1"}
    -> {"action":"prune_finetune","dimension":"width","target":0.8536,"round":2}
    <- {"status":"ok","d":1.0,"w":0.85,"r":1.0,"accuracy":0.9155}
    -> {"action":"shutdown"}
    <- {"status":"ok"}

Responses echo the achieved ratios; real trainers snap to integer layer and
filter counts, so the changed coordinate may differ from the request by up to
``ECHO_TOLERANCE``.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .dataset import Dataset
from .maps import AccuracySample, DimTriple, SeparableMap, eval_separable

PROTOCOL_VERSION = "prune-planner/1"
DIMENSIONS = ("depth", "width", "resolution")
ECHO_TOLERANCE = 0.02

_AXIS_OF = {"depth": "d", "width": "w", "resolution": "r"}


class ProtocolError(RuntimeError):
    """A malformed or out-of-contract trainer exchange; aborts the run."""


class PartialCollectionWarning(UserWarning):
    """Some rounds failed; the returned dataset keeps what was collected."""


def encode_message(message: dict) -> str:
    return json.dumps(message, separators=(",", ":"))


@dataclass(frozen=True)
class CollectionConfig:
    """Budget, rounds-per-dimension, and the base model's known accuracy."""

    t: float
    rds: int
    base_accuracy: float
    base_point: DimTriple = field(default_factory=DimTriple.base)

    def __post_init__(self) -> None:
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"budget must lie in (0, 1), got {self.t}")
        if self.rds < 1:
            raise ValueError(f"rds must be >= 1, got {self.rds}")
        if not 0.0 <= self.base_accuracy <= 1.0:
            raise ValueError(f"base_accuracy must lie in [0, 1], got {self.base_accuracy}")


@dataclass(frozen=True)
class Schedule:
    """Strictly decreasing prune targets for one dimension."""

    dimension: str
    targets: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"unknown dimension {self.dimension!r}")
        if not self.targets:
            raise ValueError("schedule needs at least one target")
        if any(b >= a for a, b in zip(self.targets, self.targets[1:])):
            raise ValueError("schedule targets must be strictly decreasing")


def make_schedule(x0: float, x_min: float, rds: int) -> tuple[float, ...]:
    """Evenly spaced targets from just below ``x0`` down to exactly ``x_min``."""
    if not 0.0 < x_min < x0 <= 1.0:
        raise ValueError(f"need 0 < x_min < x0 <= 1, got x0={x0}, x_min={x_min}")
    if rds < 1:
        raise ValueError(f"rds must be >= 1, got {rds}")
    step = (x0 - x_min) / rds
    return tuple(x0 - (n + 1) * step for n in range(rds))


def budget_floors(t: float, base: DimTriple | None = None) -> tuple[float, float, float]:
    """Per-dimension floors: pruning one dimension alone this far meets the budget.

    Depth enters the cost linearly, width and resolution quadratically, so the
    floors are ``(T * d0, sqrt(T) * w0, sqrt(T) * r0)``. No optimal plan prunes
    any single dimension below its floor.
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"budget must lie in (0, 1), got {t}")
    base = base or DimTriple.base()
    root = math.sqrt(t)
    return (t * base.d, root * base.w, root * base.r)


class Trainer(Protocol):
    """Anything that can answer one protocol message with one response."""

    def exchange(self, request: dict) -> dict: ...

    def close(self) -> None: ...


class SimulatedTrainer:
    """In-process trainer backed by a known separable accuracy surface.

    Answers each prune request with the requested point (the changed
    coordinate optionally perturbed by seeded uniform jitter, clamped to
    ``(0, 1]``) and the surface's accuracy there plus seeded Gaussian noise.
    Deterministic per seed: the noise stream is a pure function of the
    request sequence.
    """

    def __init__(
        self,
        surface: SeparableMap,
        noise_sd: float = 0.0,
        echo_jitter: float = 0.0,
        seed: int = 0,
    ) -> None:
        if noise_sd < 0 or echo_jitter < 0:
            raise ValueError("noise_sd and echo_jitter must be >= 0")
        self.surface = surface
        self.noise_sd = noise_sd
        self.echo_jitter = echo_jitter
        self._rng = np.random.default_rng(seed)
        self.n_requests = 0

    def exchange(self, request: dict) -> dict:
        self.n_requests += 1
        action = request.get("action")
        if action == "handshake":
            if request.get("protocol") != PROTOCOL_VERSION:
                return {"status": "error", "message": "unsupported protocol version"}
            return {"status": "ok", "protocol": PROTOCOL_VERSION}
        if action == "shutdown":
            return {"status": "ok"}
        if action != "prune_finetune":
            return {"status": "error", "message": f"unknown action {action!r}"}
        dimension = request["dimension"]
        target = float(request["target"])
        achieved = target
        if self.echo_jitter > 0:
            achieved += float(self._rng.uniform(-self.echo_jitter, self.echo_jitter))
        achieved = min(max(achieved, 1e-9), 1.0)
        coords = {"d": 1.0, "w": 1.0, "r": 1.0}
        coords[_AXIS_OF[dimension]] = achieved
        point = DimTriple(coords["d"], coords["w"], coords["r"])
        accuracy = eval_separable(self.surface, point)
        if self.noise_sd > 0:
            accuracy += float(self._rng.normal(0.0, self.noise_sd))
        accuracy = min(max(accuracy, 0.0), 1.0)
        return {
            "status": "ok",
            "d": point.d,
            "w": point.w,
            "r": point.r,
            "accuracy": accuracy,
        }

    def close(self) -> None:
        pass


class SubprocessTrainer:
    """Trainer at the far end of a child process's stdin/stdout."""

    def __init__(self, command: str | list[str]) -> None:
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def exchange(self, request: dict) -> dict:
        assert self._proc.stdin is not None and self._proc.stdout is not None
        try:
            self._proc.stdin.write(encode_message(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"trainer process is gone: {exc}") from exc
        line = self._proc.stdout.readline()
        if not line:
            raise ProtocolError("trainer closed its output without responding")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"trainer sent invalid JSON: {line!r}") from exc
        if not isinstance(response, dict):
            raise ProtocolError(f"trainer response is not an object: {line!r}")
        return response

    def close(self) -> None:
        if self._proc.poll() is None:
            if self._proc.stdin is not None:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class Transcript:
    """Verbatim request/response line log, optionally persisted to a file.

    When primed with previously recorded pairs, matching requests are answered
    from the record instead of the trainer; replaying a complete transcript
    therefore issues zero trainer requests. A trailing request line without
    its response (an interrupted run) is dropped and re-issued.
    """

    def __init__(self, path: str | Path | None = None, resume: bool = False) -> None:
        self.path = Path(path) if path is not None else None
        self._recorded: list[tuple[str, str]] = []
        self._cursor = 0
        self.replayed = 0
        self.issued = 0
        if resume and self.path is not None and self.path.exists():
            lines = [ln for ln in self.path.read_text().splitlines() if ln.strip()]
            for i in range(0, len(lines) - 1, 2):
                self._recorded.append((lines[i], lines[i + 1]))
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(
                "".join(f"{req}\n{resp}\n" for req, resp in self._recorded)
            )

    def exchange(self, trainer: Trainer, request: dict) -> dict:
        encoded = encode_message(request)
        if self._cursor < len(self._recorded):
            rec_req, rec_resp = self._recorded[self._cursor]
            if rec_req != encoded:
                raise ProtocolError(
                    "transcript does not match the requested run "
                    f"(recorded {rec_req!r}, expected {encoded!r}); refusing to resume"
                )
            self._cursor += 1
            self.replayed += 1
            return json.loads(rec_resp)
        response = trainer.exchange(request)
        self.issued += 1
        line = f"{encoded}\n{encode_message(response)}\n"
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(line)
        return response


def _validate_prune_response(
    response: dict, dimension: str, target: float
) -> AccuracySample:
    for key in ("d", "w", "r", "accuracy"):
        if key not in response or not isinstance(response[key], (int, float)):
            raise ProtocolError(f"prune response missing numeric field {key!r}: {response}")
    try:
        point = DimTriple(float(response["d"]), float(response["w"]), float(response["r"]))
        sample = AccuracySample(point, float(response["accuracy"]))
    except ValueError as exc:
        raise ProtocolError(f"prune response out of range: {exc}") from exc
    achieved = getattr(point, _AXIS_OF[dimension])
    if abs(achieved - target) > ECHO_TOLERANCE + 1e-12:
        raise ProtocolError(
            f"trainer echoed {dimension}={achieved}, more than {ECHO_TOLERANCE} "
            f"away from the requested {target}"
        )
    return sample


def collect(
    trainer: Trainer,
    config: CollectionConfig,
    transcript_path: str | Path | None = None,
    resume: bool = False,
) -> Dataset:
    """Run the full per-dimension schedule and gather the regression dataset.

    Emits the base sample first, then for each dimension walks its schedule
    down to the budget floor, one prune-and-finetune request per round. Each
    dimension's chain starts from the base model, so the collected points are
    axis-aligned slices through the base point; a fully successful run yields
    ``3 * rds + 1`` samples.

    A trainer error response abandons the remaining rounds of that dimension
    only (with a :class:`PartialCollectionWarning`); malformed responses raise
    :class:`ProtocolError`.
    """
    transcript = Transcript(transcript_path, resume=resume)
    handshake = {"action": "handshake", "protocol": PROTOCOL_VERSION}
    response = transcript.exchange(trainer, handshake)
    if response.get("status") != "ok" or response.get("protocol") != PROTOCOL_VERSION:
        raise ProtocolError(f"handshake failed: {response}")

    samples: list[AccuracySample] = [
        AccuracySample(config.base_point, config.base_accuracy)
    ]
    floors = budget_floors(config.t, config.base_point)
    base_coords = config.base_point.as_tuple()
    failed: list[str] = []
    for dim_index, dimension in enumerate(DIMENSIONS):
        schedule = Schedule(
            dimension, make_schedule(base_coords[dim_index], floors[dim_index], config.rds)
        )
        for round_no, target in enumerate(schedule.targets, start=1):
            request = {
                "action": "prune_finetune",
                "dimension": dimension,
                "target": target,
                "round": round_no,
            }
            response = transcript.exchange(trainer, request)
            status = response.get("status")
            if status == "error":
                failed.append(
                    f"{dimension} round {round_no}: {response.get('message', 'trainer error')}"
                )
                break
            if status != "ok":
                raise ProtocolError(f"response without a valid status: {response}")
            samples.append(_validate_prune_response(response, dimension, target))
    try:
        transcript.exchange(trainer, {"action": "shutdown"})
    except ProtocolError:
        pass  # a trainer that exits on shutdown without replying is tolerable
    if failed:
        warnings.warn(
            "partial collection, kept "
            f"{len(samples)} samples; failed rounds: {'; '.join(failed)}",
            PartialCollectionWarning,
            stacklevel=2,
        )
    return Dataset(tuple(samples))
