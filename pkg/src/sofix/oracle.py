"""Client for the interpreter-oracle worker processes.

Workers are separate processes speaking newline-delimited JSON over
stdin/stdout (one request in flight per worker):

    request          {"id": int, "action": "parse"|"exec"|"tokenize"|"version",
                      "code": str, "timeout_s": number (exec only)}
    parse response   {"id", "status": "ok"|"error", "kind", "message", "line", "col"}
    exec response    {"id", "status": "no_error"|"exception", "exc_type",
                      "exc_message", "stack_trace", "duration_ms"}
    tokenize resp.   {"id", "tokens": [{"type", "text"}, ...]}
    version resp.    {"id", "interpreter": str}

A timed-out execution has no wire response: the supervisor kills the
worker's process group and synthesizes a "timeout" outcome. The worker
command comes from the constructor, the SOFIX_WORKER_CMD environment
variable, or defaults to the installed `sofix_worker` module.

The sandbox contract (no network, read-only filesystem, memory ceiling)
is operational, not enforced here: run workers inside the container
recipe shipped under sandbox/ when executing untrusted snippets.
"""

from __future__ import annotations

import json
import os
import queue
import select
import shlex
import signal
import subprocess
import sys
import threading
import time
from dataclasses import dataclass
from typing import Sequence

from .errors import ContractError, OracleUnavailableError, TokenizeError

DEFAULT_TIMEOUT_S = 4.0
# Supervision slack: how long past the snippet budget we wait for the wire
# response before killing the worker. Must stay well under 1 s so a killed
# 4 s run still lands inside 4 s +- 0.5 s of wall time.
_GRACE_S = 0.25



@dataclass(frozen=True)
class ParseOutcome:
    status: str
    kind: str | None = None
    message: str | None = None
    line: int | None = None
    col: int | None = None
    unexpected: bool = False

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @classmethod
    def from_wire(cls, frame: dict) -> "ParseOutcome":
        return cls(
            status=frame["status"],
            kind=frame.get("kind"),
            message=frame.get("message"),
            line=frame.get("line"),
            col=frame.get("col"),
            unexpected=bool(frame.get("unexpected", False)),
        )

    def to_pair_json(self) -> dict:
        return {"kind": self.kind, "message": self.message, "line": self.line, "col": self.col}

    @classmethod
    def from_pair_json(cls, obj: dict) -> "ParseOutcome":
        return cls(
            status="error",
            kind=obj["kind"],
            message=obj.get("message"),
            line=obj.get("line"),
            col=obj.get("col"),
        )


@dataclass(frozen=True)
class RuntimeOutcome:
    status: str
    exc_type: str | None = None
    exc_message: str | None = None
    stack_trace: str | None = None
    duration_ms: int = 0

    @classmethod
    def from_wire(cls, frame: dict) -> "RuntimeOutcome":
        return cls(
            status=frame["status"],
            exc_type=frame.get("exc_type"),
            exc_message=frame.get("exc_message"),
            stack_trace=frame.get("stack_trace"),
            duration_ms=int(frame.get("duration_ms", 0)),
        )

    def to_pair_json(self) -> dict:
        return {
            "status": self.status,
            "exc_type": self.exc_type,
            "exc_message": self.exc_message,
            "stack_trace": self.stack_trace,
            "duration_ms": self.duration_ms,
        }

    @classmethod
    def from_pair_json(cls, obj: dict) -> "RuntimeOutcome":
        return cls(
            status=obj["status"],
            exc_type=obj.get("exc_type"),
            exc_message=obj.get("exc_message"),
            stack_trace=obj.get("stack_trace"),
            duration_ms=int(obj.get("duration_ms", 0)),
        )


@dataclass(frozen=True)
class Token:
    type: str
    text: str


class _WorkerDied(Exception):
    """Worker process ended (or spoke garbage) instead of answering."""

    def __init__(self, before_request: bool, detail: str = ""):
        super().__init__(detail)
        self.before_request = before_request


class _Worker:
    """One oracle subprocess; strictly one request in flight."""

    def __init__(self, cmd: Sequence[str]):
        self._cmd = list(cmd)
        self._proc: subprocess.Popen | None = None
        self._buf = bytearray()
        self._next_id = 0

    def _spawn(self) -> None:
        stderr = None if os.environ.get("SOFIX_WORKER_STDERR") == "inherit" else subprocess.DEVNULL
        try:
            self._proc = subprocess.Popen(
                self._cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=stderr,
                start_new_session=True,
            )
        except OSError as exc:
            raise OracleUnavailableError(f"cannot start worker {self._cmd!r}: {exc}") from None
        self._buf = bytearray()

    def _ensure_alive(self) -> None:
        if self._proc is None or self._proc.poll() is not None:
            self._spawn()

    def kill(self) -> None:
        proc = self._proc
        self._proc = None
        self._buf = bytearray()
        if proc is None:
            return
        if proc.poll() is None:
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except (ProcessLookupError, PermissionError):
                proc.kill()
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass
        for pipe in (proc.stdin, proc.stdout):
            if pipe is not None:
                try:
                    pipe.close()
                except OSError:
                    pass

    def _read_frame(self, deadline: float | None) -> bytes | None:
        """One protocol line, None on deadline, _WorkerDied on EOF."""
        fd = self._proc.stdout.fileno()
        while True:
            newline = self._buf.find(b"\n")
            if newline >= 0:
                line = bytes(self._buf[:newline])
                del self._buf[: newline + 1]
                return line
            if deadline is not None:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return None
                ready, _, _ = select.select([fd], [], [], remaining)
                if not ready:
                    continue
            chunk = os.read(fd, 65536)
            if not chunk:
                raise _WorkerDied(before_request=False, detail="EOF on worker stdout")
            self._buf.extend(chunk)

    def request(self, action: str, deadline_s: float | None = None, **fields) -> dict | None:
        """Send one request; returns the response frame, or None on deadline.

        Raises _WorkerDied if the process ends or breaks protocol.
        """
        self._ensure_alive()
        self._next_id += 1
        request_id = self._next_id
        frame = json.dumps({"id": request_id, "action": action, **fields}) + "\n"
        try:
            self._proc.stdin.write(frame.encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise _WorkerDied(before_request=True, detail="worker stdin closed") from None
        deadline = None if deadline_s is None else time.monotonic() + deadline_s
        line = self._read_frame(deadline)
        if line is None:
            return None
        try:
            response = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise _WorkerDied(before_request=False, detail="undecodable worker frame") from None
        if not isinstance(response, dict) or response.get("id") != request_id:
            raise _WorkerDied(before_request=False, detail="response id mismatch") from None
        return response

    @property
    def exit_code(self) -> int | None:
        return self._proc.poll() if self._proc is not None else None


def _resolve_cmd(worker_cmd: Sequence[str] | str | None) -> list[str]:
    if worker_cmd is None:
        worker_cmd = os.environ.get("SOFIX_WORKER_CMD")
    if worker_cmd is None:
        return [sys.executable, "-m", "sofix_worker"]
    if isinstance(worker_cmd, str):
        return shlex.split(worker_cmd)
    return list(worker_cmd)


class OracleClient:
    """Pooled, thread-safe access to parse/exec/tokenize/version oracles.

    Each worker serves one request at a time, so every hung request maps
    to exactly one killable process. Crashed workers are respawned and the
    request retried once; execution requests are never retried after the
    code was delivered (the snippet itself may have killed the worker).
    """

    def __init__(self, worker_cmd: Sequence[str] | str | None = None, pool_size: int = 1):
        if pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        self._cmd = _resolve_cmd(worker_cmd)
        self._pool_size = pool_size
        self._idle: queue.Queue[_Worker] = queue.Queue()
        self._spawned = 0
        self._lock = threading.Lock()
        self._closed = False

    def __enter__(self) -> "OracleClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        self._closed = True
        while True:
            try:
                self._idle.get_nowait().kill()
            except queue.Empty:
                return

    def _acquire(self) -> _Worker:
        if self._closed:
            raise OracleUnavailableError("client is closed")
        try:
            return self._idle.get_nowait()
        except queue.Empty:
            pass
        with self._lock:
            if self._spawned < self._pool_size:
                self._spawned += 1
                return _Worker(self._cmd)
        return self._idle.get()

    def _release(self, worker: _Worker) -> None:
        if self._closed:
            worker.kill()
        else:
            self._idle.put(worker)

    def _pure_request(self, action: str, **fields) -> dict:
        """parse/tokenize/version: retry once on a fresh worker after a crash."""
        worker = self._acquire()
        try:
            last = "unknown"
            for _ in range(2):
                try:
                    response = worker.request(action, **fields)
                except _WorkerDied as died:
                    last = str(died)
                    worker.kill()
                    continue
                if response is None:  # no deadline set: cannot happen
                    raise OracleUnavailableError("worker request returned no frame")
                return response
            raise OracleUnavailableError(f"worker failed twice on {action!r}: {last}")
        finally:
            self._release(worker)

    def check_parse(self, code: str) -> ParseOutcome:
        """Classify AST compilation of `code`; deterministic per worker version."""
        return ParseOutcome.from_wire(self._pure_request("parse", code=code))

    def tokenize(self, code: str) -> list[Token]:
        response = self._pure_request("tokenize", code=code)
        if response.get("error") is not None:
            err = response["error"]
            raise TokenizeError(
                err.get("message", "tokenize failed"), line=err.get("line"), col=err.get("col")
            )
        return [Token(type=t["type"], text=t["text"]) for t in response["tokens"]]

    def worker_version(self) -> str:
        version = self._pure_request("version").get("interpreter")
        if not version:
            raise OracleUnavailableError("worker reported no interpreter version")
        return version

    def run_snippet(self, code: str, timeout_s: float = DEFAULT_TIMEOUT_S) -> RuntimeOutcome:
        """Execute parse-passing code in a fresh scope; kill and classify on timeout."""
        parse = self.check_parse(code)
        if not parse.ok:
            raise ContractError(
                f"run_snippet requires parse-passing code; got {parse.kind}: {parse.message}"
            )
        worker = self._acquire()
        try:
            for attempt in range(2):
                started = time.monotonic()
                try:
                    response = worker.request(
                        "exec", deadline_s=timeout_s + _GRACE_S, code=code, timeout_s=timeout_s
                    )
                except _WorkerDied as died:
                    elapsed_ms = int((time.monotonic() - started) * 1000)
                    if died.before_request and attempt == 0:
                        # Worker was already gone; the snippet never ran. One retry.
                        worker.kill()
                        continue
                    if died.before_request:
                        raise OracleUnavailableError(f"worker failed twice on exec: {died}") from None
                    # The snippet took the worker down; classify just this snippet.
                    exit_code = worker.exit_code
                    worker.kill()
                    return RuntimeOutcome(
                        status="exception",
                        exc_type="WorkerCrash",
                        exc_message=f"worker exited (code {exit_code}) while executing the snippet",
                        duration_ms=elapsed_ms,
                    )
                if response is None:
                    # Still running past budget: kill the process group.
                    elapsed_ms = int((time.monotonic() - started) * 1000)
                    worker.kill()
                    return RuntimeOutcome(
                        status="timeout", duration_ms=max(elapsed_ms, int(timeout_s * 1000))
                    )
                return RuntimeOutcome.from_wire(response)
            raise OracleUnavailableError("unreachable")
        finally:
            self._release(worker)
