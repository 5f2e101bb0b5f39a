"""Interpreter-oracle worker process.

Reads one JSON request per line from stdin, writes one JSON response per
line to stdout, logs to stderr, exits 0 on EOF. Strictly serial: one
request at a time. Timeout enforcement is the supervisor's job, not ours;
a killed process simply never answers.

Actions:
    parse     classify AST compilation of the submitted source
    exec      run the source with fresh, isolated global/local scopes
    tokenize  emit the standard token stream as (category, lexeme) pairs
    version   report the interpreter version

File descriptor 1 is re-pointed at /dev/null on startup (responses travel
over a private duplicate of the original stdout), so snippets that print
or spawn subprocesses cannot corrupt the protocol stream.

Source stays runnable on Python 3.6: the corpus's reference tables were
produced under a 3.6 interpreter, and exact message reproduction needs
a worker of that vintage (run one via SOFIX_WORKER_CMD).
"""

import ast
import io
import json
import os
import platform
import sys
import time
import tokenize
import traceback

__version__ = "0.1.0"

_SNIPPET_FILE = "<snippet>"


def handle_parse(code: str) -> dict:
    """AST-compile the code and classify the outcome."""
    response = {"status": "ok", "kind": None, "message": None, "line": None, "col": None}
    try:
        compile(code, _SNIPPET_FILE, "exec", ast.PyCF_ONLY_AST)
    except SyntaxError as exc:  # IndentationError and TabError are subclasses
        response.update(
            status="error",
            kind=type(exc).__name__,
            message=exc.msg,
            line=exc.lineno,
            col=exc.offset,
        )
    except MemoryError:
        response.update(status="error", kind="MemoryError")
    except BaseException as exc:  # e.g. ValueError for null bytes, RecursionError
        response.update(status="error", kind=type(exc).__name__, message=str(exc))
        response["unexpected"] = True
    return response


def _snippet_traceback(exc: BaseException) -> str:
    """Format the exception with worker harness frames stripped."""
    tb = exc.__traceback__
    while tb is not None and tb.tb_frame.f_code.co_filename != _SNIPPET_FILE:
        tb = tb.tb_next
    return "".join(traceback.format_exception(type(exc), exc, tb))


def handle_exec(code: str) -> dict:
    """Execute the code in fresh scopes, capturing any raised exception.

    The snippet sees a closed stdin substitute (interactive reads raise
    EOFError) and throwaway stdout/stderr objects. A single fresh dict
    serves as both the global and local scope so module-level semantics
    stay standard while nothing leaks between requests.
    """
    env = {"__name__": "__main__"}
    saved = (sys.stdin, sys.stdout, sys.stderr)
    sys.stdin = io.StringIO("")
    sys.stdout = io.StringIO()
    sys.stderr = io.StringIO()
    started = time.monotonic()
    try:
        exec(compile(code, _SNIPPET_FILE, "exec"), env)
        failure = None
    except BaseException as exc:
        failure = exc
    finally:
        duration_ms = int((time.monotonic() - started) * 1000)
        sys.stdin, sys.stdout, sys.stderr = saved
    if failure is None:
        return {
            "status": "no_error",
            "exc_type": None,
            "exc_message": None,
            "stack_trace": None,
            "duration_ms": duration_ms,
        }
    return {
        "status": "exception",
        "exc_type": type(failure).__name__,
        "exc_message": str(failure),
        "stack_trace": _snippet_traceback(failure),
        "duration_ms": duration_ms,
    }


def _check_reconstruction(code: str, tokens) -> bool:
    """Verify each lexeme matches its source position (separators reconstruct)."""
    lines = code.splitlines(keepends=True)
    for tok in tokens:
        srow, scol = tok.start
        erow, ecol = tok.end
        if srow < 1 or erow > len(lines) + 1:
            continue  # synthesized token past the last line
        try:
            if srow == erow:
                piece = lines[srow - 1][scol:ecol] if srow <= len(lines) else ""
            else:
                middle = "".join(lines[srow:erow - 1])
                tail = lines[erow - 1][:ecol] if erow <= len(lines) else ""
                piece = lines[srow - 1][scol:] + middle + tail
        except IndexError:
            return False
        if piece != tok.string:
            return False
    return True


def handle_tokenize(code: str) -> dict:
    try:
        tokens = list(tokenize.generate_tokens(io.StringIO(code).readline))
    except (tokenize.TokenError, IndentationError, SyntaxError) as exc:
        line = col = None
        if isinstance(exc, SyntaxError):
            message = exc.msg or str(exc)
            line, col = exc.lineno, exc.offset
        else:
            message = exc.args[0] if exc.args else str(exc)
            if len(exc.args) > 1 and isinstance(exc.args[1], tuple):
                line, col = exc.args[1][0], exc.args[1][1]
        return {"tokens": None, "error": {"message": message, "line": line, "col": col}}
    tokens = [tok for tok in tokens if tok.type != tokenize.ENDMARKER]
    if not _check_reconstruction(code, tokens):
        print("sofix-worker: token positions do not reconstruct the source", file=sys.stderr)
    return {
        "tokens": [
            {"type": tokenize.tok_name[tok.type], "text": tok.string} for tok in tokens
        ]
    }


def handle_request(request: dict) -> dict:
    action = request.get("action")
    if action == "parse":
        return handle_parse(request["code"])
    if action == "exec":
        return handle_exec(request["code"])
    if action == "tokenize":
        return handle_tokenize(request["code"])
    if action == "version":
        return {"interpreter": platform.python_version()}
    return {"error": {"message": f"unknown action {action!r}", "line": None, "col": None}}


def serve(stdin=None, stdout=None) -> int:
    """Request loop. Returns the process exit code."""
    if stdin is None:
        stdin = sys.stdin
    if stdout is None:
        # Keep a private handle on the real stdout and point fd 1 at
        # /dev/null so snippet writes cannot inject protocol bytes.
        stdout = os.fdopen(os.dup(1), "w", encoding="utf-8", errors="surrogateescape")
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, 1)
        os.close(devnull)
    served = 0
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise json.JSONDecodeError("request must be an object", line, 0)
        except json.JSONDecodeError as exc:
            print(f"sofix-worker: bad request frame: {exc}", file=sys.stderr)
            request = {}
        try:
            body = handle_request(request)
        except KeyError as exc:
            body = {"error": {"message": f"request missing field {exc}"}}
        response = {"id": request.get("id"), **body}
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
        served += 1
    print(f"sofix-worker: served {served} requests, exiting on EOF", file=sys.stderr)
    return 0


def main() -> int:
    return serve()
