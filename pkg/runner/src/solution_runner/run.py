"""In-sandbox program runner.

Usage: solution-runner <path-to-source>

Loads the source file, calls its `solution()` entry function, stringifies
the return value, and prints exactly one JSON line on stdout:

    {"status": "<ok|syntax_error|runtime_error|missing_entry|serialization_error>",
     "value": "<string or null>", "error": "<string or null>"}

Exit code 0 for every handled status. Anything the user program prints is
captured at the file-descriptor level so it can never corrupt the protocol
line; it is surfaced only inside error text.
"""

from __future__ import annotations

import json
import os
import re
import sys
import tempfile
import traceback
from fractions import Fraction

_OBJECT_REPR_RE = re.compile(r"^<.* at 0x[0-9a-fA-F]+>$")
_ERROR_EXCERPT = 2000


class NotSerializable(ValueError):
    pass


def stringify_value(value) -> str:
    """Canonical string form of a return value.

    Fractions render as "a/b", sequences in parenthesized comma form,
    library objects (e.g. symbolic constants) via their native str(), which
    already yields conventional names like "pi" or "sqrt(2)". Values whose
    str() is just a default object repr are rejected.
    """
    if value is None:
        raise NotSerializable("solution() returned None")
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float, complex)):
        return str(value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (tuple, list)):
        return "(" + ", ".join(stringify_value(v) for v in value) + ")"
    if isinstance(value, (set, frozenset)):
        return "(" + ", ".join(sorted(stringify_value(v) for v in value)) + ")"
    if isinstance(value, dict) or callable(value) or isinstance(value, type(sys)):
        raise NotSerializable(f"cannot serialize {type(value).__name__}")
    s = str(value)
    if _OBJECT_REPR_RE.match(s):
        raise NotSerializable(f"no useful string form for {type(value).__name__}")
    return s


def _report(status: str, value=None, error=None) -> dict:
    return {"status": status, "value": value, "error": error}


def run_program(path: str) -> dict:
    """Execute the program at path and return the protocol report dict."""
    try:
        with open(path, "r", encoding="utf-8", errors="replace") as f:
            source = f.read()
    except OSError as e:
        return _report("runtime_error", error=f"cannot read source: {e}")

    try:
        code = compile(source, os.path.basename(path), "exec")
    except (SyntaxError, ValueError) as e:
        return _report("syntax_error", error=str(e)[:_ERROR_EXCERPT])

    # Redirect fd 1 so user prints (even direct fd writes) cannot touch the
    # protocol stream.
    saved_fd = os.dup(1)
    capture = tempfile.TemporaryFile(mode="w+b")
    os.dup2(capture.fileno(), 1)
    sys.stdout.flush()
    try:
        namespace = {"__name__": "__solution__", "__file__": path}
        try:
            exec(code, namespace)
        except BaseException:
            return _report("runtime_error",
                           error=_exc_text(capture))
        entry = namespace.get("solution")
        if not callable(entry):
            return _report("missing_entry", error="no callable named `solution`")
        try:
            value = entry()
        except BaseException:
            return _report("runtime_error", error=_exc_text(capture))
        try:
            return _report("ok", value=stringify_value(value))
        except NotSerializable as e:
            return _report("serialization_error", error=str(e))
        except BaseException:
            return _report("serialization_error", error=_exc_text(capture))
    finally:
        try:
            sys.stdout.flush()
        except Exception:
            pass  # the user program may have closed stdout
        os.dup2(saved_fd, 1)
        os.close(saved_fd)
        capture.close()


def _exc_text(capture) -> str:
    text = traceback.format_exc(limit=10)
    try:
        sys.stdout.flush()  # user prints may still sit in the buffer
    except Exception:
        pass
    try:
        capture.seek(0)
        printed = capture.read().decode("utf-8", errors="replace")
    except Exception:
        printed = ""
    if printed:
        text += f"\n[captured stdout]\n{printed}"
    return text[:_ERROR_EXCERPT]


def _emit(report: dict):
    # fd-level write: works even if the user program closed sys.stdout
    os.write(1, (json.dumps(report) + "\n").encode("utf-8"))


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        _emit(_report("runtime_error", error="usage: solution-runner <path>"))
        return 0
    try:
        report = run_program(argv[0])
    except BaseException:  # belt and braces: the protocol line must appear
        report = _report("runtime_error", error=traceback.format_exc(limit=5)[:_ERROR_EXCERPT])
    _emit(report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
