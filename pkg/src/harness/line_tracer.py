#!/usr/bin/env python3
"""
Line-hit tracer for script solutions.

Usage: python line_tracer.py <script> [args...]

Runs the script as __main__ under sys.settrace and writes a JSON object
{"<line>": hits} for lines of that script to the file named by
WEDGE_PROFILE_OUT. Standalone on purpose: it runs inside the traced program's
interpreter and must not import the pipeline package.
"""

import json
import os
import runpy
import sys
from collections import Counter


def main() -> None:
    if len(sys.argv) < 2:
        print("usage: line_tracer.py <script> [args...]", file=sys.stderr)
        sys.exit(2)

    target = os.path.abspath(sys.argv[1])
    out_path = os.environ.get("WEDGE_PROFILE_OUT")
    hits = Counter()

    def local_trace(frame, event, arg):
        if event == "line":
            hits[frame.f_lineno] += 1
        return local_trace

    def global_trace(frame, event, arg):
        if frame.f_code.co_filename == target:
            return local_trace
        return None

    sys.argv = sys.argv[1:]
    sys.path[0] = os.path.dirname(target)
    exit_code = 0
    sys.settrace(global_trace)
    try:
        runpy.run_path(target, run_name="__main__")
    except SystemExit as e:
        exit_code = e.code if isinstance(e.code, int) else (0 if e.code is None else 1)
    finally:
        sys.settrace(None)
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                json.dump({str(line): count for line, count in sorted(hits.items())}, fh)

    sys.stdout.flush()
    sys.exit(exit_code)


if __name__ == "__main__":
    main()
