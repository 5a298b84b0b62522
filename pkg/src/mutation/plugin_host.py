#!/usr/bin/env python3
"""
Host process for Python mutator modules.

Usage: python plugin_host.py <mutator.py>

Loads a module defining ``fuzz(buf, add_buf, max_size)`` (or the two-argument
AFL form) and an optional ``init(seed)``, then serves mutation requests over
stdin/stdout. ``random`` is reseeded with each request's rng_seed so that the
same request always yields the same answer. Standalone: it runs untrusted
mutator code and does not import the pipeline package.
"""

import importlib.util
import inspect
import random
import struct
import sys
import traceback

REQUEST_TAG = 0x01
RESPONSE_TAG = 0x81
SHUTDOWN_TAG = 0x7F

_LEN = struct.Struct("<I")
_REQUEST_HEAD = struct.Struct("<BQI")


def load_module(path):
    spec = importlib.util.spec_from_file_location("wedge_mutator", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    if not hasattr(module, "fuzz"):
        raise AttributeError(f"{path} defines no fuzz() function")
    return module


def read_exact(stream, size):
    data = stream.read(size)
    if data is None or len(data) < size:
        return None
    return data


def parse_request(payload):
    _, rng_seed, max_size = _REQUEST_HEAD.unpack_from(payload, 0)
    offset = _REQUEST_HEAD.size
    (seed_len,) = _LEN.unpack_from(payload, offset)
    offset += _LEN.size
    seed = payload[offset:offset + seed_len]
    offset += seed_len
    (add_len,) = _LEN.unpack_from(payload, offset)
    offset += _LEN.size
    add = payload[offset:offset + add_len]
    return rng_seed, max_size, seed, add


def main():
    if len(sys.argv) != 2:
        print("usage: plugin_host.py <mutator.py>", file=sys.stderr)
        sys.exit(2)

    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    # keep stray prints of the mutator off the protocol channel
    sys.stdout = sys.stderr

    try:
        module = load_module(sys.argv[1])
        takes_max_size = len(inspect.signature(module.fuzz).parameters) >= 3
        if hasattr(module, "init"):
            random.seed(0)
            module.init(0)
    except Exception:
        traceback.print_exc()
        sys.exit(1)

    while True:
        header = read_exact(stdin, _LEN.size)
        if header is None:
            return
        (length,) = _LEN.unpack(header)
        payload = read_exact(stdin, length)
        if payload is None or not payload:
            return
        if payload[0] == SHUTDOWN_TAG:
            return
        if payload[0] != REQUEST_TAG:
            print(f"unexpected request tag 0x{payload[0]:02x}", file=sys.stderr)
            sys.exit(1)

        rng_seed, max_size, seed, add = parse_request(payload)
        random.seed(rng_seed)
        try:
            if takes_max_size:
                result = module.fuzz(bytearray(seed), bytearray(add), max_size)
            else:
                result = module.fuzz(bytearray(seed), bytearray(add))
            if isinstance(result, str):
                result = result.encode("utf-8")
            result = bytes(result)
        except Exception:
            traceback.print_exc()
            sys.stderr.flush()
            sys.exit(1)

        stdout.write(_LEN.pack(1 + len(result)) + bytes([RESPONSE_TAG]) + result)
        stdout.flush()


if __name__ == "__main__":
    main()
