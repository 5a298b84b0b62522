"""
Mutator plugin wire protocol.

Little-endian frames over the plugin's stdin/stdout:

    request  = u32 len | u8 0x01 | u64 rng_seed | u32 max_size | u32 seed_len | seed | u32 add_len | add
    response = u32 len | u8 0x81 | mutated bytes
    shutdown = u32 len | u8 0x7F

``len`` counts the bytes after the length field (tag included).
"""

import asyncio
import struct
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from ..pipeline.errors import MutatorUnavailable, PluginCrash
from ..pipeline.logger import get_logger

logger = get_logger(__name__)

REQUEST_TAG = 0x01
RESPONSE_TAG = 0x81
SHUTDOWN_TAG = 0x7F

DEFAULT_TIMEOUT = 5.0
STDERR_TAIL_BYTES = 16 * 1024
HOST_PATH = Path(__file__).with_name("plugin_host.py")

_LEN = struct.Struct("<I")
_REQUEST_HEAD = struct.Struct("<BQI")


class MutationRequest(BaseModel):
    """One mutation request."""

    model_config = ConfigDict(frozen=True)

    seed: bytes
    add_seed: Optional[bytes] = None
    max_size: int = Field(gt=0)
    rng_seed: int = Field(ge=0, lt=2 ** 64)


def encode_request(request: MutationRequest) -> bytes:
    """Frame a request."""
    add = request.add_seed or b""
    body = (
        _REQUEST_HEAD.pack(REQUEST_TAG, request.rng_seed, request.max_size)
        + _LEN.pack(len(request.seed)) + request.seed
        + _LEN.pack(len(add)) + add
    )
    return _LEN.pack(len(body)) + body


def decode_request(payload: bytes) -> MutationRequest:
    """Parse a request payload (the bytes after the length field)."""
    tag, rng_seed, max_size = _REQUEST_HEAD.unpack_from(payload, 0)
    if tag != REQUEST_TAG:
        raise ValueError(f"unexpected request tag 0x{tag:02x}")
    offset = _REQUEST_HEAD.size
    (seed_len,) = _LEN.unpack_from(payload, offset)
    offset += _LEN.size
    seed = payload[offset:offset + seed_len]
    offset += seed_len
    (add_len,) = _LEN.unpack_from(payload, offset)
    offset += _LEN.size
    add = payload[offset:offset + add_len]
    if offset + add_len != len(payload) or len(seed) != seed_len:
        raise ValueError("request length fields do not match the frame")
    return MutationRequest(seed=seed, add_seed=add or None, max_size=max_size, rng_seed=rng_seed)


def encode_response(mutated: bytes) -> bytes:
    """Frame a response."""
    return _LEN.pack(1 + len(mutated)) + bytes([RESPONSE_TAG]) + mutated


def encode_shutdown() -> bytes:
    return _LEN.pack(1) + bytes([SHUTDOWN_TAG])


def split_frame(payload: bytes) -> Tuple[int, bytes]:
    """Split a frame payload into (tag, body)."""
    if not payload:
        raise ValueError("empty frame")
    return payload[0], payload[1:]


class PluginProcess:
    """
    Client side of one mutator plugin process.

    Requests are serialized; each must be answered within the timeout.
    Python mutator modules are hosted by plugin_host.py; any other command
    must speak the protocol itself.
    """

    def __init__(self, command: List[str], timeout: float = DEFAULT_TIMEOUT):
        self.command = command
        self.timeout = timeout
        self.process: Optional[asyncio.subprocess.Process] = None
        self._lock = asyncio.Lock()
        self._stderr = bytearray()
        self._stderr_task: Optional[asyncio.Task] = None

    @classmethod
    def for_module(cls, module_path, timeout: float = DEFAULT_TIMEOUT) -> "PluginProcess":
        """Plugin process hosting a Python mutator module."""
        return cls([sys.executable, str(HOST_PATH), str(module_path)], timeout=timeout)

    @property
    def stderr_text(self) -> str:
        return self._stderr.decode("utf-8", errors="replace")

    async def start(self) -> None:
        """
        Launch the plugin.

        Raises:
            MutatorUnavailable: Process could not be started
        """
        try:
            self.process = await asyncio.create_subprocess_exec(
                *self.command,
                stdin=asyncio.subprocess.PIPE,
                stdout=asyncio.subprocess.PIPE,
                stderr=asyncio.subprocess.PIPE,
            )
        except OSError as e:
            raise MutatorUnavailable(f"cannot start mutator plugin {self.command[0]}: {e}") from e
        self._stderr_task = asyncio.create_task(self._drain_stderr())

    async def _drain_stderr(self) -> None:
        assert self.process and self.process.stderr
        while True:
            chunk = await self.process.stderr.read(4096)
            if not chunk:
                break
            self._stderr.extend(chunk)
            if len(self._stderr) > STDERR_TAIL_BYTES:
                del self._stderr[: len(self._stderr) - STDERR_TAIL_BYTES]

    async def _crash(self, message: str) -> PluginCrash:
        """Kill the plugin and build the error with its stderr tail."""
        await self.close(graceful=False)
        return PluginCrash(message, self.stderr_text)

    async def mutate(self, request: MutationRequest) -> bytes:
        """
        Send one request and wait for the mutated bytes.

        Raises:
            PluginCrash: Plugin died, timed out, or answered out of protocol
        """
        if self.process is None or self.process.returncode is not None:
            raise PluginCrash("mutator plugin is not running", self.stderr_text)

        async with self._lock:
            assert self.process.stdin and self.process.stdout
            try:
                self.process.stdin.write(encode_request(request))
                await self.process.stdin.drain()
                header = await asyncio.wait_for(self.process.stdout.readexactly(_LEN.size), self.timeout)
                (length,) = _LEN.unpack(header)
                payload = await asyncio.wait_for(self.process.stdout.readexactly(length), self.timeout)
            except asyncio.TimeoutError:
                raise await self._crash(f"mutator plugin did not answer within {self.timeout}s")
            except (asyncio.IncompleteReadError, BrokenPipeError, ConnectionResetError):
                # let stderr catch up with the traceback before reporting
                await asyncio.sleep(0.05)
                raise await self._crash("mutator plugin exited unexpectedly")

            tag, mutated = split_frame(payload) if payload else (None, b"")
            if tag != RESPONSE_TAG:
                raise await self._crash(f"protocol violation: unexpected response tag {tag}")
            if len(mutated) > request.max_size:
                raise await self._crash(
                    f"protocol violation: output of {len(mutated)} bytes exceeds max_size {request.max_size}"
                )
            return mutated

    async def close(self, graceful: bool = True) -> None:
        """Shut the plugin down (killing it if it does not exit)."""
        process = self.process
        if process is None:
            return
        if process.returncode is None:
            if graceful and process.stdin:
                try:
                    process.stdin.write(encode_shutdown())
                    await process.stdin.drain()
                    process.stdin.close()
                    await asyncio.wait_for(process.wait(), timeout=2)
                except (asyncio.TimeoutError, BrokenPipeError, ConnectionResetError):
                    pass
            if process.returncode is None:
                process.kill()
                await process.wait()
        if self._stderr_task is not None:
            try:
                await asyncio.wait_for(self._stderr_task, timeout=1)
            except asyncio.TimeoutError:
                self._stderr_task.cancel()
            self._stderr_task = None

    async def __aenter__(self) -> "PluginProcess":
        await self.start()
        return self

    async def __aexit__(self, *exc) -> None:
        await self.close()
