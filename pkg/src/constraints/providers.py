"""
LLM provider backends.

Three interchangeable backends speak the same wire document
``{messages: [{role, content}], params: {temperature, max_tokens}}`` and
answer with ``{content}``:

- ``offline:<dir>``     canned responses selected by a prompt header
- ``subprocess:<cmd>``  one JSON document over stdin/stdout per request
- ``http:<url>``        the same document POSTed to a gateway
"""

import asyncio
import json
import re
import shlex
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional

import aiohttp
from pydantic import BaseModel, ConfigDict, Field

from ..pipeline.config import ProviderConfig
from ..pipeline.errors import ConfigError, ProviderError
from ..pipeline.logger import get_logger
from ..utils.metrics import metrics

logger = get_logger(__name__)

HEADER_TEMPLATE = "[wedge] task={task} problem={problem} solution={solution}"
HEADER_RE = re.compile(r"^\[wedge\] task=(\S+) problem=(\S*) solution=(\S*)\s*$", re.MULTILINE)


class Message(BaseModel):
    """One chat turn."""

    model_config = ConfigDict(frozen=True)

    role: str
    content: str


class GenerationParams(BaseModel):
    """Sampling parameters sent with every request."""

    model_config = ConfigDict(frozen=True)

    temperature: float = Field(default=0.8, ge=0.0)
    max_tokens: int = Field(default=4096, gt=0)


def prompt_header(task: str, problem_id: str = "", solution_id: str = "") -> str:
    """Routing header placed on the first line of every prompt."""
    return HEADER_TEMPLATE.format(task=task, problem=problem_id, solution=solution_id)


def wire_request(messages: List[Message], params: GenerationParams) -> Dict[str, Any]:
    """Request document shared by the subprocess and HTTP providers."""
    return {
        "messages": [m.model_dump() for m in messages],
        "params": params.model_dump(),
    }


def parse_wire_response(payload: Any) -> str:
    """Extract content from a response document."""
    if not isinstance(payload, dict) or not isinstance(payload.get("content"), str):
        raise ProviderError(f"provider response lacks a 'content' string: {str(payload)[:200]}")
    return payload["content"]


class RateLimiter:
    """Token bucket rate limiter."""

    def __init__(self, requests_per_minute: int):
        """
        Initialize rate limiter.

        Args:
            requests_per_minute: Maximum requests per minute
        """
        self.requests_per_minute = requests_per_minute
        self.tokens = float(requests_per_minute)
        self.max_tokens = float(requests_per_minute)
        self.last_update = time.monotonic()
        self.lock = asyncio.Lock()

    async def acquire(self) -> None:
        """Wait until a request can be made."""
        async with self.lock:
            now = time.monotonic()
            elapsed = now - self.last_update

            self.tokens = min(self.max_tokens, self.tokens + elapsed * (self.requests_per_minute / 60.0))
            self.last_update = now

            if self.tokens < 1.0:
                wait_time = (1.0 - self.tokens) / (self.requests_per_minute / 60.0)
                logger.debug(f"Rate limit reached, waiting {wait_time:.2f}s")
                await asyncio.sleep(wait_time)
                self.tokens = 1.0
                self.last_update = time.monotonic()

            self.tokens -= 1.0


class LLMProvider(ABC):
    """Chat-completion backend."""

    name = "provider"

    def __init__(self, request_limit: int = 4):
        self._slots = asyncio.Semaphore(max(1, request_limit))

    async def send(self, messages: List[Message], params: Optional[GenerationParams] = None) -> str:
        """
        Send a conversation and return the assistant's reply.

        Args:
            messages: Ordered chat turns
            params: Sampling parameters

        Returns:
            Response text

        Raises:
            ProviderError: Backend failed
        """
        params = params or GenerationParams()
        async with self._slots:
            try:
                content = await self._send(list(messages), params)
            except ProviderError:
                metrics.increment_provider_call(failed=True)
                raise
            metrics.increment_provider_call()
            return content

    @abstractmethod
    async def _send(self, messages: List[Message], params: GenerationParams) -> str:
        """Backend-specific request."""

    async def close(self) -> None:
        """Release backend resources."""


class OfflineRule(BaseModel):
    """Canned responses for prompts matching task (and optionally ids)."""

    task: str
    problem: Optional[str] = None
    solution: Optional[str] = None
    responses: List[str]

    def matches(self, task: str, problem: str, solution: str) -> bool:
        return (
            self.task == task
            and (self.problem is None or self.problem == problem)
            and (self.solution is None or self.solution == solution)
        )


class OfflineProvider(LLMProvider):
    """
    Replays responses from a fixture directory.

    ``responses.json`` lists rules; the first rule matching the header of the
    latest prompt wins, and the reply is ``responses[k]`` where k counts the
    assistant turns already given to that task in the conversation (the last
    response repeats once exhausted).
    """

    name = "offline"

    def __init__(self, directory, request_limit: int = 4):
        super().__init__(request_limit)
        self.directory = Path(directory)
        index = self.directory / "responses.json"
        if not index.is_file():
            raise ConfigError(f"offline provider directory has no responses.json: {self.directory}")
        try:
            data = json.loads(index.read_text(encoding="utf-8"))
            self.rules = [OfflineRule.model_validate(r) for r in data.get("rules", [])]
        except (ValueError, AttributeError) as e:
            raise ConfigError(f"invalid offline fixture {index}: {e}") from e

    async def _send(self, messages: List[Message], params: GenerationParams) -> str:
        user_turns = [i for i, m in enumerate(messages) if m.role == "user"]
        header = HEADER_RE.search(messages[user_turns[-1]].content) if user_turns else None
        if header is None:
            raise ProviderError("offline provider: prompt carries no [wedge] header")

        task, problem, solution = header.groups()
        rule = next((r for r in self.rules if r.matches(task, problem, solution)), None)
        if rule is None or not rule.responses:
            raise ProviderError(
                f"offline provider: no fixture for task={task} problem={problem} solution={solution}"
            )

        # Replies already given to this task in the conversation
        task_start = next(
            i for i in user_turns
            if (m := HEADER_RE.search(messages[i].content)) and m.group(1) == task
        )
        turn = sum(1 for m in messages[task_start:] if m.role == "assistant")
        name = rule.responses[min(turn, len(rule.responses) - 1)]
        path = self.directory / name
        if not path.is_file():
            raise ProviderError(f"offline provider: missing response file {path}")
        logger.debug(f"Offline response {name} for {task}/{solution or problem}")
        return path.read_text(encoding="utf-8")


class SubprocessProvider(LLMProvider):
    """Runs a command per request, exchanging JSON over stdin/stdout."""

    name = "subprocess"

    def __init__(self, command: str, timeout: float = 300.0, request_limit: int = 4):
        super().__init__(request_limit)
        self.argv = shlex.split(command)
        if not self.argv:
            raise ConfigError("subprocess provider needs a command")
        self.timeout = timeout

    async def _send(self, messages: List[Message], params: GenerationParams) -> str:
        payload = json.dumps(wire_request(messages, params)).encode("utf-8")
        try:
            process = await asyncio.create_subprocess_exec(
                *self.argv,
                stdin=asyncio.subprocess.PIPE,
                stdout=asyncio.subprocess.PIPE,
                stderr=asyncio.subprocess.PIPE,
            )
        except OSError as e:
            raise ProviderError(f"cannot start provider command {self.argv[0]}: {e}") from e

        try:
            stdout, stderr = await asyncio.wait_for(process.communicate(payload), timeout=self.timeout)
        except asyncio.TimeoutError as e:
            process.kill()
            await process.wait()
            raise ProviderError(f"provider command timed out after {self.timeout}s") from e

        if process.returncode != 0:
            tail = stderr.decode("utf-8", errors="replace")[-500:]
            raise ProviderError(f"provider command exited {process.returncode}: {tail}")
        try:
            return parse_wire_response(json.loads(stdout))
        except ValueError as e:
            raise ProviderError(f"provider command printed invalid JSON: {e}") from e


class HttpProvider(LLMProvider):
    """POSTs the wire document to a gateway with rate limiting and retries."""

    name = "http"

    def __init__(
        self,
        url: str,
        requests_per_minute: int = 60,
        timeout: float = 300.0,
        retries: int = 3,
        request_limit: int = 4,
    ):
        super().__init__(request_limit)
        self.url = url
        self.rate_limiter = RateLimiter(requests_per_minute)
        self.timeout = aiohttp.ClientTimeout(total=timeout)
        self.retries = max(1, retries)
        self.session: Optional[aiohttp.ClientSession] = None

    async def _ensure_session(self) -> aiohttp.ClientSession:
        """Ensure aiohttp session is created."""
        if self.session is None or self.session.closed:
            self.session = aiohttp.ClientSession(timeout=self.timeout)
        return self.session

    async def close(self) -> None:
        """Close the HTTP session."""
        if self.session and not self.session.closed:
            await self.session.close()

    async def _send(self, messages: List[Message], params: GenerationParams) -> str:
        document = wire_request(messages, params)

        for attempt in range(self.retries):
            try:
                await self.rate_limiter.acquire()
                session = await self._ensure_session()

                async with session.post(self.url, json=document) as response:
                    if response.status == 429:
                        retry_after = int(response.headers.get("Retry-After", "30"))
                        logger.warning(f"Provider rate limit exceeded, waiting {retry_after}s")
                        await asyncio.sleep(retry_after)
                        continue

                    response.raise_for_status()
                    return parse_wire_response(await response.json())

            except (aiohttp.ClientError, asyncio.TimeoutError) as e:
                if attempt < self.retries - 1:
                    wait_time = 2 ** attempt
                    logger.warning(
                        f"Provider request failed (attempt {attempt + 1}/{self.retries}): {e}. "
                        f"Retrying in {wait_time}s..."
                    )
                    await asyncio.sleep(wait_time)
                else:
                    logger.error(f"Provider request failed after {self.retries} attempts: {e}")
                    raise ProviderError(f"provider request failed: {e}") from e

        raise ProviderError(f"provider request failed after {self.retries} attempts")


def create_provider(spec: str, provider_config: Optional[ProviderConfig] = None) -> LLMProvider:
    """
    Build a provider from a selector string.

    Args:
        spec: ``offline:<dir>``, ``subprocess:<cmd>`` or ``http:<url>``
        provider_config: ProviderConfig with limits and timeouts

    Returns:
        Provider instance

    Raises:
        ConfigError: Unknown selector
    """
    cfg = provider_config or ProviderConfig()
    kind, _, target = (spec or "").partition(":")
    if not target:
        raise ConfigError(f"invalid provider selector '{spec}' (expected kind:target)")

    if kind == "offline":
        return OfflineProvider(target, request_limit=cfg.request_limit)
    if kind == "subprocess":
        return SubprocessProvider(target, timeout=cfg.timeout, request_limit=cfg.request_limit)
    if kind == "http":
        # http:https://host/path keeps its scheme; http://host/path means the URL itself
        url = target if target.startswith(("http://", "https://")) else f"http:{target}"
        return HttpProvider(
            url,
            requests_per_minute=cfg.requests_per_minute,
            timeout=cfg.timeout,
            retries=cfg.retries,
            request_limit=cfg.request_limit,
        )
    raise ConfigError(f"unknown provider kind '{kind}' (use offline, subprocess or http)")


class Conversation:
    """
    Multi-turn exchange with a provider, kept as a transcript.

    Each ask() appends the prompt and the reply; write() stores them as
    prompt_N.txt / response_N.txt.
    """

    def __init__(self, provider: LLMProvider, params: Optional[GenerationParams] = None):
        self.provider = provider
        self.params = params or GenerationParams()
        self.messages: List[Message] = []

    async def ask(self, content: str) -> str:
        """Send a user turn and record the reply."""
        self.messages.append(Message(role="user", content=content))
        reply = await self.provider.send(self.messages, self.params)
        self.messages.append(Message(role="assistant", content=reply))
        return reply

    @property
    def rounds(self) -> int:
        return sum(1 for m in self.messages if m.role == "assistant")

    def transcript(self) -> List[Dict[str, str]]:
        return [m.model_dump() for m in self.messages]

    def write(self, directory) -> None:
        """Write prompt_N.txt and response_N.txt files."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        prompts = [m for m in self.messages if m.role == "user"]
        replies = [m for m in self.messages if m.role == "assistant"]
        for i, message in enumerate(prompts, start=1):
            (out / f"prompt_{i}.txt").write_text(message.content, encoding="utf-8")
        for i, message in enumerate(replies, start=1):
            (out / f"response_{i}.txt").write_text(message.content, encoding="utf-8")
