"""Tests for the subprocess and HTTP providers."""

import sys

import aiohttp
import pytest

from conftest import FIXTURES
from src.constraints.providers import (
    Conversation,
    HttpProvider,
    Message,
    OfflineProvider,
    SubprocessProvider,
    create_provider,
)
from src.pipeline.config import ProviderConfig
from src.pipeline.errors import ConfigError, ProviderError


def subprocess_provider() -> SubprocessProvider:
    return SubprocessProvider(f"{sys.executable} {FIXTURES / 'echo_provider.py'}", timeout=30)


def fake_response(mocker, status=200, payload=None, headers=None):
    response = mocker.MagicMock(status=status, headers=headers or {})
    response.json = mocker.AsyncMock(return_value=payload)
    context = mocker.MagicMock()
    context.__aenter__ = mocker.AsyncMock(return_value=response)
    context.__aexit__ = mocker.AsyncMock(return_value=False)
    return context


def fake_session(mocker, *outcomes):
    session = mocker.MagicMock(closed=False)
    session.post.side_effect = list(outcomes)
    mocker.patch.object(HttpProvider, "_ensure_session", mocker.AsyncMock(return_value=session))
    return session


class TestSelectors:

    def test_kinds(self, tmp_path):
        (tmp_path / "responses.json").write_text('{"rules": []}')

        assert isinstance(create_provider(f"offline:{tmp_path}"), OfflineProvider)
        assert isinstance(create_provider("subprocess:my-llm --json"), SubprocessProvider)
        assert create_provider("http:https://gateway.local/v1").url == "https://gateway.local/v1"

    def test_limits_come_from_config(self):
        provider = create_provider("http:http://gateway.local", ProviderConfig(retries=7))

        assert provider.retries == 7

    @pytest.mark.parametrize("spec", ["", "offline", "carrier:pigeon"])
    def test_invalid(self, spec):
        with pytest.raises(ConfigError):
            create_provider(spec)


class TestSubprocessProvider:

    @pytest.mark.asyncio
    async def test_conversation_round_trip(self, tmp_path):
        conversation = Conversation(subprocess_provider())

        assert await conversation.ask("hello") == "1:HELLO"
        assert await conversation.ask("again") == "3:AGAIN"

        conversation.write(tmp_path)
        assert (tmp_path / "prompt_2.txt").read_text() == "again"
        assert (tmp_path / "response_1.txt").read_text() == "1:HELLO"

    @pytest.mark.asyncio
    async def test_nonzero_exit(self):
        with pytest.raises(ProviderError, match="gateway down"):
            await subprocess_provider().send([Message(role="user", content="fail")])

    @pytest.mark.asyncio
    async def test_invalid_json(self):
        with pytest.raises(ProviderError, match="invalid JSON"):
            await subprocess_provider().send([Message(role="user", content="garbage")])

    @pytest.mark.asyncio
    async def test_missing_command(self):
        provider = SubprocessProvider("wedge-no-such-llm-command")

        with pytest.raises(ProviderError, match="cannot start"):
            await provider.send([Message(role="user", content="x")])


class TestHttpProvider:

    @pytest.mark.asyncio
    async def test_posts_wire_document(self, mocker):
        session = fake_session(mocker, fake_response(mocker, payload={"content": "ok"}))
        provider = HttpProvider("http://gateway.local")

        reply = await provider.send([Message(role="user", content="ping")])

        assert reply == "ok"
        document = session.post.call_args.kwargs["json"]
        assert document["messages"] == [{"role": "user", "content": "ping"}]
        assert document["params"]["max_tokens"] == 4096

    @pytest.mark.asyncio
    async def test_rate_limited_then_ok(self, mocker):
        session = fake_session(
            mocker,
            fake_response(mocker, status=429, headers={"Retry-After": "0"}),
            fake_response(mocker, payload={"content": "ok"}),
        )

        assert await HttpProvider("http://gateway.local").send([Message(role="user", content="x")]) == "ok"
        assert session.post.call_count == 2

    @pytest.mark.asyncio
    async def test_retries_exhausted(self, mocker):
        fake_session(mocker, aiohttp.ClientConnectionError("refused"))
        provider = HttpProvider("http://gateway.local", retries=1)

        with pytest.raises(ProviderError, match="refused"):
            await provider.send([Message(role="user", content="x")])

    @pytest.mark.asyncio
    async def test_response_without_content(self, mocker):
        fake_session(mocker, fake_response(mocker, payload={"text": "wrong field"}))

        with pytest.raises(ProviderError, match="content"):
            await HttpProvider("http://gateway.local").send([Message(role="user", content="x")])
