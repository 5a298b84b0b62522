"""Tests for the builtin mutator, the plugin protocol and mutator synthesis."""

import random

import pytest
from pydantic import ValidationError

from conftest import FIXTURES, OFFLINE_DIR, make_input, write_offline_fixture
from src.constraints.parsing import NLInvariant
from src.constraints.providers import Conversation, create_provider
from src.mutation.builtin import MutationOp, apply_op, builtin_mutate, splice_token
from src.mutation.protocol import (
    RESPONSE_TAG,
    MutationRequest,
    PluginProcess,
    decode_request,
    encode_request,
    encode_response,
    split_frame,
)
from src.mutation.synthesis import (
    MutatorContext,
    MutatorKind,
    dry_run,
    load_artifact,
    refine_loop,
    synthesize_mutator,
)
from src.pipeline.errors import PluginCrash

SEEDS = [make_input("s1", "3\n1 2 3\n"), make_input("s2", "4\n5 5 6 7\n")]


def fenced(name: str) -> str:
    return "```python\n" + (FIXTURES / name).read_text() + "```\n"


class TestBuiltin:

    def test_splice_replaces_one_token(self):
        assert splice_token(b"1 2 3", 0, b"9") == b"9 2 3"
        assert splice_token(b"1\n2  3\n", 2, b"40") == b"1\n2  40\n"
        assert splice_token(b"1 2 3", 7, b"9") == b"1 2 3"

    def test_token_splice_keeps_token_count(self):
        out = apply_op(MutationOp.TOKEN_SPLICE, b"10 20 30\n", random.Random(5), b"99")

        assert len(out.split()) == 3

    def test_empty_seed_gets_fresh_line(self):
        out = builtin_mutate(b"", rng_seed=1, max_size=100)

        assert out
        assert out.decode("ascii").strip()

    def test_same_arguments_same_output(self):
        for rng_seed in (0, 7, 2 ** 64 - 1):
            first = builtin_mutate(b"5\n1 2 3 4 5\n", rng_seed, 64, b"9 9")
            assert builtin_mutate(b"5\n1 2 3 4 5\n", rng_seed, 64, b"9 9") == first

    def test_output_respects_max_size(self):
        for rng_seed in range(50):
            assert len(builtin_mutate(b"1 2 3 4 5 6 7 8 9 10", rng_seed, 12)) <= 12

    def test_max_size_must_be_positive(self):
        with pytest.raises(ValueError):
            builtin_mutate(b"1", 0, 0)


class TestProtocol:

    def test_request_frame_decodes(self):
        request = MutationRequest(seed=b"1 2 3", add_seed=b"4", max_size=64, rng_seed=2 ** 63)
        frame = encode_request(request)

        assert int.from_bytes(frame[:4], "little") == len(frame) - 4
        assert decode_request(frame[4:]) == request

    def test_response_frame(self):
        tag, body = split_frame(encode_response(b"xyz")[4:])

        assert (tag, body) == (RESPONSE_TAG, b"xyz")

    def test_rng_seed_is_u64(self):
        with pytest.raises(ValidationError):
            MutationRequest(seed=b"", max_size=1, rng_seed=2 ** 64)
        with pytest.raises(ValidationError):
            MutationRequest(seed=b"", max_size=0, rng_seed=0)

    @pytest.mark.asyncio
    async def test_plugin_answers_deterministically(self):
        request = MutationRequest(seed=b"1 2 3\n", max_size=64, rng_seed=42)

        async with PluginProcess.for_module(FIXTURES / "mutator_ok.py") as plugin:
            first = await plugin.mutate(request)
            await plugin.mutate(MutationRequest(seed=b"7 7\n", max_size=64, rng_seed=1))
            again = await plugin.mutate(request)

        assert first == again
        assert len(first.split()) == 3

    @pytest.mark.asyncio
    async def test_plugin_exception_is_a_crash(self):
        plugin = PluginProcess.for_module(FIXTURES / "mutator_index_error.py")
        await plugin.start()

        with pytest.raises(PluginCrash) as excinfo:
            await plugin.mutate(MutationRequest(seed=b"1 2\n", max_size=64, rng_seed=0))
        assert "IndexError" in str(excinfo.value)


class TestDryRun:

    @pytest.mark.asyncio
    async def test_healthy_plugin(self):
        report = await dry_run(FIXTURES / "mutator_ok.py", SEEDS, duration=1.0, max_size=256)

        assert not report.crashed
        assert report.inputs_produced > 0
        assert report.passed()

    @pytest.mark.asyncio
    async def test_index_error(self):
        report = await dry_run(FIXTURES / "mutator_index_error.py", SEEDS, duration=1.0, max_size=256)

        assert report.crashed
        assert "IndexError" in report.failure_message
        assert not report.passed()

    @pytest.mark.asyncio
    async def test_oversize_output_is_protocol_violation(self):
        report = await dry_run(FIXTURES / "mutator_oversize.py", SEEDS, duration=1.0, max_size=16)

        assert report.crashed
        assert "protocol violation" in report.failure_message

    @pytest.mark.asyncio
    async def test_identity_mutator_produces_nothing_new(self):
        report = await dry_run(FIXTURES / "mutator_identity.py", SEEDS, duration=0.2, max_size=256)

        assert report.inputs_produced == 0
        assert "no new inputs" in report.failure_reason()

    @pytest.mark.asyncio
    async def test_low_validity_fails(self):
        async def reject_all(_):
            return False

        report = await dry_run(FIXTURES / "mutator_ok.py", SEEDS, duration=0.5, max_size=256,
                               validator=reject_all)

        assert report.validity_checked > 0
        assert report.validity_valid == 0
        assert report.validity_sample == (report.validity_checked, 0)
        assert not report.passed(min_validity=0.10)


class TestRefineLoop:

    def context(self, problem) -> MutatorContext:
        return MutatorContext(
            problem=problem,
            solution=problem.get_solution("dup_bucket"),
            invariants=[NLInvariant(id="inv_1", text="many repeated values")],
        )

    @pytest.mark.asyncio
    async def test_synthesis_returns_fenced_module(self, toy_problem):
        conversation = Conversation(create_provider(f"offline:{OFFLINE_DIR}"))

        source = await synthesize_mutator(conversation, self.context(toy_problem), toy_problem.default_tests)

        assert "def fuzz(buf, add_buf, max_size)" in source
        assert "```" not in source
        assert "Constraints summary begins" in conversation.messages[0].content

    @pytest.mark.asyncio
    async def test_passes_first_round(self, tmp_path, toy_problem):
        conversation = Conversation(create_provider(f"offline:{OFFLINE_DIR}"))

        artifact = await refine_loop(conversation, self.context(toy_problem), toy_problem.default_tests,
                                     tmp_path / "m", dry_run_seconds=0.5)

        assert artifact.kind == MutatorKind.PLUGIN_PROCESS
        assert artifact.rounds_used == 1
        assert artifact.constraint_aware
        assert load_artifact(tmp_path / "m") == artifact

    @pytest.mark.asyncio
    async def test_repair_after_broken_candidate(self, tmp_path, toy_problem):
        directory = write_offline_fixture(
            tmp_path / "offline",
            [{"task": "mutator", "responses": ["broken.txt", "fixed.txt"]}],
            {"broken.txt": fenced("mutator_index_error.py"), "fixed.txt": fenced("mutator_ok.py")},
        )
        conversation = Conversation(create_provider(f"offline:{directory}"))

        artifact = await refine_loop(conversation, self.context(toy_problem), toy_problem.default_tests,
                                     tmp_path / "m", dry_run_seconds=0.5)

        assert artifact.rounds_used == 2
        assert (tmp_path / "m" / "mutator_round_1.py").is_file()
        assert "IndexError" in conversation.messages[2].content

    @pytest.mark.asyncio
    async def test_always_broken_falls_back_to_builtin(self, tmp_path, toy_problem):
        directory = write_offline_fixture(
            tmp_path / "offline",
            [{"task": "mutator", "responses": ["broken.txt"]}],
            {"broken.txt": fenced("mutator_index_error.py")},
        )
        conversation = Conversation(create_provider(f"offline:{directory}"))

        artifact = await refine_loop(conversation, self.context(toy_problem), toy_problem.default_tests,
                                     tmp_path / "m", dry_run_seconds=0.2)

        assert artifact.kind == MutatorKind.BUILTIN
        assert artifact.synthesis_exhausted
        assert artifact.rounds_used == 5
        assert conversation.rounds == 5
