import json

import httpx
import openai
import pytest

from grnsynth.knowledge.cache import ChatExchange, ResponseCache, request_digest
from grnsynth.knowledge.client import (
    CachedChatClient,
    FixtureClient,
    LlmConfig,
    OpenAIChatClient,
    build_client,
    build_messages,
)
from grnsynth.utils.exceptions import ClientError


def test_digest_depends_on_model_temperature_and_messages():
    messages = build_messages('hello', 'system')
    base = request_digest('m', 0.0, messages)
    assert base == request_digest('m', 0, messages)
    assert base != request_digest('other', 0.0, messages)
    assert base != request_digest('m', 0.7, messages)
    assert base != request_digest('m', 0.0, build_messages('hello!', 'system'))


def test_cache_through_client_stores_then_replays(tmp_path, scripted_client):
    path = tmp_path / 'cache.jsonl'
    inner = scripted_client(['<Answer> [A] </Answer>', 'second'])
    client = CachedChatClient(ResponseCache(path), inner=inner)

    assert client.ask('q1') == '<Answer> [A] </Answer>'
    assert client.ask('q1') == '<Answer> [A] </Answer>'
    assert client.requests_made == 1
    assert len(inner.prompts) == 1

    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(records) == 1
    assert records[0]['messages'][-1] == {'role': 'user', 'content': 'q1'}
    assert records[0]['request_hash'] == request_digest('scripted', 0.0, records[0]['messages'])


def test_offline_replay_makes_no_requests(tmp_path, scripted_client):
    path = tmp_path / 'cache.jsonl'
    CachedChatClient(ResponseCache(path), inner=scripted_client(['recorded'])).ask('q1')

    replay = FixtureClient(path, model='scripted')
    assert replay.ask('q1') == 'recorded'
    assert replay.requests_made == 0
    with pytest.raises(ClientError):
        replay.ask('never asked')


def test_build_client_offline(tmp_path):
    config = LlmConfig(model='gpt-4', cache_path=str(tmp_path / 'cache.jsonl'))
    client = build_client(config, offline=True)
    assert client.inner is None
    with pytest.raises(ClientError):
        client.ask('anything')


def test_corrupt_cache_lines_are_skipped(tmp_path):
    path = tmp_path / 'cache.jsonl'
    exchange = ChatExchange.create('m', 0.0, build_messages('q'), 'r')
    path.write_text('{not json\n' + json.dumps(exchange.to_record()) + '\n')
    cache = ResponseCache(path)
    assert len(cache) == 1
    assert cache.get(exchange.request_hash).response == 'r'


def test_first_record_wins(tmp_path):
    cache = ResponseCache(tmp_path / 'cache.jsonl')
    first = cache.put(ChatExchange.create('m', 0.0, build_messages('q'), 'one'))
    second = cache.put(ChatExchange.create('m', 0.0, build_messages('q'), 'two'))
    assert second.response == 'one' == first.response
    assert len((tmp_path / 'cache.jsonl').read_text().splitlines()) == 1


def connection_error():
    return openai.APIConnectionError(request=httpx.Request('POST', 'https://llm.test/v1/chat/completions'))


def slot_is_free(client):
    free = client._slots.acquire(blocking=False)
    if free:
        client._slots.release()
    return free


def test_backoff_sleeps_without_holding_a_request_slot(monkeypatch):
    monkeypatch.setenv('LLM4GRN_API_KEY', 'sk-test')
    client = OpenAIChatClient(LlmConfig(max_concurrency=1, max_attempts=3, initial_backoff=0.01))
    replies = iter([connection_error(), connection_error(), 'recovered'])
    free_during_sleep = []

    def create(messages):
        assert not slot_is_free(client)
        reply = next(replies)
        if isinstance(reply, Exception):
            raise reply
        return reply

    client._create = create
    client.sleep = lambda seconds: free_during_sleep.append(slot_is_free(client))

    assert client.ask('q') == 'recovered'
    assert free_during_sleep == [True, True]
    assert slot_is_free(client)


def test_exhausted_retries_raise_client_error_and_release_the_slot(monkeypatch):
    monkeypatch.setenv('LLM4GRN_API_KEY', 'sk-test')
    client = OpenAIChatClient(LlmConfig(max_concurrency=1, max_attempts=2, initial_backoff=0.01))
    calls = []

    def create(messages):
        calls.append(messages)
        raise connection_error()

    client._create = create
    client.sleep = lambda seconds: None

    with pytest.raises(ClientError, match='Chat completion failed'):
        client.ask('q')
    assert len(calls) == 2
    assert slot_is_free(client)
