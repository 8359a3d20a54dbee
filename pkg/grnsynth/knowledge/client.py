"""
Chat Completion Clients
OpenAI-compatible HTTP client with backoff, a cache-through wrapper and an
offline fixture client that replays recorded transcripts
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from typing import Optional

import openai
from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from grnsynth.knowledge.cache import ChatExchange, ResponseCache, request_digest
from grnsynth.utils.config_loader import API_KEY_ENV, get_api_key
from grnsynth.utils.exceptions import ClientError
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)

TRANSIENT_ERRORS = (
    openai.RateLimitError,
    openai.APIConnectionError,
    openai.APITimeoutError,
    openai.InternalServerError,
)

DEFAULT_SYSTEM_PROMPT = (
    "You are an expert in gene regulation and single-cell transcriptomics."
)


@dataclass(frozen=True)
class LlmConfig:
    """Chat-completion endpoint settings"""

    endpoint: Optional[str] = None
    model: str = 'gpt-4'
    temperature: float = 0.0
    max_attempts: int = 5
    max_concurrency: int = 4
    timeout: float = 120.0
    initial_backoff: float = 1.0
    max_backoff: float = 60.0
    max_tokens: Optional[int] = None
    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    cache_path: Optional[str] = None


def build_messages(prompt, system_prompt=None):
    """Single-turn message list"""
    messages = []
    if system_prompt:
        messages.append({'role': 'system', 'content': system_prompt})
    messages.append({'role': 'user', 'content': prompt})
    return messages


class ChatClient:
    """Base chat client: subclasses implement complete()"""

    def __init__(self, model, temperature=0.0, system_prompt=DEFAULT_SYSTEM_PROMPT):
        self.model = model
        self.temperature = temperature
        self.system_prompt = system_prompt

    def complete(self, messages):
        """Return the assistant text for a message list"""
        raise NotImplementedError

    def ask(self, prompt):
        """Send one single-turn prompt and return the reply text"""
        return self.complete(build_messages(prompt, self.system_prompt))


class OpenAIChatClient(ChatClient):
    """OpenAI-compatible chat completions with exponential backoff"""

    def __init__(self, config):
        """
        Initialize HTTP client

        Args:
            config: LlmConfig
        """
        super().__init__(config.model, config.temperature, config.system_prompt)
        self.config = config
        api_key = get_api_key()
        if not api_key:
            logger.warning(f"{API_KEY_ENV} is not set; requests will be rejected")
        kwargs = {'api_key': api_key or 'unset', 'timeout': config.timeout, 'max_retries': 0}
        if config.endpoint:
            kwargs['base_url'] = config.endpoint
        self.client = openai.OpenAI(**kwargs)
        self._slots = threading.BoundedSemaphore(max(1, config.max_concurrency))
        self.sleep = time.sleep

    def _create(self, messages):
        kwargs = {
            'model': self.model,
            'messages': messages,
            'temperature': self.temperature,
        }
        if self.config.max_tokens:
            kwargs['max_tokens'] = self.config.max_tokens
        response = self.client.chat.completions.create(**kwargs)
        return response.choices[0].message.content or ''

    def complete(self, messages):
        # a slot is held per attempt, never across a backoff sleep
        retrying = Retrying(
            retry=retry_if_exception_type(TRANSIENT_ERRORS),
            wait=wait_exponential(multiplier=self.config.initial_backoff, max=self.config.max_backoff),
            stop=stop_after_attempt(self.config.max_attempts),
            before_sleep=before_sleep_log(logger, logging.WARNING),
            sleep=self.sleep,
            reraise=True,
        )
        try:
            for attempt in retrying:
                with attempt, self._slots:
                    return self._create(messages)
        except openai.OpenAIError as e:
            logger.error(f"Chat completion failed for model {self.model}: {e}")
            raise ClientError(f"Chat completion failed: {e}") from e


class CachedChatClient(ChatClient):
    """Cache-through wrapper: every exchange is stored before it is returned"""

    def __init__(self, cache, inner=None, model=None, temperature=None, system_prompt=None):
        """
        Args:
            cache: ResponseCache
            inner: ChatClient used on cache misses; None disables the network
            model: Model name (defaults to inner's)
            temperature: Sampling temperature (defaults to inner's)
            system_prompt: System prompt (defaults to inner's)
        """
        super().__init__(
            model if model is not None else getattr(inner, 'model', 'fixture'),
            temperature if temperature is not None else getattr(inner, 'temperature', 0.0),
            system_prompt if system_prompt is not None
            else getattr(inner, 'system_prompt', DEFAULT_SYSTEM_PROMPT),
        )
        self.cache = cache
        self.inner = inner
        self.requests_made = 0
        self._lock = threading.Lock()

    def complete(self, messages):
        digest = request_digest(self.model, self.temperature, messages)
        cached = self.cache.get(digest)
        if cached is not None:
            return cached.response
        if self.inner is None:
            raise ClientError(f"No cached response for request {digest[:12]} and the client is offline")

        response = self.inner.complete(messages)
        with self._lock:
            self.requests_made += 1
        stored = self.cache.put(ChatExchange.create(self.model, self.temperature, messages, response))
        return stored.response


class FixtureClient(CachedChatClient):
    """Offline client replaying a recorded transcript file"""

    def __init__(self, transcript_path, model='fixture', temperature=0.0,
                 system_prompt=DEFAULT_SYSTEM_PROMPT):
        super().__init__(ResponseCache(transcript_path), inner=None, model=model,
                         temperature=temperature, system_prompt=system_prompt)


def build_client(config, offline=False):
    """
    Client for a run: cache-through HTTP client, or cache replay when offline

    Args:
        config: LlmConfig
        offline: Never touch the network

    Returns:
        ChatClient: Configured client
    """
    cache = ResponseCache(config.cache_path)
    if offline:
        logger.info(f"Offline mode: replaying {len(cache)} cached exchanges")
        return CachedChatClient(cache, inner=None, model=config.model,
                                temperature=config.temperature, system_prompt=config.system_prompt)
    return CachedChatClient(cache, inner=OpenAIChatClient(config))
