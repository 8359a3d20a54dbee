"""
Chat Exchange Cache
Append-only JSON-lines log of chat exchanges keyed by request digest
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)


def request_digest(model, temperature, messages):
    """
    Stable SHA-256 digest of a chat request

    Args:
        model: Model name
        temperature: Sampling temperature
        messages: List of {'role', 'content'} dicts

    Returns:
        str: Hex digest
    """
    payload = json.dumps(
        {
            'model': model,
            'temperature': float(temperature),
            'messages': [{'role': m['role'], 'content': m['content']} for m in messages],
        },
        sort_keys=True,
        separators=(',', ':'),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class ChatExchange:
    """One request/response pair"""

    model: str
    temperature: float
    messages: tuple
    response: str
    request_hash: str
    timestamp: str

    @classmethod
    def create(cls, model, temperature, messages, response):
        messages = tuple({'role': m['role'], 'content': m['content']} for m in messages)
        return cls(
            model=model,
            temperature=float(temperature),
            messages=messages,
            response=response,
            request_hash=request_digest(model, temperature, messages),
            timestamp=datetime.now(timezone.utc).isoformat(timespec='seconds'),
        )

    def to_record(self):
        record = asdict(self)
        record['messages'] = list(self.messages)
        return record

    @classmethod
    def from_record(cls, record):
        return cls(
            model=record['model'],
            temperature=float(record['temperature']),
            messages=tuple(record['messages']),
            response=record['response'],
            request_hash=record['request_hash'],
            timestamp=record.get('timestamp', ''),
        )


class ResponseCache:
    """Append-only exchange log, safe for concurrent writers in one process"""

    def __init__(self, path=None):
        """
        Initialize cache

        Args:
            path: JSON-lines file; None keeps the cache in memory only
        """
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._records = {}
        if self.path and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    exchange = ChatExchange.from_record(json.loads(line))
                except (json.JSONDecodeError, KeyError) as e:
                    logger.warning(f"Skipping corrupt cache line {line_no} in {self.path}: {e}")
                    continue
                # first record for a digest wins so replays are stable
                self._records.setdefault(exchange.request_hash, exchange)
        logger.info(f"Loaded {len(self._records)} cached exchanges from {self.path}")

    def __len__(self):
        return len(self._records)

    def __contains__(self, digest):
        return digest in self._records

    def get(self, digest):
        """Cached exchange for a digest, or None"""
        return self._records.get(digest)

    def put(self, exchange):
        """
        Record an exchange and append it to the log

        Returns:
            ChatExchange: The stored exchange (an earlier one wins on duplicates)
        """
        with self._lock:
            existing = self._records.get(exchange.request_hash)
            if existing is not None:
                return existing
            self._records[exchange.request_hash] = exchange
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, 'a', encoding='utf-8') as f:
                    f.write(json.dumps(exchange.to_record(), ensure_ascii=False, sort_keys=True) + '\n')
                    f.flush()
            return exchange

    def exchanges(self):
        return list(self._records.values())
