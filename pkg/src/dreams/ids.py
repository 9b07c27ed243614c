"""ULID-style identifier generation and the shared wall clock.

Identifiers are 26-character Crockford base32 strings: 48 bits of
millisecond timestamp followed by 80 random bits. They sort by creation
time and are collision-resistant at the scale of hand-built models.

Setting the environment variable ``DREAMS_SEED`` (or calling
:func:`seed`) switches both the id stream and the clock to a
deterministic sequence, so independently scripted sessions that perform
the same operations produce byte-identical documents. This exists for
reproducible fixtures and tests; normal use leaves it unset.
"""

from __future__ import annotations

import os
import random
import secrets
import threading
import time
from datetime import datetime, timezone

_ALPHABET = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"

_lock = threading.Lock()
_rng: random.Random | None = None
_fake_ms: int = 0
_last: tuple[int, int] | None = None  # (timestamp_ms, randomness) of last id


def seed(value: int | None) -> None:
    """Enter (or with ``None`` leave) deterministic id/clock mode."""
    global _rng, _fake_ms, _last
    with _lock:
        _rng = None if value is None else random.Random(value)
        _fake_ms = 1_600_000_000_000  # arbitrary fixed epoch for fake time
        _last = None


def _encode(ts_ms: int, rand80: int) -> str:
    value = (ts_ms << 80) | rand80
    chars = []
    for _ in range(26):
        chars.append(_ALPHABET[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


def new_id() -> str:
    """Return a fresh identifier, strictly greater than the previous one."""
    global _last, _fake_ms
    with _lock:
        if _rng is not None:
            _fake_ms += 1
            ts_ms = _fake_ms
            rand80 = _rng.getrandbits(80)
        else:
            ts_ms = time.time_ns() // 1_000_000
            rand80 = secrets.randbits(80)
        if _last is not None and ts_ms <= _last[0]:
            # Same (or rewound) millisecond: bump the previous randomness
            # so ids stay monotonic within the process.
            ts_ms = _last[0]
            rand80 = (_last[1] + 1) & ((1 << 80) - 1)
        _last = (ts_ms, rand80)
        return _encode(ts_ms, rand80)


def utc_now() -> datetime:
    """Current UTC time at seconds precision (deterministic under seed())."""
    with _lock:
        if _rng is not None:
            global _fake_ms
            _fake_ms += 1000
            return datetime.fromtimestamp(_fake_ms // 1000, tz=timezone.utc)
    return datetime.now(timezone.utc).replace(microsecond=0)


if os.environ.get("DREAMS_SEED"):
    seed(int(os.environ["DREAMS_SEED"]))
