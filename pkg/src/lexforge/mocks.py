"""Deterministic in-process mock endpoints for hermetic runs and tests."""

from __future__ import annotations

import hashlib
import json
import threading
from typing import Callable, Optional

from .client import make_response


def _stable_int(text: str, mod: int) -> int:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % mod


class MockJudgeTransport:
    """Quality judge that derives a stable 0-5 score from the prompt text.

    Replies in the rubric's expected response shape (rationale paragraph,
    then the bare score), so it exercises the real parser.
    """

    def __init__(self, salt: str = ""):
        self.salt = salt
        self.calls = 0

    def __call__(self, payload: dict) -> dict:
        self.calls += 1
        content = payload["messages"][-1]["content"]
        score = _stable_int(self.salt + content, 6)
        reply = f"Coherent fragment with consistent topical focus.\n\n{score}"
        return make_response(reply)


class MockSynthesisTransport:
    """Emits schema-valid instruction synthesis output for requested dimensions.

    The prompt carries the dimension list as a JSON line so the mock can
    answer exactly what was asked for without free-text parsing.
    """

    def __init__(self, drop_dimensions: tuple[str, ...] = ()):
        self.drop_dimensions = drop_dimensions

    def __call__(self, payload: dict) -> dict:
        content = payload["messages"][-1]["content"]
        dims = []
        for line in content.splitlines():
            if line.startswith("Dimensions:"):
                dims = json.loads(line[len("Dimensions:"):].strip())
                break
        pairs = [
            {"dimension": d,
             "instruction": f"Explain the {d} aspect of the provision.",
             "output": f"Analysis of the provision along the {d} dimension."}
            for d in dims if d not in self.drop_dimensions
        ]
        return make_response(json.dumps(pairs, ensure_ascii=False))


class ScriptedTransport:
    """Returns pre-scripted reply contents in call order; thread-safe."""

    def __init__(self, replies: list, loop: bool = False):
        self.replies = list(replies)
        self.loop = loop
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, payload: dict) -> dict:
        with self._lock:
            i = self.calls
            self.calls += 1
        if self.loop:
            i %= len(self.replies)
        reply = self.replies[i]
        if isinstance(reply, Exception):
            raise reply
        if callable(reply):
            reply = reply(payload)
        return make_response(reply)


class ConcurrencyProbeTransport:
    """Wraps a transport and records the peak number of in-flight calls."""

    def __init__(self, inner: Callable[[dict], dict], delay_s: float = 0.0):
        self.inner = inner
        self.delay_s = delay_s
        self.in_flight = 0
        self.peak = 0
        self._lock = threading.Lock()

    def __call__(self, payload: dict) -> dict:
        import time
        with self._lock:
            self.in_flight += 1
            self.peak = max(self.peak, self.in_flight)
        try:
            if self.delay_s:
                time.sleep(self.delay_s)
            return self.inner(payload)
        finally:
            with self._lock:
                self.in_flight -= 1


class MockGeneratorTransport:
    """Task solver for mining-loop tests: answers correctly with a stable
    per-(query, iteration) probability that grows as the round counter is
    advanced, so repeated rounds resolve more queries."""

    def __init__(self, salt: str = ""):
        self.salt = salt
        self.round = 0

    def __call__(self, payload: dict) -> dict:
        content = payload["messages"][-1]["content"]
        golden: Optional[str] = None
        for line in content.splitlines():
            if line.startswith("GOLDEN:"):
                golden = line[len("GOLDEN:"):].strip()
        draw = _stable_int(f"{self.salt}|{self.round}|{content}", 100)
        if golden is not None and draw < 30 * (self.round + 1):
            return make_response(golden)
        return make_response(f"wrong-answer-{draw}")
