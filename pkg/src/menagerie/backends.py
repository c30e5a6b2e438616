"""Chat-completion backends shared by the planner and captioning stages.

Wire protocol: HTTP POST of {"model", "messages": [{"role", "content"}...],
"temperature"} returning {"choices": [{"message": {"content": ...}}]}. Auth
tokens come from the environment, never from config files.
"""

import os
from typing import Callable, List, Optional

import requests


class BackendError(RuntimeError):
    """Transport or protocol failure talking to a backend service."""


class ChatBackend:
    """Interface: complete(messages) -> reply text."""

    def complete(self, messages: List[dict]) -> str:
        raise NotImplementedError


class HttpChatBackend(ChatBackend):
    def __init__(
        self,
        url: str,
        model: str,
        auth_env: Optional[str] = None,
        temperature: float = 0.0,
        timeout: float = 30.0,
        session: Optional[requests.Session] = None,
    ):
        self.url = url
        self.model = model
        self.auth_env = auth_env
        self.temperature = temperature
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, messages: List[dict]) -> str:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        body = {"model": self.model, "messages": messages, "temperature": self.temperature}
        try:
            resp = self.session.post(self.url, json=body, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendError(f"chat backend request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"chat backend returned HTTP {resp.status_code}")
        try:
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat completion payload: {exc}") from exc


class MockChatBackend(ChatBackend):
    """Deterministic backend driven by a reply function over the user text."""

    def __init__(self, reply_fn: Callable[[str], str]):
        self.reply_fn = reply_fn

    def complete(self, messages: List[dict]) -> str:
        user = next((m["content"] for m in reversed(messages) if m.get("role") == "user"), "")
        return self.reply_fn(user)


class FailingBackend(ChatBackend):
    """Always raises; used to exercise fallback paths."""

    def complete(self, messages: List[dict]) -> str:
        raise BackendError("backend unavailable")
