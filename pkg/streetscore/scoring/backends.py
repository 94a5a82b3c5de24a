"""Vision-language backends answering a prompt about one image"""
import abc
import base64
import hashlib
import logging
import os
from typing import Any, List, Optional

import openai

from streetscore.common import BackendError, ConfigurationError
from streetscore.models import BackendConfig
from streetscore.scoring.answers import NUMBER_TOKEN


__all__ = (
    "ScoringBackend",
    "HttpBackend",
    "MockBackend",
    "answer_choices",
    "mock_answer",
    "create_backend",
)

LOGGER = logging.getLogger(__name__)

ANSWER_FORMAT_PREFIX = "Answer format:"


def answer_choices(prompt: str) -> List[str]:
    """Numbers listed on the last "Answer format:" line of a prompt"""
    for line in reversed(prompt.splitlines()):
        if line.strip().startswith(ANSWER_FORMAT_PREFIX):
            return NUMBER_TOKEN.findall(line)
    return []


def mock_answer(prompt: str, image: bytes) -> str:
    """Deterministic stand-in answer: one of the prompt's listed answers, picked by content hash"""
    choices = answer_choices(prompt) or ["0"]
    digest = hashlib.sha256(prompt.encode("utf-8") + image).digest()
    return choices[int.from_bytes(digest[:8], "big") % len(choices)]


class ScoringBackend(abc.ABC):
    """Answers one prompt about one JPEG image with raw text"""

    name = "backend"

    @abc.abstractmethod
    def complete(self, prompt: str, image: bytes) -> str:
        """Raise BackendError when no answer can be obtained"""


class MockBackend(ScoringBackend):
    name = "mock"

    def __init__(self, decorate: bool = False):
        self.decorate = decorate
        self.calls = 0

    def complete(self, prompt: str, image: bytes) -> str:
        self.calls += 1
        answer = mock_answer(prompt, image)
        return f"Score: {answer}." if self.decorate else answer


class HttpBackend(ScoringBackend):
    """OpenAI-compatible chat-completion endpoint (vLLM, llama.cpp server, Ollama, ...)"""

    name = "http"

    def __init__(
        self,
        cfg: BackendConfig,
        token: Optional[str] = None,
        http_client: Optional[Any] = None,
    ):
        self.cfg = cfg
        kwargs = {"http_client": http_client} if http_client is not None else {}
        self.client = openai.OpenAI(
            base_url=cfg.base_url,
            # Local inference servers usually accept any token
            api_key=token or "not-needed",
            max_retries=cfg.max_retries,
            timeout=cfg.timeout_s,
            **kwargs,
        )

    def messages(self, prompt: str, image: bytes) -> List[dict]:
        encoded = base64.b64encode(image).decode("ascii")
        return [
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": prompt},
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:image/jpeg;base64,{encoded}"},
                    },
                ],
            }
        ]

    def complete(self, prompt: str, image: bytes) -> str:
        try:
            completion = self.client.chat.completions.create(
                model=self.cfg.model_name,
                messages=self.messages(prompt, image),
                temperature=self.cfg.temperature,
                max_tokens=self.cfg.max_new_tokens,
                stop=list(self.cfg.stop_sequences) or None,
            )
        except openai.OpenAIError as exc:
            raise BackendError(
                f"{self.cfg.base_url}: {exc.__class__.__name__}: {exc}",
                self.cfg.max_retries + 1,
            ) from exc
        if not completion.choices:
            raise BackendError(f"{self.cfg.base_url}: response holds no choices")
        return completion.choices[0].message.content or ""


def create_backend(cfg: BackendConfig, http_client: Optional[Any] = None) -> ScoringBackend:
    """Backend for a run; the HTTP token is read from the environment variable `cfg.token_env`"""
    if cfg.kind == "mock":
        return MockBackend()
    if cfg.kind == "http":
        return HttpBackend(cfg, token=os.getenv(cfg.token_env), http_client=http_client)
    raise ConfigurationError(f"Unknown backend kind {cfg.kind!r}")
