"""Minimal OpenAI-compatible chat completions answering with the mock answer rule"""
import base64
import binascii
import hashlib
import logging
from typing import Any, List, Optional, Union

from fastapi import APIRouter, Depends
from pydantic import BaseModel, ConfigDict
from starlette.exceptions import HTTPException as StarletteHTTPException

from streetscore.config import MockSettings
from streetscore.scoring.backends import mock_answer

from .utils import get_settings


router = APIRouter()

LOGGER = logging.getLogger(__name__)

DATA_URL_PREFIX = "data:image/jpeg;base64,"


class ChatMessage(BaseModel):
    model_config = ConfigDict(extra="allow")

    role: str
    content: Union[str, List[dict]]


class ChatCompletionRequest(BaseModel):
    model_config = ConfigDict(extra="allow")

    model: str
    messages: List[ChatMessage]
    temperature: Optional[float] = None
    max_tokens: Optional[int] = None
    stop: Optional[Union[str, List[str]]] = None


def split_content(messages: List[ChatMessage]):
    """Prompt text and decoded image of the last user message"""
    for message in reversed(messages):
        if message.role != "user":
            continue
        if isinstance(message.content, str):
            return message.content, b""
        text, image = [], b""
        for part in message.content:
            if part.get("type") == "text":
                text.append(part.get("text", ""))
            elif part.get("type") == "image_url":
                url = (part.get("image_url") or {}).get("url", "")
                if not url.startswith(DATA_URL_PREFIX):
                    raise StarletteHTTPException(
                        status_code=400, detail="Only base64 JPEG data URLs are supported"
                    )
                try:
                    image = base64.b64decode(url[len(DATA_URL_PREFIX):], validate=True)
                except binascii.Error:
                    raise StarletteHTTPException(status_code=400, detail="Invalid base64 image")
        return "\n".join(text), image
    raise StarletteHTTPException(status_code=400, detail="No user message")


@router.post("/v1/chat/completions", tags=["Chat"])
def create_chat_completion(
    body: ChatCompletionRequest, settings: MockSettings = Depends(get_settings)
) -> Any:
    if settings.chat_error_status is not None:
        raise StarletteHTTPException(
            status_code=settings.chat_error_status, detail="Backend unavailable"
        )
    prompt, image = split_content(body.messages)
    answer = mock_answer(prompt, image)
    content = f"Score: {answer}." if settings.decorate_answers else answer
    digest = hashlib.sha256(prompt.encode("utf-8") + image).hexdigest()
    LOGGER.debug("Answered %s with %r", digest[:12], content)
    return {
        "id": f"chatcmpl-{digest[:24]}",
        "object": "chat.completion",
        "created": 0,
        "model": body.model,
        "choices": [
            {
                "index": 0,
                "message": {"role": "assistant", "content": content},
                "finish_reason": "stop",
            }
        ],
        "usage": {"prompt_tokens": 0, "completion_tokens": 1, "total_tokens": 1},
    }


@router.get("/v1/models", tags=["Chat"])
def list_models(settings: MockSettings = Depends(get_settings)) -> Any:
    return {
        "object": "list",
        "data": [
            {"id": settings.model_name, "object": "model", "created": 0, "owned_by": "streetscore"}
        ],
    }
