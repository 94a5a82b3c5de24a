from pydantic import ValidationError
from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException

from streetscore.config import CONFIG, MockSettings
import streetscore.exceptions as exc_handlers
from streetscore.routers import chat, streetview
from streetscore.routers.utils import Counter


def create_app(settings: MockSettings = None) -> FastAPI:
    """Offline stand-ins for the Street View Static API and a chat-completion backend"""
    app = FastAPI(
        title="streetscore mock services",
        description=(
            "Deterministic look-alikes of the Street View Static API and of an "
            "OpenAI-compatible vision-language backend, for offline pipeline runs and tests."
        ),
        version=CONFIG.version,
    )
    app.state.settings = settings or MockSettings()
    app.state.streetview_served = Counter()

    app.add_exception_handler(StarletteHTTPException, exc_handlers.http_exception_handler)
    app.add_exception_handler(
        RequestValidationError, exc_handlers.request_validation_exception_handler
    )
    app.add_exception_handler(ValidationError, exc_handlers.validation_exception_handler)
    app.add_exception_handler(Exception, exc_handlers.general_exception_handler)

    app.include_router(streetview.router)
    app.include_router(chat.router)
    return app


app = create_app()
