from pydantic import ValidationError
from fastapi.exceptions import RequestValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException
from starlette.requests import Request

from streetscore.utils import general_exception


def http_exception_handler(request: Request, exc: StarletteHTTPException):
    return general_exception(request, exc)


def request_validation_exception_handler(request: Request, exc: RequestValidationError):
    status = 422
    errors = [
        {
            "status": status,
            "title": "RequestValidationError",
            "detail": f"{'/'.join(str(_) for _ in error['loc'])}: {error['msg']}",
        }
        for error in exc.errors()
    ]
    return general_exception(request, exc, status_code=status, errors=errors)


def validation_exception_handler(request: Request, exc: ValidationError):
    status = 500
    title = "ValidationError"
    errors = []
    for error in exc.errors():
        pointer = "/" + "/".join([str(_) for _ in error["loc"]])
        errors.append(
            {"status": status, "title": title, "detail": f"{pointer}: {error['msg']}"}
        )
    return general_exception(request, exc, status_code=status, errors=errors)


def general_exception_handler(request: Request, exc: Exception):
    return general_exception(request, exc)
