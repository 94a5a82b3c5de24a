import base64
import io
import unittest

from PIL import Image
from starlette.testclient import TestClient

from streetscore.config import MockSettings
from streetscore.imagery import detect_placeholder
from streetscore.main import create_app
from streetscore.models import ImageStatus
from streetscore.routers.utils import hash_fraction
from streetscore.scoring import mock_answer


STREETVIEW = "/maps/api/streetview"
PARAMS = {"size": "64x48", "location": "43.740000,7.300000", "heading": 90, "key": "test-key"}


def chat_body(prompt="Answer format: 0 or 1", image=b"\xff\xd8jpeg", model="llava"):
    encoded = base64.b64encode(image).decode("ascii")
    return {
        "model": model,
        "messages": [
            {"role": "system", "content": "You score images."},
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": prompt},
                    {"type": "image_url", "image_url": {"url": f"data:image/jpeg;base64,{encoded}"}},
                ],
            },
        ],
        "temperature": 0.1,
        "max_tokens": 8,
        "stop": ["\n"],
    }


class TestStreetView(unittest.TestCase):
    def setUp(self):
        self.client = TestClient(create_app(MockSettings(placeholder_share=0)))

    def test_image(self):
        response = self.client.get(STREETVIEW, params=PARAMS)
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/jpeg"
        image = Image.open(io.BytesIO(response.content))
        assert image.size == (64, 48)
        assert detect_placeholder(response.content, 0.9) == ImageStatus.AVAILABLE
        assert self.client.get(STREETVIEW, params=PARAMS).content == response.content
        assert self.client.get(STREETVIEW, params={**PARAMS, "heading": 180}).content != response.content

    def test_missing_key(self):
        response = self.client.get(STREETVIEW, params={**PARAMS, "key": ""})
        assert response.status_code == 403
        error = response.json()["errors"][0]
        assert error["status"] == 403
        assert "API key" in error["detail"]

    def test_invalid_requests(self):
        for params in (
            {**PARAMS, "size": "800x600"},
            {**PARAMS, "size": "big"},
            {**PARAMS, "location": "Nice"},
            {**PARAMS, "location": "95,7.3"},
        ):
            assert self.client.get(STREETVIEW, params=params).status_code == 400, params
        response = self.client.get(STREETVIEW, params={**PARAMS, "heading": 360})
        assert response.status_code == 422
        assert response.json()["errors"][0]["detail"].startswith("query/heading")

    def test_quota(self):
        client = TestClient(create_app(MockSettings(quota=2)))
        assert client.get(STREETVIEW, params=PARAMS).status_code == 200
        assert client.get(STREETVIEW, params=PARAMS).status_code == 200
        response = client.get(STREETVIEW, params=PARAMS)
        assert response.status_code == 429
        assert "quota" in response.text

    def test_placeholders(self):
        client = TestClient(create_app(MockSettings(placeholder_all=True)))
        response = client.get(STREETVIEW, params=PARAMS)
        assert detect_placeholder(response.content, 0.99) == ImageStatus.PLACEHOLDER

        settings = MockSettings(placeholder_share=0.5)
        client = TestClient(create_app(settings))
        for index in range(20):
            location = f"43.74{index:04d},7.300000"
            expected = hash_fraction(location) < 0.5
            for heading in (0, 180):
                content = client.get(
                    STREETVIEW, params={**PARAMS, "location": location, "heading": heading}
                ).content
                is_placeholder = detect_placeholder(content, 0.9) == ImageStatus.PLACEHOLDER
                assert is_placeholder == expected


class TestChat(unittest.TestCase):
    def test_answer(self):
        client = TestClient(create_app())
        response = client.post("/v1/chat/completions", json=chat_body())
        assert response.status_code == 200
        body = response.json()
        assert body["object"] == "chat.completion"
        assert body["model"] == "llava"
        content = body["choices"][0]["message"]["content"]
        assert content == mock_answer("Answer format: 0 or 1", b"\xff\xd8jpeg")
        assert content in ("0", "1")

    def test_decorated(self):
        client = TestClient(create_app(MockSettings(decorate_answers=True)))
        content = client.post("/v1/chat/completions", json=chat_body()).json()["choices"][0]["message"]["content"]
        answer = mock_answer("Answer format: 0 or 1", b"\xff\xd8jpeg")
        assert content == f"Score: {answer}."

    def test_configured_error(self):
        client = TestClient(create_app(MockSettings(chat_error_status=503)))
        response = client.post("/v1/chat/completions", json=chat_body())
        assert response.status_code == 503
        assert response.json()["errors"][0]["detail"] == "Backend unavailable"

    def test_bad_requests(self):
        client = TestClient(create_app())
        body = chat_body()
        body["messages"][1]["content"][1]["image_url"]["url"] = "https://example.org/image.jpg"
        assert client.post("/v1/chat/completions", json=body).status_code == 400

        body = chat_body()
        body["messages"] = body["messages"][:1]
        assert client.post("/v1/chat/completions", json=body).status_code == 400

        assert client.post("/v1/chat/completions", json={"messages": []}).status_code == 422

    def test_models(self):
        client = TestClient(create_app(MockSettings(model_name="mock-vlm")))
        body = client.get("/v1/models").json()
        assert [model["id"] for model in body["data"]] == ["mock-vlm"]
