import re
from typing import Literal, Optional, Tuple, get_args

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


__all__ = ("MapStyle", "MAP_STATISTICS", "parse_hex_color")

MapStatistic = Literal["mean", "sum"]
MAP_STATISTICS = get_args(MapStatistic)

HEX_COLOR = re.compile(r"^#[0-9a-fA-F]{6}$")


def parse_hex_color(color: str) -> Tuple[int, int, int]:
    if not HEX_COLOR.match(color):
        raise ValueError(f"{color!r} is not a #rrggbb color")
    return tuple(int(color[i : i + 2], 16) for i in (1, 3, 5))


class MapStyle(BaseModel):
    """Choropleth styling of one rendered map"""

    model_config = ConfigDict(frozen=True)

    statistic: MapStatistic = "mean"
    ramp: Tuple[str, ...] = ("#fde725", "#5ec962", "#21918c", "#3b528b", "#440154")
    nodata_color: str = "#808080"
    scale_mode: Literal["fixed", "data"] = "fixed"
    domain: Optional[Tuple[float, float]] = (0.0, 1.0)
    street_width: float = Field(1.2, gt=0)
    point_size: float = Field(3.0, gt=0)
    canvas: Tuple[int, int] = (1000, 1000)

    @field_validator("ramp")
    @classmethod
    def check_ramp(cls, value: Tuple[str, ...]) -> Tuple[str, ...]:
        if len(value) < 2:
            raise ValueError("a ramp needs at least 2 color stops")
        for color in value:
            parse_hex_color(color)
        return value

    @field_validator("nodata_color")
    @classmethod
    def check_nodata(cls, value: str) -> str:
        parse_hex_color(value)
        return value

    @model_validator(mode="after")
    def check_domain(self) -> "MapStyle":
        if self.scale_mode == "fixed":
            if self.domain is None:
                raise ValueError("a fixed scale needs a domain")
            low, high = self.domain
            if not low < high:
                raise ValueError(f"fixed domain needs lo < hi, got {self.domain}")
        return self
