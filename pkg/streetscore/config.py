import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from streetscore.common import ConfigurationError
from streetscore.models import (
    BackendConfig,
    BoundingBox,
    CameraConfig,
    MapStyle,
    RatePolicy,
    SamplingConfig,
)
from streetscore.utils import canonical_json, sha256_hex


class StreetscoreConfig:
    """Load package defaults from FILENAME.json"""

    FILENAME = "config"

    version = "1.0.0"
    user_agent = "streetscore"
    overpass: Dict = {}
    highway_filter: List[str] = []
    streetview: Dict = {}
    backend: Dict = {}
    map: Dict = {}
    task_maps: Dict[str, Dict] = {}

    def __init__(self, filename: str = None):
        self.FILENAME = self.FILENAME if filename is None else filename
        self.load_from_json()

    def load_from_json(self):
        """Load parameters from FILENAME.json"""

        with open(
            Path(__file__).resolve().parent.joinpath(self.FILENAME + ".json")
        ) as config_file:
            config = json.load(config_file)

        self.version = config.get("version", self.version)
        self.user_agent = config.get("user_agent", self.user_agent)
        self.overpass = config.get("overpass", self.overpass)
        self.highway_filter = list(config.get("highway_filter", self.highway_filter))
        self.streetview = config.get("streetview", self.streetview)
        self.backend = config.get("backend", self.backend)
        self.map = config.get("map", self.map)
        self.task_maps = config.get("task_maps", self.task_maps)


CONFIG = StreetscoreConfig()


class EndpointsConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    overpass_url: str = CONFIG.overpass["endpoint"]
    overpass_timeout_s: int = Field(CONFIG.overpass["timeout_s"], gt=0)
    overpass_max_retries: int = Field(CONFIG.overpass["max_retries"], ge=0)
    overpass_backoff_s: float = Field(CONFIG.overpass["backoff_s"], ge=0)
    streetview_url: str = CONFIG.streetview["base_url"]


class ImageryConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    api_key_env: str = CONFIG.streetview["api_key_env"]
    dominance_threshold: float = Field(CONFIG.streetview["dominance_threshold"], gt=0, le=1)
    rate: RatePolicy = RatePolicy(
        rate_per_s=CONFIG.streetview["rate_per_s"],
        max_retries=CONFIG.streetview["max_retries"],
        backoff_s=CONFIG.streetview["backoff_s"],
        workers=CONFIG.streetview["workers"],
        timeout_s=CONFIG.streetview["timeout_s"],
    )


class TasksConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    enabled: Tuple[str, ...] = ("T1", "T2", "T3")
    files: Tuple[Path, ...] = ()


class StyleConfig(BaseModel):
    """Cartographic overrides; per-task statistic and domain defaults come from CONFIG.task_maps"""

    model_config = ConfigDict(frozen=True)

    ramp: Tuple[str, ...] = tuple(CONFIG.map["ramp"])
    nodata_color: str = CONFIG.map["nodata_color"]
    canvas: Tuple[int, int] = tuple(CONFIG.map["canvas"])
    street_width: float = Field(CONFIG.map["street_width"], gt=0)
    point_size: float = Field(CONFIG.map["point_size"], gt=0)
    task_maps: Dict[str, Dict] = CONFIG.task_maps

    def map_style(self, task_id: str, statistic: Optional[str] = None) -> MapStyle:
        """Style of a task's maps. A statistic other than the task default gets a data-driven domain."""
        defaults = self.task_maps.get(task_id, {"statistic": "mean", "domain": None})
        statistic = statistic or defaults["statistic"]
        domain = defaults.get("domain") if statistic == defaults["statistic"] else None
        try:
            return MapStyle(
                statistic=statistic,
                ramp=self.ramp,
                nodata_color=self.nodata_color,
                scale_mode="fixed" if domain else "data",
                domain=tuple(domain) if domain else None,
                street_width=self.street_width,
                point_size=self.point_size,
                canvas=self.canvas,
            )
        except ValidationError as exc:
            raise ConfigurationError(f"Invalid map style for {task_id}: {exc}") from exc


class PathsConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    run_dir: Optional[Path] = None


class RunConfig(BaseModel):
    """Declarative configuration of one case study run"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    case_name: str = Field(..., pattern=r"^[A-Za-z0-9][A-Za-z0-9_\-]*$")
    bbox: BoundingBox
    sampling: SamplingConfig = SamplingConfig()
    highway_filter: Tuple[str, ...] = tuple(CONFIG.highway_filter)
    camera: CameraConfig = CameraConfig()
    imagery: ImageryConfig = ImageryConfig()
    backend: BackendConfig = BackendConfig(
        **{
            key: value
            for key, value in CONFIG.backend.items()
            if key in BackendConfig.model_fields
        }
    )
    tasks: TasksConfig = TasksConfig()
    endpoints: EndpointsConfig = EndpointsConfig()
    style: StyleConfig = StyleConfig()
    paths: PathsConfig = PathsConfig()
    export_gpkg: bool = False

    @field_validator("highway_filter")
    @classmethod
    def non_empty_filter(cls, value: Tuple[str, ...]) -> Tuple[str, ...]:
        if not value:
            raise ValueError("highway_filter must name at least one highway class")
        return value

    @property
    def config_hash(self) -> str:
        return sha256_hex(canonical_json(self.model_dump(mode="json")))

    def run_dir(self, override: Optional[Union[str, Path]] = None) -> Path:
        if override is not None:
            return Path(override)
        if self.paths.run_dir is not None:
            return Path(self.paths.run_dir)
        return Path("runs") / self.case_name

    def registry(self):
        """Task registry with the shipped tasks plus any configured task files"""
        from streetscore.scoring.tasks import TaskRegistry

        registry = TaskRegistry.with_shipped_tasks()
        for path in self.tasks.files:
            registry.load_file(path)
        for task_id in self.tasks.enabled:
            registry.get(task_id)
        return registry


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a run configuration file, including its task references"""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as config_file:
            raw = json.load(config_file)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"Config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc

    try:
        config = RunConfig(**raw)
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid run configuration {path}:\n{exc}") from exc

    # Relative task files are relative to the config file
    if config.tasks.files:
        files = tuple(
            file if file.is_absolute() else path.parent / file for file in config.tasks.files
        )
        config = config.model_copy(
            update={"tasks": TasksConfig(enabled=config.tasks.enabled, files=files)}
        )
    config.registry()
    return config


class MockSettings(BaseModel):
    """Behaviour of the offline Street View and chat-completion look-alikes"""

    model_config = ConfigDict(frozen=True)

    placeholder_share: float = Field(0.1, ge=0, le=1)
    placeholder_all: bool = False
    quota: Optional[int] = Field(None, ge=0)
    decorate_answers: bool = False
    chat_error_status: Optional[int] = Field(None, ge=400, le=599)
    model_name: str = CONFIG.backend["model_name"]
    jpeg_quality: int = Field(90, ge=1, le=95)
