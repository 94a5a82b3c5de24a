"""Pipeline stages over one run directory

Layout of a run directory:

    run_manifest.json         stage markers and config hash
    config.json               the validated run configuration
    cache/overpass/           raw Overpass responses
    layers/                   streets, points and aggregated GeoJSON layers
    images/                   <point_id>/<heading>.jpg and manifest.csv
    logs/                     results_<task>.csv
    maps/                     SVG maps
    reports/                  counts.json, annotation templates, accuracy tables

Stages run in the order sample, fetch, score, aggregate, render. Completing a stage clears
the markers of the stages depending on it. A completed stage is not run again unless forced,
except render which is cheap and always redraws.
"""
import json
import logging
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from streetscore.aggregate import (
    aggregate_points,
    aggregate_segments,
    layer_names,
    read_geo_outputs,
    write_geo_outputs,
)
from streetscore.common import BackendError, CausationError, ConfigurationError
from streetscore.config import CONFIG, RunConfig
from streetscore.geo_io import export_geopackage, read_network, write_network
from streetscore.imagery import MANIFEST_NAME, fetch_batch, read_manifest, summarize_coverage
from streetscore.mapping import render_coverage_map, render_maps
from streetscore.models import (
    ImageStatus,
    PrecisionReport,
    RunManifest,
    ScoreRecord,
    ScoreStatus,
    TaskSpec,
    stage_key,
)
from streetscore.osm import build_network, fetch_osm, parse_overpass
from streetscore.projection import select_metric_crs
from streetscore.sampler import sample_network
from streetscore.scoring import (
    ResultsLog,
    ScoringBackend,
    TaskRegistry,
    create_backend,
    export_tasks,
    results_log_name,
    run_task,
)
from streetscore.utils import atomic_write_text
from streetscore.validate import (
    compute_report,
    load_annotations,
    render_report,
    stratified_sample,
    write_annotation_template,
)


__all__ = (
    "RUN_MANIFEST",
    "COUNTS_REPORT",
    "RunContext",
    "cmd_sample",
    "cmd_fetch",
    "cmd_score",
    "cmd_aggregate",
    "cmd_render",
    "cmd_validate",
    "cmd_export_tasks",
)

LOGGER = logging.getLogger(__name__)

RUN_MANIFEST = "run_manifest.json"
RUN_CONFIG = "config.json"
COUNTS_REPORT = "counts.json"

PREREQUISITES = {
    "sample": None,
    "fetch": "sample",
    "score": "fetch",
    "aggregate": "score",
    "render": "aggregate",
    "validate": "score",
}


def _now() -> datetime:
    return datetime.now(timezone.utc)


def _write_json(path: Path, content: Any) -> None:
    atomic_write_text(path, json.dumps(content, indent=2, sort_keys=True) + "\n")


class RunContext:
    """A run configuration bound to its run directory

    `session` replaces the requests session of the Overpass and Street View clients and
    `http_client` the HTTP client of the chat-completion backend, e.g. with a starlette
    TestClient of the mock services.
    """

    def __init__(
        self,
        config: RunConfig,
        run_dir: Optional[Union[str, Path]] = None,
        force: bool = False,
        session: Optional[Any] = None,
        http_client: Optional[Any] = None,
    ):
        self.config = config
        self.root = config.run_dir(run_dir)
        self.force = force
        self.session = session
        self.http_client = http_client
        self.crs = select_metric_crs(config.bbox)
        self._registry: Optional[TaskRegistry] = None

    @property
    def cache_dir(self) -> Path:
        return self.root / "cache" / "overpass"

    @property
    def layers_dir(self) -> Path:
        return self.root / "layers"

    @property
    def images_dir(self) -> Path:
        return self.root / "images"

    @property
    def logs_dir(self) -> Path:
        return self.root / "logs"

    @property
    def maps_dir(self) -> Path:
        return self.root / "maps"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def registry(self) -> TaskRegistry:
        if self._registry is None:
            self._registry = self.config.registry()
        return self._registry

    def task(self, task_id: str) -> TaskSpec:
        if task_id not in self.config.tasks.enabled:
            raise ConfigurationError(
                f"Task {task_id} is not enabled; enabled tasks: {', '.join(self.config.tasks.enabled)}"
            )
        return self.registry.get(task_id)

    def results_log(self, task_id: str) -> ResultsLog:
        return ResultsLog(self.logs_dir / results_log_name(task_id))

    def read_run_manifest(self) -> Optional[RunManifest]:
        path = self.root / RUN_MANIFEST
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as handle:
            return RunManifest(**json.load(handle))

    def write_run_manifest(self, manifest: RunManifest) -> None:
        _write_json(self.root / RUN_MANIFEST, manifest.model_dump(mode="json"))

    def open(self) -> RunManifest:
        """Run manifest of the directory, created on first use

        A directory created with another configuration is refused unless forced.
        """
        manifest = self.read_run_manifest()
        config_hash = self.config.config_hash
        if manifest is None:
            now = _now()
            manifest = RunManifest(
                config_hash=config_hash,
                tool_version=CONFIG.version,
                created_at=now,
                updated_at=now,
            )
        elif manifest.config_hash != config_hash:
            if not self.force:
                raise ConfigurationError(
                    f"{self.root} was created with another configuration "
                    f"(hash {manifest.config_hash[:12]}, now {config_hash[:12]}); use --force to continue"
                )
            LOGGER.warning("Configuration changed, continuing in %s as forced", self.root)
            manifest = manifest.model_copy(update={"config_hash": config_hash})
        self.root.mkdir(parents=True, exist_ok=True)
        _write_json(self.root / RUN_CONFIG, self.config.model_dump(mode="json"))
        self.write_run_manifest(manifest)
        return manifest

    def begin(self, stage: str, task_id: Optional[str] = None, always: bool = False) -> Optional[RunManifest]:
        """Check the stage order; None when the stage is already complete and may be skipped"""
        manifest = self.read_run_manifest()
        required = PREREQUISITES[stage]
        if required is not None:
            required_key = stage_key(required, task_id if required in ("score", "aggregate") else None)
            if manifest is None or not manifest.is_complete(required_key):
                raise CausationError(required_key, stage_key(stage, task_id))
        manifest = self.open()
        key = stage_key(stage, task_id)
        if manifest.is_complete(key) and not (self.force or always):
            LOGGER.info("Stage %s already complete in %s, nothing to do (use --force to rerun)", key, self.root)
            return None
        return manifest

    def complete(self, manifest: RunManifest, stage: str, task_id: Optional[str] = None) -> RunManifest:
        key = stage_key(stage, task_id)
        stages = dict(manifest.stages)
        for later in manifest.later_than(key):
            LOGGER.info("Clearing stage marker %s", later)
            stages.pop(later, None)
        now = _now()
        stages[key] = now
        manifest = manifest.model_copy(update={"stages": stages, "updated_at": now})
        self.write_run_manifest(manifest)
        LOGGER.info("Stage %s complete", key)
        return manifest


def cmd_sample(ctx: RunContext) -> Optional[Dict[str, Any]]:
    """Street network of the bounding box, sampled into points; returns the counts report"""
    manifest = ctx.begin("sample")
    if manifest is None:
        return None
    config = ctx.config
    doc, provenance = fetch_osm(
        config.bbox,
        config.endpoints.overpass_url,
        config.highway_filter,
        ctx.cache_dir,
        timeout_s=config.endpoints.overpass_timeout_s,
        max_retries=config.endpoints.overpass_max_retries,
        backoff_s=config.endpoints.overpass_backoff_s,
        session=ctx.session,
    )
    ways, nodes = parse_overpass(doc)
    net = build_network(ways, nodes, config.highway_filter, ctx.crs, provenance)
    points, counts = sample_network(net, config.sampling, ctx.crs, config.bbox)
    write_network(net, points, ctx.layers_dir)

    report = counts.model_dump()
    _write_json(ctx.reports_dir / COUNTS_REPORT, report)
    ctx.complete(manifest, "sample")
    return report


def cmd_fetch(ctx: RunContext, limit: Optional[int] = None) -> Optional[Dict[str, Any]]:
    """Download the images of every sample point; returns the counts report with coverage"""
    manifest = ctx.begin("fetch")
    if manifest is None:
        return None
    config = ctx.config
    _, points = read_network(ctx.layers_dir)
    records = fetch_batch(
        points,
        config.camera,
        config.imagery.rate,
        ctx.images_dir,
        os.getenv(config.imagery.api_key_env),
        base_url=config.endpoints.streetview_url,
        threshold=config.imagery.dominance_threshold,
        session=ctx.session,
        limit=limit,
    )

    counts_file = ctx.reports_dir / COUNTS_REPORT
    report = {}
    if counts_file.exists():
        with open(counts_file, encoding="utf-8") as handle:
            report = json.load(handle)
    report.update(summarize_coverage(records, config.camera.headings_deg).model_dump())
    _write_json(counts_file, report)

    failed = sum(1 for record in records if record.status == ImageStatus.FETCH_FAILED)
    if limit is not None and failed:
        LOGGER.info("%d image(s) not fetched yet; run fetch again to continue", failed)
    else:
        if failed:
            LOGGER.warning("%d image(s) could not be fetched and are recorded as fetch_failed", failed)
        ctx.complete(manifest, "fetch")
    return report


def cmd_score(
    ctx: RunContext,
    task_id: str,
    limit: Optional[int] = None,
    backend: Optional[ScoringBackend] = None,
) -> Optional[List[ScoreRecord]]:
    """Score the image manifest against one task, resuming from the results log

    Raises BackendError once the log is written when any backend_error record was produced.
    """
    task = ctx.task(task_id)
    manifest = ctx.begin("score", task_id)
    if manifest is None:
        return None
    images = read_manifest(ctx.images_dir / MANIFEST_NAME)
    backend = backend or create_backend(ctx.config.backend, http_client=ctx.http_client)
    log = ctx.results_log(task_id)
    before = log.keys()
    records = run_task(
        images,
        task,
        backend,
        log.path,
        ctx.images_dir,
        concurrency=ctx.config.backend.concurrency,
        limit=limit,
    )
    records = [record for record in records if record.task_id == task_id]

    failed = sum(
        1
        for record in records
        if record.status == ScoreStatus.BACKEND_ERROR and record.key not in before
    )
    if failed:
        raise BackendError(f"{failed} image(s) of task {task_id} could not be scored by the backend")
    earlier = sum(1 for record in records if record.status == ScoreStatus.BACKEND_ERROR)
    if earlier:
        LOGGER.warning(
            "Task %s: %d backend_error record(s) from earlier runs are kept; delete %s to rescore",
            task_id,
            earlier,
            log.path,
        )
    if len(records) >= len(images):
        ctx.complete(manifest, "score", task_id)
    else:
        LOGGER.info("Task %s: %d of %d image(s) scored so far", task_id, len(records), len(images))
    return records


def _aggregated_rows(ctx: RunContext, level: str) -> Dict[str, list]:
    rows = {}
    for task_id in ctx.config.tasks.enabled:
        path = ctx.layers_dir / layer_names(task_id)[level]
        if path.exists():
            rows[task_id] = read_geo_outputs(path, task_id)
    return rows


def cmd_aggregate(ctx: RunContext, task_id: str, gpkg: bool = False) -> Optional[Dict[str, Path]]:
    """Point and segment summaries of one task written as GeoJSON layers"""
    ctx.task(task_id)
    manifest = ctx.begin("aggregate", task_id)
    if manifest is None:
        return None
    net, points = read_network(ctx.layers_dir)
    records = ctx.results_log(task_id).read()
    point_rows = aggregate_points(records, task_id, [point.point_id for point in points])
    segment_rows = aggregate_segments(point_rows, points, task_id, net.segment_ids())
    paths = write_geo_outputs(net, points, point_rows, segment_rows, ctx.layers_dir, task_id)

    if gpkg or ctx.config.export_gpkg:
        paths["gpkg"] = export_geopackage(
            net,
            points,
            ctx.layers_dir / f"{ctx.config.case_name}.gpkg",
            point_rows=_aggregated_rows(ctx, "points"),
            segment_rows=_aggregated_rows(ctx, "streets"),
        )
    ctx.complete(manifest, "aggregate", task_id)
    return paths


def cmd_render(
    ctx: RunContext,
    task_id: str,
    statistic: Optional[str] = None,
    coverage: bool = False,
) -> Dict[str, Path]:
    """Point and street maps of one task, plus the image coverage map when asked"""
    ctx.task(task_id)
    manifest = ctx.begin("render", task_id, always=True)
    case_name = ctx.config.case_name
    net, points = read_network(ctx.layers_dir)
    names = layer_names(task_id)
    point_rows = read_geo_outputs(ctx.layers_dir / names["points"], task_id)
    segment_rows = read_geo_outputs(ctx.layers_dir / names["streets"], task_id)
    style = ctx.config.style.map_style(task_id, statistic)

    svgs = render_maps(net, points, point_rows, segment_rows, style, task_id, ctx.crs, case_name)
    paths = {}
    for level, svg in sorted(svgs.items()):
        paths[level] = ctx.maps_dir / f"{case_name}_{task_id}_{level}.svg"
        atomic_write_text(paths[level], svg)

    if coverage:
        records = read_manifest(ctx.images_dir / MANIFEST_NAME)
        paths["coverage"] = ctx.maps_dir / f"{case_name}_coverage.svg"
        atomic_write_text(
            paths["coverage"],
            render_coverage_map(
                points, records, ctx.config.camera.headings_deg, style, ctx.crs, case_name
            ),
        )
    ctx.complete(manifest, "render", task_id)
    return paths


def cmd_validate(
    ctx: RunContext,
    task_id: str,
    annotations: Optional[Union[str, Path]] = None,
    per_class: int = 20,
    seed: int = 0,
) -> Union[Path, PrecisionReport]:
    """Without annotations, write a stratified annotation template and return its path.
    With annotations, write the accuracy table and return the report."""
    task = ctx.task(task_id)
    manifest = ctx.read_run_manifest()
    required = stage_key("score", task_id)
    if manifest is None or not manifest.is_complete(required):
        raise CausationError(required, stage_key("validate", task_id))

    if annotations is None:
        sample = stratified_sample(ctx.results_log(task_id).read(), task, per_class, seed)
        path = write_annotation_template(sample, ctx.reports_dir / f"annotations_{task_id}.csv")
        LOGGER.info("Wrote %d record(s) to annotate to %s", len(sample), path)
        return path

    report = compute_report(load_annotations(annotations, task), task, ctx.config.case_name)
    text, table = render_report([report], task)
    atomic_write_text(ctx.reports_dir / f"accuracy_{task_id}.txt", text)
    atomic_write_text(ctx.reports_dir / f"accuracy_{task_id}.csv", table)
    LOGGER.info("Task %s accuracy table:\n%s", task_id, text)
    return report


def cmd_export_tasks(out_dir: Union[str, Path], config: Optional[RunConfig] = None) -> List[Path]:
    """Write the task documents (shipped and configured) to `out_dir`"""
    registry = config.registry() if config is not None else TaskRegistry.with_shipped_tasks()
    return export_tasks(registry, out_dir)
