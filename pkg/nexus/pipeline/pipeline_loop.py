# nexus/pipeline/pipeline_loop.py
#
# Runs the stages in order over one RunState, records each stage's
# status and always leaves a manifest behind, also when a stage fails.

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

from core.base_module import CultureModule
from core.errors import CultureCoreError, ParameterError, StageError
from nexus.pipeline.config import PipelineConfig
from nexus.pipeline.reports import ReportWriter
from nexus.pipeline.stages import STAGE_NAMES, STAGES, RunState


logger = logging.getLogger(__name__)


@dataclass
class StageRecord:
    name: str
    status: str = "skipped"     # ok | failed | skipped
    error: Optional[str] = None

    def as_dict(self) -> Dict[str, Optional[str]]:
        return {"name": self.name, "status": self.status, "error": self.error}


class PipelineLoop:
    """
    Orchestrates one run:

        ingest -> validate -> encode -> featurize -> graphs -> associate
        -> select-k -> cluster -> compare -> teams -> evaluate

    run(until=...) stops after the named stage; later stages are recorded
    as skipped.
    """

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.stages: List[CultureModule] = [cls() for cls in STAGES]
        for stage in self.stages:
            stage.attach_core(self)
        self.records: List[StageRecord] = [StageRecord(s.name) for s in self.stages]
        self.state: Optional[RunState] = None

    def run(self, until: Optional[str] = None) -> RunState:
        if until is not None and until not in STAGE_NAMES:
            raise ParameterError(f"unknown stage '{until}', expected one of {', '.join(STAGE_NAMES)}")

        self.cfg.check_paths()
        writer = ReportWriter(self.cfg.output_dir)
        state = RunState(cfg=self.cfg, writer=writer)
        self.state = state
        logger.info("Run started (seed=%d) -> %s", self.cfg.seed, self.cfg.output_dir)

        try:
            for stage, record in zip(self.stages, self.records):
                self._run_stage(stage, record, state)
                if stage.name == until:
                    break
        finally:
            writer.write_manifest(
                stages=[r.as_dict() for r in self.records],
                config=self.cfg.effective(),
                summary=state.summary(),
            )
        return state

    def _run_stage(self, stage: CultureModule, record: StageRecord, state: RunState) -> None:
        logger.info("Stage %s ...", stage.name)
        try:
            status = stage.run(state)
        except StageError as exc:
            record.status, record.error = "failed", str(exc)
            raise
        except CultureCoreError as exc:
            record.status, record.error = "failed", f"{type(exc).__name__}: {exc}"
            raise StageError(stage.name, exc) from exc
        except Exception as exc:
            record.status, record.error = "failed", f"{type(exc).__name__}: {exc}"
            raise
        record.status = status or "ok"
        stage.on_event("finished", {"status": record.status})
        logger.info("Stage %s %s", stage.name, record.status)


def run_pipeline(cfg: PipelineConfig, until: Optional[str] = None) -> RunState:
    return PipelineLoop(cfg).run(until=until)
