# nexus/pipeline/reports.py
#
# Artefact writer for a pipeline run. Every file goes through one writer,
# which keeps a SHA-256 digest per artefact for the manifest.

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import pandas as pd


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"
MANIFEST_FILE = "manifest.json"


class ReportWriter:
    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.artifacts: Dict[str, str] = {}

    def _target(self, name: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _record(self, name: str, data: bytes) -> Path:
        path = self._target(name)
        path.write_bytes(data)
        self.artifacts[name] = hashlib.sha256(data).hexdigest()
        logger.debug("wrote %s (%d bytes)", name, len(data))
        return path

    # -----------------------------------------------------
    # Writers
    # -----------------------------------------------------

    def write_frame(self, name: str, frame: pd.DataFrame, index: bool = False) -> Path:
        text = frame.to_csv(index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
        return self._record(name, text.encode("utf-8"))

    def write_text(self, name: str, text: str) -> Path:
        return self._record(name, text.encode("utf-8"))

    def write_json(self, name: str, obj: Any) -> Path:
        text = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        return self._record(name, text.encode("utf-8"))

    def write_with(self, name: str, export: Callable[[Path], Path]) -> Path:
        """Let a library exporter write the artefact, then record its digest."""
        path = export(self._target(name))
        data = path.read_bytes()
        self.artifacts[name] = hashlib.sha256(data).hexdigest()
        logger.debug("exported %s (%d bytes)", name, len(data))
        return path

    # -----------------------------------------------------
    # Manifest
    # -----------------------------------------------------

    def write_manifest(
        self,
        stages: List[Dict[str, Optional[str]]],
        config: Dict[str, Any],
        summary: Dict[str, Any],
    ) -> Path:
        partial = any(s["status"] == "failed" for s in stages)
        doc = {
            "artifacts": dict(sorted(self.artifacts.items())),
            "config": config,
            "partial": partial,
            "stages": stages,
            "summary": summary,
        }
        path = self._target(MANIFEST_FILE)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        if partial:
            logger.warning("Run incomplete; manifest flags partial outputs in %s", path)
        else:
            logger.info("Manifest written: %d artefacts", len(self.artifacts))
        return path
