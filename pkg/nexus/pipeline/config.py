# nexus/pipeline/config.py
#
# Pipeline configuration. Every tunable has a default, so a minimal config
# only names the survey and the embedding file.

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core.errors import ConfigError
from nexus.association.association_engine import ChannelWeights
from nexus.graph.features import FeatureSpec
from nexus.lexicon.text_pipeline import SimilarityMode


logger = logging.getLogger(__name__)

KMode = Literal["elbow", "silhouette", "fixed"]


class PipelineConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    survey_path: Path
    embedding_path: Path
    stopwords_path: Optional[Path] = None
    feature_specs: List[FeatureSpec] = Field(default_factory=list)
    channel_weights: ChannelWeights = Field(default_factory=ChannelWeights)
    similarity_mode: SimilarityMode = SimilarityMode.HYBRID

    top_n: int = Field(default=10, ge=1)
    match_threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    standardize: bool = True

    k_mode: KMode = "elbow"
    k: Optional[int] = Field(default=None, ge=1)
    k_max: int = Field(default=8, ge=2)
    seed: int = 0

    output_dir: Path = Path("culture_out")

    @model_validator(mode="after")
    def _check_k(self) -> "PipelineConfig":
        if self.k_mode == "fixed" and self.k is None:
            raise ValueError("k_mode 'fixed' needs k")
        if self.k_mode == "elbow" and self.k_max < 3:
            raise ValueError("elbow selection needs k_max >= 3")
        return self

    @model_validator(mode="after")
    def _check_feature_specs(self) -> "PipelineConfig":
        names = [s.name for s in self.feature_specs]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"duplicate feature names: {', '.join(duplicates)}")
        for spec in self.feature_specs:
            if spec.formula == "difference_over_ratio" and spec.group_ratio <= 0:
                raise ValueError(f"feature '{spec.name}': group_ratio must be > 0")
        return self

    def resolved(self, base: Path) -> "PipelineConfig":
        """Relative paths made absolute against base."""

        def fix(p: Optional[Path]) -> Optional[Path]:
            if p is None or p.is_absolute():
                return p
            return (base / p).resolve()

        return self.model_copy(
            update={
                "survey_path": fix(self.survey_path),
                "embedding_path": fix(self.embedding_path),
                "stopwords_path": fix(self.stopwords_path),
                "output_dir": fix(self.output_dir),
            }
        )

    def with_overrides(self, **overrides: Any) -> "PipelineConfig":
        updates = {k: v for k, v in overrides.items() if v is not None}
        if not updates:
            return self
        return build_config({**self.model_dump(), **updates})

    def check_paths(self) -> None:
        """Input files must exist before any stage runs."""
        for label, p in (
            ("survey", self.survey_path),
            ("embedding", self.embedding_path),
            ("stop-word", self.stopwords_path),
        ):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{label} file not found: {p}")

    def effective(self) -> Dict[str, Any]:
        """JSON-ready view for the run manifest (output location left out)."""
        doc = self.model_dump(mode="json", exclude={"output_dir"})
        for key in ("survey_path", "embedding_path", "stopwords_path"):
            if doc.get(key) is not None:
                doc[key] = Path(doc[key]).name
        return doc


def build_config(data: Dict[str, Any]) -> PipelineConfig:
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"invalid config: {problems}") from exc


def load_config(path: Union[str, Path]) -> PipelineConfig:
    """JSON, or YAML for .yaml/.yml files. Relative paths follow the config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")

    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping at the top level")

    cfg = build_config(data).resolved(path.parent.resolve())
    logger.info("Loaded config %s (k_mode=%s, seed=%d)", path.name, cfg.k_mode, cfg.seed)
    return cfg
