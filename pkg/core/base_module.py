# core/base_module.py

from __future__ import annotations

import logging
from typing import Any, Dict, Optional


class CultureModule:
    """
    Base for one pipeline stage.

    A stage gets attached to the loop that owns the shared run state,
    does its work in run(), and reports progress through on_event().
    """

    name: str = "stage"

    def __init__(self, name: Optional[str] = None):
        if name:
            self.name = name
        self.core = None
        self.logger = logging.getLogger(f"{type(self).__module__}.{self.name}")

    def attach_core(self, core) -> None:
        self.core = core

    def run(self, state) -> None:
        raise NotImplementedError

    def on_event(self, event_type: str, data: Dict[str, Any]) -> None:
        self.logger.debug("%s %s", event_type, data)
