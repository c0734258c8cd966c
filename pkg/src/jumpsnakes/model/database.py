"""JSON-backed registry of builtin benchmark problems."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Optional

logger: logging.Logger = logging.getLogger(__name__)


class ProblemDatabase:
    """Loads problem tables from every `*.json` file in the data directory into a cache.

    Each file maps a problem name to its table: x0, T, markspace, coefficient tables (numbers or
    `"$name"` references into `parameters`), controls, budget, oracle name and description.
    """

    def __init__(self, data_directory: Optional[Path] = None) -> None:
        self.data_directory: Path = self._resolve_data_directory(data_directory)
        self._cache: dict[str, dict[str, Any]] = {}
        self._load_problems()

    def _resolve_data_directory(self, data_directory: Optional[Path]) -> Path:
        if data_directory is not None:
            return Path(data_directory)
        return Path(__file__).parent / "data"

    # 🌟 - Loading problems from the data directory
    def _load_problems(self) -> None:
        if not self.data_directory.is_dir():
            logger.warning(f"Data directory '{self.data_directory}' does not exist.")
            return

        for json_path in sorted(self.data_directory.glob("*.json")):
            try:
                with open(json_path, mode="r", encoding="utf-8") as fh:
                    tables: dict[str, dict[str, Any]] = json.load(fh)
            except (OSError, json.JSONDecodeError) as e:
                logger.error(f"Error loading problems from {json_path.name}: {e}")
                continue
            for name, table in tables.items():
                if name in self._cache:
                    logger.warning(f"Problem '{name}' in {json_path.name} shadows an earlier definition")
                table["_source"] = json_path.name
                self._cache[name] = table

    # -
    def get_problem_data(self, name: str) -> Optional[dict[str, Any]]:
        """Deep copy of a problem table, or None when the name is unknown."""
        table = self._cache.get(name)
        return json.loads(json.dumps(table)) if table is not None else None

    def list_problems(self) -> list[str]:
        return sorted(self._cache)

    def describe(self, name: str) -> str:
        table = self._cache.get(name)
        return "" if table is None else str(table.get("description", ""))

    def __contains__(self, name: object) -> bool:
        return name in self._cache

    def __len__(self) -> int:
        return len(self._cache)


# Global singleton
_problem_database: Optional[ProblemDatabase] = None


def get_problem_database() -> ProblemDatabase:
    """Get the global builtin problem database."""
    global _problem_database
    if _problem_database is None:
        _problem_database = ProblemDatabase()
    return _problem_database
