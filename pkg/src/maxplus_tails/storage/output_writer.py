"""Report and curve files, each carrying the manifest of the run that made it."""

import csv
import io
import json
import os
from typing import Any, Dict, Iterable, Optional, Sequence

from src.maxplus_tails.models.reports import RunManifest, to_jsonable
from src.maxplus_tails.utils.logging import setup_logger

logger = setup_logger("maxplus-tails.output")

MANIFEST_PREFIX = "# manifest: "


class OutputWriter:
    """Writes JSON reports and CSV curves atomically."""

    def __init__(self, manifest: RunManifest, include_timing: bool = False):
        """
        Initialize the writer.

        Args:
            manifest: Manifest embedded in every output
            include_timing: Embed the wall time (outputs then differ between runs)
        """
        self.manifest = manifest
        self.include_timing = include_timing

    def _manifest(self) -> Dict[str, Any]:
        return self.manifest.to_dict(include_timing=self.include_timing)

    def render_json(self, payload: Dict[str, Any]) -> str:
        document = {"manifest": self._manifest()}
        document.update(to_jsonable(payload))
        return json.dumps(document, indent=2, allow_nan=False) + "\n"

    def render_csv(self, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        buffer = io.StringIO()
        buffer.write(MANIFEST_PREFIX + json.dumps(self._manifest(), allow_nan=False) + "\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buffer.getvalue()

    def _write(self, path: str, text: str) -> str:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        # Write to a temporary file first, then rename over the target
        temp_file = f"{path}.tmp"
        with open(temp_file, "w", newline="") as f:
            f.write(text)
        os.replace(temp_file, path)
        logger.info(f"Wrote {path}")
        return path

    def write_json(self, path: str, payload: Dict[str, Any]) -> str:
        return self._write(path, self.render_json(payload))

    def write_csv(
        self, path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]
    ) -> str:
        return self._write(path, self.render_csv(header, rows))


def read_manifest(path: str) -> Optional[Dict[str, Any]]:
    """Manifest embedded in a JSON or CSV output file, or None."""
    with open(path, "r") as f:
        text = f.read()
    if text.startswith(MANIFEST_PREFIX):
        return json.loads(text.splitlines()[0][len(MANIFEST_PREFIX):])
    try:
        return json.loads(text).get("manifest")
    except json.JSONDecodeError:
        return None
