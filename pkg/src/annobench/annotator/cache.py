"""Content-addressed on-disk cache of annotation records.

One JSON file per key; writes go through a temp file and os.replace so
concurrent annotators never observe a torn entry.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

from .models import AnnotationRecord, AnnotatorError, ChatParams

log = logging.getLogger(__name__)


def cache_key(publication_id: str, prompt_id: str, params: ChatParams, prompt_checksum: str) -> str:
    """Stable hash over the full request identity.

    Any change to the publication, the prompt cell, the prompt file (via its
    checksum), or any request parameter yields a different key.
    """
    payload = json.dumps(
        {
            "publication_id": publication_id,
            "prompt_id": prompt_id,
            "prompt_checksum": prompt_checksum,
            "params": params.canonical(),
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class AnnotationCache:
    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> AnnotationRecord | None:
        path = self._path(key)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            return AnnotationRecord.from_dict(data)
        except FileNotFoundError:
            return None
        except (json.JSONDecodeError, KeyError, AnnotatorError) as exc:
            # A torn or stale entry is a miss, not a failure.
            log.warning("discarding unreadable cache entry %s: %s", path.name, exc)
            return None

    def put(self, key: str, record: AnnotationRecord) -> None:
        path = self._path(key)
        fd, tmp_name = tempfile.mkstemp(prefix=".tmp-", suffix=".json", dir=self.directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(record.to_dict(), fh, ensure_ascii=False)
            os.replace(tmp_name, path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise
