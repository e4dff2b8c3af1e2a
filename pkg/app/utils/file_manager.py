"""
File Manager
============

Utility untuk report output: stdout or an atomically replaced file, the
shipped JSON schema, and report digests.
"""

import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

import jsonschema

SCHEMA_PATH = Path(__file__).resolve().parent.parent / 'schemas' / 'report.schema.json'


class FileManager:
    """
    Class untuk managing report output

    Handles:
    - Writing reports to stdout or a file
    - Schema loading and validation
    - SHA-256 digests of emitted text
    """

    def __init__(self, schema_path: Optional[Path] = None):
        self.schema_path = Path(schema_path) if schema_path else SCHEMA_PATH
        self._schema: Optional[Dict[str, Any]] = None

    def write_report(self, text: str, path: Optional[str] = None) -> Optional[str]:
        """
        Write a report to ``path`` (temp file then rename) or to stdout.

        Returns:
            str: path written, or None for stdout
        """
        if not path or path == '-':
            sys.stdout.write(text)
            sys.stdout.flush()
            return None

        target = Path(path)
        if target.parent and not target.parent.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=str(target.parent), prefix=f".{target.name}.")
        try:
            with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
                handle.write(text)
            os.replace(tmp, target)
        except Exception:
            if os.path.exists(tmp):
                os.remove(tmp)
            raise
        return str(target)

    def load_schema(self) -> Dict[str, Any]:
        if self._schema is None:
            with open(self.schema_path, 'r', encoding='utf-8') as handle:
                self._schema = json.load(handle)
        return self._schema

    def validate_document(self, text: str) -> Dict[str, Any]:
        """Validate a JSON report against the schema."""
        try:
            jsonschema.validate(json.loads(text), self.load_schema())
        except (json.JSONDecodeError, jsonschema.ValidationError) as e:
            return {'valid': False, 'message': f'Report does not match schema: {e}', 'errors': [str(e)]}
        return {'valid': True, 'message': 'Report matches schema', 'errors': []}

    @staticmethod
    def digest(text: str) -> str:
        return hashlib.sha256(text.encode('utf-8')).hexdigest()
