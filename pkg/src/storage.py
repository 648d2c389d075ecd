"""
JSON persistence for states, settings, scan configurations and command
output. Failures surface as OSError carrying the offending path.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, TextIO, Union

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _resolve(file_path: PathLike) -> Path:
    path = Path(file_path)
    return path if path.is_absolute() else Path.cwd() / path


def load_json(file_path: PathLike) -> Dict[str, Any]:
    """
    Load a JSON document.

    Args:
        file_path: Absolute or working-directory relative path

    Returns:
        Parsed document

    Raises:
        OSError: file missing, unreadable or not valid JSON
    """
    path = _resolve(file_path)
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise OSError(f"Invalid JSON in {path}: {e}") from e
    except OSError as e:
        raise OSError(f"Cannot read {path}: {e.strerror or e}") from e


def _float_text(value: float) -> str:
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError(f"Out of range float values are not JSON compliant: {value!r}")
    text = f"{value:.17g}"
    return text + ".0" if text.lstrip("-").isdigit() else text


class _SeventeenDigitEncoder(json.JSONEncoder):
    """Writes every float with 17 significant digits."""

    def iterencode(self, o, _one_shot=False):
        return json.encoder._make_iterencode(
            {} if self.check_circular else None, self.default,
            json.encoder.encode_basestring_ascii if self.ensure_ascii else json.encoder.encode_basestring,
            self.indent, _float_text, self.key_separator, self.item_separator,
            self.sort_keys, self.skipkeys, _one_shot,
        )(o, 0)


def dumps(document: Any) -> str:
    """Serialize with two-space indent and floats written as %.17g."""
    return json.dumps(document, indent=2, cls=_SeventeenDigitEncoder) + "\n"


def save_json(document: Any, file_path: PathLike) -> Path:
    """
    Write a JSON document, creating parent directories.

    Raises:
        OSError: path not writable
    """
    path = _resolve(file_path)
    try:
        os.makedirs(path.parent, exist_ok=True)
        with open(path, "w") as f:
            f.write(dumps(document))
    except OSError as e:
        raise OSError(f"Cannot write {path}: {e.strerror or e}") from e
    logger.info(f"Saved {path}")
    return path


def emit_json(document: Any, file_path: Optional[PathLike] = None,
              stream: Optional[TextIO] = None) -> None:
    """Write to file_path when given, otherwise to stream."""
    if file_path is not None:
        save_json(document, file_path)
    elif stream is not None:
        stream.write(dumps(document))
