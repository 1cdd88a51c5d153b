"""Atomic result writing and the run manifest.

Every artifact goes to a temp file in the target directory and is renamed
into place; the manifest is always written last so a complete manifest
implies complete outputs. Nothing here embeds timestamps: identical runs
produce byte-identical files.
"""

import json
import os
import tempfile
from pathlib import Path

from .config import config_dict


def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json_atomic(path, obj) -> None:
    write_text_atomic(path, json_text(obj))


# short public names used by the CLI surface
write_csv = write_text_atomic
write_json = write_json_atomic


def write_manifest(out_dir, experiment: str, cfg, file_names) -> Path:
    """Write manifest.json listing the run's outputs (by basename)."""
    from .. import __version__

    manifest = {
        "experiment": experiment,
        "seed": cfg.seed,
        "config": config_dict(cfg),
        "library_version": __version__,
        "files": sorted(file_names),
    }
    path = Path(out_dir) / "manifest.json"
    write_json_atomic(path, manifest)
    return path
