"""
Run manifests: what was run, with which seeds and package versions,
and the checksums of what it wrote.
"""

import hashlib
import json
import os
import platform
import tempfile
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional, Union

from src import __version__
from src.errors import ValidationError

TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "joblib", "python-dotenv")

MANIFEST_SUFFIX = ".manifest.json"


def sha256_of(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_versions() -> Dict[str, str]:
    versions = {"hrq": __version__, "python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "missing"
    return versions


def write_atomic(path: Union[str, Path], text: str) -> Path:
    """Write through a temp file in the target directory, then rename over the target"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def manifest_path(output: Union[str, Path]) -> Path:
    output = Path(output)
    return output.with_name(output.name + MANIFEST_SUFFIX)


@dataclass
class RunManifest:
    argv: List[str]
    command: str
    seed: Optional[int]
    samples: Optional[int]
    n_jobs: int
    versions: Dict[str, str] = field(default_factory=package_versions)
    wall_time_s: float = 0.0
    outputs: Dict[str, str] = field(default_factory=dict)

    def record_output(self, path: Union[str, Path]):
        self.outputs[Path(path).name] = sha256_of(path)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def save(self, output: Union[str, Path]) -> Path:
        return write_atomic(manifest_path(output), self.to_json())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(**data)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise ValidationError(f"cannot read manifest {path}: {exc}") from exc
