"""
Run Manifest
Resolved config, file digests, stage timings and per-arm results of one run
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from grnsynth import __version__
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)

MANIFEST_NAME = 'manifest.json'
# Not part of the reproducible output set
VOLATILE_PARTS = ('logs', MANIFEST_NAME)


def file_digest(path, chunk_size=1 << 20):
    """SHA-256 hex digest of a file"""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def vocabulary_digest(genes):
    """Digest of an ordered gene vocabulary"""
    return hashlib.sha256('\n'.join(genes.symbols).encode('utf-8')).hexdigest()[:16]


def digest_outputs(out_dir, exclude=()):
    """
    Digest every file under out_dir except logs, manifests and `exclude`

    Returns:
        dict: Relative POSIX path -> sha256, sorted by path
    """
    out_dir = Path(out_dir)
    excluded = {Path(p).resolve() for p in exclude}
    digests = {}
    for path in sorted(out_dir.rglob('*')):
        if not path.is_file() or path.resolve() in excluded:
            continue
        relative = path.relative_to(out_dir)
        if any(part in VOLATILE_PARTS for part in relative.parts):
            continue
        digests[relative.as_posix()] = file_digest(path)
    return digests


@dataclass
class ArmRecord:
    """Outcome of one arm"""

    name: str
    grn_source: str
    setting: str
    grn_path: str = None
    report: dict = None


@dataclass
class RunManifest:
    """Replayable record of a run"""

    config: dict
    dataset: str
    kb_source: str
    version: str = __version__
    vocabulary_digest: str = None
    partition_digest: str = None
    k: int = None
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    arms: list = field(default_factory=list)
    status: str = 'running'
    failed_stage: str = None
    error: str = None

    @property
    def succeeded(self):
        return self.status == 'ok'

    def record_input(self, name, path):
        if path:
            self.inputs[name] = {'path': str(path), 'sha256': file_digest(path)}

    def mark_failed(self, stage, error):
        self.status = 'failed'
        self.failed_stage = stage
        self.error = f"{type(error).__name__}: {error}"

    def to_dict(self):
        data = asdict(self)
        data['arms'] = [asdict(arm) if isinstance(arm, ArmRecord) else arm for arm in self.arms]
        return data

    def write(self, out_dir):
        """Write manifest.json into out_dir"""
        path = Path(out_dir) / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')
        logger.info(f"Wrote manifest ({self.status}): {path}")
        return path

    @classmethod
    def read(cls, path):
        """Load a manifest file (or the manifest.json of a run directory)"""
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
        data['arms'] = [ArmRecord(**arm) for arm in data.get('arms', [])]
        return cls(**data)
