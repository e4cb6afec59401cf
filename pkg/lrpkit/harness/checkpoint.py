"""Chunk-level checkpoints: one .npy file per completed replica range."""

import logging
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

CHECKPOINT_DIR = ".checkpoint"


class Checkpoint:
    """Completed chunks live under <out>/.checkpoint/<config-hash>/<label>/<start>-<stop>.npy"""

    def __init__(self, out_dir, config_hash):
        self.root = Path(out_dir) / CHECKPOINT_DIR / config_hash
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, label, start, stop):
        return self.root / label / f"{start:010d}-{stop:010d}.npy"

    def load(self, label, start, stop):
        """Stored chunk, or None when the range has not completed yet"""
        path = self.path(label, start, stop)
        if not path.exists():
            return None
        logger.debug("checkpoint hit %s", path)
        return np.load(path, allow_pickle=False)

    def save(self, label, start, stop, values):
        path = self.path(label, start, stop)
        path.parent.mkdir(parents=True, exist_ok=True)
        # write-then-rename so an interrupt never leaves a truncated chunk
        tmp = path.with_name(path.stem + ".tmp.npy")
        np.save(tmp, np.asarray(values), allow_pickle=False)
        tmp.replace(path)

    def completed(self, label):
        folder = self.root / label
        if not folder.exists():
            return []
        ranges = []
        for item in sorted(folder.glob("*.npy")):
            if item.stem.endswith(".tmp"):
                continue
            start, stop = item.stem.split("-")
            ranges.append((int(start), int(stop)))
        return ranges

    def scoped(self, name):
        """Checkpoint rooted in a subdirectory, one per grid point"""
        child = object.__new__(Checkpoint)
        child.root = self.root / name
        child.root.mkdir(parents=True, exist_ok=True)
        return child
