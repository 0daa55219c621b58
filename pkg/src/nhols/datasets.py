"""Loaders for bundled point-cloud benchmarks (optional ``keel-ds`` package)."""
from __future__ import annotations

import numpy as np

from .data import PointCloud
from .errors import ConfigError

__all__ = ["KEEL_NAMES", "load_keel", "available"]

# public dataset name -> name inside keel-ds
KEEL_NAMES = {"optdigits": "optdigits", "pendigits": "penbased"}


def available() -> bool:
    try:
        import keel_ds  # noqa: F401
    except ImportError:
        return False
    return True


def load_keel(name: str) -> PointCloud:
    """Feature vectors and 0-based class labels of ``optdigits`` or ``pendigits``.

    The last column of the raw table is the class; labels are renumbered to
    ``0..c-1`` in sorted order and ids are the row numbers.
    """
    if name not in KEEL_NAMES:
        raise ConfigError(f"unknown dataset {name!r}; choose from {sorted(KEEL_NAMES)}")
    try:
        import keel_ds
    except ImportError:
        raise ConfigError("loading bundled datasets needs the optional 'keel-ds' package") from None
    df = keel_ds.load_data(KEEL_NAMES[name], raw=True)
    values = df.to_numpy()
    X = values[:, :-1].astype(np.float64)
    _, labels = np.unique(values[:, -1], return_inverse=True)
    return PointCloud(X, labels.astype(np.int64), [str(i) for i in range(len(X))])
