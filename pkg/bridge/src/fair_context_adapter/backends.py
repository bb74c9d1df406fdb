"""Model backends behind a single fit-and-score call.

Real foundation-model packages are imported lazily so the adapter starts
(and the protocol is testable) without them installed. Each backend reports
the package version it wrapped, which the session echoes in the ready
message.
"""

from __future__ import annotations

import numpy as np


class BackendUnavailable(RuntimeError):
    pass


class MeanBackend:
    """Test double: every query scores the context positive rate."""

    name = "mean"
    default_max_context = None
    package_version = "builtin"

    def predict_p1(self, context_x, context_y, query_x) -> list[float]:
        p = float(np.mean(context_y)) if len(context_y) else 0.0
        return [p] * len(query_x)


class _SklearnStyleBackend:
    """Shared wrapper for classifiers with fit/predict_proba and classes_."""

    name = ""
    default_max_context = None

    def __init__(self, classifier, package_version: str):
        self._classifier = classifier
        self.package_version = package_version

    def predict_p1(self, context_x, context_y, query_x) -> list[float]:
        X = np.asarray(context_x, dtype=np.float64)
        y = np.asarray(context_y, dtype=np.float64).astype(np.int64)
        q = np.asarray(query_x, dtype=np.float64)
        self._classifier.fit(X, y)
        proba = np.asarray(self._classifier.predict_proba(q), dtype=np.float64)
        classes = list(np.asarray(self._classifier.classes_).tolist())
        col = classes.index(1)
        return [float(v) for v in proba[:, col]]


def _import_or_unavailable(module: str, attr: str, device: str | None, **kwargs):
    try:
        mod = __import__(module, fromlist=[attr])
    except ImportError as exc:
        raise BackendUnavailable(
            f"model package {module!r} is not installed: {exc}") from exc
    cls = getattr(mod, attr)
    if device is not None:
        kwargs["device"] = device
    try:
        instance = cls(**kwargs)
    except TypeError:
        kwargs.pop("device", None)   # not every package takes a device hint
        instance = cls(**kwargs)
    version = getattr(mod, "__version__", "unknown")
    return instance, version


class TabPFNBackend(_SklearnStyleBackend):
    name = "tabpfn"
    default_max_context = 10_000   # current package ceiling on fit rows

    def __init__(self, device: str | None = None):
        clf, version = _import_or_unavailable("tabpfn", "TabPFNClassifier", device)
        super().__init__(clf, version)


class TabICLBackend(_SklearnStyleBackend):
    name = "tabicl"
    default_max_context = None

    def __init__(self, device: str | None = None):
        clf, version = _import_or_unavailable("tabicl", "TabICLClassifier", device)
        super().__init__(clf, version)


class TabDPTBackend(_SklearnStyleBackend):
    name = "tabdpt"
    default_max_context = None

    def __init__(self, device: str | None = None):
        clf, version = _import_or_unavailable("tabdpt", "TabDPTClassifier", device)
        super().__init__(clf, version)


BACKENDS = {
    "tabpfn": TabPFNBackend,
    "tabicl": TabICLBackend,
    "tabdpt": TabDPTBackend,
    "mean": MeanBackend,
}


def make_backend(name: str, device: str | None = None):
    if name not in BACKENDS:
        raise BackendUnavailable(
            f"unknown model {name!r}; choose from {sorted(BACKENDS)}")
    cls = BACKENDS[name]
    return cls() if name == "mean" else cls(device=device)
