"""Classifier feature schema: the eight workload/cluster inputs."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

FEATURE_NAMES = ("mm", "mc", "wn", "wmn", "wcn", "ds", "ac", "mec")


@dataclass(frozen=True)
class FeatureVector:
    """Workload and cluster features driving the executors-per-node decision.

    mm/mc: master memory (MB) and cores; wn: worker nodes; wmn/wcn: memory
    (MB) and cores per worker node; ds: data size (MB); ac: application
    complexity (1..3); mec: total cluster memory, always wn * wmn.
    """

    mm: float
    mc: int
    wn: int
    wmn: float
    wcn: int
    ds: float
    ac: int
    mec: float

    def __post_init__(self):
        for name in FEATURE_NAMES:
            if getattr(self, name) <= 0:
                raise ValueError(f"feature {name} must be > 0")
        if self.ac not in (1, 2, 3):
            raise ValueError(f"ac must be in {{1,2,3}}, got {self.ac}")
        if self.mec != self.wn * self.wmn:
            raise ValueError(
                f"mec must equal wn*wmn ({self.wn * self.wmn}), got {self.mec}")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=float)


@dataclass(frozen=True)
class LabeledRecord:
    features: FeatureVector
    label: int

    def __post_init__(self):
        if self.label < 0:
            raise ValueError(f"label must be >= 0, got {self.label}")


def to_matrix(records) -> tuple[np.ndarray, np.ndarray]:
    X = np.stack([r.features.to_array() for r in records])
    y = np.array([r.label for r in records], dtype=np.int64)
    return X, y


def write_csv(records, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(FEATURE_NAMES) + ["label"])
        for r in records:
            writer.writerow([repr(getattr(r.features, n)) if isinstance(
                getattr(r.features, n), float) else getattr(r.features, n)
                for n in FEATURE_NAMES] + [r.label])


def read_csv(path: str):
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            fv = FeatureVector(
                mm=float(row["mm"]), mc=int(row["mc"]), wn=int(row["wn"]),
                wmn=float(row["wmn"]), wcn=int(row["wcn"]), ds=float(row["ds"]),
                ac=int(row["ac"]), mec=float(row["mec"]))
            records.append(LabeledRecord(features=fv, label=int(row["label"])))
    return records
