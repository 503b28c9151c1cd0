"""Synthetic point clouds, CSV ingestion and filter functions."""
from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class InvalidSpecError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for a named consumer of a single top-level seed.

    Distinct labels never share state, so e.g. changing how many graphs are
    sampled cannot perturb dataset generation.
    """
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


@dataclass
class PointCloud:
    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a non-empty n x d matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        self.points = pts
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=int)
            if lab.shape != (pts.shape[0],):
                raise ValueError("labels must have one entry per point")
            self.labels = lab

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


@dataclass
class CircleSpec:
    centers: Sequence[Sequence[float]]
    radii: Sequence[float]
    points_per_circle: int = 500
    noise_sd: float = 0.0

    def validate(self):
        if len(self.centers) < 1 or len(self.centers) != len(self.radii):
            raise InvalidSpecError("centers and radii must be non-empty and of equal length")
        for c in self.centers:
            if len(c) != 2:
                raise InvalidSpecError(f"circle centers are 2-vectors, got {c!r}")
        if any(r <= 0 for r in self.radii):
            raise InvalidSpecError(f"radii must be positive, got {list(self.radii)}")
        if int(self.points_per_circle) <= 0:
            raise InvalidSpecError("points_per_circle must be positive")
        if self.noise_sd < 0:
            raise InvalidSpecError("noise_sd must be nonnegative")


# Layouts used for the synthetic experiments. Offsets are read off figures,
# so they are defaults rather than exact reproductions.
CIRCLE_PRESETS = {
    "two_circles": CircleSpec(centers=[(0.0, 0.0), (3.0, 0.0)], radii=[1.0, 1.0]),
    "intersecting_circles": CircleSpec(centers=[(0.0, 0.0), (1.5, 0.0)], radii=[1.0, 1.0]),
    "unequal_circles": CircleSpec(centers=[(0.0, 0.0), (2.0, 0.0)], radii=[1.0, 0.5]),
    "unequal_intersecting_circles": CircleSpec(centers=[(0.0, 0.0), (1.25, 0.0)], radii=[1.0, 0.5]),
    "small_noise": CircleSpec(centers=[(0.0, 0.0), (1.5, 0.0)], radii=[1.0, 1.0], noise_sd=0.1),
    "big_noise": CircleSpec(centers=[(0.0, 0.0), (1.5, 0.0)], radii=[1.0, 1.0], noise_sd=0.3),
}


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def generate_circles(spec: CircleSpec, seed) -> PointCloud:
    """Points uniform in angle on each circle, plus optional isotropic Gaussian noise.

    ``seed`` is an integer or a :class:`numpy.random.Generator`.
    """
    spec.validate()
    rng = _rng(seed)
    m = int(spec.points_per_circle)
    chunks, labels = [], []
    for idx, (center, radius) in enumerate(zip(spec.centers, spec.radii)):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=m)
        xy = np.column_stack([np.cos(theta), np.sin(theta)]) * float(radius)
        xy += np.asarray(center, dtype=float)
        chunks.append(xy)
        labels.append(np.full(m, idx))
    points = np.vstack(chunks)
    if spec.noise_sd > 0:
        points = points + rng.normal(0.0, spec.noise_sd, size=points.shape)
    return PointCloud(points, np.concatenate(labels))


def generate_cross(arm_length: float = 5.0, points_per_arm: int = 250, width: float = 0.1,
                   seed: int = 0) -> PointCloud:
    """Plus-shaped cloud: four arms leaving the origin along the coordinate axes.

    Arm points are uniform along the arm with uniform transverse jitter in
    ``[-width, width]``. Labels record the arm index.
    """
    if arm_length <= 0 or points_per_arm <= 0 or width < 0:
        raise InvalidSpecError("arm_length and points_per_arm must be positive, width nonnegative")
    rng = _rng(seed)
    directions = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    chunks, labels = [], []
    for idx, u in enumerate(directions):
        along = rng.uniform(0.0, arm_length, size=points_per_arm)
        across = rng.uniform(-width, width, size=points_per_arm)
        normal = np.array([-u[1], u[0]])
        chunks.append(along[:, None] * u + across[:, None] * normal)
        labels.append(np.full(points_per_arm, idx))
    return PointCloud(np.vstack(chunks), np.concatenate(labels))


def load_csv(path, has_labels: bool = False, header: bool = False) -> PointCloud:
    """Read one point per row; with ``has_labels`` the last column is an integer label."""
    rows, labels = [], []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} columns, found {len(row)}", lineno)
            cells = row
            if has_labels:
                if len(row) < 2:
                    raise ParseError("label column requires at least one coordinate", lineno)
                try:
                    labels.append(int(row[-1]))
                except ValueError:
                    raise ParseError(f"label {row[-1]!r} is not an integer", lineno) from None
                cells = row[:-1]
            try:
                values = [float(c) for c in cells]
            except ValueError as err:
                raise ParseError(f"non-numeric cell ({err})", lineno) from None
            if not all(np.isfinite(values)):
                raise ParseError("non-finite coordinate", lineno)
            rows.append(values)
    if not rows:
        raise ParseError(f"no data rows in {path}")
    return PointCloud(np.array(rows), np.array(labels) if has_labels else None)


def save_csv(pc: PointCloud, path, with_labels: bool = True):
    with open(path, "w", newline="") as fh:
        for i in range(pc.n):
            cells = [repr(float(v)) for v in pc.points[i]]
            if with_labels and pc.labels is not None:
                cells.append(str(int(pc.labels[i])))
            fh.write(",".join(cells) + "\n")


def filter_coordinate(pc: PointCloud, axis: int) -> np.ndarray:
    if not 0 <= axis < pc.d:
        raise IndexError(f"axis {axis} out of range for {pc.d}-dimensional points")
    return pc.points[:, axis].copy()


def filter_mean_distance(pc: PointCloud) -> np.ndarray:
    # self term contributes 0 but still counts in the 1/n
    pts = pc.points
    out = np.empty(pc.n)
    block = 512
    for start in range(0, pc.n, block):
        diff = pts[start:start + block, None, :] - pts[None, :, :]
        out[start:start + block] = np.sqrt((diff ** 2).sum(-1)).mean(axis=1)
    return out
