"""Topology-based expressiveness analysis: compare the Betti profiles of
input classes against layer outputs, flag representations that lose
components, and sweep layer widths.

"b0 at minimum radius" means the b0 value at the smallest strictly
positive radius of the configured grid (default: 64 log-spaced radii from
1e-3 to the largest class diameter).  Narrow layers collapse distinct
samples onto coincident activation vectors, which is exactly what this
number detects.

Per-class homology computations are independent and may run in parallel
(``jobs``); results do not depend on the level of parallelism.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import Dataset
from .homology import Barcode, betti_curve, pairwise_distances, rips_persistence
from .mlp import (
    ActivationFn,
    Network,
    TrainConfig,
    TrainingDivergedError,
    build_network,
    evaluate_accuracy,
    extract_class_activations,
    train_sgd,
)

__all__ = [
    "ClassCurves",
    "ClassProfile",
    "ClassComparison",
    "ExpressivenessReport",
    "SweepRow",
    "SweepResult",
    "default_radius_grid",
    "input_profile",
    "layer_profile",
    "compare_profiles",
    "width_sweep",
]

DEFAULT_GRID_SIZE = 64
DEFAULT_MIN_RADIUS = 1e-3
DEFAULT_CLASS_CAP = 200
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class ClassCurves:
    grid: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    barcode: Barcode

    @property
    def b0_at_min_radius(self) -> int:
        positive = np.nonzero(self.grid > 0)[0]
        if len(positive) == 0:
            raise ValueError("radius grid has no positive entries")
        return int(self.b0[positive[0]])


@dataclass(frozen=True)
class ClassProfile:
    curves: dict[int, ClassCurves]
    grid: np.ndarray
    cap: int  # subsample cap, recorded in every report

    def class_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.curves))

    def max_b0_at_min_radius(self) -> int:
        return max(c.b0_at_min_radius for c in self.curves.values())


def default_radius_grid(max_distance: float, size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    top = max(float(max_distance), DEFAULT_MIN_RADIUS * 2)
    return np.geomspace(DEFAULT_MIN_RADIUS, top, size)


def _curves_for_cloud(args) -> tuple[int, np.ndarray, np.ndarray, Barcode]:
    class_id, points, grid = args
    dist = pairwise_distances(points)
    barcode = rips_persistence(dist, max_dim=1)
    return class_id, betti_curve(barcode, 0, grid), betti_curve(barcode, 1, grid), barcode


def _profile_clouds(
    clouds: dict[int, np.ndarray],
    radius_grid: Optional[np.ndarray],
    cap: int,
    jobs: int = 1,
) -> ClassProfile:
    if radius_grid is None:
        max_dist = 0.0
        for pts in clouds.values():
            max_dist = max(max_dist, float(pairwise_distances(pts).max()))
        radius_grid = default_radius_grid(max_dist)
    grid = np.asarray(radius_grid, dtype=np.float64)

    tasks = [(cid, pts, grid) for cid, pts in sorted(clouds.items())]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_curves_for_cloud, tasks))
    else:
        results = [_curves_for_cloud(t) for t in tasks]
    curves = {
        cid: ClassCurves(grid=grid, b0=b0, b1=b1, barcode=bc) for cid, b0, b1, bc in results
    }
    return ClassProfile(curves=curves, grid=grid, cap=cap)


def _subsample(points: np.ndarray, cap: int, seed: int) -> np.ndarray:
    if len(points) <= cap:
        return points
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(points), size=cap, replace=False))
    return points[idx]


def input_profile(
    dataset: Dataset,
    per_class_cap: int = DEFAULT_CLASS_CAP,
    radius_grid: Optional[np.ndarray] = None,
    seed: int = 0,
    jobs: int = 1,
) -> ClassProfile:
    """Per-class b0/b1 curves of the raw features.

    Classes with fewer than two points are skipped with a warning.
    """
    if per_class_cap < 2:
        raise ValueError("per_class_cap must be >= 2")
    clouds = {}
    for c in range(dataset.n_classes):
        idx = dataset.class_indices(c)
        if len(idx) < 2:
            warnings.warn(f"class {c} has {len(idx)} point(s); skipped", stacklevel=2)
            continue
        clouds[c] = _subsample(dataset.features[idx], per_class_cap, seed)
    return _profile_clouds(clouds, radius_grid, per_class_cap, jobs)


def layer_profile(
    net: Network,
    dataset: Dataset,
    layer: int,
    per_class_cap: int = DEFAULT_CLASS_CAP,
    radius_grid: Optional[np.ndarray] = None,
    seed: int = 0,
    jobs: int = 1,
) -> ClassProfile:
    """Per-class b0/b1 curves of the layer outputs (inference mode)."""
    if per_class_cap < 2:
        raise ValueError("per_class_cap must be >= 2")
    clouds = {}
    for c in range(dataset.n_classes):
        idx = dataset.class_indices(c)
        if len(idx) < 2:
            warnings.warn(f"class {c} has {len(idx)} point(s); skipped", stacklevel=2)
            continue
        dump = extract_class_activations(net, dataset, layer, c, per_class_cap, seed)
        clouds[c] = dump.activations
    return _profile_clouds(clouds, radius_grid, per_class_cap, jobs)


@dataclass(frozen=True)
class ClassComparison:
    class_id: int
    input_b0: int
    layer_b0: int
    ratio: float
    flagged: bool


@dataclass(frozen=True)
class ExpressivenessReport:
    classes: tuple[ClassComparison, ...]
    threshold_fraction: float
    efficient: bool
    max_layer_b0_min_radius: int
    accuracy: Optional[float] = None

    def to_text(self) -> str:
        lines = [
            "class  input_b0  layer_b0  ratio   flag",
        ]
        for c in self.classes:
            lines.append(
                f"{c.class_id:5d}  {c.input_b0:8d}  {c.layer_b0:8d}  "
                f"{c.ratio:5.2f}   {'INEFFICIENT' if c.flagged else 'ok'}"
            )
        verdict = "efficient" if self.efficient else "inefficient"
        lines.append(
            f"aggregate: {verdict} (threshold {self.threshold_fraction}, "
            f"max layer b0 at min radius {self.max_layer_b0_min_radius}"
            + (f", accuracy {self.accuracy:.4f})" if self.accuracy is not None else ")")
        )
        return "\n".join(lines) + "\n"


def compare_profiles(
    input_prof: ClassProfile,
    layer_prof: ClassProfile,
    threshold_fraction: float = DEFAULT_THRESHOLD,
    accuracy: Optional[float] = None,
) -> ExpressivenessReport:
    """Flag classes whose layer b0 at minimum radius falls below
    threshold_fraction times the input value."""
    if input_prof.class_ids() != layer_prof.class_ids():
        raise ValueError(
            f"class sets differ: {input_prof.class_ids()} vs {layer_prof.class_ids()}"
        )
    rows = []
    for c in input_prof.class_ids():
        inp = input_prof.curves[c].b0_at_min_radius
        lay = layer_prof.curves[c].b0_at_min_radius
        ratio = lay / inp if inp else float("inf")
        rows.append(
            ClassComparison(
                class_id=c,
                input_b0=inp,
                layer_b0=lay,
                ratio=ratio,
                flagged=lay < threshold_fraction * inp,
            )
        )
    return ExpressivenessReport(
        classes=tuple(rows),
        threshold_fraction=threshold_fraction,
        efficient=not any(r.flagged for r in rows),
        max_layer_b0_min_radius=layer_prof.max_b0_at_min_radius(),
        accuracy=accuracy,
    )


@dataclass(frozen=True)
class SweepRow:
    width: int
    seed: int
    accuracy: float
    max_b0_min_radius: int
    profile: Optional[ClassProfile]
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def records(self) -> list[str]:
        """Line-oriented ``width,seed,accuracy,max_b0_min_radius``."""
        return [
            f"{r.width},{r.seed},{r.accuracy:.6g},{r.max_b0_min_radius}" for r in self.rows
        ]

    def to_text(self) -> str:
        lines = ["width  seed  accuracy  max_b0_min_radius"]
        for r in self.rows:
            note = f"  ! {r.error}" if r.error else ""
            lines.append(
                f"{r.width:5d}  {r.seed:4d}  {r.accuracy:8.4f}  {r.max_b0_min_radius:17d}{note}"
            )
        return "\n".join(lines) + "\n"


def width_sweep(
    widths: Sequence[int],
    seeds: Sequence[int],
    train_dataset: Dataset,
    test_dataset: Dataset,
    activation: ActivationFn,
    epochs: int = 5,
    lr: float = 0.1,
    batch_size: int = 32,
    hidden_layers: int = 3,
    layer: Optional[int] = None,
    per_class_cap: int = DEFAULT_CLASS_CAP,
    radius_grid: Optional[np.ndarray] = None,
    jobs: int = 1,
) -> SweepResult:
    """Train an equal-width net per (width, seed), evaluate accuracy and
    the max-over-classes b0 at minimum radius of the chosen layer.

    A diverging training run is recorded with its error and the sweep
    continues.  Deterministic given the seed list.
    """
    if not widths:
        raise ValueError("need at least one width")
    if layer is None:
        layer = hidden_layers
    rows = []
    for width in widths:
        for seed in seeds:
            shape = [train_dataset.dim] + [int(width)] * hidden_layers + [train_dataset.n_classes]
            net = build_network(shape, activation, seed=seed, batch_norm=True)
            config = TrainConfig(epochs=epochs, lr=lr, batch_size=batch_size, seed=seed)
            try:
                train_sgd(net, train_dataset, config)
            except TrainingDivergedError as exc:
                rows.append(
                    SweepRow(
                        width=int(width),
                        seed=int(seed),
                        accuracy=float("nan"),
                        max_b0_min_radius=0,
                        profile=None,
                        error=str(exc),
                    )
                )
                continue
            acc = evaluate_accuracy(net, test_dataset)
            prof = layer_profile(
                net,
                train_dataset,
                layer=layer,
                per_class_cap=per_class_cap,
                radius_grid=radius_grid,
                seed=seed,
                jobs=jobs,
            )
            rows.append(
                SweepRow(
                    width=int(width),
                    seed=int(seed),
                    accuracy=acc,
                    max_b0_min_radius=prof.max_b0_at_min_radius(),
                    profile=prof,
                )
            )
    return SweepResult(rows=tuple(rows))
