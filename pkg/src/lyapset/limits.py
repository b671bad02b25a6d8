"""Omega-limit set estimation and attraction classification.

An omega-limit estimate is built from a finite window of the orbit after
a transient, clustered to representatives; its quality is reported as the
Hausdorff defect between the representatives and their own image under a
short flow, since a true limit set is invariant. Attraction verdicts use
the tail of a sampled orbit: attracted means the entire final tenth of
the samples is within tolerance, a mere dip counts as weak attraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EscapedDomainError,
    EvalDomainError,
    LyapsetError,
    OrbitUnboundedError,
)
from .expr import VectorFieldSpec
from .flow import IntegratorConfig, flow, partial_trajectory, trajectory
from .geometry import Box, CompactSet, FiniteSetApprox, PointCloud, as_point, hausdorff

LABEL_ATTRACTED = "attracted"
LABEL_WEAK = "weakly_attracted"
LABEL_NOT = "not_attracted_within_horizon"
TAIL_FRACTION = 0.1


@dataclass(frozen=True, eq=False)
class OmegaEstimate:
    points: FiniteSetApprox
    transient_T: float
    window_T: float
    cluster_tol: float
    invariance_defect: float


@dataclass(frozen=True, eq=False)
class AttractionVerdict:
    label: str
    final_distance: float
    min_distance: float
    horizon: float
    escaped: bool = False

    def __post_init__(self):
        if self.min_distance > self.final_distance + 1e-15:
            raise ValueError("min_distance cannot exceed final_distance")


def _greedy_cluster(samples: np.ndarray, tol: float) -> np.ndarray:
    """First-come representatives; later points within tol merge silently."""
    reps = np.empty_like(samples)
    count = 0
    tol2 = tol * tol
    for p in samples:
        if count:
            diff = reps[:count] - p
            if np.min((diff * diff).sum(axis=1)) <= tol2:
                continue
        reps[count] = p
        count += 1
    return reps[:count].copy()


def estimate_omega(
    V: VectorFieldSpec,
    x,
    cfg: IntegratorConfig,
    transient_T: float = 50.0,
    window_T: float = 20.0,
    out_dt: float = 0.01,
    cluster_tol: float = 1e-3,
) -> OmegaEstimate:
    """Cluster a post-transient orbit window into limit-set representatives."""
    if not (transient_T > 0 and window_T > 0):
        raise ValueError("transient_T and window_T must be > 0")
    x = as_point(x, V.dim)
    try:
        settled = flow(V, x, transient_T, cfg)
        window = trajectory(V, settled, window_T, out_dt, cfg)
    except (EscapedDomainError, EvalDomainError) as exc:
        raise OrbitUnboundedError(
            f"orbit unbounded within horizon {transient_T + window_T}: {exc}"
        ) from exc

    reps = _greedy_cluster(window.states, cluster_tol)
    tau = out_dt
    try:
        moved = np.asarray([flow(V, p, tau, cfg) for p in reps])
    except (EscapedDomainError, EvalDomainError) as exc:
        raise OrbitUnboundedError(f"representative escaped during probe: {exc}") from exc
    defect = hausdorff(moved, reps)

    points = FiniteSetApprox(
        reps,
        meta=(
            f"omega window=[{transient_T},{transient_T + window_T}] "
            f"out_dt={out_dt} tau={tau} cluster_tol={cluster_tol}"
        ),
    )
    return OmegaEstimate(points, transient_T, window_T, cluster_tol, defect)


def classify_attraction(
    V: VectorFieldSpec,
    x,
    M: CompactSet,
    cfg: IntegratorConfig,
    horizon_T: float,
    tol: float,
    out_dt: float = 0.01,
) -> AttractionVerdict:
    """Verdict from one sampled orbit: tail within tol, a dip, or neither."""
    if not horizon_T > 0:
        raise ValueError("horizon_T must be > 0")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    traj, error = partial_trajectory(V, x, horizon_T, out_dt, cfg)
    d = M.distances(traj.states)
    escaped = error is not None

    tail_start = (1.0 - TAIL_FRACTION) * horizon_T
    tail = d[traj.times >= tail_start]
    full_tail = not escaped and tail.size > 0
    if full_tail and float(tail.max()) <= tol:
        label = LABEL_ATTRACTED
    elif float(d.min()) <= tol:
        label = LABEL_WEAK
    else:
        label = LABEL_NOT
    return AttractionVerdict(
        label=label,
        final_distance=float(d[-1]),
        min_distance=float(d.min()),
        horizon=horizon_T,
        escaped=escaped,
    )


@dataclass(frozen=True, eq=False)
class RoaGrid:
    """Attraction labels over a rectangular grid of initial conditions."""

    axes: tuple[np.ndarray, ...]
    shape: tuple[int, ...]
    nodes: np.ndarray  # (N, n), row-major over axes
    labels: tuple[str, ...]
    final_distances: np.ndarray
    min_distances: np.ndarray
    escaped: tuple[bool, ...]
    errors: tuple[str | None, ...]
    horizon: float
    tol: float

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for lab in self.labels:
            out[lab] = out.get(lab, 0) + 1
        return out

    def to_csv(self) -> str:
        n = self.nodes.shape[1]
        header = ",".join(f"x{i + 1}" for i in range(n)) + ",label,final_distance"
        lines = [header]
        for i in range(self.nodes.shape[0]):
            coords = ",".join(repr(float(c)) for c in self.nodes[i])
            lines.append(f"{coords},{self.labels[i]},{self.final_distances[i]!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "shape": list(self.shape),
            "counts": self.counts(),
            "horizon": self.horizon,
            "tol": self.tol,
            "errors": sum(1 for e in self.errors if e is not None),
        }


LABEL_ERROR = "error"


def roa_grid(
    V: VectorFieldSpec,
    M: CompactSet,
    box: Box,
    resolution,
    cfg: IntegratorConfig,
    horizon_T: float,
    tol: float,
    out_dt: float = 0.05,
) -> RoaGrid:
    """Classify every node of a rectangular grid; errors are recorded rows."""
    if not isinstance(box, Box):
        raise TypeError("roa_grid needs a Box region")
    if box.dim != V.dim:
        raise ValueError(f"box dimension {box.dim} != field dimension {V.dim}")
    n = box.dim
    if np.isscalar(resolution):
        res = [int(resolution)] * n
    else:
        res = [int(r) for r in resolution]
        if len(res) != n:
            raise ValueError("one resolution per axis required")
    if any(r < 2 for r in res):
        raise ValueError("resolution must be >= 2 per axis")

    axes = tuple(np.linspace(box.lo[d], box.hi[d], res[d]) for d in range(n))
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.reshape(-1) for m in mesh], axis=-1)

    labels: list[str] = []
    finals: list[float] = []
    mins: list[float] = []
    escaped: list[bool] = []
    errors: list[str | None] = []
    for node in nodes:
        try:
            v = classify_attraction(V, node, M, cfg, horizon_T, tol, out_dt=out_dt)
            labels.append(v.label)
            finals.append(v.final_distance)
            mins.append(v.min_distance)
            escaped.append(v.escaped)
            errors.append(None)
        except LyapsetError as exc:
            labels.append(LABEL_ERROR)
            finals.append(math.nan)
            mins.append(math.nan)
            escaped.append(False)
            errors.append(str(exc))
    return RoaGrid(
        axes=axes,
        shape=tuple(res),
        nodes=nodes,
        labels=tuple(labels),
        final_distances=np.asarray(finals),
        min_distances=np.asarray(mins),
        escaped=tuple(escaped),
        errors=tuple(errors),
        horizon=horizon_T,
        tol=tol,
    )


def omega_distance_decay(
    V: VectorFieldSpec,
    x,
    cfg: IntegratorConfig,
    horizon_T: float,
    out_dt: float = 0.01,
    **omega_knobs,
) -> list[tuple[float, float]]:
    """Distance from the orbit of x to its own estimated limit set, over time."""
    estimate = estimate_omega(V, x, cfg, **omega_knobs)
    limit_cloud = PointCloud(estimate.points.points)
    traj = trajectory(V, x, horizon_T, out_dt, cfg)
    d = limit_cloud.distances(traj.states)
    return [(float(t), float(v)) for t, v in zip(traj.times, d)]
