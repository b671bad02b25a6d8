"""Sampling-based stability certificates for compact sets.

estimate_delta searches, by bisection over delta in (0, epsilon], for a
ball whose sampled orbits all stay inside the epsilon-ball around the
set. check_positive_invariance flows set members and reports the largest
excursion. uniform_attraction_time finds the first sampled time after
which a whole start collection stays within epsilon. classify_stability
aggregates these plus a neighborhood attraction grid into one verdict.

Everything here is evidence from finitely many seeded samples, not
proof; reports carry the seed and sample counts so runs replay exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LyapsetError
from .expr import VectorFieldSpec
from .flow import IntegratorConfig, iterate_orbit, partial_trajectory, sample_times
from .geometry import (
    Box,
    CompactSet,
    FiniteSetApprox,
    sample_set_points,
    sample_shell,
)
from .limits import LABEL_ATTRACTED, roa_grid

VERDICT_STABLE = "stable_evidence"
VERDICT_UNSTABLE = "unstable_witness"
VERDICT_INCONCLUSIVE = "inconclusive"

BISECTION_STEPS = 20


@dataclass(frozen=True, eq=False)
class EpsilonDeltaPair:
    epsilon: float
    delta: float | None
    witness: np.ndarray | None

    def __post_init__(self):
        if self.delta is not None and self.delta > self.epsilon:
            raise ValueError("delta cannot exceed epsilon")
        if self.delta is None and self.witness is None:
            raise ValueError("a failed epsilon must carry a witness")

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "witness": None if self.witness is None else [float(v) for v in self.witness],
        }


@dataclass(frozen=True, eq=False)
class UniformTimeEstimate:
    value: float | None
    integration_failed: bool = False

    def to_json(self) -> dict:
        return {"value": self.value, "integration_failed": self.integration_failed}


@dataclass(frozen=True, eq=False)
class StabilityReport:
    pairs: tuple[EpsilonDeltaPair, ...]
    invariance_excursion: float
    uniform_T: float | None
    verdict: str
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "pairs": [p.to_json() for p in self.pairs],
            "invariance_excursion": self.invariance_excursion,
            "uniform_T": self.uniform_T,
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


def _interior_seed(seed: int, j: int) -> int:
    return (seed * 1_000_003 + 7919 * j + 13) % (2**31)


def _candidate_points(
    M: CompactSet, delta: float, shell_samples: int, seed: int
) -> np.ndarray:
    """Shell points at distance delta plus interior points at radii delta*u."""
    pts = [sample_shell(M, delta, shell_samples, seed).points]
    n_interior = math.ceil(shell_samples / 4)
    u = np.random.default_rng([seed, 17]).uniform(size=n_interior)
    for j in range(n_interior):
        r = delta * float(u[j])
        if r <= 0:
            continue
        pts.append(sample_shell(M, r, 1, _interior_seed(seed, j)).points)
    return np.vstack(pts)


def _orbit_stays_inside(
    V: VectorFieldSpec,
    x,
    M: CompactSet,
    epsilon: float,
    times,
    cfg: IntegratorConfig,
) -> bool:
    """True when every sampled state keeps d < epsilon; errors count as exits."""
    if not M.distance(x) < epsilon:
        return False
    try:
        for _, state in iterate_orbit(V, x, times, cfg):
            if not M.distance(state) < epsilon:
                return False
    except LyapsetError:
        return False
    return True


def estimate_delta(
    V: VectorFieldSpec,
    M: CompactSet,
    epsilon: float,
    cfg: IntegratorConfig,
    horizon_T: float = 20.0,
    shell_samples: int = 16,
    seed: int = 0,
    out_dt: float = 0.05,
) -> tuple[float | None, np.ndarray | None]:
    """Largest bisection-certified delta, or (None, witness) if none holds."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    times = sample_times(horizon_T, out_dt)[1:]

    def probe(delta: float) -> np.ndarray | None:
        for p in _candidate_points(M, delta, shell_samples, seed):
            if not _orbit_stays_inside(V, p, M, epsilon, times, cfg):
                return p
        return None

    lo, hi = 0.0, epsilon  # lo: largest certified so far, hi: smallest failed
    certified = None
    witness = None
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid <= 0:
            break
        w = probe(mid)
        if w is None:
            certified, lo = mid, mid
        else:
            witness, hi = w, mid
    return certified, (None if certified is not None else witness)


def check_positive_invariance(
    V: VectorFieldSpec,
    M: CompactSet,
    cfg: IntegratorConfig,
    boundary_samples: int = 16,
    horizon_T: float = 20.0,
    seed: int = 0,
    out_dt: float = 0.05,
) -> float:
    """Max distance excursion of flowed set members; inf flags an escape."""
    if not horizon_T > 0:
        raise ValueError("horizon_T must be > 0")
    starts = sample_set_points(M, boundary_samples, seed).points
    worst = 0.0
    for p in starts:
        traj, error = partial_trajectory(V, p, horizon_T, out_dt, cfg)
        if error is not None:
            return math.inf
        worst = max(worst, float(M.distances(traj.states).max()))
    return worst


def uniform_attraction_time(
    V: VectorFieldSpec,
    K: FiniteSetApprox,
    M: CompactSet,
    epsilon: float,
    cfg: IntegratorConfig,
    T_max: float,
    out_dt: float = 0.05,
) -> UniformTimeEstimate:
    """Smallest sampled T with d(orbit of every k, M) < epsilon on [T, T_max]."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    if len(K) < 1:
        raise ValueError("K must be nonempty")
    entry = 0.0
    for k in K.points:
        traj, error = partial_trajectory(V, k, T_max, out_dt, cfg)
        if error is not None:
            return UniformTimeEstimate(None, integration_failed=True)
        d = M.distances(traj.states)
        violations = np.nonzero(d >= epsilon)[0]
        if violations.size == 0:
            continue
        last = int(violations[-1])
        if last == len(traj) - 1:
            return UniformTimeEstimate(None)
        entry = max(entry, float(traj.times[last + 1]))
    return UniformTimeEstimate(entry)


def classify_stability(
    V: VectorFieldSpec,
    M: CompactSet,
    cfg: IntegratorConfig,
    epsilons,
    roa_box: Box,
    resolution: int = 9,
    horizon_T: float = 20.0,
    shell_samples: int = 12,
    seed: int = 0,
    tol: float = 1e-3,
    out_dt: float = 0.05,
) -> StabilityReport:
    """Verdict from delta searches, an invariance check, and a local grid."""
    epsilons = [float(e) for e in epsilons]
    if not epsilons:
        raise ValueError("epsilons must be nonempty")

    pairs = []
    for eps in sorted(epsilons):
        delta, witness = estimate_delta(
            V, M, eps, cfg,
            horizon_T=horizon_T, shell_samples=shell_samples, seed=seed, out_dt=out_dt,
        )
        pairs.append(EpsilonDeltaPair(eps, delta, witness))

    excursion = check_positive_invariance(
        V, M, cfg, boundary_samples=shell_samples, horizon_T=horizon_T,
        seed=seed, out_dt=out_dt,
    )

    grid = roa_grid(V, M, roa_box, resolution, cfg, horizon_T, tol, out_dt=out_dt)
    grid_attracted = all(lab == LABEL_ATTRACTED for lab in grid.labels)

    notes = [f"roa grid {grid.shape}: {grid.counts()}"]
    all_certified = all(p.delta is not None for p in pairs)
    if not all_certified:
        verdict = VERDICT_UNSTABLE
        uniform = None
    elif grid_attracted:
        verdict = VERDICT_STABLE
        K = FiniteSetApprox(grid.nodes, meta="roa grid nodes")
        estimate = uniform_attraction_time(
            V, K, M, min(epsilons), cfg, horizon_T, out_dt=out_dt
        )
        uniform = estimate.value
        if estimate.integration_failed:
            notes.append("uniform attraction probe hit an integration failure")
    else:
        verdict = VERDICT_INCONCLUSIVE
        uniform = None
        notes.append("stable, not attracting within horizon")
    return StabilityReport(
        pairs=tuple(pairs),
        invariance_excursion=excursion,
        uniform_T=uniform,
        verdict=verdict,
        notes=tuple(notes),
    )
