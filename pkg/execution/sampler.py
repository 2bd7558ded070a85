"""
sampler.py — Monte Carlo hulls, layers and slices of the UIPT.

A hull of radius r is drawn through its skeleton:
  1. perimeters P_0 = 1, P_1, ..., P_r from the one-step kernel
     K(p → q) = w(q)/w(p)·[u^p]φ^q (or backwards from P_r = q when conditioned),
  2. per layer, an offspring vector of length P_i summing to P_{i−1}, drawn
     sequentially from ∝ Π θ(c_j),
  3. per skeleton vertex, a Boltzmann triangulation of the (c+2)-gon with n
     inner vertices,
and V = 1 + Σ (n_v + 1).

Every trial draws from its own stream SeedSequence(seed, spawn_key=(trial,)),
so output does not depend on how trials are spread over workers.

Usage (as module):
    from execution.sampler import RngStream, sample_hull
    hull = sample_hull(2, RngStream(42, 0).generator())
    hull.volume
"""

from __future__ import annotations

import math
import sys
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from execution.config import slot_hard_limit
from execution.enumeration import slot_log_pmf
from execution.errors import SamplerError, require
from execution.laws import PowerTable, log_w, perimeter_cutoff, perimeter_log_pmf
from execution.reporting import log, warn
from execution.skeleton import OffspringLaw

KERNEL_RESIDUAL = 1e-12
BACKWARD_TAIL = 1e-14
KERNEL_MAX_Q = 1 << 14
SLOT_START = 1024
TASKS = ("hull", "hull_conditioned", "slices", "perimeter")


# ─── Random streams ───────────────────────────────────────────────────────────
@dataclass(frozen=True)
class RngStream:
    """Independent generator for (master seed, stream index)."""

    seed: int
    stream: int

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.stream,)))


# ─── Sample records ───────────────────────────────────────────────────────────
@dataclass(frozen=True)
class PerimeterTrajectory:
    perimeters: tuple[int, ...]
    residual: float = 0.0

    @property
    def r(self) -> int:
        return len(self.perimeters) - 1

    @property
    def final(self) -> int:
        return self.perimeters[-1]

    def __getitem__(self, i: int) -> int:
        return self.perimeters[i]


@dataclass(frozen=True)
class LayerSkeleton:
    """offspring[i−1] holds (c_1..c_{P_i}) for generation i, summing to P_{i−1}."""

    offspring: tuple[np.ndarray, ...]

    def check(self, trajectory: PerimeterTrajectory) -> None:
        for i, c in enumerate(self.offspring, start=1):
            if len(c) != trajectory[i] or int(c.sum()) != trajectory[i - 1] or (c < 0).any():
                raise SamplerError(f"layer {i}: offspring {c.tolist()} inconsistent with trajectory")


@dataclass(frozen=True)
class HullSample:
    trajectory: PerimeterTrajectory
    skeleton: LayerSkeleton
    slot_volumes: tuple[np.ndarray, ...]
    volume: int

    @property
    def r(self) -> int:
        return self.trajectory.r

    @property
    def skeleton_vertices(self) -> int:
        return sum(len(c) for c in self.skeleton.offspring)

    def check(self) -> None:
        self.skeleton.check(self.trajectory)
        total = 1 + sum(int((n + 1).sum()) for n in self.slot_volumes)
        if total != self.volume:
            raise SamplerError(f"volume identity broken: {self.volume} != {total}")


@dataclass(frozen=True)
class SliceSample:
    hull: HullSample
    rotation: int
    volumes: np.ndarray


# ─── Sampler state ────────────────────────────────────────────────────────────
class SkeletonSampler:
    """Caches shared by every trial: θ, powers of φ, kernel rows, slot tables.

    Tables only ever grow, and an entry's value never depends on the size it
    was grown to, so draws are reproducible whatever the trial history.
    """

    def __init__(self):
        self.law = OffspringLaw(1.0)
        self.powers = PowerTable(self.law.coeffs)
        self._lock = threading.Lock()
        self._kernels: dict[int, np.ndarray] = {}
        self._slots: dict[int, np.ndarray] = {}
        self._backward_sizes: dict[int, int] = {}

    # ─── Perimeter chain ─────────────────────────────────────────────────────
    def kernel_cdf(self, p: int, min_q: int = 0) -> np.ndarray:
        """Cumulative K(p → q) over q = 1..Q with 1 − cdf[-1] ≤ KERNEL_RESIDUAL."""
        cdf = self._kernels.get(p)
        if cdf is not None and len(cdf) >= min_q:
            return cdf
        size = max(64, 4 * p, min_q)
        while True:
            q = np.arange(1, size + 1)
            column = self.powers.column(p, size)[1:]
            probs = np.exp(log_w(q) - log_w(p)) * column
            cdf = np.cumsum(probs)
            if (cdf[-1] >= 1.0 - KERNEL_RESIDUAL and size >= min_q) or size >= KERNEL_MAX_Q:
                break
            size *= 2
        with self._lock:
            self._kernels[p] = cdf
        return cdf

    def step(self, p: int, rng: np.random.Generator) -> tuple[int, float]:
        v = rng.random()
        cdf = self.kernel_cdf(p)
        while v >= cdf[-1] and len(cdf) < KERNEL_MAX_Q:
            cdf = self.kernel_cdf(p, min_q=2 * len(cdf))
        if v >= cdf[-1]:
            raise SamplerError(f"perimeter kernel from p={p} exhausted at q={len(cdf)} (residual {1 - cdf[-1]:.2e})")
        return int(np.searchsorted(cdf, v, side="right")) + 1, max(0.0, 1.0 - float(cdf[-1]))

    def perimeter_chain(self, r: int, rng: np.random.Generator) -> PerimeterTrajectory:
        require(r >= 1, f"r must be >= 1, got {r}")
        path, residual = [1], 0.0
        for _ in range(r):
            q, res = self.step(path[-1], rng)
            path.append(q)
            residual = max(residual, res)
        return PerimeterTrajectory(tuple(path), residual)

    def _backward_size(self, i: int) -> int:
        size = self._backward_sizes.get(i)
        if size is None:
            size = perimeter_cutoff(i, BACKWARD_TAIL)
            self._backward_sizes[i] = size
        return size

    def conditioned_chain(self, r: int, q: int, rng: np.random.Generator) -> PerimeterTrajectory:
        """P_0..P_r given P_r = q, drawn backwards with P(P_i = m | P_{i+1} = k) ∝ π_i(m)K(m, k)."""
        require(r >= 1 and q >= 1, f"need r, q >= 1, got r={r}, q={q}")
        path, residual = [q], 0.0
        for i in range(r - 1, 0, -1):
            k = path[-1]
            size = self._backward_size(i)
            m = np.arange(1, size + 1)
            self.powers.ensure(k, size)
            row = self.powers.row(k)
            log_weights = perimeter_log_pmf(i, m) + log_w(k) - log_w(m)
            weights = np.exp(log_weights) * row[1: size + 1]
            total = weights.sum()
            if not total > 0:
                raise SamplerError(f"perimeter {k} unreachable from radius {i}")
            expected = math.exp(float(perimeter_log_pmf(i + 1, k)))
            residual = max(residual, abs(1.0 - total / expected))
            cdf = np.cumsum(weights)
            path.append(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")) + 1)
        path.append(1)
        return PerimeterTrajectory(tuple(reversed(path)), residual)

    # ─── Layers ──────────────────────────────────────────────────────────────
    def layer_offspring(self, q: int, p: int, rng: np.random.Generator) -> np.ndarray:
        """(c_1..c_q) ∝ Π θ(c_j) given Σ c_j = p, one coordinate at a time."""
        require(q >= 0 and p >= 0, f"need q, p >= 0, got q={q}, p={p}")
        if q == 0:
            require(p == 0, f"{p} children cannot hang from 0 parents")
            return np.zeros(0, dtype=np.int64)
        out = np.zeros(q, dtype=np.int64)
        self.powers.ensure(q, p)
        theta = self.powers.base
        m = p
        for j in range(q):
            k = q - j
            if m == 0:
                break
            if k == 1:
                out[j] = m
                break
            weights = theta[: m + 1] * self.powers.row(k - 1)[m::-1]
            cdf = np.cumsum(weights)
            if not cdf[-1] > 0:
                raise SamplerError(f"no admissible offspring for {k} parents and {m} children (float underflow)")
            c = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), m)
            out[j] = c
            m -= c
        return out

    # ─── Slots ───────────────────────────────────────────────────────────────
    def slot_cdf(self, p: int, cover: float = 0.0) -> np.ndarray:
        """Cumulative Boltzmann law of a p-gon slot, grown until it exceeds cover."""
        cdf = self._slots.get(p)
        size = SLOT_START if cdf is None else len(cdf)
        hard = slot_hard_limit()
        while cdf is None or (cdf[-1] <= cover and len(cdf) < hard):
            if cdf is not None:
                size = min(2 * size, hard)
            cdf = np.cumsum(np.exp(slot_log_pmf(p, size - 1)))
        with self._lock:
            self._slots[p] = cdf
        return cdf

    def slot_volumes(self, offspring: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Inner-vertex counts for slots of boundary c + 2, one per entry."""
        u = rng.random(len(offspring))
        out = np.zeros(len(offspring), dtype=np.int64)
        for c in np.unique(offspring):
            mask = offspring == c
            cdf = self.slot_cdf(int(c) + 2, cover=float(u[mask].max()))
            idx = np.searchsorted(cdf, u[mask], side="right")
            if (idx >= len(cdf)).any():
                raise SamplerError(f"Boltzmann slot p={int(c) + 2} exhausted at n={len(cdf)}; "
                                   f"tail mass {1 - cdf[-1]:.3e} (raise UIPT_LAB_SLOT_HARD_LIMIT)")
            out[mask] = idx
        return out

    # ─── Hulls ───────────────────────────────────────────────────────────────
    def fill(self, trajectory: PerimeterTrajectory, rng: np.random.Generator) -> HullSample:
        P = trajectory.perimeters
        offspring = tuple(self.layer_offspring(P[i], P[i - 1], rng) for i in range(1, len(P)))
        slots = tuple(self.slot_volumes(c, rng) for c in offspring)
        volume = 1 + sum(int((n + 1).sum()) for n in slots)
        return HullSample(trajectory, LayerSkeleton(offspring), slots, volume)

    def hull(self, r: int, rng: np.random.Generator) -> HullSample:
        return self.fill(self.perimeter_chain(r, rng), rng)

    def hull_conditioned(self, r: int, q: int, rng: np.random.Generator) -> HullSample:
        return self.fill(self.conditioned_chain(r, q, rng), rng)

    def slices(self, r: int, q: int, arcs: Sequence[int], rng: np.random.Generator) -> SliceSample:
        require(len(arcs) >= 1 and all(a >= 1 for a in arcs), f"arcs must be positive, got {list(arcs)}")
        require(sum(arcs) == q, f"arcs {list(arcs)} do not sum to q={q}")
        hull = self.hull_conditioned(r, q, rng)
        labels = np.arange(q)
        tree_volume = np.zeros(q, dtype=np.int64)
        for i in range(r, 0, -1):
            c, n = hull.skeleton.offspring[i - 1], hull.slot_volumes[i - 1]
            tree_volume += np.bincount(labels, weights=n + 1, minlength=q).astype(np.int64)
            labels = np.repeat(labels, c)
        # the tree holding the bottom vertex comes first
        root_tree = int(labels[0])
        tree_volume = np.roll(tree_volume, -root_tree)
        rotation = int(rng.integers(q))
        position = (np.arange(q) - rotation) % q
        block = np.searchsorted(np.cumsum(arcs), position, side="right")
        volumes = np.bincount(block, weights=tree_volume, minlength=len(arcs)).astype(np.int64)
        return SliceSample(hull, rotation, volumes)


_DEFAULT: SkeletonSampler | None = None
_DEFAULT_LOCK = threading.Lock()


def default_sampler() -> SkeletonSampler:
    global _DEFAULT
    with _DEFAULT_LOCK:
        if _DEFAULT is None:
            _DEFAULT = SkeletonSampler()
        return _DEFAULT


# ─── Module API ───────────────────────────────────────────────────────────────
def sample_offspring(law: OffspringLaw, rng: np.random.Generator, size: int | None = None):
    """Inverse-CDF draw from θ_t through the exact tail P(c > k)."""
    draws = law.inverse_cdf(1.0 - rng.random(1 if size is None else size))
    return int(draws[0]) if size is None else draws


def sample_perimeter_chain(r: int, rng: np.random.Generator) -> PerimeterTrajectory:
    return default_sampler().perimeter_chain(r, rng)


def sample_layer_offspring(q: int, p: int, rng: np.random.Generator) -> np.ndarray:
    return default_sampler().layer_offspring(q, p, rng)


def sample_slot_volume(c: int, rng: np.random.Generator) -> int:
    require(c >= 0, f"c must be >= 0, got {c}")
    return int(default_sampler().slot_volumes(np.array([c]), rng)[0])


def sample_hull(r: int, rng: np.random.Generator) -> HullSample:
    return default_sampler().hull(r, rng)


def sample_hull_conditioned(r: int, q: int, rng: np.random.Generator) -> HullSample:
    return default_sampler().hull_conditioned(r, q, rng)


def sample_slices(r: int, q: int, arcs: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    return default_sampler().slices(r, q, arcs, rng).volumes


# ─── Trial runner ─────────────────────────────────────────────────────────────
def _trial(task: str, params: dict, seed: int, trial: int) -> dict:
    rng = RngStream(seed, trial).generator()
    sampler = default_sampler()
    r = int(params["r"])
    if task == "perimeter":
        traj = sampler.perimeter_chain(r, rng)
        return {"trial": trial, "r": r, "P_r": traj.final}
    if task == "slices":
        result = sampler.slices(r, int(params["q"]), params["arcs"], rng)
        return {"trial": trial, "r": r, "P_r": result.hull.trajectory.final, "V": result.hull.volume,
                "slices": [int(v) for v in result.volumes]}
    if task == "hull_conditioned":
        hull = sampler.hull_conditioned(r, int(params["q"]), rng)
    else:
        hull = sampler.hull(r, rng)
    return {"trial": trial, "r": r, "P_r": hull.trajectory.final, "V": hull.volume}


def _run_chunk(args: tuple) -> list[dict]:
    task, params, seed, start, stop = args
    return [_trial(task, params, seed, trial) for trial in range(start, stop)]


def run_trials(task: str, params: dict, trials: int, seed: int, workers: int = 1) -> list[dict]:
    """Rows ordered by trial index; identical for any worker count."""
    require(task in TASKS, f"task must be one of {TASKS}, got {task!r}")
    require(trials >= 1 and workers >= 1, f"need trials, workers >= 1, got {trials}, {workers}")
    chunk = max(1, math.ceil(trials / (4 * workers)))
    jobs = [(task, params, seed, start, min(start + chunk, trials)) for start in range(0, trials, chunk)]
    log(f"   {task}: {trials} trials, seed {seed}, {workers} worker(s), {len(jobs)} chunk(s)")
    if workers == 1:
        parts = [_run_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    rows = [row for part in parts for row in part]
    rows.sort(key=lambda row: row["trial"])
    return rows


def trial_residuals(r: int, seed: int, trials: int) -> float:
    """Largest perimeter-kernel truncation residual met over a run."""
    worst = 0.0
    for trial in range(trials):
        worst = max(worst, default_sampler().perimeter_chain(r, RngStream(seed, trial).generator()).residual)
    if worst > KERNEL_RESIDUAL:
        warn(f"perimeter kernel residual {worst:.2e} above {KERNEL_RESIDUAL:.0e}")
    return worst
