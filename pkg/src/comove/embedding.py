"""Low-dimensional maps of assets from their correlation distances.

Coordinates are found by minimizing the squared-error stress between
map distances and target distances with simulated annealing (single
point Metropolis moves on a geometric cooling ladder), followed by a
deterministic pattern-search polish. Warm starts anchor the map to an
earlier one through a quadratic penalty, so a sequence of windows turns
into a smooth trajectory instead of independent re-draws.

All randomness comes from one generator seeded per call; the draws are
batched per temperature level and fed to the kernels, so results do not
depend on which kernel backend is active.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .data import CorrelationMatrix, DistanceMatrix, _read_csv, _write_csv
from .errors import ValidationError
from .estimators import average_correlations

AXIS_NAMES = ("x", "y", "z")

# A warm start only counts as improved when it beats the anchor by more
# than this relative margin; below it the anchor is returned unchanged,
# which makes re-embedding an unchanged matrix a true fixed point.
IMPROVEMENT_EPS = 1e-12

# A centroid this close to the origin counts as centered and is left
# untouched, so centering is idempotent at the bit level.
CENTER_EPS = 1e-12

# Warm starts refine an existing map instead of re-exploring, so their
# default starting temperature is scaled down by this factor. The
# initial cost still sets the scale: a stale anchor under a very
# different matrix has a large cost and therefore room to escape.
WARM_T0_FACTOR = 0.01


def _axis_names(n_dim: int) -> list[str]:
    if n_dim <= len(AXIS_NAMES):
        return list(AXIS_NAMES[:n_dim])
    return [f"c{i}" for i in range(n_dim)]


@dataclass(frozen=True)
class AnnealingSchedule:
    """Cooling-ladder knobs; ``None`` fields resolve per problem.

    The starting temperature defaults to the initial cost divided by the
    number of assets (scaled by ``WARM_T0_FACTOR`` when warm-started from
    ``init``, so a chained map is refined rather than re-explored), the
    level length to 100 moves per asset, and the floor to 1e-6 times the
    start. Proposals are Gaussian with scale
    ``proposal_scale * sqrt(T / T0)`` (default ``sqrt(T)``). The polish
    step starts at a tenth of the mean target distance and shrinks by
    ``polish_shrink`` down to ``polish_min_step_factor`` times its start.
    """

    initial_temperature: float | None = None
    cooling_factor: float = 0.95
    steps_per_temperature: int | None = None
    min_temperature: float | None = None
    proposal_scale: float | None = None
    polish_step0: float | None = None
    polish_shrink: float = 0.5
    polish_min_step_factor: float = 1e-9
    polish_max_passes: int = 50

    def __post_init__(self) -> None:
        t0, tmin = self.initial_temperature, self.min_temperature
        if t0 is not None and t0 <= 0:
            raise ValidationError(f"initial temperature must be positive, got {t0}")
        if tmin is not None and tmin <= 0:
            raise ValidationError(f"min temperature must be positive, got {tmin}")
        if t0 is not None and tmin is not None and t0 <= tmin:
            raise ValidationError(
                f"initial temperature {t0} must exceed min temperature {tmin}"
            )
        if not 0.0 < self.cooling_factor < 1.0:
            raise ValidationError(
                f"cooling factor must be in (0, 1), got {self.cooling_factor}"
            )
        if self.steps_per_temperature is not None and self.steps_per_temperature < 1:
            raise ValidationError("steps_per_temperature must be positive")
        if self.proposal_scale is not None and self.proposal_scale <= 0:
            raise ValidationError("proposal_scale must be positive")
        if self.polish_step0 is not None and self.polish_step0 <= 0:
            raise ValidationError("polish_step0 must be positive")
        if not 0.0 < self.polish_shrink < 1.0:
            raise ValidationError("polish_shrink must be in (0, 1)")
        if not 0.0 < self.polish_min_step_factor < 1.0:
            raise ValidationError("polish_min_step_factor must be in (0, 1)")
        if self.polish_max_passes < 1:
            raise ValidationError("polish_max_passes must be positive")


@dataclass(frozen=True)
class ResolvedSchedule:
    """The concrete annealing ladder a map was produced with."""

    n_dim: int
    initial_temperature: float
    cooling_factor: float
    steps_per_temperature: int
    min_temperature: float
    n_levels: int
    proposal_scale: float
    polish_step0: float

    def as_dict(self) -> dict:
        return {
            "n_dim": self.n_dim,
            "initial_temperature": self.initial_temperature,
            "cooling_factor": self.cooling_factor,
            "steps_per_temperature": self.steps_per_temperature,
            "min_temperature": self.min_temperature,
            "n_levels": self.n_levels,
            "proposal_scale": self.proposal_scale,
            "polish_step0": self.polish_step0,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ResolvedSchedule":
        try:
            return cls(**{k: doc[k] for k in (
                "n_dim", "initial_temperature", "cooling_factor",
                "steps_per_temperature", "min_temperature", "n_levels",
                "proposal_scale", "polish_step0")})
        except KeyError as exc:
            raise ValidationError(f"malformed schedule document: {exc}") from exc


@dataclass(frozen=True)
class EmbeddingMap:
    """Final coordinates of one embedding run.

    ``stress`` is the unpenalized squared-error stress of the stored
    coordinates. ``final_cost`` is the objective the run actually
    minimized, penalty included; with no warm start the two agree up to
    centering round-off. Coordinates are centered on the origin.
    """

    symbols: tuple[str, ...]
    coords: np.ndarray
    stress: float
    final_cost: float
    penalty_weight: float
    seed: int
    accepted_moves: int
    schedule: ResolvedSchedule

    def __post_init__(self) -> None:
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        if coords.shape != (len(self.symbols), self.schedule.n_dim):
            raise ValidationError(
                f"coords shape {coords.shape}, expected "
                f"({len(self.symbols)}, {self.schedule.n_dim})"
            )
        coords.setflags(write=False)
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "coords", coords)

    @property
    def n_assets(self) -> int:
        return len(self.symbols)


def to_distance(corr: CorrelationMatrix) -> DistanceMatrix:
    """Map correlations to distances through d = sqrt(2 * (1 - rho))."""
    return DistanceMatrix.from_correlation(corr)


def _mean_offdiag(values: np.ndarray) -> float:
    n = values.shape[0]
    iu = np.triu_indices(n, 1)
    return float(values[iu].mean()) if n > 1 else 0.0


def stress(coords: np.ndarray, dist: DistanceMatrix) -> float:
    """Squared-error stress of a coordinate set against target distances."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[0] != dist.n_assets:
        raise ValidationError(
            f"coords shape {coords.shape} for {dist.n_assets} assets"
        )
    return float(kernels.pair_cost(coords, dist.values, coords, 0.0))


def mds_embed(dist: DistanceMatrix,
              schedule: AnnealingSchedule | None = None,
              init: "EmbeddingMap | np.ndarray | None" = None,
              penalty_weight: float = 0.0,
              seed: int = 0,
              n_dim: int = 2) -> EmbeddingMap:
    """Anneal a map for one distance matrix.

    With ``init`` the run starts from those coordinates instead of from
    random ones, anneals from a reduced default temperature so the map
    is refined rather than redrawn, and ``penalty_weight`` ties it to
    that anchor. The anchor stays a candidate: unless the run finds a
    configuration that beats it by a numerically meaningful margin, the
    anchor comes back unchanged. Equal seeds give equal maps.
    """
    if schedule is None:
        schedule = AnnealingSchedule()
    if penalty_weight < 0:
        raise ValidationError(f"penalty weight must be >= 0, got {penalty_weight}")
    if n_dim < 1:
        raise ValidationError(f"need at least one dimension, got {n_dim}")
    d = dist.values
    n = dist.n_assets
    if n < 2:
        raise ValidationError("need at least two assets to embed")
    d_mean = _mean_offdiag(d)
    rng = np.random.default_rng(seed)
    if init is None:
        spread = d_mean / 2.0 if d_mean > 0.0 else 1.0
        start = rng.standard_normal((n, n_dim)) * spread
        warm = False
    else:
        coords_in = init.coords if isinstance(init, EmbeddingMap) else init
        if isinstance(init, EmbeddingMap) and init.symbols != dist.symbols:
            raise ValidationError("warm-start map covers different symbols")
        start = np.array(coords_in, dtype=np.float64, order="C", copy=True)
        if start.shape != (n, n_dim):
            raise ValidationError(
                f"init coords shape {start.shape}, expected ({n}, {n_dim})"
            )
        warm = True
    anchor = start.copy()
    w = float(penalty_weight)
    cost0 = float(kernels.pair_cost(start, d, anchor, w))
    t0 = schedule.initial_temperature
    if t0 is None:
        t0 = cost0 / n
        if warm:
            t0 *= WARM_T0_FACTOR
    steps = schedule.steps_per_temperature
    if steps is None:
        steps = 100 * n
    min_t = schedule.min_temperature
    if min_t is None:
        min_t = 1e-6 * t0
    temperatures = []
    t = t0
    while t >= min_t and t > 0.0:
        temperatures.append(t)
        t *= schedule.cooling_factor
    if schedule.proposal_scale is not None and t0 > 0.0:
        scale_factor = schedule.proposal_scale / math.sqrt(t0)
    else:
        scale_factor = 1.0
    coords = start.copy()
    cost = cost0
    best = start.copy()
    best_cost = cost0
    accepted_total = 0
    for t in temperatures:
        scale = scale_factor * math.sqrt(t)
        idx = rng.integers(0, n, size=steps)
        moves = rng.standard_normal((steps, n_dim))
        us = rng.random(steps)
        cost, accepted = kernels.anneal_level(coords, d, anchor, w, t, scale,
                                              idx, moves, us, cost)
        accepted_total += int(accepted)
        # re-anchor the incrementally tracked cost before comparing
        cost = float(kernels.pair_cost(coords, d, anchor, w))
        if cost < best_cost:
            best_cost = cost
            best = coords.copy()
    step0 = schedule.polish_step0
    if step0 is None:
        step0 = d_mean / 10.0
    final = best
    final_cost = best_cost
    if step0 > 0.0:
        polished = best.copy()
        pcost = float(kernels.pattern_polish(
            polished, d, anchor, w, step0, schedule.polish_shrink,
            step0 * schedule.polish_min_step_factor, schedule.polish_max_passes))
        if pcost < best_cost:
            final = polished
            final_cost = pcost
    if warm and final_cost >= cost0 - IMPROVEMENT_EPS * (1.0 + abs(cost0)):
        final = anchor
        final_cost = cost0
    # keep the coordinates bit-stable when they are already centered, so
    # a no-improvement warm start reproduces its anchor exactly
    shift = final.mean(axis=0)
    if np.abs(shift).max() > CENTER_EPS:
        final = final - shift
    final_stress = float(kernels.pair_cost(final, d, final, 0.0))
    resolved = ResolvedSchedule(
        n_dim=n_dim, initial_temperature=float(t0),
        cooling_factor=schedule.cooling_factor,
        steps_per_temperature=int(steps), min_temperature=float(min_t),
        n_levels=len(temperatures),
        proposal_scale=float(scale_factor * math.sqrt(t0)) if t0 > 0.0 else 0.0,
        polish_step0=float(step0),
    )
    return EmbeddingMap(dist.symbols, final, final_stress, final_cost, w,
                        int(seed), accepted_total, resolved)


def center(emap: EmbeddingMap) -> EmbeddingMap:
    """Translate a map's centroid to the origin; no-op when it already is."""
    shift = emap.coords.mean(axis=0)
    if np.abs(shift).max() <= CENTER_EPS:
        return emap
    return EmbeddingMap(emap.symbols, emap.coords - shift, emap.stress,
                        emap.final_cost, emap.penalty_weight, emap.seed,
                        emap.accepted_moves, emap.schedule)


def mean_distance_from_center(emap: EmbeddingMap) -> float:
    """Average Euclidean point norm, a scalar spread measure of the map."""
    return float(np.sqrt((emap.coords ** 2).sum(axis=1)).mean())


def procrustes_rotation(coords: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Orthogonal matrix (rotation or reflection) mapping coords onto
    the reference in the least-squares sense. Both inputs should already
    be centered; scaling is never applied.
    """
    coords = np.asarray(coords, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if coords.shape != reference.shape:
        raise ValidationError(
            f"cannot align shape {coords.shape} to {reference.shape}"
        )
    u, _, vt = np.linalg.svd(coords.T @ reference)
    return u @ vt


def align_coords(coords: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rigidly align coordinates to a reference configuration."""
    return np.asarray(coords, dtype=np.float64) @ procrustes_rotation(coords, reference)


def _aligned_map(emap: EmbeddingMap, reference: np.ndarray,
                 dist: DistanceMatrix) -> EmbeddingMap:
    coords = np.ascontiguousarray(align_coords(emap.coords, reference))
    new_stress = float(kernels.pair_cost(coords, dist.values, coords, 0.0))
    return EmbeddingMap(emap.symbols, coords, new_stress, emap.final_cost,
                        emap.penalty_weight, emap.seed, emap.accepted_moves,
                        emap.schedule)


def chain_embed(distances: Sequence[DistanceMatrix],
                schedule: AnnealingSchedule | None = None,
                penalty_weight: float | None = None,
                seed: int = 0,
                n_dim: int = 2,
                align: bool = True) -> list[EmbeddingMap]:
    """Embed a sequence of distance matrices with warm-started steps.

    The first map starts cold; every later one starts from its
    predecessor's coordinates. ``penalty_weight`` applies to every warm
    step; when ``None`` each step uses 0.01 times the mean squared
    target distance of its own matrix. Each step reuses the same seed,
    and with ``align`` every map is rigidly rotated onto its
    predecessor, except when it already equals it. All matrices must
    cover the same symbols, in order.
    """
    if not distances:
        raise ValidationError("need at least one distance matrix")
    if penalty_weight is not None and penalty_weight < 0:
        raise ValidationError(f"penalty weight must be >= 0, got {penalty_weight}")
    symbols = distances[0].symbols
    for m in distances[1:]:
        if m.symbols != symbols:
            raise ValidationError("chain matrices cover different symbols")
    maps: list[EmbeddingMap] = []
    for dist in distances:
        if not maps:
            maps.append(mds_embed(dist, schedule, seed=seed, n_dim=n_dim))
            continue
        prev = maps[-1]
        if penalty_weight is None:
            iu = np.triu_indices(dist.n_assets, 1)
            w = 0.01 * float((dist.values[iu] ** 2).mean())
        else:
            w = float(penalty_weight)
        emap = mds_embed(dist, schedule, init=prev.coords, penalty_weight=w,
                         seed=seed, n_dim=n_dim)
        if align and not np.array_equal(emap.coords, prev.coords):
            emap = _aligned_map(emap, prev.coords, dist)
        maps.append(emap)
    return maps


def average_coords_across_days(maps: Sequence[EmbeddingMap],
                               dist: DistanceMatrix | None = None) -> EmbeddingMap:
    """Mean of aligned per-day maps, point by point, re-centered.

    Later maps are rigidly aligned to the first before averaging, so
    arbitrary rotations between days do not wash the average out. The
    stress field is evaluated against ``dist`` when given and NaN
    otherwise, since the averaged coordinates belong to no single day's
    matrix.
    """
    if not maps:
        raise ValidationError("need at least one map to average")
    first = maps[0]
    for m in maps[1:]:
        if m.symbols != first.symbols:
            raise ValidationError("maps to average must share symbols")
        if m.coords.shape != first.coords.shape:
            raise ValidationError("maps to average must share dimensions")
    total = np.array(first.coords, copy=True)
    for m in maps[1:]:
        total += align_coords(m.coords, first.coords)
    mean = total / len(maps)
    mean = mean - mean.mean(axis=0)
    if dist is not None:
        if dist.symbols != first.symbols:
            raise ValidationError("distance matrix covers different symbols")
        avg_stress = float(kernels.pair_cost(
            np.ascontiguousarray(mean), dist.values,
            np.ascontiguousarray(mean), 0.0))
    else:
        avg_stress = float("nan")
    return EmbeddingMap(first.symbols, mean, avg_stress, avg_stress, 0.0,
                        first.seed, 0, first.schedule)


def average_correlations_across_days(
        matrices: Sequence[CorrelationMatrix]) -> CorrelationMatrix:
    """Elementwise NaN-aware mean of per-day correlation matrices."""
    return average_correlations(matrices)


def write_map_csv(path, emap: EmbeddingMap, comments: Iterable[str] = ()) -> None:
    """Write one coordinate row per symbol, axes named x, y, z, c3, ..."""
    names = _axis_names(emap.coords.shape[1])
    rows = (
        [sym] + [repr(float(v)) for v in emap.coords[i]]
        for i, sym in enumerate(emap.symbols)
    )
    _write_csv(path, comments, ["symbol", *names], rows)


def read_map_coords(path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read a coordinate file back as (symbols, coords)."""
    _, header, rows = _read_csv(path)
    n_dim = len(header) - 1
    if n_dim < 1:
        raise ValidationError(f"{path}: no coordinate columns")
    symbols = []
    coords = []
    for row in rows:
        if len(row) != n_dim + 1:
            raise ValidationError(f"{path}: ragged row {row[0]!r}")
        symbols.append(row[0].strip())
        coords.append([float(v) for v in row[1:]])
    return tuple(symbols), np.array(coords, dtype=np.float64)


def map_to_json(emap: EmbeddingMap, provenance: dict | None = None) -> str:
    """Serialize a map with its coordinates, stress, seed and schedule."""
    doc = {
        "symbols": list(emap.symbols),
        "coords": [v for row in emap.coords.tolist() for v in row],
        "stress": None if math.isnan(emap.stress) else emap.stress,
        "final_cost": None if math.isnan(emap.final_cost) else emap.final_cost,
        "penalty_weight": emap.penalty_weight,
        "seed": emap.seed,
        "accepted_moves": emap.accepted_moves,
        "schedule": emap.schedule.as_dict(),
    }
    if provenance is not None:
        doc["provenance"] = provenance
    return json.dumps(doc, indent=1, sort_keys=True)


def map_from_json(text: str) -> EmbeddingMap:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed map document: {exc}") from exc
    try:
        schedule = ResolvedSchedule.from_dict(doc["schedule"])
        symbols = tuple(doc["symbols"])
        coords = np.array(doc["coords"], dtype=np.float64)
        coords = coords.reshape((len(symbols), schedule.n_dim))
        def _num(v):
            return float("nan") if v is None else float(v)
        return EmbeddingMap(symbols, coords, _num(doc["stress"]),
                            _num(doc["final_cost"]), doc["penalty_weight"],
                            doc["seed"], doc["accepted_moves"], schedule)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed map document: {exc}") from exc
