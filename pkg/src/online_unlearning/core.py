"""Domain types for streamed convex losses with deletion requests.

Everything here is an immutable value object: points are read-only float64
arrays, cost functions freeze their coefficient arrays at construction, and
streams/schedules are tuples.  Mutating operations always return new objects,
so values can be shared freely between concurrent runs.

Time indices are 1-based throughout the public API (step ``t`` runs from 1 to
``T``); only raw array access converts to 0-based offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence, Tuple, Union

import numpy as np

from .errors import (
    InvalidInputError,
    InvalidScheduleError,
    UnsupportedCostError,
)

__all__ = [
    "BallDomain",
    "CostFn",
    "CostStream",
    "CustomCost",
    "DeletionSchedule",
    "FnClass",
    "QuadraticCost",
    "SKIP",
    "StreamItem",
    "as_point",
    "class_bound_lipschitz",
    "cost_value",
    "decode_vector",
    "encode_vector",
    "eval_grad",
    "is_skip",
    "project",
    "retained",
]

_VECTOR_FMT = "%.17g"


def as_point(x: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Validate and freeze a parameter vector.

    Returns a read-only float64 copy.  Raises ``InvalidInputError`` on
    non-finite coordinates, empty vectors, or a dimension mismatch.
    """
    arr = np.array(x, dtype=np.float64, copy=True)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidInputError(f"expected a 1-d vector with d >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("vector has non-finite coordinates")
    if dim is not None and arr.size != dim:
        raise InvalidInputError(f"expected dimension {dim}, got {arr.size}")
    arr.flags.writeable = False
    return arr


def encode_vector(x: np.ndarray) -> str:
    """Serialize a vector as semicolon-joined decimals (17 significant digits).

    17 significant digits round-trip 64-bit floats exactly.
    """
    return ";".join(_VECTOR_FMT % v for v in np.asarray(x, dtype=np.float64))


def decode_vector(text: str) -> np.ndarray:
    return as_point([float(part) for part in text.split(";")])


@dataclass(frozen=True)
class BallDomain:
    """Centered Euclidean ball of the given radius; diameter is ``2 * radius``."""

    radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise InvalidInputError(f"ball radius must be positive and finite, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return float(np.linalg.norm(x)) <= self.radius + tol

    def project(self, x: np.ndarray) -> np.ndarray:
        return project(x, self)


def project(x: np.ndarray, dom: BallDomain) -> np.ndarray:
    """Euclidean projection onto the ball: rescale iff the norm exceeds the radius."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("cannot project a non-finite vector")
    norm = float(np.linalg.norm(arr))
    if norm <= dom.radius:
        return arr
    out = arr * (dom.radius / norm)
    # Rounding can leave the rescaled point an ulp outside; nudge it in so
    # projection is exactly idempotent.
    norm = float(np.linalg.norm(out))
    while norm > dom.radius:
        out = out * (dom.radius / norm)
        norm = float(np.linalg.norm(out))
    return out


@dataclass(frozen=True)
class FnClass:
    """Certified class constants of a loss family.

    ``lipschitz`` bounds the gradient norm over the domain, ``smoothness`` is
    the largest curvature (beta), and ``strong_convexity`` the smallest (mu;
    zero for merely convex losses).
    """

    lipschitz: float
    smoothness: float
    strong_convexity: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.strong_convexity <= self.smoothness):
            raise InvalidInputError(
                f"need 0 <= mu <= beta, got mu={self.strong_convexity}, beta={self.smoothness}"
            )
        if not (math.isfinite(self.lipschitz) and math.isfinite(self.smoothness)):
            raise InvalidInputError("class constants must be finite")
        if self.lipschitz < 0.0:
            raise InvalidInputError("Lipschitz constant must be nonnegative")

    @property
    def condition_ratio(self) -> float:
        """beta/mu, or inf when the class is not strongly convex."""
        if self.strong_convexity == 0.0:
            return math.inf
        return self.smoothness / self.strong_convexity


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    """Loss ``f(z) = 0.5 (z - center)^T matrix (z - center) + offset``.

    ``matrix`` must be symmetric PSD; ``offset >= 0`` keeps losses nonnegative.
    """

    matrix: np.ndarray
    center: np.ndarray
    offset: float = 0.0

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidInputError(f"curvature matrix must be square, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise InvalidInputError("curvature matrix has non-finite entries")
        asym = float(np.max(np.abs(mat - mat.T))) if mat.size else 0.0
        scale = max(1.0, float(np.max(np.abs(mat)))) if mat.size else 1.0
        if asym > 1e-10 * scale:
            raise InvalidInputError("curvature matrix must be symmetric")
        center = as_point(self.center, dim=mat.shape[0])
        if not (math.isfinite(self.offset) and self.offset >= 0.0):
            raise InvalidInputError(f"offset must be nonnegative, got {self.offset}")
        object.__setattr__(self, "matrix", _freeze(mat))
        object.__setattr__(self, "center", center)

    @property
    def dim(self) -> int:
        return self.center.size

    def value(self, z: np.ndarray) -> float:
        diff = np.asarray(z, dtype=np.float64) - self.center
        return 0.5 * float(diff @ (self.matrix @ diff)) + self.offset

    def gradient(self, z: np.ndarray) -> np.ndarray:
        diff = np.asarray(z, dtype=np.float64) - self.center
        return self.matrix @ diff

    def hessian(self, z: np.ndarray | None = None) -> np.ndarray:
        return self.matrix


@dataclass(frozen=True, eq=False)
class CustomCost:
    """Opaque convex loss given by an evaluator ``z -> (value, gradient)``.

    Custom costs run through every simulator but receive no closed-form
    certification oracle; the caller must supply class constants.
    """

    evaluator: Callable[[np.ndarray], Tuple[float, np.ndarray]]
    name: str = "custom"


class _Skip:
    """Deleted-slot marker: the learner holds its output and ignores the slot."""

    _instance: "_Skip | None" = None

    def __new__(cls) -> "_Skip":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "SKIP"


SKIP = _Skip()

CostFn = Union[QuadraticCost, CustomCost]
StreamItem = Union[QuadraticCost, CustomCost, _Skip]


def is_skip(item: StreamItem) -> bool:
    return item is SKIP


def eval_grad(f: CostFn, z: np.ndarray) -> Tuple[float, np.ndarray]:
    """Evaluate a cost and its gradient at ``z`` (caller projects first)."""
    if is_skip(f):
        raise InvalidInputError("cannot evaluate the skip marker")
    if isinstance(f, QuadraticCost):
        z_arr = np.asarray(z, dtype=np.float64)
        if z_arr.shape != f.center.shape:
            raise InvalidInputError(
                f"dimension mismatch: point has shape {z_arr.shape}, cost expects {f.center.shape}"
            )
        diff = z_arr - f.center
        grad = f.matrix @ diff
        return 0.5 * float(diff @ grad) + f.offset, grad
    value, grad = f.evaluator(np.asarray(z, dtype=np.float64))
    return float(value), np.asarray(grad, dtype=np.float64)


def cost_value(f: CostFn, z: np.ndarray) -> float:
    """Evaluate a cost without forming its gradient."""
    if isinstance(f, QuadraticCost):
        return f.value(z)
    return float(f.evaluator(np.asarray(z, dtype=np.float64))[0])


def class_bound_lipschitz(f: CostFn, dom: BallDomain) -> float:
    """Certified gradient-norm bound for a quadratic over the ball.

    ``sup_{z in K} ||A (z - c)|| <= lambda_max(A) * (R + ||c||)``.
    """
    if not isinstance(f, QuadraticCost):
        raise UnsupportedCostError("Lipschitz bound is only computed for quadratics; supply one")
    lam_max = float(np.linalg.eigvalsh(f.matrix)[-1])
    return lam_max * (dom.radius + float(np.linalg.norm(f.center)))


@dataclass(frozen=True)
class CostStream:
    """Ordered losses (or SKIP markers) revealed one per time step."""

    items: Tuple[StreamItem, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[StreamItem]:
        return iter(self.items)

    def item_at(self, t: int) -> StreamItem:
        """Item revealed at 1-based time ``t``."""
        if not 1 <= t <= len(self.items):
            raise InvalidInputError(f"time {t} outside the horizon [1, {len(self.items)}]")
        return self.items[t - 1]

    def all_quadratic(self) -> bool:
        return all(is_skip(it) or isinstance(it, QuadraticCost) for it in self.items)


@dataclass(frozen=True)
class DeletionSchedule:
    """Deletion requests ``(u_i, tau_i)``: forget the loss at index ``u_i`` at time ``tau_i``.

    Requires ``u_i <= tau_i``, strictly increasing times, and distinct indices.
    """

    entries: Tuple[Tuple[int, int], ...]

    def __post_init__(self) -> None:
        entries = tuple((int(u), int(tau)) for u, tau in self.entries)
        seen_u = set()
        prev_tau = 0
        for u, tau in entries:
            if u < 1 or tau < 1:
                raise InvalidScheduleError(f"entries must use 1-based times, got ({u}, {tau})")
            if u > tau:
                raise InvalidScheduleError(f"deletion index {u} after its deletion time {tau}")
            if tau <= prev_tau:
                raise InvalidScheduleError("deletion times must be strictly increasing")
            if u in seen_u:
                raise InvalidScheduleError(f"deletion index {u} repeated")
            seen_u.add(u)
            prev_tau = tau
        object.__setattr__(self, "entries", entries)

    @property
    def k(self) -> int:
        return len(self.entries)

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(u for u, _ in self.entries)

    @property
    def times(self) -> Tuple[int, ...]:
        return tuple(tau for _, tau in self.entries)

    def prefix(self, i: int) -> "DeletionSchedule":
        """Schedule of the first ``i`` deletions."""
        if not 0 <= i <= self.k:
            raise InvalidScheduleError(f"prefix length {i} outside [0, {self.k}]")
        return DeletionSchedule(self.entries[:i])

    def validate_horizon(self, horizon: int) -> None:
        if self.k and self.times[-1] > horizon:
            raise InvalidScheduleError(
                f"deletion time {self.times[-1]} exceeds the horizon {horizon}"
            )


EMPTY_SCHEDULE = DeletionSchedule(())


def stack_quadratics(stream: CostStream) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stack an all-quadratic stream as (matrices, centers, offsets, live-mask).

    SKIP slots get zero rows and ``live[t-1] = False``.  Raises for opaque
    costs; callers needing them must loop.
    """
    probe = next((it for it in stream.items if not is_skip(it)), None)
    if probe is None:
        raise InvalidInputError("stream has no cost items")
    if not isinstance(probe, QuadraticCost) or not stream.all_quadratic():
        raise UnsupportedCostError("stacking requires an all-quadratic stream")
    horizon = len(stream)
    dim = probe.dim
    mats = np.zeros((horizon, dim, dim))
    centers = np.zeros((horizon, dim))
    offsets = np.zeros(horizon)
    live = np.zeros(horizon, dtype=bool)
    for t, item in enumerate(stream.items):
        if is_skip(item):
            continue
        mats[t] = item.matrix
        centers[t] = item.center
        offsets[t] = item.offset
        live[t] = True
    return mats, centers, offsets, live


def retained(stream: CostStream, schedule: DeletionSchedule, upto: int | None = None) -> CostStream:
    """Stream with the first ``upto`` deleted indices replaced by SKIP (all by default)."""
    count = schedule.k if upto is None else upto
    if not 0 <= count <= schedule.k:
        raise InvalidScheduleError(f"cannot retain {count} of {schedule.k} deletions")
    schedule.validate_horizon(len(stream))
    items = list(stream.items)
    for u in schedule.indices[:count]:
        if u > len(items):
            raise InvalidScheduleError(f"deleted index {u} beyond the stream length {len(items)}")
        items[u - 1] = SKIP
    return CostStream(tuple(items))
