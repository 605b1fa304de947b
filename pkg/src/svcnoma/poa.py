"""Polyblock outer approximation for monotonic maximization.

Maximizes a nondecreasing objective over ``G & H`` where ``G`` is a normal
(downward-closed) set known only through a membership oracle and ``H`` is
the conormal box ``{y : y >= h}``. The feasible set is enclosed in a
polyblock, the union of boxes ``[0, z]`` over a finite vertex set, which is
tightened around the boundary of ``G`` one projection at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Polyblock",
    "SolverConfig",
    "IterationRecord",
    "SolveOutcome",
    "project_to_boundary",
    "select_best_vertex",
    "expand_vertex_set",
    "prune",
    "solve",
]

Oracle = Callable[[np.ndarray], bool]
Objective = Callable[[np.ndarray], float]

# halvings tried while bracketing the exit point of a ray; 2**-64 is below any useful SINR
_MAX_BRACKET = 64


class Polyblock:
    """Finite vertex set of a polyblock, one vertex per row."""

    def __init__(self, vertices, dim: Optional[int] = None):
        v = np.asarray(vertices, dtype=float)
        if v.size == 0:
            if dim is None:
                dim = v.shape[-1] if v.ndim == 2 else 0
            v = np.empty((0, dim))
        else:
            v = np.atleast_2d(v)
        self.vertices = v

    def __len__(self):
        return self.vertices.shape[0]

    def __iter__(self):
        return iter(self.vertices)

    def __repr__(self):
        return f"Polyblock({self.vertices.tolist()!r})"

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def dominates(self, point) -> bool:
        """True if ``point`` lies in the polyblock, i.e. under some vertex."""
        if len(self) == 0:
            return False
        return bool(np.any(np.all(self.vertices >= np.asarray(point), axis=1)))

    def is_proper(self) -> bool:
        return not np.any(_dominated_mask(self.vertices))

    def as_set(self) -> set:
        return {tuple(v) for v in self.vertices}


@dataclass(frozen=True)
class SolverConfig:
    """Termination and resource limits.

    ``delta`` is compared against the l-inf distance between the selected
    vertex and the incumbent, each coordinate divided by the matching
    coordinate of the initial vertex. ``eps_proj`` defaults to ``delta/10``.
    The run also stops once the best vertex value exceeds the incumbent by
    at most ``value_tol * |incumbent|``; the default 0 stops only when no
    vertex can beat the incumbent.
    """

    delta: float = 1e-3
    eps_proj: Optional[float] = None
    max_iter: int = 10_000
    max_vertices: int = 200_000
    value_tol: float = 0.0

    def __post_init__(self):
        if self.eps_proj is None:
            object.__setattr__(self, "eps_proj", self.delta / 10.0)
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.eps_proj > 0:
            raise ValueError(f"eps_proj must be positive, got {self.eps_proj}")
        if self.eps_proj > self.delta / 10.0 * (1 + 1e-12):
            raise ValueError("eps_proj must not exceed delta / 10")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.value_tol >= 0:
            raise ValueError(f"value_tol must be nonnegative, got {self.value_tol}")
        if self.max_vertices < 1:
            raise ValueError(f"max_vertices must be >= 1, got {self.max_vertices}")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    upper_bound: float
    best_value: float
    gap: float
    num_vertices: int


@dataclass
class SolveOutcome:
    """Result of :func:`solve`.

    ``status`` is one of ``converged``, ``iteration_cap``, ``vertex_cap`` or
    ``infeasible``. For a converged run ``criterion`` says which test
    stopped it: ``gap`` (normalized distance within ``delta``), ``bound``
    (no vertex can beat the incumbent), ``feasible_vertex`` (the selected
    vertex is itself feasible, hence optimal) or ``level_floor`` (a feasible
    point attaining the upper bound was found under the selected vertex).
    """

    best_point: Optional[np.ndarray]
    best_value: float
    status: str
    criterion: Optional[str]
    iterations: int
    trace: list = field(default_factory=list)

    @property
    def gap_trace(self) -> list:
        return [r.gap for r in self.trace]

    @property
    def upper_trace(self) -> list:
        return [r.upper_bound for r in self.trace]

    @property
    def cbv_trace(self) -> list:
        return [r.best_value for r in self.trace]

    @property
    def final_gap(self) -> float:
        return self.trace[-1].gap if self.trace else math.inf

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def _project(z: np.ndarray, g_oracle: Oracle, eps_proj: float) -> tuple[np.ndarray, float, float]:
    """Bisection on the ray scale; returns ``(lo * z, lo, hi)`` with ``lo * z`` in
    ``G`` and ``hi * z`` outside it (``hi == lo == 1`` when ``z`` is a member)."""
    if g_oracle(z):
        return z.copy(), 1.0, 1.0
    # bracket the exit scale in [a, 2a] first so the bisection error is relative to lambda
    hi = 1.0
    for _ in range(_MAX_BRACKET):
        lo = hi / 2.0
        if g_oracle(lo * z):
            break
        hi = lo
    else:
        return np.zeros_like(z), 0.0, hi
    for _ in range(math.ceil(math.log2(1.0 / eps_proj)) + 2):
        mid = 0.5 * (lo + hi)
        if g_oracle(mid * z):
            lo = mid
        else:
            hi = mid
    return lo * z, lo, hi


def project_to_boundary(z, g_oracle: Oracle, eps_proj: float) -> np.ndarray:
    """Point where the segment from the origin to ``z`` leaves ``G``.

    Returns ``lam * z`` with ``lam`` the largest scale keeping the point in
    ``G`` (``z`` itself when it is already a member). The result is in
    ``G`` while ``(lam + eps_proj) * z`` and ``lam * (1 + eps_proj) * z``
    are not. Requires ``G`` normal and ``0 in G``.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("projection needs a nonnegative point")
    if not np.any(z > 0):
        raise ValueError("cannot project the origin")
    return _project(z, g_oracle, eps_proj)[0]


def _best_index(vertices: np.ndarray, values: np.ndarray) -> int:
    # objective, then larger coordinate sum, then lexicographically largest
    top = np.flatnonzero(values == values.max())
    if top.size == 1:
        return int(top[0])
    sums = vertices[top].sum(axis=1)
    top = top[sums == sums.max()]
    if top.size == 1:
        return int(top[0])
    order = np.lexsort(vertices[top].T[::-1])
    return int(top[order[-1]])


def select_best_vertex(T, objective: Objective) -> np.ndarray:
    """Vertex with the largest objective value, ties broken deterministically.

    Raises ``LookupError`` on an empty vertex set, which signals that the
    feasible set is empty.
    """
    V = T.vertices if isinstance(T, Polyblock) else np.atleast_2d(np.asarray(T, dtype=float))
    if V.shape[0] == 0 or V.size == 0:
        raise LookupError("empty vertex set")
    values = np.array([objective(v) for v in V], dtype=float)
    return V[_best_index(V, values)].copy()


def _dominated_mask(V: np.ndarray, against: Optional[np.ndarray] = None) -> np.ndarray:
    """Rows of ``V`` dominated by another row of ``V`` or by any row of ``against``.

    Of several identical rows the first is kept.
    """
    n = V.shape[0]
    out = np.zeros(n, dtype=bool)
    if n == 0:
        return out
    if against is not None and against.shape[0]:
        step = _block_rows(against.shape[0], V.shape[1])
        for start in range(0, n, step):
            block = V[start:start + step]
            out[start:start + step] = np.any(
                np.all(against[None, :, :] >= block[:, None, :], axis=2), axis=1
            )
    idx = np.arange(n)
    step = _block_rows(n, V.shape[1])
    for start in range(0, n, step):
        block = V[start:start + step]
        ge = np.all(V[None, :, :] >= block[:, None, :], axis=2)  # ge[j, k]: V[k] >= block[j]
        le = np.all(V[None, :, :] <= block[:, None, :], axis=2)
        eq = ge & le
        rows = idx[start:start + step, None]
        strict = ge & ~eq
        earlier_dup = eq & (idx[None, :] < rows)
        out[start:start + step] |= np.any(strict | earlier_dup, axis=1)
    return out


def _block_rows(n_other: int, dim: int) -> int:
    # keeps each broadcast comparison around a few million booleans
    return max(1, 4_000_000 // max(1, n_other * dim))


def _split(V: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Remove the vertices whose box meets the open cone above ``x``.

    That is every vertex strictly above ``x`` in each coordinate, except that
    coordinates where both are zero may tie (the box is flat there). Each
    removed vertex ``z`` is replaced by ``z + (x_i - z_i) e_i`` for every
    coordinate with ``z_i > x_i``; children dominated by a surviving vertex
    or by another child are dropped. Returns the removal mask and children.
    """
    removed = np.all((V > x) | ((V == 0) & (x == 0)), axis=1) & np.any(V > x, axis=1)
    return removed, _children(V, removed, x)


def _level_cut(V: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Remove the closed cone ``{y >= w}``: vertices above ``w`` get children
    whose coordinate ``i`` sits one float below ``w_i``. Coordinates with
    ``w_i == 0`` cannot be cut below and get no children."""
    removed = np.all(V >= w, axis=1)
    below = np.where(w > 0, np.nextafter(w, 0.0), -1.0)
    return removed, _children(V, removed, below)


def _children(V: np.ndarray, removed: np.ndarray, x: np.ndarray) -> np.ndarray:
    parents = V[removed]
    if parents.shape[0] == 0:
        return np.empty((0, V.shape[1]))
    rest = V[~removed]
    children = []
    for i in range(V.shape[1]):
        step = parents[:, i] > x[i]
        if x[i] < 0 or not np.any(step):
            continue
        c = parents[step].copy()
        c[:, i] = x[i]
        # A child lowered in coordinate i keeps z_j > x_j elsewhere, so only
        # children of the same coordinate, or survivors with v_i == x_i, can
        # dominate it.
        keep = ~_dominated_mask(c, against=rest[rest[:, i] == x[i]])
        children.append(c[keep])
    if not children:
        return np.empty((0, V.shape[1]))
    return np.concatenate(children)


def expand_vertex_set(T, z_best, x_proj) -> Polyblock:
    """Cut the open cone ``{y : y > x_proj}`` out of the polyblock.

    Vertices strictly above ``x_proj`` are replaced by their children
    ``z + (x_i - z_i) e_i``. A vertex that ties ``x_proj`` in a positive
    coordinate is left alone: its box does not meet the cone, and splitting
    it would discard points that need not be infeasible.
    """
    V = T.vertices if isinstance(T, Polyblock) else np.atleast_2d(np.asarray(T, dtype=float))
    x = np.asarray(x_proj, dtype=float)
    z = np.asarray(z_best, dtype=float)
    if not np.all(x <= z) or np.array_equal(x, z):
        raise ValueError("x_proj must be dominated by z_best and differ from it")
    removed, children = _split(V, x)
    return Polyblock(np.concatenate([V[~removed], children]), dim=V.shape[1])


def prune(T, h_lower_bounds) -> Polyblock:
    """Drop improper vertices and vertices below the lower bounds ``h``."""
    V = T.vertices if isinstance(T, Polyblock) else np.atleast_2d(np.asarray(T, dtype=float))
    h = np.asarray(h_lower_bounds, dtype=float)
    if V.shape[0] == 0:
        return Polyblock(V, dim=h.size)
    V = V[np.all(V >= h, axis=1)]
    V = V[~_dominated_mask(V)]
    return Polyblock(V, dim=h.size)


def solve(
    g_oracle: Oracle,
    h_bounds,
    objective: Objective,
    initial_vertex,
    config: SolverConfig = SolverConfig(),
    callback: Optional[Callable[[int, Polyblock, np.ndarray, np.ndarray], None]] = None,
    level_floor: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> SolveOutcome:
    """Maximize a nondecreasing ``objective`` over ``{y in G : y >= h_bounds}``.

    Parameters
    ----------
    g_oracle:
        Membership test of the normal set ``G``; must hold at the origin.
    h_bounds:
        Componentwise lower bounds defining ``H``.
    objective:
        Nondecreasing function of a point.
    initial_vertex:
        A point dominating every feasible point; the first polyblock is
        the box below it.
    config:
        Termination settings, see :class:`SolverConfig`.
    callback:
        Called after each cut as ``callback(k, polyblock, z_k, x_k)``.
    level_floor:
        For piecewise-constant objectives: maps ``z`` to the least point
        ``w <= z`` with ``objective(w) == objective(z)``. When the floor of
        the selected vertex is feasible it attains the upper bound and the
        run stops there. When it is in ``H`` but not in ``G``, no point of
        ``[w, z]`` is feasible and the cone ``{y >= w}`` is cut away as well.
        The distance test is then disabled: a vertex can sit within
        ``delta`` of the incumbent and still be one step of the objective
        higher, so only exact tests end the run.

    Returns
    -------
    SolveOutcome
        Incumbent point and value with the per-iteration trace. The incumbent
        is only updated by points in ``G & H`` whose value is at least the
        current one, so later ties replace earlier ones.
    """
    h = np.asarray(h_bounds, dtype=float)
    z0 = np.asarray(initial_vertex, dtype=float)
    if z0.shape != h.shape:
        raise ValueError("initial vertex and bounds differ in shape")
    if not np.all(z0 >= h):
        return SolveOutcome(None, -math.inf, "infeasible", None, 0)

    scale = np.where(z0 > 0, z0, 1.0)
    V = z0[None, :].copy()
    values = np.array([objective(z0)], dtype=float)
    best_point: Optional[np.ndarray] = None
    best_value = -math.inf
    trace: list[IterationRecord] = []
    status, criterion = "iteration_cap", None

    k = 0
    while k < config.max_iter:
        if V.shape[0] == 0:
            status = "converged" if best_point is not None else "infeasible"
            criterion = "bound" if best_point is not None else None
            break
        k += 1
        idx = _best_index(V, values)
        z = V[idx].copy()
        upper = float(values[idx])

        if best_point is not None and upper - best_value <= config.value_tol * abs(best_value):
            trace.append(IterationRecord(k, upper, best_value, _gap(z, best_point, scale), len(V)))
            status, criterion = "converged", "bound"
            break

        w = None
        if level_floor is not None:
            w = np.asarray(level_floor(z), dtype=float)
            if not np.all(w >= h):
                w = None
            elif g_oracle(w):
                best_point, best_value = w, float(objective(w))
                trace.append(IterationRecord(k, upper, best_value, _gap(z, w, scale), len(V)))
                status, criterion = "converged", "level_floor"
                break

        x, lam, lam_out = _project(z, g_oracle, config.eps_proj)
        if lam == 1.0:
            best_point, best_value = z, upper
            trace.append(IterationRecord(k, upper, best_value, 0.0, len(V)))
            status, criterion = "converged", "feasible_vertex"
            break

        if np.all(x >= h):
            qx = float(objective(x))
            if qx >= best_value:
                best_point, best_value = x, qx

        # cut at the first scale known to be infeasible so no feasible point is lost
        V, values = _apply_cut(V, values, _split(V, lam_out * z), h, objective)
        if w is not None:
            # [w, z] holds every point worth Q(z) under z; w is infeasible, so none is
            V, values = _apply_cut(V, values, _level_cut(V, w), h, objective)

        gap = _gap(z, best_point, scale)
        trace.append(IterationRecord(k, upper, best_value, gap, len(V)))
        if callback is not None:
            callback(k, Polyblock(V, dim=h.size), z, x)
        if level_floor is None and gap <= config.delta:
            status, criterion = "converged", "gap"
            break
        if len(V) > config.max_vertices:
            status = "vertex_cap"
            break

    if best_point is None:
        status, criterion = "infeasible", None
    return SolveOutcome(best_point, best_value, status, criterion, k, trace)


def _apply_cut(V, values, cut, h, objective):
    removed, children = cut
    if children.shape[0]:
        children = children[np.all(children >= h, axis=1)]
    child_values = np.array([objective(c) for c in children], dtype=float)
    return np.concatenate([V[~removed], children]), np.concatenate([values[~removed], child_values])


def _gap(z: np.ndarray, best: Optional[np.ndarray], scale: np.ndarray) -> float:
    if best is None:
        return math.inf
    return float(np.max(np.abs(z - best) / scale))
