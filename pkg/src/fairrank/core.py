"""Domain model for group-constrained ranking.

An instance is a fixed roster of individuals, each with a unique id, a group
index and a nonnegative relevance score.  A ranking is a bijection from
individuals onto positions ``1..n``.  A constraint set bounds, for every
prefix length and every group, how many members of the group may appear
(upper bounds) or must appear (lower bounds) in that prefix.  A value model
scores how well a ranking treats each individual relative to their merit
position.

All objects here are immutable after construction and safe to share across
threads; the module-level operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InfeasibleConstraints

__all__ = [
    "Individual",
    "Instance",
    "Ranking",
    "ValueModel",
    "ConstraintSet",
    "merit_ranking",
    "is_valid",
    "ceil_alpha_constraints",
    "floor_balanced_constraints",
    "build_rule_constraints",
    "to_upper_only",
    "is_feasible",
]


@dataclass(frozen=True)
class Individual:
    """One ranked element: unique id, group index, relevance score."""

    id: str
    group: int
    relevance: float


class Instance:
    """An ordered roster of individuals partitioned into groups.

    Group indices must cover ``0..n_groups-1`` with no empty group.  The
    merit order sorts by descending relevance with ties broken by ascending
    id, so it is a strict total order even when scores coincide.  That same
    tie rule is reused everywhere an ordering of individuals is needed.
    """

    __slots__ = (
        "individuals",
        "group_labels",
        "n",
        "n_groups",
        "ids",
        "relevance",
        "group_of",
        "group_sizes",
        "merit_order",
        "merit_position",
        "_index_of",
    )

    def __init__(
        self,
        individuals: Iterable[Individual],
        group_labels: Sequence[str] | None = None,
    ):
        individuals = tuple(individuals)
        if not individuals:
            raise ValueError("an instance needs at least one individual")
        ids = tuple(u.id for u in individuals)
        if len(set(ids)) != len(ids):
            raise ValueError("individual ids must be unique")
        relevance = np.array([u.relevance for u in individuals], dtype=float)
        if np.any(relevance < 0) or not np.all(np.isfinite(relevance)):
            raise ValueError("relevance scores must be finite and nonnegative")
        group_of = np.array([u.group for u in individuals], dtype=int)
        n_groups = int(group_of.max()) + 1 if len(group_of) else 0
        if group_of.min() < 0 or len(np.unique(group_of)) != n_groups:
            raise ValueError("group indices must cover 0..t-1 with no gaps")
        if group_labels is None:
            group_labels = tuple(str(g) for g in range(n_groups))
        else:
            group_labels = tuple(group_labels)
            if len(group_labels) != n_groups:
                raise ValueError("need exactly one label per group")

        self.individuals = individuals
        self.group_labels = group_labels
        self.n = len(individuals)
        self.n_groups = n_groups
        self.ids = ids
        self.relevance = relevance
        self.relevance.setflags(write=False)
        self.group_of = group_of
        self.group_of.setflags(write=False)
        self.group_sizes = np.bincount(group_of, minlength=n_groups)
        self.group_sizes.setflags(write=False)
        order = sorted(range(self.n), key=lambda i: (-relevance[i], ids[i]))
        self.merit_order = tuple(order)
        merit_position = np.empty(self.n, dtype=int)
        for rank, i in enumerate(order, start=1):
            merit_position[i] = rank
        merit_position.setflags(write=False)
        self.merit_position = merit_position
        self._index_of = {u: i for i, u in enumerate(ids)}

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, str, float]]) -> "Instance":
        """Build an instance from ``(id, group_label, score)`` triples.

        Group labels are mapped to indices in order of first appearance.
        """
        labels: list[str] = []
        label_index: dict[str, int] = {}
        individuals = []
        for id_, label, score in rows:
            if label not in label_index:
                label_index[label] = len(labels)
                labels.append(label)
            individuals.append(Individual(id_, label_index[label], float(score)))
        return cls(individuals, group_labels=labels)

    def index_of(self, id_: str) -> int:
        return self._index_of[id_]

    def group_index(self, label_or_index: str | int) -> int:
        """Resolve a group given either its label or its integer index."""
        if isinstance(label_or_index, str):
            try:
                return self.group_labels.index(label_or_index)
            except ValueError:
                raise ValueError(f"unknown group label {label_or_index!r}") from None
        g = int(label_or_index)
        if not 0 <= g < self.n_groups:
            raise ValueError(f"group index {g} out of range")
        return g

    def __repr__(self) -> str:
        return f"Instance(n={self.n}, groups={self.n_groups})"


class Ranking:
    """A bijection from individuals to positions ``1..n``.

    Stored as the tuple of individual indices in position order, so
    ``order[p-1]`` is the individual shown at position ``p``.
    """

    __slots__ = ("order", "position")

    def __init__(self, order: Iterable[int]):
        order = tuple(int(i) for i in order)
        n = len(order)
        position = [0] * n
        for p, i in enumerate(order, start=1):
            if not 0 <= i < n or position[i]:
                raise ValueError("ranking must be a permutation of 0..n-1")
            position[i] = p
        self.order = order
        self.position = tuple(position)

    @classmethod
    def from_ids(cls, instance: Instance, ids: Sequence[str]) -> "Ranking":
        return cls(instance.index_of(u) for u in ids)

    def position_of(self, index: int) -> int:
        return self.position[index]

    def ids(self, instance: Instance) -> tuple[str, ...]:
        return tuple(instance.ids[i] for i in self.order)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Ranking) and self.order == other.order

    def __hash__(self) -> int:
        return hash(self.order)

    def __repr__(self) -> str:
        return f"Ranking({list(self.order)})"


class ValueModel:
    """Scores ``value(r, u) = position_scores[r(u)] - merit_scores[u]``.

    ``position_scores`` must be nonincreasing in the position (strictly
    decreasing for the two graded presets); that monotonicity is what makes
    the weighted assignment problem greedy-solvable.  ``merit_scores`` is an
    individual-specific offset, normally the position score the individual
    would earn in the pure merit ranking, so the value measures gain or loss
    relative to merit.

    Presets:

    * ``position_diff``: score ``n - i`` at position ``i``; the value is the
      (signed) number of positions the individual moved up from merit.
    * ``log_ratio``: score ``ln(n / i)``; the value is the log of the ratio
      of merit position to assigned position.
    * ``top_k_selection``: score 1 inside the top ``k`` and 0 outside; the
      value is -1, 0 or +1 depending on crossing the top-``k`` boundary.
    """

    __slots__ = ("kind", "position_scores", "merit_scores", "k", "_f", "_g")

    def __init__(
        self,
        kind: str,
        position_scores: Sequence[float],
        merit_scores: Sequence[float],
        k: int | None = None,
    ):
        f = np.array([float(x) for x in position_scores])
        g = np.array([float(x) for x in merit_scores])
        if f.ndim != 1 or f.shape != g.shape:
            raise ValueError("position and merit score vectors must have equal length n")
        diffs = np.diff(f)
        if np.any(diffs > 0):
            raise ValueError("position scores must be nonincreasing")
        if kind in ("position-diff", "log-ratio") and np.any(diffs >= 0) and len(f) > 1:
            raise ValueError(f"{kind} requires strictly decreasing position scores")
        self.kind = kind
        self.position_scores = tuple(f.tolist())
        self.merit_scores = tuple(g.tolist())
        self.k = k
        f.setflags(write=False)
        g.setflags(write=False)
        self._f = f
        self._g = g

    @classmethod
    def position_diff(cls, instance: Instance) -> "ValueModel":
        n = instance.n
        f = [n - i for i in range(1, n + 1)]
        g = [n - p for p in instance.merit_position]
        return cls("position-diff", f, g)

    @classmethod
    def log_ratio(cls, instance: Instance) -> "ValueModel":
        n = instance.n
        f = [math.log(n / i) for i in range(1, n + 1)]
        g = [math.log(n / p) for p in instance.merit_position]
        return cls("log-ratio", f, g)

    @classmethod
    def top_k_selection(cls, instance: Instance, k: int) -> "ValueModel":
        n = instance.n
        if not 1 <= k <= n:
            raise ValueError("k must be between 1 and n")
        f = [1.0 if i <= k else 0.0 for i in range(1, n + 1)]
        g = [1.0 if p <= k else 0.0 for p in instance.merit_position]
        return cls("top-k", f, g, k=k)

    @classmethod
    def custom(
        cls, position_scores: Sequence[float], merit_scores: Sequence[float]
    ) -> "ValueModel":
        return cls("custom", position_scores, merit_scores)

    @property
    def n(self) -> int:
        return len(self.position_scores)

    @property
    def vmin(self) -> float:
        """Smallest attainable value (worst position, largest offset)."""
        return float(self._f[-1] - self._g.max())

    @property
    def vmax(self) -> float:
        """Largest attainable value (best position, smallest offset)."""
        return float(self._f[0] - self._g.min())

    @property
    def integer_valued(self) -> bool:
        return all(x.is_integer() for x in self.position_scores) and all(
            x.is_integer() for x in self.merit_scores
        )

    def value(self, ranking: Ranking, index: int) -> float:
        return float(self._f[ranking.position[index] - 1] - self._g[index])

    def values(self, ranking: Ranking) -> np.ndarray:
        """Per-individual values under ``ranking``, indexed by individual."""
        pos = np.fromiter(ranking.position, dtype=int, count=self.n)
        return self._f[pos - 1] - self._g

    def __repr__(self) -> str:
        return f"ValueModel(kind={self.kind!r}, n={self.n})"


def _clamped(rows: np.ndarray, n: int) -> np.ndarray:
    return np.clip(rows, 0, np.arange(1, n + 1))


def _normalize_upper(rows: np.ndarray, n: int) -> np.ndarray:
    """Tighten raw upper bounds to their monotone closure.

    A prefix count never decreases and grows by at most one per position, so
    ``u[i] ≤ min(u[i+1], u[i-1] + 1)`` is implied.  Applying the closure
    leaves the set of satisfying rankings unchanged.
    """
    rows = _clamped(rows, n)
    for i in range(n - 2, -1, -1):
        rows[:, i] = np.minimum(rows[:, i], rows[:, i + 1])
    for i in range(1, n):
        rows[:, i] = np.minimum(rows[:, i], rows[:, i - 1] + 1)
    return rows


def _normalize_lower(rows: np.ndarray, n: int) -> np.ndarray:
    """Tighten raw lower bounds to their monotone closure (mirror image of
    the upper-bound repair)."""
    rows = _clamped(rows, n)
    for i in range(1, n):
        rows[:, i] = np.maximum(rows[:, i], rows[:, i - 1])
    for i in range(n - 2, -1, -1):
        rows[:, i] = np.maximum(rows[:, i], rows[:, i + 1] - 1)
    return rows


class ConstraintSet:
    """Per-prefix, per-group occupancy bounds.

    ``upper[k][i-1]`` caps and ``lower[k][i-1]`` floors how many members of
    group ``k`` may appear in the first ``i`` positions.  Raw bounds are
    repaired at construction into the tightest equivalent monotone form,
    which preserves the satisfying set exactly and is what the greedy oracle
    relies on.  Construction fails with :class:`InfeasibleConstraints` when
    some repaired floor exceeds the matching cap.
    """

    __slots__ = ("upper", "lower", "n", "n_groups", "_urows", "_lrows")

    def __init__(
        self,
        upper: Sequence[Sequence[int]],
        lower: Sequence[Sequence[int]] | None = None,
    ):
        urows = np.array(upper, dtype=int)
        if urows.ndim != 2:
            raise ValueError("upper bounds must be a groups x positions table")
        t, n = urows.shape
        if lower is None:
            lrows = np.zeros((t, n), dtype=int)
        else:
            lrows = np.array(lower, dtype=int)
            if lrows.shape != (t, n):
                raise ValueError("lower bounds must match the upper-bound shape")
        urows = _normalize_upper(urows, n)
        lrows = _normalize_lower(lrows, n)
        bad = lrows > urows
        if bad.any():
            k, i = np.argwhere(bad)[0]
            raise InfeasibleConstraints(
                f"group {k} needs at least {lrows[k, i]} of the first {i + 1} "
                f"positions but is capped at {urows[k, i]}"
            )
        urows.setflags(write=False)
        lrows.setflags(write=False)
        self.n = n
        self.n_groups = t
        self._urows = urows
        self._lrows = lrows
        self.upper = tuple(tuple(row) for row in urows.tolist())
        self.lower = tuple(tuple(row) for row in lrows.tolist())

    @classmethod
    def vacuous(cls, instance: Instance) -> "ConstraintSet":
        """Bounds every ranking satisfies."""
        n = instance.n
        upper = [
            [min(i, int(size)) for i in range(1, n + 1)]
            for size in instance.group_sizes
        ]
        return cls(upper)

    @property
    def upper_only(self) -> bool:
        return not self._lrows.any()

    def upper_array(self) -> np.ndarray:
        return self._urows

    def lower_array(self) -> np.ndarray:
        return self._lrows

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ConstraintSet)
            and self.upper == other.upper
            and self.lower == other.lower
        )

    def __hash__(self) -> int:
        return hash((self.upper, self.lower))

    def __repr__(self) -> str:
        return f"ConstraintSet(groups={self.n_groups}, positions={self.n})"


def merit_ranking(instance: Instance) -> Ranking:
    """The strict merit order: descending relevance, ties by ascending id."""
    return Ranking(instance.merit_order)


def is_valid(ranking: Ranking, instance: Instance, constraints: ConstraintSet) -> bool:
    """Whether every prefix of ``ranking`` meets all group bounds."""
    if constraints.n != instance.n or constraints.n_groups != instance.n_groups:
        raise ValueError("constraints do not match the instance shape")
    upper = constraints.upper
    lower = constraints.lower
    counts = [0] * instance.n_groups
    group_of = instance.group_of
    for i, u in enumerate(ranking.order):
        g = group_of[u]
        counts[g] += 1
        if counts[g] > upper[g][i]:
            return False
        for k in range(instance.n_groups):
            if counts[k] < lower[k][i]:
                return False
    return True


def ceil_alpha_constraints(
    instance: Instance,
    alpha: float,
    protected_group: str | int,
    start_k: int = 1,
) -> ConstraintSet:
    """Floor the protected group's share of every prefix.

    For each prefix length ``i >= start_k`` the protected group must fill at
    least ``max(0, ceil(alpha * i - 1))`` positions.  ``alpha`` is read as a
    decimal (``0.3`` means exactly 3/10) so the ceiling never flips on float
    noise.  Upper bounds stay vacuous.
    """
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    frac = Fraction(str(alpha))
    g = instance.group_index(protected_group)
    n = instance.n
    lower = np.zeros((instance.n_groups, n), dtype=int)
    for i in range(max(1, start_k), n + 1):
        bound = -((-(frac.numerator * i - frac.denominator)) // frac.denominator)
        lower[g, i - 1] = max(0, bound)
    vac = ConstraintSet.vacuous(instance)
    return ConstraintSet(vac.upper, lower)


def floor_balanced_constraints(instance: Instance, start_k: int = 3) -> ConstraintSet:
    """Require every prefix of length ``i >= start_k`` to contain at least
    ``floor(i / 2)`` members of each of two groups."""
    if instance.n_groups != 2:
        raise ValueError("the balanced rule needs exactly two groups")
    n = instance.n
    lower = np.zeros((2, n), dtype=int)
    for i in range(max(1, start_k), n + 1):
        lower[:, i - 1] = i // 2
    vac = ConstraintSet.vacuous(instance)
    return ConstraintSet(vac.upper, lower)


def build_rule_constraints(
    instance: Instance,
    rule: str,
    alpha: float | None = None,
    protected_group: str | int | None = None,
    start_k: int | None = None,
) -> ConstraintSet:
    """Dispatch on the named constraint rule used by config files."""
    if rule == "ceil-alpha":
        if alpha is None:
            raise ValueError("the ceil-alpha rule needs alpha")
        if protected_group is None:
            raise ValueError("the ceil-alpha rule needs a protected group")
        return ceil_alpha_constraints(
            instance, alpha, protected_group, start_k if start_k is not None else 1
        )
    if rule == "floor-balanced":
        return floor_balanced_constraints(
            instance, start_k if start_k is not None else 3
        )
    raise ValueError(f"unknown constraint rule {rule!r}")


def to_upper_only(constraints: ConstraintSet, instance: Instance) -> ConstraintSet:
    """Rewrite lower bounds as equivalent upper bounds on the other group.

    With two groups, requiring ``l`` members of group A in a prefix of
    length ``i`` is the same as capping group B at ``i - l`` there.  The
    rewrite preserves the valid set exactly.  With one group any repaired
    lower bound is vacuous.  Three or more groups with active lower bounds
    have no such single-group rewrite and are rejected.
    """
    if constraints.n != instance.n or constraints.n_groups != instance.n_groups:
        raise ValueError("constraints do not match the instance shape")
    if constraints.upper_only:
        return constraints
    if constraints.n_groups == 1:
        return ConstraintSet(constraints.upper)
    if constraints.n_groups != 2:
        raise ValueError(
            "lower bounds with three or more groups cannot be rewritten as "
            "upper bounds; supply upper-only constraints instead"
        )
    n = constraints.n
    prefix = np.arange(1, n + 1)
    upper = constraints.upper_array().copy()
    lower = constraints.lower_array()
    upper[1] = np.minimum(upper[1], prefix - lower[0])
    upper[0] = np.minimum(upper[0], prefix - lower[1])
    if upper.min() < 0:
        raise InfeasibleConstraints(
            "a prefix lower bound exceeds the prefix length"
        )
    return ConstraintSet(upper)


def is_feasible(instance: Instance, constraints: ConstraintSet) -> bool:
    """Whether some ranking satisfies the (upper-only) bounds.

    After the monotone repair, a full assignment exists exactly when every
    prefix can be covered: ``sum_k min(upper[k][i], |group k|) >= i``.
    """
    if not constraints.upper_only:
        raise ValueError("feasibility test expects upper-only constraints; "
                         "convert with to_upper_only first")
    if constraints.n != instance.n or constraints.n_groups != instance.n_groups:
        raise ValueError("constraints do not match the instance shape")
    capacity = np.minimum(
        constraints.upper_array(), instance.group_sizes[:, None]
    ).sum(axis=0)
    return bool(np.all(capacity >= np.arange(1, instance.n + 1)))
