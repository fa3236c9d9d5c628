"""Grid-world data model: configurations, transformations, schedules, and the verifier.

Robots are labeled 1..n and occupy distinct cells of the integer grid.  A
transformation is one parallel step of unit moves; it is legal when no two
moves share a source or a target and no pair of robots exchanges positions
(a swap counts as a collision).  A schedule is a sequence of transformations;
its makespan is its length.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

Pos = tuple[int, int]

NEIGHBORS_4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
NEIGHBORS_8 = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


class PlanningError(Exception):
    """Base class for all planner errors."""


class LabelMismatch(PlanningError):
    pass


class Collision(PlanningError):
    pass


class Swap(PlanningError):
    pass


class BadMove(PlanningError):
    pass


def manhattan(a: Pos, b: Pos) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


class Configuration:
    """Injective placement of labels 1..n on grid cells."""

    __slots__ = ("placement", "_occupied")

    def __init__(self, placement: Mapping[int, Pos]):
        if not placement:
            raise ValueError("configuration needs at least one robot")
        self.placement: dict[int, Pos] = {int(k): (int(v[0]), int(v[1])) for k, v in placement.items()}
        self._occupied: dict[Pos, int] | None = None
        if len(set(self.placement.values())) != len(self.placement):
            raise ValueError("placement is not injective")

    @property
    def n(self) -> int:
        return len(self.placement)

    def labels(self) -> tuple[int, ...]:
        return tuple(sorted(self.placement))

    @property
    def occupied(self) -> dict[Pos, int]:
        """Cell -> label lookup (computed lazily, shared; do not mutate)."""
        if self._occupied is None:
            self._occupied = {p: l for l, p in self.placement.items()}
        return self._occupied

    def silhouette(self) -> frozenset[Pos]:
        return frozenset(self.placement.values())

    def positions_array(self) -> np.ndarray:
        """(n, 2) int64 array of positions, ordered by label."""
        return np.array([self.placement[l] for l in self.labels()], dtype=np.int64)

    def translate(self, dx: int, dy: int) -> "Configuration":
        return Configuration({l: (x + dx, y + dy) for l, (x, y) in self.placement.items()})

    def bounding_box(self) -> tuple[int, int, int, int]:
        xs = [p[0] for p in self.placement.values()]
        ys = [p[1] for p in self.placement.values()]
        return min(xs), min(ys), max(xs), max(ys)

    def __eq__(self, other) -> bool:
        return isinstance(other, Configuration) and self.placement == other.placement

    def __hash__(self):
        return hash(frozenset(self.placement.items()))

    def __repr__(self):
        return f"Configuration(n={self.n})"


class Transformation:
    """One parallel step: a map from source cells to target cells (holds implicit)."""

    __slots__ = ("moves",)

    def __init__(self, moves: Mapping[Pos, Pos] | Iterable[tuple[Pos, Pos]] = ()):
        items = moves.items() if isinstance(moves, Mapping) else moves
        self.moves: dict[Pos, Pos] = {}
        for f, t in items:
            f = (int(f[0]), int(f[1]))
            t = (int(t[0]), int(t[1]))
            if f == t:
                continue
            if f in self.moves:
                raise Collision(f"duplicate source {f}")
            self.moves[f] = t

    @classmethod
    def from_cycle(cls, cells: list[Pos]) -> "Transformation":
        """Rotate robots one place along a closed cell cycle."""
        k = len(cells)
        return cls({cells[i]: cells[(i + 1) % k] for i in range(k)})

    @classmethod
    def _raw(cls, moves: dict) -> "Transformation":
        """Wrap an already-canonical move dict without copying or checks."""
        t = cls.__new__(cls)
        t.moves = moves
        return t

    def __len__(self) -> int:
        return len(self.moves)

    def __iter__(self) -> Iterator[tuple[Pos, Pos]]:
        return iter(self.moves.items())

    def inverted(self) -> "Transformation":
        return Transformation({t: f for f, t in self.moves.items()})

    def is_permutation(self) -> bool:
        return set(self.moves.keys()) == set(self.moves.values())

    def union(self, other: "Transformation") -> "Transformation":
        """Union of two move sets on disjoint cells (parallel composition)."""
        merged = dict(self.moves)
        targets = set(merged.values())
        for f, t in other.moves.items():
            if f in merged:
                raise Collision(f"source {f} used by both transformations")
            if t in targets:
                raise Collision(f"target {t} used by both transformations")
            merged[f] = t
            targets.add(t)
        return Transformation(merged)

    def __repr__(self):
        return f"Transformation({len(self.moves)} moves)"


class Schedule:
    """Ordered list of transformations."""

    __slots__ = ("steps",)

    def __init__(self, steps: Iterable[Transformation] = ()):
        self.steps: list[Transformation] = list(steps)

    @property
    def makespan(self) -> int:
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[Transformation]:
        return iter(self.steps)

    def __add__(self, other: "Schedule") -> "Schedule":
        return Schedule(self.steps + other.steps)

    def append(self, t: Transformation) -> None:
        self.steps.append(t)

    def extend(self, other: "Schedule") -> None:
        self.steps.extend(other.steps)

    def reversed_schedule(self) -> "Schedule":
        return Schedule(t.inverted() for t in reversed(self.steps))

    def compact(self) -> "Schedule":
        """Drop empty steps."""
        return Schedule(t for t in self.steps if len(t) > 0)

    def move_count(self) -> int:
        return sum(len(t) for t in self.steps)

    def __repr__(self):
        return f"Schedule(makespan={self.makespan})"


def stepwise_union(schedules: list[Schedule]) -> Schedule:
    """Parallel composition: step i of the result is the union of every step i.

    The caller guarantees the schedules touch disjoint cell sets; overlapping
    sources or targets raise Collision.
    """
    if not schedules:
        return Schedule()
    out = []
    for i in range(max(s.makespan for s in schedules)):
        t = Transformation()
        for s in schedules:
            if i < s.makespan:
                t = t.union(s.steps[i])
        out.append(t)
    return Schedule(out)


@dataclass(frozen=True)
class InstancePair:
    start: Configuration
    target: Configuration

    def labels_match(self) -> bool:
        return self.start.labels() == self.target.labels()


@dataclass(frozen=True)
class Violation:
    step: int
    kind: str  # collision | swap | disconnect | bad-move | wrong-final
    detail: str


@dataclass
class ValidationReport:
    valid: bool
    makespan: int
    diameter: int
    stretch: Fraction
    violations: list[Violation] = field(default_factory=list)

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


# ---------------------------------------------------------------------------
# connectivity


def _cells_connected(cells) -> bool:
    n = len(cells)
    if n <= 1:
        return True
    it = iter(cells)
    first = next(it)
    minx = maxx = first[0]
    miny = maxy = first[1]
    for x, y in it:
        if x < minx:
            minx = x
        elif x > maxx:
            maxx = x
        if y < miny:
            miny = y
        elif y > maxy:
            maxy = y
    w = maxx - minx + 1
    h = maxy - miny + 1
    if w * h <= 64 * n + 4096:
        from scipy import ndimage

        grid = np.zeros((h, w), dtype=np.uint8)
        arr = np.array(list(cells), dtype=np.int64)
        grid[arr[:, 1] - miny, arr[:, 0] - minx] = 1
        _, num = ndimage.label(grid)
        return num == 1
    # sparse fallback: plain BFS
    cell_set = set(cells)
    seen = {first}
    queue = deque([first])
    while queue:
        x, y = queue.popleft()
        for dx, dy in NEIGHBORS_4:
            q = (x + dx, y + dy)
            if q in cell_set and q not in seen:
                seen.add(q)
                queue.append(q)
    return len(seen) == n


def is_connected(c: Configuration) -> bool:
    """True iff the 4-neighbor graph on occupied cells has one component."""
    return _cells_connected(c.placement.values())


# ---------------------------------------------------------------------------
# core operations


def diameter(p: InstancePair) -> int:
    """Max Manhattan distance between a robot's start and target position."""
    if p.start.labels() != p.target.labels():
        raise LabelMismatch("start and target label sets differ")
    return max(manhattan(p.start.placement[l], p.target.placement[l]) for l in p.start.labels())


def scale(c: Configuration) -> int:
    """Largest s such that the silhouette is a union of aligned s x s squares.

    The lattice anchor is free (translated configurations are recognized); for
    a given s the only viable anchor is fixed by the minimal occupied x and y,
    since some square must start there.
    """
    cells = np.array(list(c.placement.values()), dtype=np.int64)
    n = len(cells)
    minx = int(cells[:, 0].min())
    miny = int(cells[:, 1].min())
    best = 1
    s = int(np.sqrt(n))
    while s * s > n:
        s -= 1
    for cand in range(s, 1, -1):
        if n % (cand * cand) != 0:
            continue
        bx = (cells[:, 0] - minx) // cand
        by = (cells[:, 1] - miny) // cand
        block = bx * (1 + by.max()) + by
        _, counts = np.unique(block, return_counts=True)
        if (counts == cand * cand).all():
            return cand
    return best


def apply(c: Configuration, t: Transformation) -> Configuration:
    """Apply one transformation, raising on any illegality."""
    occupied = c.occupied
    moves = t.moves
    for f, to in moves.items():
        if f not in occupied:
            raise BadMove(f"move from unoccupied cell {f}")
        if manhattan(f, to) > 1:
            raise BadMove(f"move {f}->{to} is longer than one step")
        if moves.get(to) == f:
            raise Swap(f"robots at {f} and {to} swap")
    targets = set()
    for to in moves.values():
        if to in targets:
            raise Collision(f"two robots target {to}")
        targets.add(to)
    for to in targets:
        if to in occupied and to not in moves:
            raise Collision(f"target {to} occupied by a holding robot")
    placement = dict(c.placement)
    for f, to in moves.items():
        placement[occupied[f]] = to
    return Configuration(placement)


def validate(p: InstancePair, s: Schedule, require_connected: bool = True) -> ValidationReport:
    """Replay a schedule from p.start, recording every violation found.

    Collisions, swaps, and bad moves make the next state ambiguous, so the
    replay stops at the first step containing one; disconnection and a wrong
    final configuration are recorded without stopping.
    """
    violations: list[Violation] = []
    labels_ok = p.start.labels() == p.target.labels()
    if not labels_ok:
        violations.append(Violation(-1, "wrong-final", "start and target label sets differ"))
        diam = 0
    else:
        diam = diameter(p)

    occ: dict[Pos, int] = dict(p.start.occupied)
    if require_connected and not _cells_connected(occ.keys()):
        violations.append(Violation(-1, "disconnect", "start configuration disconnected"))

    replay_ok = True
    for i, t in enumerate(s.steps):
        fatal = []
        moves = t.moves
        for f, to in moves.items():
            if f not in occ:
                fatal.append(Violation(i, "bad-move", f"move from unoccupied cell {f}"))
            if manhattan(f, to) > 1:
                fatal.append(Violation(i, "bad-move", f"move {f}->{to} longer than one step"))
            if moves.get(to) == f and f != to:
                fatal.append(Violation(i, "swap", f"robots at {f} and {to} swap"))
        seen = set()
        for to in moves.values():
            if to in seen:
                fatal.append(Violation(i, "collision", f"two robots target {to}"))
            seen.add(to)
        for to in seen:
            if to in occ and to not in moves:
                fatal.append(Violation(i, "collision", f"target {to} occupied by holding robot"))
        if fatal:
            violations.extend(fatal)
            replay_ok = False
            break
        moved = [(occ.pop(f), to) for f, to in moves.items()]
        for label, to in moved:
            occ[to] = label
        if require_connected and not t.is_permutation():
            if not _cells_connected(occ.keys()):
                violations.append(Violation(i, "disconnect", "configuration disconnected"))

    if replay_ok and labels_ok:
        final = {l: pos for pos, l in occ.items()}
        bad = [l for l in p.target.labels() if final.get(l) != p.target.placement[l]]
        if bad:
            violations.append(
                Violation(len(s.steps), "wrong-final", f"{len(bad)} robots off target, e.g. label {bad[0]}")
            )
    elif not replay_ok:
        violations.append(Violation(len(s.steps), "wrong-final", "replay aborted before the final step"))

    makespan = s.makespan
    return ValidationReport(
        valid=not violations,
        makespan=makespan,
        diameter=diam,
        stretch=Fraction(makespan, max(diam, 1)),
        violations=violations,
    )


# ---------------------------------------------------------------------------
# JSON interchange (instances and schedules)


def instance_to_json(p: InstancePair) -> dict:
    def conf(c: Configuration):
        return [[int(x), int(y), int(l)] for l, (x, y) in sorted(c.placement.items())]

    return {"start": conf(p.start), "target": conf(p.target)}


def instance_from_json(obj: dict) -> InstancePair:
    def conf(rows) -> Configuration:
        return Configuration({int(l): (int(x), int(y)) for x, y, l in rows})

    return InstancePair(start=conf(obj["start"]), target=conf(obj["target"]))


def schedule_to_json(s: Schedule) -> dict:
    return {"steps": [[[f[0], f[1], t[0], t[1]] for f, t in step] for step in s.steps]}


def schedule_from_json(obj: dict) -> Schedule:
    return Schedule(
        Transformation({(int(fx), int(fy)): (int(tx), int(ty)) for fx, fy, tx, ty in step})
        for step in obj["steps"]
    )
