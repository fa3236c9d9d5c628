"""Permutation routing on fully occupied rectangles in O(n1+n2) steps.

Every step keeps the rectangle fully occupied, so a step is a union of
disjoint cell-cycle rotations.  The grid graph is bipartite, which rules out
rotating three robots (all cycles have even length); pair exchanges are
instead realized by short products of 4- and 6-cycle rotations inside a
2x3 window, found once by breadth-first search over the window's permutation
group and cached.

Routing itself is a three-phase Hall decomposition (permute within columns,
within rows, within columns); each line permutation runs as odd-even
transposition routing on pairs of adjacent lines, with exchanges realized by
the cached window patterns.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .model import (
    Collision,
    PlanningError,
    Pos,
    Schedule,
    Transformation,
    manhattan,
    stepwise_union,
)

__all__ = [
    "Rect",
    "IllegalCycle",
    "NotRectangle",
    "LabelMismatch",
    "rotate_cycle",
    "rotate_sort",
    "permute_rect_cells",
    "parallel_union",
    "C_RS",
]

# Pinned implementation constant: max observed makespan / (n1 + n2) over the
# calibration sweep in tests/test_meshsort.py (golden; acceptance allows 10%).
C_RS = 14.0

parallel_union = stepwise_union


class IllegalCycle(PlanningError):
    pass


class NotRectangle(PlanningError):
    pass


from .model import LabelMismatch  # noqa: E402  (re-exported for callers)


def rotate_cycle(cells: list[Pos]) -> Transformation:
    """One transformation shifting robots one place along a closed cell cycle."""
    k = len(cells)
    if k < 3:
        raise IllegalCycle("cycle needs at least 3 cells (2 would be a swap)")
    if len(set(cells)) != k:
        raise IllegalCycle("cycle cells are not distinct")
    for i in range(k):
        if manhattan(cells[i], cells[(i + 1) % k]) != 1:
            raise IllegalCycle(f"cells {cells[i]} and {cells[(i + 1) % k]} not adjacent")
    return Transformation.from_cycle(cells)


# ---------------------------------------------------------------------------
# window patterns
#
# Window cells are addressed (u, v) with u in {0,1} (short axis) and
# v in {0,1,2} (long axis); cell id = 2*v + u.

_SQ0 = (0, 1, 3, 2)  # (0,0)->(1,0)->(1,1)->(0,1)->
_SQ1 = (2, 3, 5, 4)
_RING = (0, 1, 3, 5, 4, 2)


def _cycle_perm(cycle: tuple[int, ...], reverse: bool) -> tuple[int, ...]:
    perm = list(range(6))
    cyc = cycle[::-1] if reverse else cycle
    for i, c in enumerate(cyc):
        perm[c] = cyc[(i + 1) % len(cyc)]
    return tuple(perm)


def _find_patterns() -> dict[str, list[list[tuple[int, int]]]]:
    """BFS over the window group; returns move lists per named exchange."""
    gens = []
    for cyc in (_SQ0, _SQ1, _RING):
        for rev in (False, True):
            perm = _cycle_perm(cyc, rev)
            moves = [(c, perm[c]) for c in range(6) if perm[c] != c]
            gens.append((perm, moves))
    ident = tuple(range(6))
    parent: dict[tuple, tuple] = {ident: None}
    queue = deque([ident])
    while queue:
        state = queue.popleft()
        for gi, (perm, _) in enumerate(gens):
            nxt = list(state)
            for c in range(6):
                nxt[perm[c]] = state[c]
            nxt = tuple(nxt)
            if nxt not in parent:
                parent[nxt] = (state, gi)
                queue.append(nxt)
    targets = {
        # swap the two cells adjacent along the long axis in lane u=0
        "tau_long": (2, 1, 0, 3, 4, 5),
        # same swap in both lanes
        "sigma_long": (2, 3, 0, 1, 4, 5),
        # swap the two cells adjacent along the short axis at v=0
        "tau_short": (1, 0, 2, 3, 4, 5),
        # short-axis swap at v=1 (for windows that cannot extend past a border)
        "tau_short_mid": (0, 1, 3, 2, 4, 5),
        # short-axis swaps at v=0 and v=1
        "sigma_short": (1, 0, 3, 2, 4, 5),
    }
    patterns = {}
    for name, tgt in targets.items():
        if tgt not in parent:
            raise RuntimeError(f"window pattern {name} unreachable")
        seq = []
        cur = tgt
        while parent[cur] is not None:
            prev, gi = parent[cur]
            seq.append(gens[gi][1])
            cur = prev
        seq.reverse()
        patterns[name] = seq
    return patterns


_PATTERNS = _find_patterns()


from functools import lru_cache


@lru_cache(maxsize=65536)
def _window_steps(u_cells, v_step, pattern):
    cells = []
    for cid in range(6):
        v, u = divmod(cid, 2)
        bx, by = u_cells[u]
        cells.append((bx + v * v_step[0], by + v * v_step[1]))
    return [[(cells[s], cells[d]) for s, d in step] for step in _PATTERNS[pattern]]


class _Window:
    """Maps window coordinates (u, v) onto grid cells."""

    __slots__ = ("u_cells", "v_step")

    def __init__(self, u_cells, v_step):
        self.u_cells = u_cells  # grid cell of (u, 0) for u = 0, 1
        self.v_step = v_step  # grid offset per +1 in v

    def steps(self, pattern: str) -> list[list[tuple[Pos, Pos]]]:
        return _window_steps(self.u_cells, self.v_step, pattern)


# ---------------------------------------------------------------------------
# odd-even routing on line pairs


def _emit_round(jobs):
    """Merge per-window pattern steps into aligned global transformations."""
    slots: list[list] = [[] for _ in range(max(len(steps) for steps in jobs))]
    for steps in jobs:
        for i, step in enumerate(steps):
            slots[i].extend(step)
    return [Transformation(s) for s in slots if s]


def _route_line_pairs(pairs, length, schedule):
    """Odd-even transposition routing for pairs of adjacent lines.

    pairs: list of (keysA, keysB, window_factory) where keys give the desired
    final index of the occupant at each position and window_factory(i, lane)
    builds the exchange window for the pair (i, i+1) (lane 0, 1, or "both").
    length: number of positions per line.
    """
    live = [p for p in pairs if p[0] != sorted(p[0]) or p[1] != sorted(p[1])]
    for rnd in range(length):
        if not live:
            break
        parity = rnd & 1
        wave_jobs = [[], []]
        for keys_a, keys_b, win in live:
            prev_i = None
            wave = 0
            for i in range(parity, length - 1, 2):
                na = keys_a[i] > keys_a[i + 1]
                nb = keys_b[i] > keys_b[i + 1]
                if not (na or nb):
                    continue
                # windows span 3 positions; only actives 2 apart conflict
                wave = 1 - wave if (prev_i is not None and i - prev_i == 2) else 0
                prev_i = i
                if na and nb:
                    wave_jobs[wave].append(win(i, "both").steps("sigma_long"))
                    keys_a[i], keys_a[i + 1] = keys_a[i + 1], keys_a[i]
                    keys_b[i], keys_b[i + 1] = keys_b[i + 1], keys_b[i]
                else:
                    wave_jobs[wave].append(win(i, 0 if na else 1).steps("tau_long"))
                    k = keys_a if na else keys_b
                    k[i], k[i + 1] = k[i + 1], k[i]
        for jobs in wave_jobs:
            if jobs:
                schedule.extend(Schedule(_emit_round(jobs)))
        live = [p for p in live if p[0] != sorted(p[0]) or p[1] != sorted(p[1])]


def _short_window(n_lines, i, double):
    """Window placement (base, step, pattern) for short-axis swaps at line i.

    The mid-window swap is cheaper (3 steps vs 5), so center the window on
    the swapping line whenever both neighbors exist.
    """
    if double:
        if i + 2 <= n_lines - 1:
            return i, 1, "sigma_short"
        return i + 1, -1, "sigma_short"
    if 1 <= i <= n_lines - 2:
        return i - 1, 1, "tau_short_mid"
    if i == 0:
        return 0, 1, "tau_short"
    return i, -1, "tau_short"


def _route_short_lines(needs, n_lines, window_factory, schedule):
    """Swaps on 2-cell lines (line length 2), windows along the cross axis.

    needs: boolean per line; adjacent needing lines share a sigma_short
    window, lone lines use tau_short.
    """
    jobs_with_span = []
    i = 0
    while i < n_lines:
        if not needs[i]:
            i += 1
            continue
        double = i + 1 < n_lines and needs[i + 1]
        win, span, pat = window_factory(i, double)
        jobs_with_span.append((span, win.steps(pat)))
        i += 2 if double else 1
    # wave-schedule overlapping windows (greedy interval coloring)
    waves: list[list] = []  # [last occupied position, jobs]
    for (start, end), steps in jobs_with_span:
        for w in waves:
            if start > w[0]:
                w[0] = end
                w[1].append(steps)
                break
        else:
            waves.append([end, [steps]])
    for _, jobs in waves:
        schedule.extend(Schedule(_emit_round(jobs)))


# ---------------------------------------------------------------------------
# Hall three-phase decomposition


def _perfect_matching(matrix, size):
    """One perfect matching on positive entries of a doubly-balanced matrix."""
    match_col = [-1] * size  # dest column -> source column

    def augment(sc, seen):
        for dc in range(size):
            if matrix[sc][dc] > 0 and dc not in seen:
                seen.add(dc)
                if match_col[dc] < 0 or augment(match_col[dc], seen):
                    match_col[dc] = sc
                    return True
        return False

    for sc in range(size):
        if not augment(sc, set()):
            raise RuntimeError("matching failed on balanced matrix")
    pairing = [-1] * size  # source column -> dest column
    for dc, sc in enumerate(match_col):
        pairing[sc] = dc
    return pairing


def _hall_phases(width, height, perm_local):
    """Split perm into (column perms, row perms, column perms).

    perm_local maps (x, y) -> (x', y') in rect-local coordinates.  Returns
    three lists of per-line position maps.
    """
    matrix = [[0] * width for _ in range(width)]
    by_pair: dict[tuple[int, int], list] = {}
    for (x, y), (dx_, dy_) in perm_local.items():
        matrix[x][dx_] += 1
        by_pair.setdefault((x, dx_), []).append(((x, y), (dx_, dy_)))
    for v in by_pair.values():
        v.sort(key=lambda it: (it[1][1], it[0][1]))

    mid_row: dict[Pos, int] = {}
    for r in range(height):
        pairing = _perfect_matching(matrix, width)
        for sc in range(width):
            dc = pairing[sc]
            matrix[sc][dc] -= 1
            src, _ = by_pair[(sc, dc)].pop(0)
            mid_row[src] = r

    phase1 = [[0] * height for _ in range(width)]  # column x: position y -> mid row
    phase2 = [[0] * width for _ in range(height)]  # row r: position x -> dest col
    phase3 = [[0] * height for _ in range(width)]  # column x': position r -> dest row
    for (x, y), (dx_, dy_) in perm_local.items():
        r = mid_row[(x, y)]
        phase1[x][y] = r
        phase2[r][x] = dx_
        phase3[dx_][r] = dy_
    return phase1, phase2, phase3


def _column_phase(x0, y0, width, height, col_perms, schedule):
    """Realize independent within-column permutations (all columns at once)."""
    if all(col_perms[c] == sorted(col_perms[c]) for c in range(width)):
        return
    if height == 2:
        def factory(c, double):
            base, step, pat = _short_window(width, c, double)
            win = _Window(u_cells=((x0 + base, y0), (x0 + base, y0 + 1)), v_step=(step, 0))
            span = (min(base, base + 2 * step), max(base, base + 2 * step))
            return win, span, pat

        needs = [col_perms[c] != sorted(col_perms[c]) for c in range(width)]
        _route_short_lines(needs, width, factory, schedule)
        return

    def make_pairs(col_pairs):
        pairs = []
        for ca, cb in col_pairs:
            def win(i, lane, ca=ca, cb=cb):
                ys = (y0 + i, y0 + i + 1, y0 + i + 2) if i + 2 < height else (y0 + i + 1, y0 + i, y0 + i - 1)
                if lane == 1:
                    ucells = ((x0 + cb, ys[0]), (x0 + ca, ys[0]))
                else:
                    ucells = ((x0 + ca, ys[0]), (x0 + cb, ys[0]))
                return _Window(u_cells=ucells, v_step=(0, ys[1] - ys[0]))

            pairs.append((list(col_perms[ca]), list(col_perms[cb]), win))
        return pairs

    even_pairs = [(c, c + 1) for c in range(0, width - 1, 2)]
    _route_line_pairs(make_pairs(even_pairs), height, schedule)
    if width % 2 == 1:
        ident = list(range(height))
        ca, cb = width - 2, width - 1
        pairs = make_pairs([(ca, cb)])
        pairs[0] = (ident, pairs[0][1], pairs[0][2])
        _route_line_pairs(pairs, height, schedule)


def _row_phase(x0, y0, width, height, row_perms, schedule):
    if all(row_perms[r] == sorted(row_perms[r]) for r in range(height)):
        return
    if width == 2:
        def factory(r, double):
            base, step, pat = _short_window(height, r, double)
            win = _Window(u_cells=((x0, y0 + base), (x0 + 1, y0 + base)), v_step=(0, step))
            span = (min(base, base + 2 * step), max(base, base + 2 * step))
            return win, span, pat

        needs = [row_perms[r] != sorted(row_perms[r]) for r in range(height)]
        _route_short_lines(needs, height, factory, schedule)
        return

    def make_pairs(row_pairs):
        pairs = []
        for ra, rb in row_pairs:
            def win(i, lane, ra=ra, rb=rb):
                xs = (x0 + i, x0 + i + 1, x0 + i + 2) if i + 2 < width else (x0 + i + 1, x0 + i, x0 + i - 1)
                if lane == 1:
                    ucells = ((xs[0], y0 + rb), (xs[0], y0 + ra))
                else:
                    ucells = ((xs[0], y0 + ra), (xs[0], y0 + rb))
                return _Window(u_cells=ucells, v_step=(xs[1] - xs[0], 0))

            pairs.append((list(row_perms[ra]), list(row_perms[rb]), win))
        return pairs

    even_pairs = [(r, r + 1) for r in range(0, height - 1, 2)]
    _route_line_pairs(make_pairs(even_pairs), width, schedule)
    if height % 2 == 1:
        ident = list(range(width))
        ra, rb = height - 2, height - 1
        pairs = make_pairs([(ra, rb)])
        pairs[0] = (ident, pairs[0][1], pairs[0][2])
        _route_line_pairs(pairs, width, schedule)


# ---------------------------------------------------------------------------
# public entry points


def _strip_phantoms(schedule: Schedule, empty: set[Pos]) -> Schedule:
    """Drop moves whose source cell is empty; every robot keeps its trajectory.

    Engine steps permute their support cells, so the empty cells simply follow
    the same permutation.
    """
    if not empty:
        return schedule
    vacant = set(empty)
    out = Schedule()
    for t in schedule:
        real = [(f, d) for f, d in t if f not in vacant]
        vacant = {t.moves.get(v, v) for v in vacant}
        if real:
            out.append(Transformation(real))
    return out


def permute_rect_cells(
    x0: int, y0: int, width: int, height: int, perm: dict[Pos, Pos], empty=frozenset()
) -> Schedule:
    """Schedule realizing perm on the cells of a rectangle, touching only it.

    perm must be a permutation of all rectangle cells; cells listed in
    `empty` carry no robot and their moves are skipped at emission (at most
    one empty cell keeps intermediate configurations connected wherever the
    rectangle borders occupied cells on two sides).
    """
    cells = {(x0 + i, y0 + j) for i in range(width) for j in range(height)}
    if set(perm.keys()) != cells or set(perm.values()) != cells:
        raise NotRectangle("perm is not a permutation of the rectangle's cells")
    if all(f == t for f, t in perm.items()):
        return Schedule()
    if min(width, height) < 2:
        raise NotRectangle("rectangle must be at least 2 wide and 2 tall")
    if width == 2 and height == 2:
        return _permute_2x2(x0, y0, perm, empty)

    local = {(f[0] - x0, f[1] - y0): (t[0] - x0, t[1] - y0) for f, t in perm.items()}
    phase1, phase2, phase3 = _hall_phases(width, height, local)
    schedule = Schedule()
    _column_phase(x0, y0, width, height, phase1, schedule)
    _row_phase(x0, y0, width, height, phase2, schedule)
    _column_phase(x0, y0, width, height, phase3, schedule)
    return _strip_phantoms(schedule, set(empty))


def _permute_2x2(x0, y0, perm, empty):
    ring = [(x0, y0), (x0 + 1, y0), (x0 + 1, y0 + 1), (x0, y0 + 1)]
    for k in (1, 2, 3):
        if all(perm[ring[i]] == ring[(i + k) % 4] for i in range(4)):
            steps = min(k, 4 - k)
            cyc = ring if k in (1, 2) else ring[::-1]
            sched = Schedule(Transformation.from_cycle(cyc) for _ in range(steps))
            return _strip_phantoms(sched, set(empty))
    raise NotRectangle("a 2x2 rectangle only supports cyclic rotations")


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    n1: int  # width
    n2: int  # height

    def cells(self) -> list[Pos]:
        return [(self.x + i, self.y + j) for j in range(self.n2) for i in range(self.n1)]

    def __contains__(self, p: Pos) -> bool:
        return self.x <= p[0] < self.x + self.n1 and self.y <= p[1] < self.y + self.n2


def rotate_sort(r: Rect, current: dict[Pos, int], target: dict[Pos, int]) -> Schedule:
    """Reorder the robots of a fully occupied rectangle into a target labeling.

    Only cells of r are touched and every intermediate step keeps r fully
    occupied, so the schedule splices safely into any ambient configuration.
    Makespan is bounded by C_RS * (n1 + n2).
    """
    cells = set(r.cells())
    if set(current.keys()) != cells or set(target.keys()) != cells:
        raise NotRectangle("labelings do not cover exactly the rectangle")
    if sorted(current.values()) != sorted(target.values()):
        raise LabelMismatch("current and target labels differ")
    dest_of_label = {}
    for cell, label in target.items():
        if label in dest_of_label:
            raise LabelMismatch(f"label {label} duplicated in target")
        dest_of_label[label] = cell
    perm = {cell: dest_of_label[label] for cell, label in current.items()}
    return permute_rect_cells(r.x, r.y, r.n1, r.n2, perm)
