"""Line-based similarity, clone-pair detection, and clone-class clustering.

Similarity is the longest-common-subsequence ratio over whole normalized
lines, floored to an integer percentage against the longer fragment.  A pair
is a clone when its similarity reaches 100 minus the max-difference
threshold; classes are the connected components of the pair relation.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from itertools import combinations

from .errors import InvalidConfig
from .frontend import Fragment
from .normalize import EXACT_TYPES, NormalizationMode, NormalizedFragment

__all__ = [
    "CloneConfig",
    "ClonePair",
    "CloneClass",
    "similarity",
    "detect_pairs",
    "build_classes",
    "select_representative",
]

DEFAULT_NEAR_MISS_THRESHOLD = 30


@dataclass(frozen=True)
class CloneConfig:
    mode: NormalizationMode
    max_diff_threshold: int
    min_lines: int = 10
    max_lines: int = 2500

    @classmethod
    def for_mode(cls, mode: NormalizationMode, **kwargs) -> "CloneConfig":
        """Default threshold per mode family: 0 for exact types, 30 for
        near-miss types."""
        threshold = kwargs.pop(
            "max_diff_threshold",
            0 if mode.clone_type in EXACT_TYPES else DEFAULT_NEAR_MISS_THRESHOLD,
        )
        return cls(mode=mode, max_diff_threshold=threshold, **kwargs)

    def validate(self) -> None:
        if not 0 <= self.max_diff_threshold <= 100:
            raise InvalidConfig(
                f"threshold {self.max_diff_threshold} outside 0..100"
            )
        if self.mode.clone_type in EXACT_TYPES and self.max_diff_threshold != 0:
            raise InvalidConfig(
                f"exact mode {self.mode.cli_name} requires threshold 0, "
                f"got {self.max_diff_threshold}"
            )
        if self.min_lines < 1 or self.min_lines > self.max_lines:
            raise InvalidConfig(
                f"bad size window [{self.min_lines}, {self.max_lines}]"
            )


@dataclass(frozen=True)
class ClonePair:
    a: str
    b: str
    similarity: int


@dataclass(frozen=True)
class CloneClass:
    id: int
    members: tuple[str, ...]
    min_similarity: int
    max_similarity: int
    representative: str


# ---------------------------------------------------------------------------
# similarity


def _lcs_length(xs: Sequence[str], ys: Sequence[str]) -> int:
    # intern lines to ints for cheap comparisons
    table: dict[str, int] = {}
    ax = [table.setdefault(x, len(table)) for x in xs]
    ay = [table.setdefault(y, len(table)) for y in ys]

    # common prefix/suffix always belongs to an LCS
    p = 0
    while p < len(ax) and p < len(ay) and ax[p] == ay[p]:
        p += 1
    q = 0
    while q < len(ax) - p and q < len(ay) - p and ax[-1 - q] == ay[-1 - q]:
        q += 1
    mx = ax[p:len(ax) - q]
    my = ay[p:len(ay) - q]

    # lines absent from the other side can never match
    sy, sx = set(my), set(mx)
    mx = [t for t in mx if t in sy]
    my = [t for t in my if t in sx]
    if not mx or not my:
        return p + q
    if len(mx) > len(my):
        mx, my = my, mx

    prev = [0] * (len(my) + 1)
    for xt in mx:
        cur = [0]
        append = cur.append
        best = 0
        for j, yt in enumerate(my, 1):
            if xt == yt:
                v = prev[j - 1] + 1
            else:
                v = best if best >= prev[j] else prev[j]
            append(v)
            best = v
        prev = cur
    return p + q + prev[-1]


def similarity(a: Sequence[str], b: Sequence[str]) -> int:
    """Percentage similarity of two normalized line lists.

    floor(100 * lcs / max(len(a), len(b))), which equals
    floor(100 * (1 - max-side difference ratio)).  Symmetric.
    """
    if not a or not b:
        raise ValueError("similarity requires non-empty line lists")
    la, lb = len(a), len(b)
    if la == lb and tuple(a) == tuple(b):
        return 100
    return (100 * _lcs_length(a, b)) // max(la, lb)


# ---------------------------------------------------------------------------
# pair detection


def detect_pairs(
    frags: Sequence[NormalizedFragment],
    cfg: CloneConfig,
    use_prefilter: bool = True,
) -> list[ClonePair]:
    """Every unordered fragment pair at or above the similarity floor.

    Identical normalized contents are grouped first, so exact modes never
    run the LCS.  A size-ratio prefilter skips pairs that cannot reach the
    floor; disabling it (for verification) must not change the output.
    """
    for nf in frags:
        if nf.mode != cfg.mode:
            raise ValueError(
                f"fragment {nf.source} normalized under {nf.mode.clone_type}, "
                f"config wants {cfg.mode.clone_type}"
            )
    floor = 100 - cfg.max_diff_threshold

    groups: dict[tuple[str, ...], list[str]] = {}
    for nf in frags:
        if nf.norm_lines:
            groups.setdefault(nf.norm_lines, []).append(nf.source)
    for ids in groups.values():
        ids.sort()

    pairs: list[ClonePair] = []
    for ids in groups.values():
        for a, b in combinations(ids, 2):
            pairs.append(ClonePair(a, b, 100))

    reps = sorted(groups.items(), key=lambda kv: len(kv[0]))
    n = len(reps)
    if use_prefilter:
        if cfg.max_diff_threshold > 0:
            # sorted by length: only windows within the ratio band compete
            for i in range(n):
                li = len(reps[i][0])
                for j in range(i + 1, n):
                    if floor * len(reps[j][0]) > 100 * li:
                        break
                    _emit_cross(pairs, reps[i], reps[j], floor)
    else:
        for i in range(n):
            for j in range(i + 1, n):
                _emit_cross(pairs, reps[i], reps[j], floor)

    pairs.sort(key=lambda p: (-p.similarity, p.a, p.b))
    return pairs


def _emit_cross(pairs, ga, gb, floor) -> None:
    sim = similarity(ga[0], gb[0])
    if sim >= floor:
        for a in ga[1]:
            for b in gb[1]:
                x, y = (a, b) if a < b else (b, a)
                pairs.append(ClonePair(x, y, sim))


# ---------------------------------------------------------------------------
# clustering


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:  # path compression
            parent[x], x = root, parent[x]
        return root

    def add(self, x: str) -> None:
        self.parent.setdefault(x, x)

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def build_classes(
    pairs: Sequence[ClonePair],
    fragments: Mapping[str, Fragment] | None = None,
) -> list[CloneClass]:
    """Connected components of the pair graph, as clone classes.

    Ids are dense, assigned by descending member count with ties broken by
    the smallest member id.  When a fragment store is given, representatives
    follow the largest-member rule; otherwise the smallest id stands in.
    """
    uf = _UnionFind()
    for p in pairs:
        uf.add(p.a)
        uf.add(p.b)
        uf.union(p.a, p.b)

    members: dict[str, list[str]] = {}
    for node in uf.parent:
        members.setdefault(uf.find(node), []).append(node)
    sims: dict[str, list[int]] = {}
    for p in pairs:
        sims.setdefault(uf.find(p.a), []).append(p.similarity)

    ordered = sorted(members.values(), key=lambda ms: (-len(ms), min(ms)))
    classes: list[CloneClass] = []
    for idx, ms in enumerate(ordered, start=1):
        ms = tuple(sorted(ms))
        ss = sims[uf.find(ms[0])]
        cls = CloneClass(
            id=idx,
            members=ms,
            min_similarity=min(ss),
            max_similarity=max(ss),
            representative=ms[0],
        )
        if fragments is not None:
            cls = CloneClass(
                id=cls.id,
                members=cls.members,
                min_similarity=cls.min_similarity,
                max_similarity=cls.max_similarity,
                representative=select_representative(cls, fragments),
            )
        classes.append(cls)
    return classes


def select_representative(cls: CloneClass, frags: Mapping[str, Fragment]) -> str:
    """Member with the most original lines; ties to the smallest id."""
    return min(cls.members, key=lambda m: (-len(frags[m].lines), m))
