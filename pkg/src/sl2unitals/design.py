"""Affine SL(2,q)-unitals from hat systems, and their closures.

A hat system consists of a subgroup S of order q+1 together with q-2
arcuate base blocks D through the identity.  Writing D* for the set of
pairwise quotients {x * y^-1 : x != y in D}, the system is admissible when

  (Q)  every D* has the full q(q+1) distinct quotients, and
  (P)  S minus the identity, the q+1 punctured Sylow 2-subgroups and the
       sets D* partition the nonidentity elements of SL(2,q).

The affine unital then has point set SL(2,q) and blocks all right cosets
Sg, all right cosets of the Sylow subgroups ("short" blocks, size q) and
all right translates Dg of the base blocks.  Blocks are stored as sorted
tuples of element indices.

Closures: a parallelism groups the short blocks into q+1 classes of
pairwise disjoint blocks; adding one ideal point per class plus the block
of all ideal points yields a 2-(q^3+1, q+1, 1) design.  The two built-in
parallelisms are "flat" (right cosets of a fixed Sylow subgroup form a
class) and "natural" (left cosets, i.e. the right coset Tg joins the
class of the conjugate of T by g).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .sl2q import SL2


class UnitalError(Exception):
    """Base class for structural errors in this package."""


class PartitionError(UnitalError):
    """Condition (P) failed; carries the offending element index."""

    def __init__(self, message: str, witness: int | None = None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class HatSystem:
    """Subgroup of order q+1 plus arcuate base blocks through 1."""

    group: SL2
    subgroup: frozenset[int]
    bases: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        q = self.group.field.q
        if len(self.subgroup) != q + 1:
            raise UnitalError(f"subgroup has order {len(self.subgroup)}, expected {q + 1}")
        for k, base in enumerate(self.bases):
            if 0 not in base:
                raise UnitalError(f"base {k} does not contain the identity")
            if len(base) != q + 1:
                raise UnitalError(f"base {k} has {len(base)} elements, expected {q + 1}")


class QuotientSet(NamedTuple):
    """Distinct quotients of a block, with the multiset cardinality."""

    elements: frozenset[int]
    multiset_size: int


def quotient_set(group: SL2, block: tuple[int, ...] | frozenset[int]) -> QuotientSet:
    """All pairwise quotients x * y^-1 over distinct x, y in the block."""
    idxs = list(block)
    cay = group.cayley
    inv = group.inverse_index
    out = set()
    for x in idxs:
        row = cay[x]
        for y in idxs:
            if x != y:
                out.add(int(row[inv[y]]))
    m = len(idxs)
    return QuotientSet(frozenset(out), m * (m - 1))


def check_Q(group: SL2, block: tuple[int, ...] | frozenset[int]) -> bool:
    """Condition (Q): the quotient map on the block is injective."""
    qs = quotient_set(group, block)
    return len(qs.elements) == qs.multiset_size


def _partition_parts(system: HatSystem):
    """The parts whose disjoint union condition (P) requires."""
    parts = [frozenset(system.subgroup) - {0}]
    for syl in system.group.sylow_subgroups:
        parts.append(frozenset(syl) - {0})
    for base in system.bases:
        parts.append(quotient_set(system.group, base).elements)
    return parts


def partition_witness(system: HatSystem) -> tuple[str, int] | None:
    """None if (P) holds, else ("uncovered"|"doubly-covered", element index)."""
    n = system.group.order
    count = np.zeros(n, dtype=np.int16)
    for part in _partition_parts(system):
        for x in part:
            count[x] += 1
    count[0] = 1  # the identity is excluded from the partition
    over = np.nonzero(count > 1)[0]
    if len(over):
        return ("doubly-covered", int(over[0]))
    under = np.nonzero(count == 0)[0]
    if len(under):
        return ("uncovered", int(under[0]))
    return None


def check_P(system: HatSystem) -> bool:
    """Condition (P): the quotient sets complete the group partition."""
    return partition_witness(system) is None


# ----------------------------------------------------------------------
# Incidence structures
# ----------------------------------------------------------------------
class _Incidence:
    """Shared lookup machinery for affine and closed structures."""

    blocks: list[tuple[int, ...]]
    n_points: int

    @cached_property
    def block_index(self) -> dict[tuple[int, ...], int]:
        return {b: i for i, b in enumerate(self.blocks)}

    @cached_property
    def point_blocks(self) -> list[list[int]]:
        pb: list[list[int]] = [[] for _ in range(self.n_points)]
        for bid, b in enumerate(self.blocks):
            for p in b:
                pb[p].append(bid)
        return pb

    @cached_property
    def pair_block(self) -> np.ndarray:
        """pair_block[x, y] = id of the unique block through x and y.

        Requires AU4 / lambda = 1; -1 marks an uncovered pair and building
        raises on a doubly covered pair.
        """
        n = self.n_points
        table = np.full((n, n), -1, dtype=np.int32)
        for bid, b in enumerate(self.blocks):
            for i in range(len(b)):
                x = b[i]
                for j in range(i + 1, len(b)):
                    y = b[j]
                    if table[x, y] != -1:
                        raise UnitalError(
                            f"points {x},{y} on blocks {table[x, y]} and {bid}"
                        )
                    table[x, y] = bid
                    table[y, x] = bid
        return table

    @cached_property
    def blocks_meet(self) -> np.ndarray:
        """Boolean matrix: blocks sharing at least one point."""
        m = len(self.blocks)
        meet = np.zeros((m, m), dtype=bool)
        for pb in self.point_blocks:
            ids = np.array(pb, dtype=np.int32)
            meet[np.ix_(ids, ids)] = True
        return meet

    def joining_block_id(self, x: int, y: int) -> int:
        if x == y:
            raise ValueError("joining block requires two distinct points")
        bid = int(self.pair_block[x, y])
        if bid < 0:
            raise UnitalError(f"points {x},{y} lie on no common block")
        return bid


class AffineUnital(_Incidence):
    """Block structure of a hat system, with origin tags per block."""

    def __init__(self, system: HatSystem):
        self.system = system
        self.group = system.group
        self.n_points = system.group.order
        group = system.group
        cay = group.cayley

        blocks: list[tuple[int, ...]] = []
        tags: list[tuple[str, int]] = []
        seen: dict[tuple[int, ...], int] = {}
        # Counts arcuate translates colliding with an existing block, which
        # happens exactly when a base has a nontrivial right stabilizer
        # (never for the built-in systems).
        self.duplicate_blocks = 0

        def emit(block: tuple[int, ...], tag: tuple[str, int]) -> bool:
            if block in seen:
                return False
            seen[block] = len(blocks)
            blocks.append(block)
            tags.append(tag)
            return True

        s_arr = sorted(system.subgroup)
        for g in range(group.order):
            emit(tuple(sorted(int(cay[s, g]) for s in s_arr)), ("S", -1))
        self.short_rep: dict[int, tuple[int, int]] = {}
        for ti, syl in enumerate(group.sylow_subgroups):
            t_arr = sorted(syl)
            for g in range(group.order):
                block = tuple(sorted(int(cay[t, g]) for t in t_arr))
                if block not in seen:
                    self.short_rep[len(blocks)] = (ti, g)
                emit(block, ("T", ti))
        for di, base in enumerate(system.bases):
            d_arr = sorted(base)
            for g in range(group.order):
                if not emit(tuple(sorted(int(cay[x, g]) for x in d_arr)), ("D", di)):
                    self.duplicate_blocks += 1

        self.blocks = blocks
        self.tags = tags
        self.short_ids = [i for i, b in enumerate(blocks) if len(b) == group.field.q]
        self.long_ids = [i for i, b in enumerate(blocks) if len(b) == group.field.q + 1]

    @cached_property
    def blocks_through_identity(self) -> tuple[int, ...]:
        return tuple(self.point_blocks[0])

    @cached_property
    def hats(self) -> tuple[frozenset[int], ...]:
        """Per base, the block ids of its q+1 translates through 1."""
        out: list[set[int]] = [set() for _ in self.system.bases]
        for bid in self.blocks_through_identity:
            kind, k = self.tags[bid]
            if kind == "D":
                out[k].add(bid)
        return tuple(frozenset(s) for s in out)

    @cached_property
    def s_block_id(self) -> int:
        """Block id of the subgroup S itself."""
        return self.block_index[tuple(sorted(self.system.subgroup))]

    def translate_block_id(self, bid: int, h: int) -> int:
        """Id of the right translate (block * h)."""
        cay = self.group.cayley
        moved = tuple(sorted(int(cay[x, h]) for x in self.blocks[bid]))
        return self.block_index[moved]


def build_affine_unital(system: HatSystem) -> AffineUnital:
    """Construct the unital after re-checking (Q) and (P)."""
    for k, base in enumerate(system.bases):
        if not check_Q(system.group, base):
            raise UnitalError(f"condition (Q) fails for base {k}")
    w = partition_witness(system)
    if w is not None:
        kind, x = w
        raise PartitionError(f"condition (P) fails: element {x} is {kind}", witness=x)
    return AffineUnital(system)


def joining_block(unital: _Incidence, x: int, y: int) -> tuple[int, ...]:
    """The unique block through two distinct points."""
    return unital.blocks[unital.joining_block_id(x, y)]


# ----------------------------------------------------------------------
# Verification reports
# ----------------------------------------------------------------------
@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class Report:
    checks: list[CheckResult] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append(CheckResult(name, ok, detail))

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.ok]


def pair_coverage_counts(structure: _Incidence, threads: int = 1) -> np.ndarray:
    """Upper-triangular matrix counting the blocks through each point pair.

    With ``threads`` > 1 the block list is partitioned and the chunks are
    scanned concurrently; the merge is a commutative addition, so the
    result never depends on the thread count.
    """
    n = structure.n_points
    counts = np.zeros((n, n), dtype=np.int16)

    def pairs_of(chunk):
        xs, ys = [], []
        for b in chunk:
            for i in range(len(b)):
                for j in range(i + 1, len(b)):
                    xs.append(b[i])
                    ys.append(b[j])
        return np.array(xs, dtype=np.int32), np.array(ys, dtype=np.int32)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunks = [structure.blocks[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(pairs_of, chunks))
    else:
        parts = [pairs_of(structure.blocks)]
    for xs, ys in parts:
        np.add.at(counts, (xs, ys), 1)
    return counts


def _unique_joining_check(structure: _Incidence, threads: int) -> tuple[bool, str]:
    counts = pair_coverage_counts(structure, threads)
    iu = np.triu_indices(structure.n_points, 1)
    vals = counts[iu]
    over = np.nonzero(vals > 1)[0]
    if len(over):
        k = int(over[0])
        return False, f"pair ({int(iu[0][k])},{int(iu[1][k])}) on {int(vals[k])} blocks"
    under = np.nonzero(vals == 0)[0]
    if len(under):
        k = int(under[0])
        return False, f"pair ({int(iu[0][k])},{int(iu[1][k])}) uncovered"
    return True, ""


def verify_affine_unital(unital: AffineUnital, threads: int = 1) -> Report:
    """Check axioms (AU1)-(AU5); failures carry a witness in the detail."""
    rep = Report()
    q = unital.group.field.q
    n = unital.n_points

    rep.counts["points"] = n
    rep.counts["blocks"] = len(unital.blocks)
    rep.counts["short"] = len(unital.short_ids)
    rep.counts["long"] = len(unital.long_ids)
    rep.counts["duplicates"] = unital.duplicate_blocks

    rep.add("AU1", n == q**3 - q, f"{n} points")
    bad_size = [b for b in unital.blocks if len(b) not in (q, q + 1)]
    rep.add("AU2", not bad_size, "" if not bad_size else f"block of size {len(bad_size[0])}")

    deg_bad = [(p, len(pb)) for p, pb in enumerate(unital.point_blocks) if len(pb) != q * q]
    rep.add(
        "AU3",
        not deg_bad,
        "" if not deg_bad else f"point {deg_bad[0][0]} on {deg_bad[0][1]} blocks",
    )

    ok, detail = _unique_joining_check(unital, threads)
    rep.add("AU4", ok, detail)

    try:
        flat = flat_parallelism(unital)
        perr = parallelism_witness(unital, flat)
        rep.add("AU5", perr is None, perr or "flat parallelism exhibited")
    except UnitalError as exc:
        rep.add("AU5", False, str(exc))
    return rep


# ----------------------------------------------------------------------
# Parallelisms
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Parallelism:
    """Partition of the short blocks into q+1 classes, labelled by Sylow."""

    unital: AffineUnital
    name: str
    classes: tuple[frozenset[int], ...]
    labels: tuple[int, ...]  # Sylow index per class

    def class_of_block(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for ci, cl in enumerate(self.classes):
            for bid in cl:
                out[bid] = ci
        return out

    @cached_property
    def key(self) -> frozenset[frozenset[int]]:
        return frozenset(self.classes)

    @cached_property
    def is_right_invariant(self) -> bool:
        """Whether every right translation permutes the classes.

        Holds for both built-in parallelisms; checked exhaustively over
        all group elements.
        """
        u = self.unital
        cls = self.class_of_block()
        for h in range(u.group.order):
            for cl in self.classes:
                targets = {cls[u.translate_block_id(bid, h)] for bid in cl}
                if len(targets) != 1:
                    return False
        return True


def parallelism_witness(unital: AffineUnital, par: Parallelism) -> str | None:
    """None if valid, else a description of the first violation."""
    q = unital.group.field.q
    if len(par.classes) != q + 1:
        return f"{len(par.classes)} classes, expected {q + 1}"
    seen: set[int] = set()
    for ci, cl in enumerate(par.classes):
        if len(cl) != q * q - 1:
            return f"class {ci} has {len(cl)} blocks, expected {q * q - 1}"
        covered: set[int] = set()
        for bid in cl:
            b = unital.blocks[bid]
            if len(b) != q:
                return f"class {ci} contains non-short block {bid}"
            if covered.intersection(b):
                return f"class {ci} has intersecting blocks"
            covered.update(b)
        if seen.intersection(cl):
            return f"class {ci} repeats a block"
        seen.update(cl)
    if seen != set(unital.short_ids):
        return "classes do not cover all short blocks"
    return None


def flat_parallelism(unital: AffineUnital) -> Parallelism:
    """Short blocks grouped as right cosets of each Sylow subgroup."""
    groups: dict[int, set[int]] = {}
    for bid in unital.short_ids:
        ti = unital.tags[bid][1]
        groups.setdefault(ti, set()).add(bid)
    labels = tuple(sorted(groups))
    return Parallelism(
        unital,
        "flat",
        tuple(frozenset(groups[t]) for t in labels),
        labels,
    )


def natural_parallelism(unital: AffineUnital) -> Parallelism:
    """Short blocks grouped as left cosets: Tg lands with T conjugated by g."""
    group = unital.group
    sylow_lookup = {s: i for i, s in enumerate(group.sylow_subgroups)}
    groups: dict[int, set[int]] = {}
    for bid in unital.short_ids:
        ti, g = unital.short_rep[bid]
        conj = frozenset(group.conj_idx(t, g) for t in group.sylow_subgroups[ti])
        groups.setdefault(sylow_lookup[conj], set()).add(bid)
    labels = tuple(sorted(groups))
    return Parallelism(
        unital,
        "natural",
        tuple(frozenset(groups[t]) for t in labels),
        labels,
    )


def parallelism_by_name(unital: AffineUnital, name: str) -> Parallelism:
    if name == "flat":
        return flat_parallelism(unital)
    if name == "natural":
        return natural_parallelism(unital)
    raise ValueError(f"unknown parallelism {name!r} (expected 'flat' or 'natural')")


# ----------------------------------------------------------------------
# Closures
# ----------------------------------------------------------------------
class ClosedUnital(_Incidence):
    """The closure of an affine unital by a parallelism.

    Ideal points get indices n, n+1, ... in class order; the final block
    is the block at infinity consisting of all ideal points.
    """

    def __init__(self, unital: AffineUnital, par: Parallelism):
        err = parallelism_witness(unital, par)
        if err is not None:
            raise UnitalError(f"invalid parallelism: {err}")
        self.affine = unital
        self.parallelism = par
        n = unital.n_points
        self.n_points = n + len(par.classes)
        cls = par.class_of_block()
        blocks: list[tuple[int, ...]] = []
        self.affine_block_id: list[int | None] = []
        for bid, b in enumerate(unital.blocks):
            if bid in cls:
                blocks.append(b + (n + cls[bid],))
            else:
                blocks.append(b)
            self.affine_block_id.append(bid)
        self.infinity_block_id = len(blocks)
        blocks.append(tuple(range(n, self.n_points)))
        self.affine_block_id.append(None)
        self.blocks = blocks

    @property
    def ideal_points(self) -> tuple[int, ...]:
        return self.blocks[self.infinity_block_id]

    def ideal_point_of_class(self, ci: int) -> int:
        return self.affine.n_points + ci

    def ideal_point_of_sylow(self, sylow_index: int) -> int:
        ci = self.parallelism.labels.index(sylow_index)
        return self.ideal_point_of_class(ci)


def close(unital: AffineUnital, par: Parallelism) -> ClosedUnital:
    return ClosedUnital(unital, par)


def verify_design(closed: ClosedUnital, threads: int = 1) -> Report:
    """Check the 2-(q^3+1, q+1, 1) design axioms for a closure."""
    rep = Report()
    q = closed.affine.group.field.q
    n = closed.n_points
    rep.counts["points"] = n
    rep.counts["blocks"] = len(closed.blocks)

    rep.add("points", n == q**3 + 1, f"{n} points")
    bad = [b for b in closed.blocks if len(b) != q + 1]
    rep.add("block-size", not bad, "" if not bad else f"block of size {len(bad[0])}")
    deg = {len(pb) for pb in closed.point_blocks}
    rep.counts["replication"] = max(deg) if deg else 0
    rep.add("replication", deg == {q * q}, f"degrees {sorted(deg)}")
    ok, detail = _unique_joining_check(closed, threads)
    rep.add("lambda1", ok, detail)
    return rep
