"""The groups SL(2,q) for even q: enumeration, subgroups and automorphisms.

Group elements are 4-tuples (a, b, c, d) of field codes, read as the
row-major 2x2 matrix with determinant ad + bc = 1 (characteristic 2).
An :class:`SL2` instance indexes all q(q^2-1) elements once, with the
identity matrix at index 0 and the rest in lexicographic code order, and
carries the Cayley table so that all downstream set computations run on
integer indices.

For even q the automorphisms of SL(2,q) are exactly the maps
x -> phi^k(h^-1 x h): conjugation followed by an entrywise power of the
Frobenius.  :class:`AutMap` fixes that application order (conjugate
first, then Frobenius).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .gf2e import GF2e

Element = tuple[int, int, int, int]


@dataclass(frozen=True)
class AutMap:
    """An automorphism x -> phi^frob(conjugator^-1 x conjugator)."""

    conjugator: Element
    frob: int


class SL2:
    """SL(2,q) over a :class:`GF2e` field, with indexed fast operations."""

    def __init__(self, field: GF2e):
        self.field = field
        q = field.q
        one = (1, 0, 0, 1)
        elems = [one]
        for a in range(q):
            for b in range(q):
                # Solve ad + bc = 1 for the second row instead of filtering
                # all q^4 tuples; the brute-force route is kept in the tests
                # as an independent oracle.
                if a == 0 and b == 0:
                    continue
                for c in range(q):
                    if a != 0:
                        d = field.mul(1 ^ field.mul(b, c), field.inv(a))
                        t = (a, b, c, d)
                        if t != one:
                            elems.append(t)
                    else:
                        # a == 0: need bc = 1, i.e. c = b^-1, d free.
                        if c != field.inv(b):
                            continue
                        for d in range(q):
                            elems.append((a, b, c, d))
        rest = sorted(elems[1:])
        self.elements: list[Element] = [one] + rest
        self.order = len(self.elements)
        self.index: dict[Element, int] = {t: i for i, t in enumerate(self.elements)}

        # Cayley table, inverse table and Frobenius permutation, all on
        # indices.  Built vectorised; the group has at most 32736 elements
        # (q = 32) so the q(q^2-1) squared table stays manageable for the
        # orders used here (504 at q = 8).
        n = self.order
        arr = np.array(self.elements, dtype=np.int64)
        a, b, c, d = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
        M = field.mul_table.astype(np.int64)
        e_bits = field.e
        packed_index = np.full(1 << (4 * e_bits), -1, dtype=np.int32)
        pack = ((a << (3 * e_bits)) | (b << (2 * e_bits)) | (c << e_bits) | d)
        packed_index[pack] = np.arange(n, dtype=np.int32)
        self._packed_index = packed_index
        self._ebits = e_bits

        pa = M[a[:, None], a[None, :]] ^ M[b[:, None], c[None, :]]
        pb = M[a[:, None], b[None, :]] ^ M[b[:, None], d[None, :]]
        pc = M[c[:, None], a[None, :]] ^ M[d[:, None], c[None, :]]
        pd = M[c[:, None], b[None, :]] ^ M[d[:, None], d[None, :]]
        prod = (pa << (3 * e_bits)) | (pb << (2 * e_bits)) | (pc << e_bits) | pd
        self.cayley = packed_index[prod].astype(np.int32)

        inv_pack = (d << (3 * e_bits)) | (b << (2 * e_bits)) | (c << e_bits) | a
        self.inverse_index = packed_index[inv_pack].astype(np.int32)

        F = np.asarray(field._frob, dtype=np.int64)
        fr_pack = (F[a] << (3 * e_bits)) | (F[b] << (2 * e_bits)) | (F[c] << e_bits) | F[d]
        self.frob_index = packed_index[fr_pack].astype(np.int32)

        self._aut_perm_cache: dict[AutMap, np.ndarray] = {}

    # ------------------------------------------------------------------
    # Element-level operations
    # ------------------------------------------------------------------
    @property
    def one(self) -> Element:
        return (1, 0, 0, 1)

    def element(self, a: int, b: int, c: int, d: int) -> Element:
        """Validated construction: determinant must be 1."""
        f = self.field
        if f.mul(a, d) ^ f.mul(b, c) != 1:
            raise ValueError(f"matrix ({a},{b},{c},{d}) has determinant != 1")
        return (a, b, c, d)

    def multiply(self, x: Element, y: Element) -> Element:
        return self.elements[self.cayley[self.index[x], self.index[y]]]

    def inverse(self, x: Element) -> Element:
        return self.elements[self.inverse_index[self.index[x]]]

    def conjugate(self, x: Element, h: Element) -> Element:
        """h^-1 x h."""
        ih = self.inverse_index[self.index[h]]
        t = self.cayley[ih, self.index[x]]
        return self.elements[self.cayley[t, self.index[h]]]

    # ------------------------------------------------------------------
    # Index-level operations
    # ------------------------------------------------------------------
    def idx(self, x: Element) -> int:
        return self.index[x]

    def mul_idx(self, i: int, j: int) -> int:
        return int(self.cayley[i, j])

    def inv_idx(self, i: int) -> int:
        return int(self.inverse_index[i])

    def conj_idx(self, i: int, h: int) -> int:
        """Index of h^-1 x h for element indices i, h."""
        return int(self.cayley[self.cayley[self.inverse_index[h], i], h])

    def order_of_idx(self, i: int) -> int:
        n = 1
        j = i
        while j != 0:
            j = int(self.cayley[j, i])
            n += 1
        return n

    def subgroup_generated(self, gens: list[int]) -> frozenset[int]:
        """Closure of the generator indices under the group operation."""
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = int(self.cayley[x, g])
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return frozenset(seen)

    # ------------------------------------------------------------------
    # Named subgroups
    # ------------------------------------------------------------------
    @cached_property
    def sylow_subgroups(self) -> tuple[frozenset[int], ...]:
        """The q+1 Sylow 2-subgroups (conjugates of the unitriangulars)."""
        q = self.field.q
        upper = frozenset(self.index[(1, x, 0, 1)] for x in range(q))
        seen = {upper}
        for h in range(self.order):
            conj = frozenset(self.conj_idx(t, h) for t in upper)
            seen.add(conj)
        subs = sorted(seen, key=lambda s: sorted(s))
        if len(subs) != q + 1:
            raise RuntimeError(f"expected {q+1} Sylow subgroups, found {len(subs)}")
        return tuple(subs)

    def sylow_of_point(self, i: int) -> int:
        """Index (into sylow_subgroups) of the Sylow subgroup containing i."""
        for k, s in enumerate(self.sylow_subgroups):
            if i in s:
                return k
        raise ValueError(f"element index {i} lies in no Sylow 2-subgroup")

    def cyclic_subgroup(self, d: int, t: int) -> frozenset[int]:
        """The norm-1 torus {(a, b; d*b, a+t*b) : a^2+tab+db^2 = 1}.

        Requires X^2 + tX + d irreducible; the group has order q+1 and is
        cyclic.
        """
        f = self.field
        if not f.discriminant_check(d, t):
            raise ValueError(
                f"not a quadratic non-residue setup: X^2 + {t}X + {d} has a root"
            )
        members = []
        for a in f.elements():
            for b in f.elements():
                if f.mul(a, a) ^ f.mul(t, f.mul(a, b)) ^ f.mul(d, f.mul(b, b)) == 1:
                    members.append(self.index[(a, b, f.mul(d, b), a ^ f.mul(t, b))])
        group = frozenset(members)
        if len(group) != f.q + 1:
            raise RuntimeError(f"torus has {len(group)} elements, expected {f.q + 1}")
        if not any(self.order_of_idx(i) == f.q + 1 for i in group):
            raise RuntimeError("torus is not cyclic: no element of order q+1")
        return group

    # ------------------------------------------------------------------
    # Automorphisms
    # ------------------------------------------------------------------
    @property
    def identity_aut(self) -> AutMap:
        return AutMap(self.one, 0)

    def aut_perm(self, m: AutMap) -> np.ndarray:
        """The automorphism as a permutation array on element indices."""
        cached = self._aut_perm_cache.get(m)
        if cached is not None:
            return cached
        h = self.index[m.conjugator]
        perm = self.cayley[self.cayley[self.inverse_index[h]], h]
        for _ in range(m.frob % self.field.e):
            perm = self.frob_index[perm]
        perm = np.ascontiguousarray(perm, dtype=np.int32)
        perm.setflags(write=False)
        self._aut_perm_cache[m] = perm
        return perm

    def apply_aut(self, m: AutMap, x: Element) -> Element:
        return self.elements[self.aut_perm(m)[self.index[x]]]

    def apply_aut_idx(self, m: AutMap, i: int) -> int:
        return int(self.aut_perm(m)[i])

    def compose_aut(self, a: AutMap, b: AutMap) -> AutMap:
        """The map "apply a, then b" in the same (conjugate, frob) shape."""
        e = self.field.e
        hb = self.index[b.conjugator]
        for _ in range((e - a.frob % e) % e):
            hb = int(self.frob_index[hb])
        conj = self.cayley[self.index[a.conjugator], hb]
        return AutMap(self.elements[conj], (a.frob + b.frob) % e)

    def invert_aut(self, a: AutMap) -> AutMap:
        e = self.field.e
        h = self.inverse_index[self.index[a.conjugator]]
        for _ in range(a.frob % e):
            h = int(self.frob_index[h])
        return AutMap(self.elements[h], (e - a.frob % e) % e)

    @cached_property
    def all_aut_maps(self) -> tuple[AutMap, ...]:
        """All q(q^2-1)*e automorphisms, distinct as maps.

        For even q the centre is trivial, so distinct (conjugator, frob)
        pairs give distinct maps; this is verified at build time.
        """
        maps = []
        keys = set()
        for h in range(self.order):
            for k in range(self.field.e):
                m = AutMap(self.elements[h], k)
                key = self.aut_perm(m).tobytes()
                if key in keys:
                    raise RuntimeError("duplicate automorphism map; centre not trivial?")
                keys.add(key)
                maps.append(m)
        return tuple(maps)

    def aut_stabilizer(self, subgroup: frozenset[int]) -> tuple[AutMap, ...]:
        """All automorphisms mapping the subgroup onto itself setwise."""
        out = []
        for m in self.all_aut_maps:
            perm = self.aut_perm(m)
            if all(int(perm[s]) in subgroup for s in subgroup):
                out.append(m)
        return tuple(out)


_context_cache: dict[tuple[int, int], SL2] = {}


def sl2_context(q: int = 8, modulus: int | None = None) -> SL2:
    """Shared SL2 instance for a given field (built once per process)."""
    e = q.bit_length() - 1
    if 1 << e != q:
        raise ValueError(f"q={q} is not a power of 2")
    field = GF2e(e, modulus)
    key = (field.e, field.modulus)
    ctx = _context_cache.get(key)
    if ctx is None:
        ctx = SL2(field)
        _context_cache[key] = ctx
    return ctx
