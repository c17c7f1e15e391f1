"""Determinant enumeration and second-quantized operator strings on bitmasks.

A determinant with occupied orbitals p1 < p2 < ... < pN is the state
c+_{p1} c+_{p2} ... c+_{pN} |vac>, stored as the integer with those bits set.
Biorthogonal annihilation operators obey the same anticommutator as the
orthonormal ones, so all phase rules are the standard ones.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


class DeterminantError(ValueError):
    pass


def create(mask, p):
    """Apply c+_p; returns (new_mask, phase) or (None, 0) if p is occupied."""
    bit = 1 << p
    if mask & bit:
        return None, 0
    phase = 1 if bin(mask & (bit - 1)).count("1") % 2 == 0 else -1
    return mask | bit, phase


def annihilate(mask, p):
    """Apply the annihilator for orbital p; (None, 0) if p is empty."""
    bit = 1 << p
    if not mask & bit:
        return None, 0
    phase = 1 if bin(mask & (bit - 1)).count("1") % 2 == 0 else -1
    return mask & ~bit, phase


def occupied_orbitals(mask):
    out = []
    p = 0
    while mask:
        if mask & 1:
            out.append(p)
        mask >>= 1
        p += 1
    return out


@dataclass
class DeterminantSpace:
    """All N-particle determinants over L orbitals, optionally spin restricted.

    ``spins`` assigns +1/-1 to each orbital; with ``total_sz`` given (in units
    of 1/2, i.e. the summed spin labels), only determinants in that projection
    sector are enumerated.
    """

    n_particles: int
    n_orbitals: int
    spins: np.ndarray | None = None
    total_sz: int | None = None
    masks: np.ndarray = field(init=False)
    index: dict = field(init=False)
    occupations: np.ndarray = field(init=False)
    _one_body: tuple | None = field(default=None, init=False, repr=False)
    _two_body: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        n, L = self.n_particles, self.n_orbitals
        if not 0 <= n <= L:
            raise DeterminantError(f"need 0 <= N <= L, got N={n}, L={L}")
        if self.spins is not None:
            self.spins = np.asarray(self.spins, dtype=int)
            if self.spins.shape != (L,) or not np.all(np.abs(self.spins) == 1):
                raise DeterminantError("spins must be a length-L array of +-1")
        masks = []
        for occ in combinations(range(L), n):
            if self.total_sz is not None:
                if self.spins is None:
                    raise DeterminantError("spin restriction requires spin labels")
                if int(np.sum(self.spins[list(occ)])) != self.total_sz:
                    continue
            mask = 0
            for p in occ:
                mask |= 1 << p
            masks.append(mask)
        if not masks:
            raise DeterminantError("empty determinant space")
        masks.sort()
        self.masks = np.array(masks, dtype=np.int64)
        self.index = {m: i for i, m in enumerate(masks)}
        self.occupations = np.array([occupied_orbitals(m) for m in masks], dtype=np.int64)

    @property
    def dim(self):
        return len(self.masks)

    def reference_index(self):
        """Index of the determinant occupying orbitals 0..N-1."""
        ref = (1 << self.n_particles) - 1
        if ref not in self.index:
            raise DeterminantError("reference determinant not in this spin sector")
        return self.index[ref]

    def one_body_connections(self):
        """Arrays (nu, mu, sign, p, q) with <mu| c+_p ann_q |nu> = sign."""
        if self._one_body is not None:
            return self._one_body
        nus, mus, signs, ps, qs = [], [], [], [], []
        for nu, mask in enumerate(self.masks):
            for q in occupied_orbitals(int(mask)):
                m1, ph1 = annihilate(int(mask), q)
                for p in range(self.n_orbitals):
                    m2, ph2 = create(m1, p)
                    if m2 is None:
                        continue
                    mu = self.index.get(m2)
                    if mu is None:
                        continue
                    nus.append(nu)
                    mus.append(mu)
                    signs.append(ph1 * ph2)
                    ps.append(p)
                    qs.append(q)
        self._one_body = tuple(
            np.array(a, dtype=np.int64) for a in (nus, mus, signs, ps, qs)
        )
        return self._one_body

    def two_body_connections(self):
        """Arrays (nu, mu, sign, p, r, q, s) with <mu| c+_p c+_r ann_s ann_q |nu> = sign."""
        if self._two_body is not None:
            return self._two_body
        nus, mus, signs, ps, rs, qs, ss = [], [], [], [], [], [], []
        L = self.n_orbitals
        for nu, mask in enumerate(self.masks):
            occ = occupied_orbitals(int(mask))
            for q in occ:
                m1, ph1 = annihilate(int(mask), q)
                for s in occupied_orbitals(m1):
                    m2, ph2 = annihilate(m1, s)
                    empties = [r for r in range(L) if not (m2 >> r) & 1]
                    for r in empties:
                        m3, ph3 = create(m2, r)
                        for p in range(L):
                            m4, ph4 = create(m3, p)
                            if m4 is None:
                                continue
                            mu = self.index.get(m4)
                            if mu is None:
                                continue
                            nus.append(nu)
                            mus.append(mu)
                            signs.append(ph1 * ph2 * ph3 * ph4)
                            ps.append(p)
                            rs.append(r)
                            qs.append(q)
                            ss.append(s)
        self._two_body = tuple(
            np.array(a, dtype=np.int64) for a in (nus, mus, signs, ps, rs, qs, ss)
        )
        return self._two_body

    def excitation_matrix(self, p, q):
        """Dense matrix of c+_p ann_q in the determinant basis."""
        nu, mu, sign, ps, qs = self.one_body_connections()
        pick = (ps == p) & (qs == q)
        mat = np.zeros((self.dim, self.dim))
        mat[mu[pick], nu[pick]] = sign[pick]
        return mat
