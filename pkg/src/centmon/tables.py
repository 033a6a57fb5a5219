"""Precomputed lookup tables shared by the vectorised and compiled code paths."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .algebra import all_unary, check_k, majority_value, sigma

WORDS = 4  # 64-bit words per unary-map mask; 4 * 64 = 256 = 4**4


@dataclass(frozen=True)
class OpTables:
    k: int
    maps: np.ndarray  # (M, k) value tables, row n is the map with code n
    triples: np.ndarray  # (n, 3) sigma in canonical order
    target: np.ndarray  # (M, n) sigma position of s o t, or -1 when it has a repetition
    forced: np.ndarray  # (M, n) majority value of s o t where target == -1
    compose: np.ndarray  # (M, M) code of s o t

    @property
    def n_maps(self) -> int:
        return len(self.maps)

    @property
    def n_sigma(self) -> int:
        return len(self.triples)


@lru_cache(maxsize=None)
def op_tables(k: int = 4) -> OpTables:
    check_k(k)
    idx = sigma(k)
    maps = np.array([s.table for s in all_unary(k)], dtype=np.int64)
    triples = np.array(idx.triples, dtype=np.int64)
    n_maps, n = len(maps), len(triples)
    target = np.full((n_maps, n), -1, dtype=np.int64)
    forced = np.full((n_maps, n), -1, dtype=np.int64)
    for m in range(n_maps):
        st = maps[m]
        for i, t in enumerate(idx.triples):
            img = (int(st[t[0]]), int(st[t[1]]), int(st[t[2]]))
            j = idx.get(img)
            if j is None:
                forced[m, i] = majority_value(img)
            else:
                target[m, i] = j
    powers = k ** np.arange(k - 1, -1, -1)
    # compose[s, t] = code of s o t, i.e. table s[t[j]]
    composed = maps[:, maps]  # (M, M, k): composed[s, t, j] = maps[s, maps[t, j]]
    compose = (composed * powers).sum(axis=2)
    return OpTables(k, maps, triples, target, forced, compose)


def centraliser_matrix(values: np.ndarray, k: int = 4) -> np.ndarray:
    """Boolean (N, k**k) matrix: row i marks the unary maps commuting with f_i.

    ``values`` holds sigma values, one majority operation per row.
    """
    tab = op_tables(k)
    values = np.asarray(values, dtype=np.int64)
    if values.ndim == 1:
        values = values[None, :]
    n_rows = len(values)
    out = np.empty((n_rows, tab.n_maps), dtype=bool)
    in_sigma = tab.target >= 0
    for m in range(tab.n_maps):
        lhs = tab.maps[m][values]
        rhs = np.where(in_sigma[m], values[:, np.maximum(tab.target[m], 0)], tab.forced[m])
        out[:, m] = (lhs == rhs).all(axis=1)
    return out


def mask_to_int(bits: np.ndarray) -> int:
    """Pack a boolean vector (bit i = entry i) into a Python int."""
    return int.from_bytes(np.packbits(np.asarray(bits, dtype=bool), bitorder="little").tobytes(), "little")


def int_to_words(mask: int) -> np.ndarray:
    return np.array([(mask >> (64 * w)) & 0xFFFFFFFFFFFFFFFF for w in range(WORDS)], dtype=np.uint64)


def words_to_int(words) -> int:
    return sum(int(w) << (64 * i) for i, w in enumerate(words))


def _pack_words(bits: np.ndarray) -> np.ndarray:
    """(..., M) booleans -> (..., WORDS) uint64."""
    shape = bits.shape[:-1]
    padded = np.zeros(shape + (64 * WORDS,), dtype=bool)
    padded[..., : bits.shape[-1]] = bits
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return packed.view("<u8").reshape(shape + (WORDS,)).astype(np.uint64)


@dataclass(frozen=True)
class SearchTables:
    """Incremental commutation checks for the pruned search.

    ``self_ok[p, a]``: maps not refuted when sigma position p takes value a
    (checks whose right-hand side is p itself or forced by the majority law).
    ``pair_ok[p, j, a, b]``: maps not refuted by f(p) = a together with f(j) = b.
    """

    k: int
    self_ok: np.ndarray  # (n, k, WORDS) uint64
    pair_ok: np.ndarray  # (n, n, k, k, WORDS) uint64
    linked: np.ndarray  # (n, n) bool: some map relates positions p and j
    self_ok_int: tuple
    pair_ok_int: tuple
    all_maps: int


@lru_cache(maxsize=None)
def search_tables(k: int = 4) -> SearchTables:
    tab = op_tables(k)
    n, n_maps = tab.n_sigma, tab.n_maps
    self_ok = np.ones((n, k, n_maps), dtype=bool)
    pair_ok = np.ones((n, n, k, k, n_maps), dtype=bool)
    values = np.arange(k)
    for m in range(n_maps):
        st = tab.maps[m]
        for p in range(n):
            j = tab.target[m, p]
            if j < 0:
                self_ok[p, :, m] &= st[values] == tab.forced[m, p]
            elif j == p:
                self_ok[p, :, m] &= st[values] == values
            else:
                # s(f(p)) must equal f(j)
                bad = st[values][:, None] != values[None, :]
                pair_ok[p, j, :, :, m] &= ~bad
                pair_ok[j, p, :, :, m] &= ~bad.T
    linked = ~pair_ok.all(axis=(2, 3, 4))
    self_int = tuple(tuple(mask_to_int(self_ok[p, a]) for a in range(k)) for p in range(n))
    pair_int = tuple(
        tuple(tuple(tuple(mask_to_int(pair_ok[p, j, a, b]) for b in range(k)) for a in range(k)) for j in range(n))
        for p in range(n)
    )
    return SearchTables(
        k,
        _pack_words(self_ok),
        _pack_words(pair_ok),
        linked,
        self_int,
        pair_int,
        (1 << n_maps) - 1,
    )
