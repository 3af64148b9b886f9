# Copyright (C) 2024 Frobthresh developers
#
# Frobthresh is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# Frobthresh is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with Frobthresh.  If not, see <http://www.gnu.org/licenses/>.


"""Module for computing socle degrees of Frobenius-power quotients.

For a standard graded ring R over F_p with maximal homogeneous ideal m,
the socle degree v_R(q) is the largest degree in which R/m^[q] is nonzero.
The ratios v_R(q)/q approximate the diagonal F-threshold of R.
This module computes v_R(q) exactly for generic, symmetric
and skew-symmetric (Pfaffian) determinantal rings
and checks the values against the known thresholds and bounds.

All computations are exact.
Ranks are computed by dense elimination over F_p,
using rows packed into machine words when p = 2.
"""


__version__ = "1.0.0a1"


import configparser
import csv
import json
import logging
import math
import os
import pathlib
import sys
import time
from argparse import ArgumentParser, ArgumentTypeError
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import accumulate, combinations, permutations
from types import MappingProxyType, SimpleNamespace
from typing import IO, Any, Callable, Dict, Iterator, List, Mapping, \
    NamedTuple, Sequence, Tuple, Union

import numpy as np


logger = logging.getLogger("frobthresh")


############################################################
# LINEAR ALGEBRA OVER F_p
############################################################


MiB = 1 << 20
GiB = 1 << 30

MAX_MODULUS = 1 << 16

_WORD = 64


limits = SimpleNamespace(
    mem_cap=4 * GiB,
)
"""Resource limits."""


class GuardrailExceeded(MemoryError):
    """A computation would need more memory than the configured cap.

    :param estimate: Estimated footprint in bytes.
    :param cap: Memory cap in bytes.
    """

    def __init__(self, estimate: int, cap: int) -> None:
        super().__init__(
            f"Estimated footprint of {estimate} bytes exceeds the cap of {cap} bytes"
        )
        self.estimate = estimate
        self.cap = cap


@lru_cache(maxsize=None)
def is_prime(n: int) -> bool:
    """Check whether a number is prime."""
    if n < 2:
        return False
    return all(n % d != 0 for d in range(2, math.isqrt(n) + 1))


def _check_modulus(p: int) -> None:
    if not (2 <= p < MAX_MODULUS and is_prime(p)):
        raise ValueError(f"Modulus must be a prime below 2^16: {p}")


def estimate_footprint(rows: int, cols: int, p: int) -> int:
    """Estimate the peak memory needed to assemble and eliminate a matrix.

    The estimate counts the 16-bit assembly block and its residues,
    the working copy used during elimination,
    and the temporaries made when clearing a block of rows.

    :param rows: Number of rows.
    :param cols: Number of columns.
    :param p: Prime modulus.
    :return: Estimated footprint in bytes.
    """
    entries = rows * cols
    assembly = 2 * 2 * entries
    if p == 2:
        # bits as bytes and their padded copy, then packed rows,
        # the working copy and the cleared rows with their XOR result
        words = rows * (-(-cols // _WORD)) * 8
        return assembly + 2 * entries + 4 * words
    # stored residues, then the int64 working copy,
    # the cleared rows and the product subtracted from them
    return assembly + 2 * entries + 3 * 8 * entries


def check_footprint(rows: int, cols: int, p: int) -> int:
    """Reject a matrix whose estimated footprint exceeds the memory cap."""
    estimate = estimate_footprint(rows, cols, p)
    if estimate > limits.mem_cap:
        raise GuardrailExceeded(estimate, limits.mem_cap)
    return estimate


def _pack(bits: np.ndarray) -> np.ndarray:
    rows, cols = bits.shape
    words = -(-cols // _WORD)
    padded = np.zeros((rows, words * _WORD), dtype=np.uint8)
    padded[:, :cols] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").reshape(rows, words)


def _unpack(words: np.ndarray, cols: int) -> np.ndarray:
    rows = words.shape[0]
    octets = np.ascontiguousarray(words).view(np.uint8).reshape(rows, words.shape[1] * 8)
    return np.unpackbits(octets, axis=1, count=cols, bitorder="little")


class PrimeFieldMatrix:
    """A dense matrix over the prime field F_p.

    Entries are reduced modulo p on construction.
    For p = 2, rows are packed into 64-bit words;
    otherwise, entries are stored as 16-bit residues.
    The matrix is not modified after construction.

    :param entries: Two-dimensional array of integers.
    :param p: Prime modulus, below 2^16.
    """

    def __init__(self, entries: Any, p: int) -> None:
        _check_modulus(p)
        array = np.asarray(entries)
        if array.size == 0 and array.ndim != 2:
            array = array.reshape(0, 0)
        if array.ndim != 2:
            raise ValueError(f"Matrix entries must be two-dimensional: {array.shape}")
        if array.dtype.kind not in "iu":
            array = array.astype(np.int64)
        rows, cols = array.shape
        check_footprint(rows, cols, p)

        self.p = p
        self.rows = rows
        self.cols = cols
        residues = np.mod(array, p)
        if p == 2:
            self._data = _pack(residues.astype(np.uint8))
        else:
            self._data = residues.astype(np.uint16)
        self._data.flags.writeable = False

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], p: int,
                     length: int) -> "PrimeFieldMatrix":
        """Create a matrix out of its column vectors.

        :param columns: Column vectors.
        :param p: Prime modulus.
        :param length: Length of every column, the number of rows.
        """
        array = np.zeros((length, len(columns)), dtype=np.int64)
        for j, column in enumerate(columns):
            if len(column) != length:
                raise ValueError(f"Column {j} has length {len(column)}, expected {length}")
            array[:, j] = column
        return cls(array, p)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def to_array(self) -> np.ndarray:
        """Get the entries as an array of residues."""
        if self.p == 2:
            return _unpack(self._data, self.cols).astype(np.int64)
        return self._data.astype(np.int64)

    def transpose(self) -> "PrimeFieldMatrix":
        return PrimeFieldMatrix(self.to_array().T, self.p)

    def __eq__(self, other):
        if not isinstance(other, PrimeFieldMatrix):
            return NotImplemented
        return (self.p == other.p) and (self.shape == other.shape) and \
            bool(np.array_equal(self._data, other._data))

    def __repr__(self):
        return f"PrimeFieldMatrix(rows={self.rows}, cols={self.cols}, p={self.p})"


class RowReduction(NamedTuple):
    """Echelon form of a matrix and its pivot columns."""

    rows: np.ndarray
    pivots: Tuple[int, ...]


def _eliminate_packed(words: np.ndarray, cols: int,
                      full: bool) -> Tuple[np.ndarray, Tuple[int, ...]]:
    words = words.copy()
    nrows = words.shape[0]
    pivots: List[int] = []
    row = 0
    for col in range(cols):
        if row == nrows:
            break
        w, b = divmod(col, _WORD)
        bit = np.uint64(1 << b)
        hits = np.flatnonzero(words[row:, w] & bit)
        if hits.size == 0:
            continue
        pivot = row + int(hits[0])
        if pivot != row:
            words[[row, pivot]] = words[[pivot, row]]

        # columns before the pivot are already clear in the pivot row
        start = 0 if full else row + 1
        targets = start + np.flatnonzero(words[start:, w] & bit)
        targets = targets[targets != row]
        if targets.size > 0:
            words[targets, w:] ^= words[row, w:]
        pivots.append(col)
        row += 1
    return words, tuple(pivots)


def _eliminate_dense(array: np.ndarray, p: int,
                     full: bool) -> Tuple[np.ndarray, Tuple[int, ...]]:
    a = array.astype(np.int64)
    nrows, ncols = a.shape
    pivots: List[int] = []
    row = 0
    for col in range(ncols):
        if row == nrows:
            break
        hits = np.flatnonzero(a[row:, col])
        if hits.size == 0:
            continue
        pivot = row + int(hits[0])
        if pivot != row:
            a[[row, pivot]] = a[[pivot, row]]
        inverse = pow(int(a[row, col]), -1, p)
        a[row, col:] = (a[row, col:] * inverse) % p

        start = 0 if full else row + 1
        targets = start + np.flatnonzero(a[start:, col])
        targets = targets[targets != row]
        if targets.size > 0:
            block = a[targets, col:]
            block -= block[:, :1] * a[row, col:]
            block %= p
            a[targets, col:] = block
        pivots.append(col)
        row += 1
    return a, tuple(pivots)


def row_reduce(matrix: PrimeFieldMatrix, *, full: bool = True,
               packed: Union[bool, None] = None) -> RowReduction:
    """Bring a matrix into row echelon form.

    Pivots are always chosen as the topmost row
    in the leftmost column with a nonzero entry,
    and pivot rows are scaled to have 1 at the pivot.

    :param matrix: Matrix to reduce.
    :param full: Whether to also clear the entries above the pivots.
    :param packed: Whether to use word-packed rows;
        by default, these are used exactly when p = 2.
    :return: Reduced rows and pivot columns.
    """
    if packed is None:
        packed = matrix.p == 2
    if packed and (matrix.p != 2):
        raise ValueError(f"Word-packed elimination needs p = 2, not {matrix.p}")
    if packed:
        words, pivots = _eliminate_packed(matrix._data, matrix.cols, full)
        return RowReduction(_unpack(words, matrix.cols).astype(np.int64), pivots)
    reduced, pivots = _eliminate_dense(matrix.to_array(), matrix.p, full)
    return RowReduction(reduced, pivots)


def rank(matrix: PrimeFieldMatrix) -> int:
    """Get the rank of a matrix over F_p."""
    if matrix.p == 2:
        return len(_eliminate_packed(matrix._data, matrix.cols, False)[1])
    return len(_eliminate_dense(matrix._data, matrix.p, False)[1])


def kernel_basis(matrix: PrimeFieldMatrix) -> List[Tuple[int, ...]]:
    """Get a basis for the right null space of a matrix.

    There is one basis vector for every non-pivot column,
    in increasing column order.
    The vector for a column has 1 in that column
    and 0 in all other non-pivot columns.

    :param matrix: Matrix to get the null space of.
    :return: Basis vectors as residue tuples.
    """
    reduced, pivots = row_reduce(matrix)
    p = matrix.p
    pivot_columns = set(pivots)
    basis = []
    for free in range(matrix.cols):
        if free in pivot_columns:
            continue
        vector = [0] * matrix.cols
        vector[free] = 1
        for i, col in enumerate(pivots):
            vector[col] = -int(reduced[i, free]) % p
        basis.append(tuple(vector))
    return basis


def rank_of_column_stack(columns: Sequence[Sequence[int]], p: int) -> int:
    """Get the dimension of the span of a set of vectors over F_p.

    :param columns: Vectors to span.
    :param p: Prime modulus.
    """
    _check_modulus(p)
    vectors = list(columns)
    if len(vectors) == 0:
        return 0
    lengths = {len(v) for v in vectors}
    if len(lengths) > 1:
        raise ValueError(f"Vectors must have equal lengths: {sorted(lengths)}")
    # the span of the columns is the row space of the transpose
    return rank(PrimeFieldMatrix(np.array(vectors), p))


############################################################
# TRUNCATED POLYNOMIAL ALGEBRA
############################################################


Monomial = Tuple[int, ...]

MAX_Q = 256
MAX_EXPANSION_SIZE = 6


def _check_slice(r: int, q: int, d: int) -> None:
    if r < 1 or q < 1 or d < 0:
        raise ValueError(f"Invalid slice parameters: r={r}, q={q}, d={d}")


def truncated_dimension(r: int, q: int, d: int) -> int:
    """Count the monomials of degree d in r variables with all exponents below q.

    This is the dimension of the degree d component of S/m^[q].
    """
    _check_slice(r, q, d)
    return sum(
        (-1) ** i * math.comb(r, i) * math.comb(d - i * q + r - 1, r - 1)
        for i in range(min(r, d // q) + 1)
    )


def truncated_hilbert_series(r: int, q: int) -> List[int]:
    """Get the Hilbert function of S/m^[q] for r variables."""
    return [truncated_dimension(r, q, d) for d in range((q - 1) * r + 1)]


def _bounded_exponents(r: int, bound: int, d: int) -> Iterator[Monomial]:
    if r == 1:
        if d <= bound:
            yield (d,)
        return

    # the last variable varies slowest
    for last in range(min(bound, d) + 1):
        if d - last > bound * (r - 1):
            continue
        for head in _bounded_exponents(r - 1, bound, d - last):
            yield head + (last,)


class SliceBasis:
    """Monomial basis of a graded component of S/m^[q].

    Monomials are listed in decreasing graded reverse lexicographic order,
    with the variables ordered as x_1 > x_2 > ... > x_r.

    :param r: Number of variables.
    :param q: Bound on the exponents, all exponents are less than this.
    :param d: Degree of the component.
    """

    def __init__(self, r: int, q: int, d: int) -> None:
        _check_slice(r, q, d)
        if q > MAX_Q:
            raise ValueError(f"Exponent bound must be at most {MAX_Q}: {q}")
        self.r = r
        self.q = q
        self.d = d
        self.monomials: List[Monomial] = list(_bounded_exponents(r, q - 1, d))
        self.index: Mapping[Monomial, int] = MappingProxyType(
            {m: i for i, m in enumerate(self.monomials)}
        )
        self.exponents = np.array(self.monomials, dtype=np.uint8).reshape(-1, r)

    def __len__(self):
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)

    def __getitem__(self, i):
        return self.monomials[i]


@lru_cache(maxsize=256)
def slice_basis(r: int, q: int, d: int) -> SliceBasis:
    """Get the monomial basis of the degree d component of S/m^[q]."""
    return SliceBasis(r, q, d)


def _term_order(monomial: Monomial) -> Tuple[int, Monomial]:
    return -sum(monomial), tuple(reversed(monomial))


class ModularPolynomial:
    """A polynomial in r variables with coefficients in F_p.

    Coefficients are reduced modulo p and zero terms are dropped.
    The terms mapping is not modified after construction.

    :param p: Prime modulus.
    :param r: Number of variables.
    :param terms: Coefficients keyed by exponent vectors.
    """

    def __init__(self, p: int, r: int,
                 terms: Union[Mapping[Monomial, int], None] = None) -> None:
        _check_modulus(p)
        self.p = p
        self.r = r
        collected: Dict[Monomial, int] = {}
        for monomial, coeff in (terms or {}).items():
            monomial = tuple(monomial)
            if len(monomial) != r:
                raise ValueError(f"Monomial {monomial} does not have {r} exponents")
            collected[monomial] = (collected.get(monomial, 0) + coeff) % p
        self.terms: Dict[Monomial, int] = {m: c for m, c in collected.items() if c != 0}

    @classmethod
    def one(cls, p: int, r: int) -> "ModularPolynomial":
        return cls(p, r, {(0,) * r: 1})

    @classmethod
    def variable(cls, p: int, r: int, index: int) -> "ModularPolynomial":
        """Get the polynomial consisting of a single variable."""
        exponents = [0] * r
        exponents[index] = 1
        return cls(p, r, {tuple(exponents): 1})

    @property
    def degree(self) -> Union[int, None]:
        """Total degree, None for the zero polynomial."""
        return max((sum(m) for m in self.terms), default=None)

    def is_homogeneous(self) -> bool:
        return len({sum(m) for m in self.terms}) <= 1

    def truncate(self, q: int) -> "ModularPolynomial":
        """Drop all terms that lie in m^[q]."""
        return ModularPolynomial(
            self.p, self.r, {m: c for m, c in self.terms.items() if max(m) < q}
        )

    def scale_variables(self, factors: Sequence[int]) -> "ModularPolynomial":
        """Substitute f_i * x_i for every variable x_i."""
        terms = {}
        for monomial, coeff in self.terms.items():
            for factor, e in zip(factors, monomial):
                coeff = coeff * pow(factor, e, self.p) % self.p
            terms[monomial] = coeff
        return ModularPolynomial(self.p, self.r, terms)

    def format(self, labels: Union[Sequence[str], None] = None) -> str:
        """Get a readable representation of the polynomial.

        :param labels: Names of the variables, x1, x2, ... by default.
        """
        if len(self.terms) == 0:
            return "0"
        if labels is None:
            labels = [f"x{i + 1}" for i in range(self.r)]
        pieces = []
        for monomial in sorted(self.terms, key=_term_order):
            coeff = self.terms[monomial]
            factors = [
                label if e == 1 else f"{label}^{e}"
                for label, e in zip(labels, monomial)
                if e > 0
            ]
            if (coeff != 1) or (len(factors) == 0):
                factors.insert(0, str(coeff))
            pieces.append("*".join(factors))
        return " + ".join(pieces)

    def _check_compatible(self, other: "ModularPolynomial") -> None:
        if (self.p != other.p) or (self.r != other.r):
            raise ValueError("Polynomials must have the same modulus and variables")

    def __bool__(self):
        return len(self.terms) > 0

    def __eq__(self, other):
        if not isinstance(other, ModularPolynomial):
            return NotImplemented
        return (self.p, self.r, self.terms) == (other.p, other.r, other.terms)

    __hash__ = None  # type: ignore

    def __neg__(self):
        return ModularPolynomial(self.p, self.r, {m: -c for m, c in self.terms.items()})

    def __add__(self, other):
        if not isinstance(other, ModularPolynomial):
            return NotImplemented
        self._check_compatible(other)
        terms = dict(self.terms)
        for monomial, coeff in other.terms.items():
            terms[monomial] = terms.get(monomial, 0) + coeff
        return ModularPolynomial(self.p, self.r, terms)

    def __sub__(self, other):
        if not isinstance(other, ModularPolynomial):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return ModularPolynomial(
                self.p, self.r, {m: c * other for m, c in self.terms.items()}
            )
        if not isinstance(other, ModularPolynomial):
            return NotImplemented
        self._check_compatible(other)
        terms: Dict[Monomial, int] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                product = tuple(a + b for a, b in zip(m1, m2))
                terms[product] = (terms.get(product, 0) + c1 * c2) % self.p
        return ModularPolynomial(self.p, self.r, terms)

    __rmul__ = __mul__

    def __pow__(self, exponent):
        if not isinstance(exponent, int) or exponent < 0:
            return NotImplemented
        result = ModularPolynomial.one(self.p, self.r)
        for _ in range(exponent):
            result = result * self
        return result

    def __repr__(self):
        return f"ModularPolynomial({self.format()}, p={self.p})"


_LAYOUT_FAMILIES = ("generic", "symmetric", "skew")


class VariableLayout:
    """Variables of a generic, symmetric or skew-symmetric matrix.

    The variables are the entries x_ij in row-major order.
    A symmetric matrix uses only the upper triangle (x_ji = x_ij),
    a skew-symmetric matrix only the strict upper triangle
    (x_ii = 0, x_ji = -x_ij).

    :param family: Matrix family, one of "generic", "symmetric", "skew".
    :param m: Number of rows.
    :param n: Number of columns, same as the number of rows by default.
    """

    def __init__(self, family: str, m: int, n: Union[int, None] = None) -> None:
        n = m if n is None else n
        if family not in _LAYOUT_FAMILIES:
            raise ValueError(f"Unknown matrix family: '{family}'")
        if (m < 1) or (n < 1):
            raise ValueError(f"Invalid matrix size: {m}x{n}")
        if (family != "generic") and (m != n):
            raise ValueError(f"A {family} matrix must be square: {m}x{n}")
        self.family = family
        self.m = m
        self.n = n

        if family == "generic":
            positions = [(i, j) for i in range(1, m + 1) for j in range(1, n + 1)]
        elif family == "symmetric":
            positions = [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
        else:
            positions = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        self.positions: Tuple[Tuple[int, int], ...] = tuple(positions)
        self._index = {pos: k for k, pos in enumerate(self.positions)}

        wide = max(m, n) > 9
        self.labels: Tuple[str, ...] = tuple(
            f"x{i}_{j}" if wide else f"x{i}{j}" for i, j in self.positions
        )

    @property
    def r(self) -> int:
        """Number of variables."""
        return len(self.positions)

    def entry(self, i: int, j: int) -> Union[Tuple[int, int], None]:
        """Get the variable index and sign of a matrix entry.

        :param i: Row number, starting from 1.
        :param j: Column number, starting from 1.
        :return: Variable index and sign, or None if the entry is zero.
        """
        if self.family == "generic":
            return self._index[(i, j)], 1
        if self.family == "symmetric":
            return self._index[(min(i, j), max(i, j))], 1
        if i == j:
            return None
        return (self._index[(i, j)], 1) if i < j else (self._index[(j, i)], -1)

    def variable(self, i: int, j: int) -> int:
        """Get the index of the variable at a matrix entry."""
        found = self.entry(i, j)
        if found is None:
            raise ValueError(f"Entry ({i}, {j}) is not a variable")
        return found[0]


def _permutation_sign(perm: Sequence[int]) -> int:
    inversions = sum(1 for a, b in combinations(perm, 2) if a > b)
    return -1 if inversions % 2 == 1 else 1


def _determinant(entry: Callable[[int, int], Union[Tuple[int, int], None]],
                 size: int, p: int, r: int) -> ModularPolynomial:
    if size > MAX_EXPANSION_SIZE:
        raise ValueError(f"Determinant expansion is limited to size {MAX_EXPANSION_SIZE}")
    terms: Dict[Monomial, int] = {}
    for perm in permutations(range(size)):
        sign = _permutation_sign(perm)
        exponents = [0] * r
        for i, j in enumerate(perm):
            found = entry(i, j)
            if found is None:
                break
            var, var_sign = found
            exponents[var] += 1
            sign *= var_sign
        else:
            key = tuple(exponents)
            terms[key] = terms.get(key, 0) + sign
    return ModularPolynomial(p, r, terms)


def matrix_determinant(layout: VariableLayout, p: int) -> ModularPolynomial:
    """Expand the determinant of a square matrix of variables over F_p.

    Coefficients are collected after the identifications of the layout,
    so that all cancellations modulo p take place.
    """
    if layout.m != layout.n:
        raise ValueError(f"Determinant needs a square matrix: {layout.m}x{layout.n}")
    return _determinant(lambda i, j: layout.entry(i + 1, j + 1), layout.n, p, layout.r)


def _pfaffian(layout: VariableLayout, indices: Tuple[int, ...],
              p: int) -> ModularPolynomial:
    if len(indices) == 0:
        return ModularPolynomial.one(p, layout.r)
    first, rest = indices[0], indices[1:]
    result = ModularPolynomial(p, layout.r)
    for k, j in enumerate(rest):
        variable = ModularPolynomial.variable(p, layout.r, layout.variable(first, j))
        minor = _pfaffian(layout, rest[:k] + rest[k + 1:], p)
        term = variable * minor
        result = result + (term if k % 2 == 0 else -term)
    return result


def maximal_minors(layout: VariableLayout, p: int) -> List[ModularPolynomial]:
    """Get the n x n minors of an m x n generic matrix of variables.

    Minors are ordered lexicographically by their row subsets.
    """
    if (layout.family != "generic") or (layout.m < layout.n):
        raise ValueError("Maximal minors need a generic m x n matrix with m >= n")
    minors = []
    for chosen in combinations(range(1, layout.m + 1), layout.n):
        minor = _determinant(
            lambda i, j, rows=chosen: layout.entry(rows[i], j + 1),
            layout.n, p, layout.r,
        )
        minors.append(minor)
    return minors


def build_family_polynomial(layout: VariableLayout, p: int) -> ModularPolynomial:
    """Build the defining polynomial of a hypersurface family over F_p.

    This is the determinant for generic and symmetric matrices,
    and the Pfaffian for skew-symmetric matrices.
    The Pfaffian is expanded along the first row
    and normalized to give x12 for the 2 x 2 matrix.
    """
    if layout.family == "skew":
        if layout.n % 2 != 0:
            raise ValueError(f"Pfaffian needs an even size: {layout.n}")
        return _pfaffian(layout, tuple(range(1, layout.n + 1)), p)
    return matrix_determinant(layout, p)


def block_variables(layout: VariableLayout) -> List[int]:
    """Get the variables inside the diagonal blocks of a skew-symmetric matrix.

    For n = 2m, these are the x_ij where i and j are both at most m,
    or both greater than m.
    """
    if (layout.family != "skew") or (layout.n % 2 != 0):
        raise ValueError("Diagonal blocks need an even skew-symmetric matrix")
    half = layout.n // 2
    return [k for k, (i, j) in enumerate(layout.positions) if (i <= half) == (j <= half)]


def multiply_reduce(f: ModularPolynomial, m: Sequence[int],
                    q: int) -> ModularPolynomial:
    """Multiply a polynomial by a monomial in S/m^[q]."""
    m = tuple(m)
    if len(m) != f.r:
        raise ValueError(f"Monomial {m} does not have {f.r} exponents")
    terms = {}
    for monomial, coeff in f.terms.items():
        product = tuple(a + b for a, b in zip(monomial, m))
        if max(product) < q:
            terms[product] = coeff
    return ModularPolynomial(f.p, f.r, terms)


def _multiplication_block(f: ModularPolynomial, q: int, source: SliceBasis,
                          target: SliceBasis) -> np.ndarray:
    check_footprint(len(target), len(source), f.p)
    block = np.zeros((len(target), len(source)), dtype=np.uint16)
    if (len(source) == 0) or (len(target) == 0):
        return block
    exponents = source.exponents.astype(np.int32)
    for monomial, coeff in f.terms.items():
        products = exponents + np.asarray(monomial, dtype=np.int32)
        columns = np.flatnonzero((products < q).all(axis=1))
        if columns.size == 0:
            continue
        rows = np.array(
            [target.index[tuple(e)] for e in products[columns].tolist()], dtype=np.intp
        )
        block[rows, columns] = (block[rows, columns].astype(np.int64) + coeff) % f.p
    return block


def mult_map_matrix(f: ModularPolynomial, q: int, d_source: int) -> PrimeFieldMatrix:
    """Get the matrix of the multiplication by f on S/m^[q].

    Columns are indexed by the monomials of degree ``d_source``
    and rows by the monomials of degree ``d_source + deg(f)``,
    both in slice basis order.
    The zero polynomial is treated as having degree 0.

    :param f: Homogeneous polynomial to multiply with.
    :param q: Frobenius power.
    :param d_source: Degree of the source component.
    """
    if d_source < 0:
        raise ValueError(f"Source degree must be nonnegative: {d_source}")
    if not f.is_homogeneous():
        raise ValueError("Multiplication map needs a homogeneous polynomial")
    k = f.degree or 0
    source = slice_basis(f.r, q, d_source)
    target = slice_basis(f.r, q, d_source + k)
    return PrimeFieldMatrix(_multiplication_block(f, q, source, target), f.p)


############################################################
# SOCLE DEGREES
############################################################


SOCLE_FAMILIES = ("generic", "maximal_minors", "pfaffian", "polynomial_ring", "symmetric")


def frobenius_power(p: int, s: int) -> int:
    """Get q = p^s, after checking that p is prime and s is positive."""
    _check_modulus(p)
    if s < 1:
        raise ValueError(f"Frobenius exponent must be positive: {s}")
    return p ** s


@dataclass(frozen=True)
class FamilySpec:
    """A ring in one of the supported families, with a Frobenius power.

    For a polynomial ring, ``n`` is the number of variables and ``m`` is 1.
    A generic matrix with more rows than columns stands for
    the ring defined by its maximal minors.
    """

    family: str
    m: int
    n: int
    p: int
    s: int

    def __post_init__(self):
        if self.family not in SOCLE_FAMILIES:
            raise ValueError(f"Unknown family: '{self.family}'")
        frobenius_power(self.p, self.s)
        if (self.m < 1) or (self.n < 1):
            raise ValueError(f"Invalid size: {self.m}x{self.n}")
        if self.family in ("symmetric", "pfaffian") and (self.m != self.n):
            raise ValueError(f"A {self.family} matrix must be square: {self.m}x{self.n}")
        if (self.family == "polynomial_ring") and (self.m != 1):
            raise ValueError("Polynomial ring takes a single size")
        if self.family in ("generic", "maximal_minors") and (self.m < self.n):
            raise ValueError(f"Maximal minors need m >= n: {self.m}x{self.n}")
        if (self.family == "pfaffian") and (self.n % 2 != 0):
            raise ValueError(f"Pfaffian needs an even size: {self.n}")

    @classmethod
    def of(cls, family: str, *sizes: int, p: int, s: int) -> "FamilySpec":
        """Create a spec from one size (square or variable count) or two sizes."""
        if len(sizes) == 1:
            m = 1 if family == "polynomial_ring" else sizes[0]
            return cls(family, m, sizes[0], p, s)
        if len(sizes) == 2:
            return cls(family, sizes[0], sizes[1], p, s)
        raise ValueError(f"Expected one or two sizes: {sizes}")

    @property
    def q(self) -> int:
        return self.p ** self.s

    @property
    def is_hypersurface(self) -> bool:
        return (self.family in ("symmetric", "pfaffian")) or \
            ((self.family == "generic") and (self.m == self.n))

    @property
    def r(self) -> int:
        """Number of variables."""
        n = self.n
        if self.family == "symmetric":
            return n * (n + 1) // 2
        if self.family == "pfaffian":
            return n * (n - 1) // 2
        if self.family == "polynomial_ring":
            return n
        return self.m * n

    @property
    def k(self) -> Union[int, None]:
        """Degree of the defining polynomial of a hypersurface."""
        if not self.is_hypersurface:
            return None
        return self.n // 2 if self.family == "pfaffian" else self.n

    @property
    def theorem_c(self) -> Fraction:
        """The diagonal F-threshold c(R)."""
        n = self.n
        if self.family == "symmetric":
            return Fraction(n * n - 1, 2)
        if self.family == "pfaffian":
            return Fraction(n * n - 2 * n, 2)
        if self.family == "polynomial_ring":
            return Fraction(n)
        return Fraction(self.m * (n - 1))

    @property
    def lower_bound(self) -> int:
        """Negative of the a-invariant, a lower bound for c(R)."""
        if self.is_hypersurface:
            return self.r - self.k  # type: ignore
        if self.family == "polynomial_ring":
            return self.n
        return self.m * (self.n - 1)

    @property
    def upper_bound_vq(self) -> int:
        """Upper bound for v_R(q) at this q."""
        q, n = self.q, self.n
        if self.family == "symmetric":
            return q * (n * n - 1) // 2 - math.comb(n, 2)
        if self.family == "pfaffian":
            half = n // 2
            return 2 * (q - 1) * half * (half - 1)
        if self.family == "polynomial_ring":
            return (q - 1) * n
        return (q - 1) * self.m * (n - 1)

    @property
    def start_hint(self) -> int:
        """Degree to start scanning downwards from."""
        if self.family == "symmetric":
            q, n = self.q, self.n
            return (q - 1) * math.comb(n, 2) + -(-q * (n - 1) // 2)
        return self.upper_bound_vq


class SliceDimension(NamedTuple):
    """Dimensions at one degree of a socle degree scan."""

    degree: int
    dimension: int
    rank: int
    quotient: int


class Annihilator(NamedTuple):
    """A nonzero element of least degree in the annihilator of f in S/m^[q]."""

    degree: int
    witness: ModularPolynomial


@dataclass
class ThresholdReport:
    """Result of a socle degree computation."""

    spec: Union[FamilySpec, None]
    q: int
    r: int
    v: Union[int, None] = None
    indeg_ann: Union[int, None] = None
    witness: Union[ModularPolynomial, None] = None
    lower_bound: Union[int, None] = None
    theorem_c: Union[Fraction, None] = None
    upper_bound_vq: Union[int, None] = None
    slice_dims: List[SliceDimension] = field(default_factory=list)
    checks: Dict[str, bool] = field(default_factory=dict)
    wall_time: float = 0.0
    skipped: bool = False
    estimate: Union[int, None] = None

    @property
    def ratio(self) -> Union[Fraction, None]:
        return None if self.v is None else Fraction(self.v, self.q)

    @property
    def bounds_ok(self) -> bool:
        return (not self.skipped) and all(self.checks.values())


QuotientAt = Callable[[int], SliceDimension]


def _socle_scan(quotient_at: QuotientAt, top: int, *, start: Union[int, None] = None,
                exhaustive: bool = False) -> Tuple[int, List[SliceDimension]]:
    if exhaustive:
        records = [quotient_at(d) for d in range(top + 1)]
        return max(rec.degree for rec in records if rec.quotient > 0), records

    records = []
    if (start is not None) and (start < top):
        check = quotient_at(start + 1)
        records.append(check)
        if check.quotient > 0:
            logger.warning("Start hint %d failed verification, scanning from %d", start, top)
            start = top
    else:
        start = top

    for d in range(start, -1, -1):
        rec = quotient_at(d)
        records.append(rec)
        if rec.quotient > 0:
            return d, sorted(records)
    raise AssertionError("Degree 0 of the quotient can not vanish")


def _is_annihilator(f: ModularPolynomial, g: ModularPolynomial, q: int) -> bool:
    return bool(g.truncate(q)) and not (f * g).truncate(q)


def _check_hypersurface(f: ModularPolynomial, p: int) -> None:
    if f.p != p:
        raise ValueError(f"Polynomial is over F_{f.p}, not F_{p}")
    if not f:
        raise ValueError("Zero polynomial, use v_polynomial_ring for the polynomial ring")
    if not f.is_homogeneous() or (f.degree < 1):  # type: ignore
        raise ValueError("Hypersurface needs a homogeneous polynomial of positive degree")


def indeg_annihilator(f: ModularPolynomial, p: int, s: int) -> Annihilator:
    """Find the initial degree of the annihilator of f in S/m^[q].

    The witness is built from the first kernel basis vector
    of the multiplication map at the initial degree.

    :param f: Homogeneous polynomial of positive degree.
    :param p: Prime characteristic.
    :param s: Frobenius exponent, q = p^s.
    """
    q = frobenius_power(p, s)
    _check_hypersurface(f, p)
    top = (q - 1) * f.r
    for d in range(top + 1):
        kernel = kernel_basis(mult_map_matrix(f, q, d))
        if len(kernel) > 0:
            source = slice_basis(f.r, q, d)
            witness = ModularPolynomial(p, f.r, dict(zip(source.monomials, kernel[0])))
            return Annihilator(d, witness)
    # the socle monomial always annihilates f
    raise AssertionError(f"No annihilator up to degree {top}")


def v_hypersurface(f: ModularPolynomial, p: int, s: int, *,
                   start: Union[int, None] = None,
                   exhaustive: bool = False) -> ThresholdReport:
    """Compute the socle degree v_R(q) for R = S/(f).

    The scan goes down from the top degree, or from a start hint
    after verifying that the quotient vanishes one degree above it,
    and stops at the first degree where the quotient is nonzero.
    The initial degree of the annihilator of f is computed independently
    by scanning upwards, and the duality between the two is recorded
    as a check.

    :param f: Homogeneous polynomial of positive degree.
    :param p: Prime characteristic.
    :param s: Frobenius exponent, q = p^s.
    :param start: Degree known to bound v_R(q) from above.
    :param exhaustive: Whether to compute the quotient at every degree.
    """
    q = frobenius_power(p, s)
    _check_hypersurface(f, p)
    started = time.perf_counter()
    r, k = f.r, f.degree
    top = (q - 1) * r

    def quotient_at(d):
        dimension = truncated_dimension(r, q, d)
        rk = 0 if d < k else rank(mult_map_matrix(f, q, d - k))
        logger.debug("degree %d: dimension %d, rank %d", d, dimension, rk)
        return SliceDimension(d, dimension, rk, dimension - rk)

    v, records = _socle_scan(quotient_at, top, start=start, exhaustive=exhaustive)
    annihilator = indeg_annihilator(f, p, s)
    report = ThresholdReport(spec=None, q=q, r=r, v=v, indeg_ann=annihilator.degree,
                             witness=annihilator.witness, slice_dims=records)
    report.checks["duality"] = v + annihilator.degree == top
    report.checks["witness"] = _is_annihilator(f, annihilator.witness, q)
    report.wall_time = time.perf_counter() - started
    return report


def v_determinantal(m: int, n: int, p: int, s: int, *,
                    exhaustive: bool = False) -> ThresholdReport:
    """Compute the socle degree v_R(q) for the maximal minors of an m x n matrix.

    At every degree, the component of the ideal generated by the minors
    and m^[q] is spanned by the products of the minors with monomials,
    reduced into S/m^[q].

    :param m: Number of rows.
    :param n: Number of columns, at most m.
    :param p: Prime characteristic.
    :param s: Frobenius exponent, q = p^s.
    :param exhaustive: Whether to compute the quotient at every degree.
    """
    q = frobenius_power(p, s)
    if not m >= n >= 1:
        raise ValueError(f"Maximal minors need m >= n >= 1: {m}x{n}")
    started = time.perf_counter()
    layout = VariableLayout("generic", m, n)
    minors = maximal_minors(layout, p)
    r = layout.r
    top = (q - 1) * r

    def quotient_at(d):
        target = slice_basis(r, q, d)
        rk = 0
        if d >= n:
            source = slice_basis(r, q, d - n)
            check_footprint(len(target), len(minors) * len(source), p)
            blocks = [_multiplication_block(g, q, source, target) for g in minors]
            rk = rank_of_column_stack(np.hstack(blocks).T, p)
        logger.debug("degree %d: dimension %d, rank %d", d, len(target), rk)
        return SliceDimension(d, len(target), rk, len(target) - rk)

    start = (q - 1) * m * (n - 1)
    v, records = _socle_scan(quotient_at, top, start=start, exhaustive=exhaustive)
    report = ThresholdReport(spec=None, q=q, r=r, v=v, slice_dims=records)
    report.wall_time = time.perf_counter() - started
    return report


def v_polynomial_ring(r: int, p: int, s: int) -> ThresholdReport:
    """Get the socle degree (q-1)r of a polynomial ring in r variables."""
    q = frobenius_power(p, s)
    if r < 1:
        raise ValueError(f"Polynomial ring needs at least one variable: {r}")
    return ThresholdReport(spec=None, q=q, r=r, v=(q - 1) * r)


def char2_symmetric_annihilator(n: int, s: int) -> ModularPolynomial:
    """Get f^(q/2-1) x11^(q/2) in S/m^[q] for the symmetric determinant f over F_2."""
    q = frobenius_power(2, s)
    layout = VariableLayout("symmetric", n)
    f = build_family_polynomial(layout, 2)
    x11 = ModularPolynomial.variable(2, layout.r, layout.variable(1, 1))
    g = (x11 ** (q // 2)).truncate(q)
    for _ in range(q // 2 - 1):
        g = (g * f).truncate(q)
    return g


@dataclass
class Degeneration:
    """Socle degrees along the degeneration of a Pfaffian to a determinant."""

    n: int
    p: int
    s: int
    values: List[Tuple[int, int]]
    polynomial_part: int
    determinantal_part: int
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def q(self) -> int:
        return self.p ** self.s

    @property
    def composed(self) -> int:
        """Socle degree at t = 0, computed from the tensor factors."""
        return self.polynomial_part + self.determinantal_part


def degenerate_pfaffian(n: int, p: int, s: int,
                        t_values: Sequence[int]) -> Degeneration:
    """Compute socle degrees along the degeneration of the Pfaffian.

    The variables inside the diagonal m x m blocks (n = 2m) are scaled by t.
    At t = 0, the Pfaffian becomes the determinant of the off-diagonal block,
    and the ring is a tensor product of a polynomial ring
    in the block variables with a generic determinantal ring.

    :param n: Size of the skew-symmetric matrix, even.
    :param p: Prime characteristic.
    :param s: Frobenius exponent, q = p^s.
    :param t_values: Residues to substitute for t, including 0 and 1.
    """
    q = frobenius_power(p, s)
    if (n < 2) or (n % 2 != 0):
        raise ValueError(f"Pfaffian needs an even size: {n}")
    residues = sorted({t % p for t in t_values})
    if (0 not in residues) or (1 not in residues):
        raise ValueError(f"Parameter values must include 0 and 1: {list(t_values)}")

    layout = VariableLayout("skew", n)
    pfaffian = build_family_polynomial(layout, p)
    inside = set(block_variables(layout))
    values = []
    for t in residues:
        factors = [t if i in inside else 1 for i in range(layout.r)]
        f_t = pfaffian.scale_variables(factors)
        values.append((t, v_hypersurface(f_t, p, s).v))
        logger.info("Pfaffian %d, q=%d, t=%d: v=%d", n, q, t, values[-1][1])

    half = n // 2
    block_count = half * (half - 1)
    polynomial_part = v_polynomial_ring(block_count, p, s).v if block_count > 0 else 0
    report = Degeneration(
        n=n, p=p, s=s, values=values,
        polynomial_part=polynomial_part,  # type: ignore
        determinantal_part=v_determinantal(half, half, p, s).v,  # type: ignore
    )
    by_t = dict(values)
    report.checks["constant"] = len({v for t, v in values if t != 0}) == 1
    report.checks["semicontinuous"] = by_t[1] <= by_t[0]
    report.checks["additive"] = by_t[0] == report.composed
    return report


def bound_checks(spec: FamilySpec, v: int) -> Dict[str, bool]:
    """Check a socle degree against the known bounds for its family.

    :param spec: Ring and Frobenius power.
    :param v: Computed socle degree.
    :return: Outcome of every applicable inequality, by name.
    """
    q, n = spec.q, spec.n
    checks = {"socle_bound": v <= (q - 1) * spec.r}
    if spec.family in ("generic", "maximal_minors"):
        checks["determinantal_upper"] = v <= spec.upper_bound_vq
    elif spec.family == "symmetric":
        checks["symmetric_upper"] = v <= spec.upper_bound_vq
        if spec.p > 2:
            checks["symmetric_lower"] = 2 * v >= (n * n - 1) * (q - 1)
        else:
            checks["char2_exact"] = v >= q * (n * n - 1) // 2 - math.comb(n, 2)
    elif spec.family == "pfaffian":
        checks["pfaffian_upper"] = v <= spec.upper_bound_vq
    else:
        checks["polynomial_ring"] = v == (q - 1) * spec.r
    if spec.is_hypersurface:
        # f^j annihilates f for the largest j with f^j nonzero, and j < q
        checks["a_invariant_lower"] = v >= (q - 1) * spec.lower_bound
    return checks


def _layout(spec: FamilySpec) -> VariableLayout:
    family = "skew" if spec.family == "pfaffian" else spec.family
    return VariableLayout(family, spec.n)


def evaluate(spec: FamilySpec) -> ThresholdReport:
    """Compute the socle degree of a ring and check it against the known bounds."""
    started = time.perf_counter()
    if spec.family == "polynomial_ring":
        report = v_polynomial_ring(spec.n, spec.p, spec.s)
    elif spec.is_hypersurface:
        f = build_family_polynomial(_layout(spec), spec.p)
        logger.info("Scanning %s from degree %d", spec, spec.start_hint)
        report = v_hypersurface(f, spec.p, spec.s, start=spec.start_hint)
    else:
        report = v_determinantal(spec.m, spec.n, spec.p, spec.s)

    report.spec = spec
    report.lower_bound = spec.lower_bound
    report.theorem_c = spec.theorem_c
    report.upper_bound_vq = spec.upper_bound_vq
    report.checks.update(bound_checks(spec, report.v))  # type: ignore
    report.wall_time = time.perf_counter() - started
    for name, ok in report.checks.items():
        if not ok:
            logger.error("Check '%s' failed for %s with v=%d", name, spec, report.v)
    logger.info("%s: v=%d in %.3fs", spec, report.v, report.wall_time)
    return report


def _skipped(spec: FamilySpec, error: GuardrailExceeded) -> ThresholdReport:
    return ThresholdReport(
        spec=spec, q=spec.q, r=spec.r, lower_bound=spec.lower_bound,
        theorem_c=spec.theorem_c, upper_bound_vq=spec.upper_bound_vq,
        skipped=True, estimate=error.estimate,
    )


def _evaluate_job(job: Tuple[FamilySpec, int]) -> ThresholdReport:
    spec, mem_cap = job
    limits.mem_cap = mem_cap
    try:
        return evaluate(spec)
    except GuardrailExceeded as error:
        logger.info("Skipping %s: %s", spec, error)
        return _skipped(spec, error)


def threshold_table(specs: Sequence[FamilySpec], *, threads: int = 1) -> List[ThresholdReport]:
    """Compute reports for a collection of rings.

    Computations that would exceed the memory cap are reported as skipped.
    Reports are in the same order as the specs.

    :param specs: Rings and Frobenius powers to compute.
    :param threads: Number of worker processes.
    """
    jobs = [(spec, limits.mem_cap) for spec in specs]
    if threads <= 1:
        return [_evaluate_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_evaluate_job, jobs))


def spec_key(spec: FamilySpec) -> Tuple[str, int, int, int, int]:
    return spec.family, spec.m, spec.n, spec.p, spec.s


############################################################
# WEIGHT COMBINATORICS
############################################################


Weight = Tuple[int, ...]


def is_dominant(weight: Sequence[int]) -> bool:
    return all(a >= b for a, b in zip(weight, weight[1:]))


def is_partition(weight: Sequence[int]) -> bool:
    return is_dominant(weight) and ((len(weight) == 0) or (weight[-1] >= 0))


def _check_dominant(weight: Weight) -> None:
    if not is_dominant(weight):
        raise ValueError(f"Weight is not dominant: {weight}")


def _check_partition(weight: Weight) -> None:
    if not is_partition(weight):
        raise ValueError(f"Weight is not a partition: {weight}")


def to_fundamental(weight: Sequence[int]) -> Weight:
    """Get the coordinates of a dominant weight in the fundamental weights."""
    weight = tuple(weight)
    _check_dominant(weight)
    return tuple(a - b for a, b in zip(weight, weight[1:])) + weight[-1:]


def from_fundamental(coords: Sequence[int]) -> Weight:
    """Get the weight with the given fundamental weight coordinates."""
    return tuple(reversed(list(accumulate(reversed(tuple(coords))))))


def is_restricted(weight: Sequence[int], p: int) -> bool:
    """Check whether a weight is a p-restricted partition."""
    return is_partition(weight) and all(0 <= a < p for a in to_fundamental(weight))


class PAdicDecomposition(NamedTuple):
    """Decomposition of a partition into layers as a sum of p^i times layer i.

    If ``trailing_restricted`` is false,
    the last layer is an arbitrary partition.
    """

    p: int
    layers: Tuple[Weight, ...]
    trailing_restricted: bool

    def reconstruct(self) -> Weight:
        width = len(self.layers[0])
        return tuple(
            sum(self.p ** i * layer[k] for i, layer in enumerate(self.layers))
            for k in range(width)
        )


def p_adic_decompose(weight: Sequence[int], p: int, *,
                     s: Union[int, None] = None) -> PAdicDecomposition:
    """Decompose a partition into p-restricted layers.

    The layers are given by the base p digits of the fundamental coordinates.
    If ``s`` is given, there are s restricted layers
    followed by a last layer that takes the remainder.

    :param weight: Partition to decompose.
    :param p: Prime characteristic.
    :param s: Number of restricted layers.
    """
    _check_modulus(p)
    weight = tuple(weight)
    _check_partition(weight)
    coords = to_fundamental(weight)

    def layer(i):
        return from_fundamental(tuple((a // p ** i) % p for a in coords))

    if s is None:
        count = 1
        while any(a >= p ** count for a in coords):
            count += 1
        return PAdicDecomposition(p, tuple(layer(i) for i in range(count)), True)

    if s < 0:
        raise ValueError(f"Number of restricted layers must be nonnegative: {s}")
    layers = [layer(i) for i in range(s)]
    layers.append(from_fundamental(tuple(a // p ** s for a in coords)))
    return PAdicDecomposition(p, tuple(layers), False)


def occurrence_excluded(weight: Sequence[int], restricted: Sequence[int],
                        s: int, p: int) -> bool:
    """Check whether L_weight can not occur in L_(p^s mu) tensor L_nu.

    This holds for every partition nu
    when the size of layer s of the weight is less than the size of mu,
    where the first s layers are p-restricted.

    :param weight: Partition lambda.
    :param restricted: p-restricted partition mu.
    :param s: Frobenius exponent.
    :param p: Prime characteristic.
    """
    restricted = tuple(restricted)
    if not is_restricted(restricted, p):
        raise ValueError(f"Weight is not {p}-restricted: {restricted}")
    top = p_adic_decompose(weight, p, s=s).layers[s]
    return sum(top) < sum(restricted)


def _pad(weight: Sequence[int], n: int) -> Weight:
    weight = tuple(weight)
    if len(weight) > n:
        raise ValueError(f"Weight {weight} has more than {n} entries")
    return weight + (0,) * (n - len(weight))


def weyl_dimension(weight: Sequence[int], n: int) -> int:
    """Get the dimension of the Schur module of a dominant weight for GL_n.

    Weights with fewer than n entries are padded with zeros.
    """
    weight = _pad(weight, n)
    _check_dominant(weight)
    numerator = denominator = 1
    for i, j in combinations(range(n), 2):
        numerator *= weight[i] - weight[j] + j - i
        denominator *= j - i
    return numerator // denominator


class EulerCharacteristic(NamedTuple):
    """Euler characteristic of a line bundle on the flag variety of GL_n.

    It is the sign times the dimension of the Weyl module of the weight.
    For a singular weight, the sign and the dimension are 0
    and there is no weight.
    The length is the number of inversions of the sorting permutation.
    """

    sign: int
    weight: Union[Weight, None]
    dimension: int
    length: int

    @property
    def value(self) -> int:
        return self.sign * self.dimension


def _rho(n: int) -> Weight:
    return tuple(range(n - 1, -1, -1))


def dot_action(w: Sequence[int], weight: Sequence[int]) -> Weight:
    """Apply a permutation to a weight by the dot action w(weight + rho) - rho."""
    n = len(weight)
    rho = _rho(n)
    moved = [0] * n
    for i, target in enumerate(w):
        moved[target] = weight[i] + rho[i]
    return tuple(a - b for a, b in zip(moved, rho))


def euler_characteristic(weight: Sequence[int], n: int) -> EulerCharacteristic:
    """Get the Euler characteristic of the line bundle O(weight) on Fl_n.

    The weight is shifted by rho = (n-1, ..., 0) and sorted decreasingly.

    :param weight: Weight with n entries.
    :param n: Rank of the general linear group.
    """
    weight = tuple(weight)
    if len(weight) != n:
        raise ValueError(f"Weight {weight} does not have {n} entries")
    rho = _rho(n)
    shifted = [a + b for a, b in zip(weight, rho)]
    if len(set(shifted)) < n:
        return EulerCharacteristic(0, None, 0, 0)
    length = sum(1 for a, b in combinations(shifted, 2) if a < b)
    ordered = sorted(shifted, reverse=True)
    mu = tuple(a - b for a, b in zip(ordered, rho))
    return EulerCharacteristic((-1) ** length, mu, weyl_dimension(mu, n), length)


def is_prime_power(q: int) -> bool:
    if q < 2:
        return False
    base = next(d for d in range(2, q + 1) if q % d == 0)
    while q % base == 0:
        q //= base
    return q == 1


def vanishing_window(weight: Sequence[int], e: int, n: int, q: int, j: int) -> bool:
    """Check the hypotheses for H^k(Fl_n, O(weight, e)) to vanish for k <= j.

    These are that the size of the weight is at most (n-1-j)q - 1
    and that e is at least (1+j)q.
    A false result makes no claim about non-vanishing.

    :param weight: Partition with at most n-1 parts, padded with zeros.
    :param e: Last entry of the line bundle weight.
    :param n: Rank of the general linear group.
    :param q: Power of the characteristic.
    :param j: Largest cohomological degree.
    """
    if not is_prime_power(q):
        raise ValueError(f"Not a prime power: {q}")
    if j < 0:
        raise ValueError(f"Cohomological degree must be nonnegative: {j}")
    weight = tuple(weight)
    _check_partition(weight)
    weight = _pad(weight, n - 1)

    holds = (sum(weight) <= (n - 1 - j) * q - 1) and (e >= (1 + j) * q)
    if holds and (j == n - 2):
        chi = euler_characteristic(weight + (e,), n)
        assert (chi.sign == 0) or (chi.length > j), \
            f"Euler characteristic {chi} contradicts vanishing up to degree {j}"
    return holds


############################################################
# REPORTS
############################################################


TABLE_COLUMNS = (
    "family", "m", "n", "p", "s", "q", "v", "indeg_ann", "v_over_q",
    "lower_bound", "theorem_c", "upper_bound_vq", "bounds_ok", "wall_ms",
)

FORMATS = ("csv", "json", "markdown")


def _text(value: Any) -> str:
    return "" if value is None else str(value)


def report_row(report: ThresholdReport, *, timings: bool = True) -> Dict[str, str]:
    """Get the table cells of a report."""
    spec = report.spec
    if spec is None:
        raise ValueError("Only reports with a family spec can be tabulated")
    ratio = report.ratio
    return {
        "family": spec.family,
        "m": str(spec.m),
        "n": str(spec.n),
        "p": str(spec.p),
        "s": str(spec.s),
        "q": str(report.q),
        "v": _text(report.v),
        "indeg_ann": _text(report.indeg_ann),
        "v_over_q": "" if ratio is None else f"{float(ratio):.6g}",
        "lower_bound": _text(report.lower_bound),
        "theorem_c": _text(report.theorem_c),
        "upper_bound_vq": _text(report.upper_bound_vq),
        "bounds_ok": "skipped" if report.skipped else str(report.bounds_ok).lower(),
        "wall_ms": f"{report.wall_time * 1000:.0f}" if timings else "",
    }


def report_json(report: ThresholdReport, *, timings: bool = True) -> Dict[str, Any]:
    """Get the full contents of a report as JSON-compatible data."""
    data: Dict[str, Any] = dict(report_row(report, timings=timings))
    data.update({
        "r": report.r,
        "checks": dict(report.checks),
        "slice_dims": [rec._asdict() for rec in report.slice_dims],
        "skipped": report.skipped,
        "estimate": report.estimate,
    })
    if report.witness is not None:
        data["witness"] = report.witness.format(_layout(report.spec).labels)  # type: ignore
    return data


def write_table(reports: Sequence[ThresholdReport], fmt: str, stream: IO[str], *,
                timings: bool = True) -> None:
    """Write reports as a CSV, markdown or JSON table.

    :param reports: Reports to write, in order.
    :param fmt: Output format.
    :param stream: Text stream to write to.
    :param timings: Whether to fill in the wall time column.
    """
    if fmt == "csv":
        writer = csv.DictWriter(stream, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for report in reports:
            writer.writerow(report_row(report, timings=timings))
    elif fmt == "markdown":
        print("| " + " | ".join(TABLE_COLUMNS) + " |", file=stream)
        print("|" + "---|" * len(TABLE_COLUMNS), file=stream)
        for report in reports:
            row = report_row(report, timings=timings)
            print("| " + " | ".join(row[c] for c in TABLE_COLUMNS) + " |", file=stream)
    elif fmt == "json":
        data = [report_json(report, timings=timings) for report in reports]
        print(json.dumps(data, indent=2, sort_keys=True), file=stream)
    else:
        raise ValueError(f"Unknown output format: '{fmt}'")


CONFIG_KEYS = frozenset({
    "families", "primes", "s_max", "threads", "mem_cap", "format", "output", "timings",
})

CONFIG_ENVIRONMENT = MappingProxyType({
    "threads": "FROBTHRESH_THREADS",
    "mem_cap": "FROBTHRESH_MEM_CAP",
})

_SIZE_SUFFIXES = MappingProxyType({"K": 1 << 10, "M": MiB, "G": GiB})


FamilyEntry = Tuple[str, Tuple[int, ...]]


@dataclass(frozen=True)
class RunConfig:
    """Settings for a scan over families, primes and Frobenius powers."""

    families: Tuple[FamilyEntry, ...] = ()
    primes: Tuple[int, ...] = (2,)
    s_max: int = 1
    threads: int = 1
    mem_cap: int = 4 * GiB
    format: str = "csv"
    output: Union[str, None] = None
    timings: bool = True

    def __post_init__(self):
        for p in self.primes:
            _check_modulus(p)
        if self.s_max < 1:
            raise ValueError(f"s_max must be positive: {self.s_max}")
        if self.threads < 1:
            raise ValueError(f"Thread count must be positive: {self.threads}")
        if self.mem_cap < 64 * MiB:
            raise ValueError(f"Memory cap must be at least 64 MiB: {self.mem_cap}")
        if self.format not in FORMATS:
            raise ValueError(f"Unknown output format: '{self.format}'")

    def specs(self) -> List[FamilySpec]:
        """Get all rings to compute, ordered by family, sizes, p and s."""
        specs = {
            FamilySpec.of(family, *sizes, p=p, s=s)
            for family, sizes in self.families
            for p in self.primes
            for s in range(1, self.s_max + 1)
        }
        return sorted(specs, key=spec_key)


def _parse_sizes(text: str) -> List[Tuple[int, ...]]:
    if "x" in text:
        m, n = text.split("x")
        return [(int(m), int(n))]
    if "-" in text:
        low, high = text.split("-")
        return [(k,) for k in range(int(low), int(high) + 1)]
    return [(int(text),)]


def parse_families(text: str) -> Tuple[FamilyEntry, ...]:
    """Parse family entries like ``symmetric:2-3; generic:2,3x2``."""
    entries = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk == "":
            continue
        family, sep, sizes = chunk.partition(":")
        family = family.strip()
        if sep == "":
            raise ValueError(f"Family entry has no sizes: '{chunk}'")
        if family not in SOCLE_FAMILIES:
            raise ValueError(f"Unknown family: '{family}'")
        for size in sizes.split(","):
            entries.extend((family, s) for s in _parse_sizes(size.strip()))
    return tuple(entries)


def parse_size(text: str) -> int:
    """Parse a byte count with an optional K, M or G suffix."""
    text = text.strip().upper()
    if text[-1:] in _SIZE_SUFFIXES:
        return int(text[:-1]) * _SIZE_SUFFIXES[text[-1]]
    return int(text)


def load_config(path: Union[str, pathlib.Path]) -> Dict[str, str]:
    """Read a configuration file with one ``key = value`` per line."""
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None,
    )
    content = pathlib.Path(path).read_text(encoding="utf-8")
    try:
        parser.read_string("[run]\n" + content, source=str(path))
    except configparser.Error as error:
        raise ValueError(f"Invalid configuration file: {error}") from None
    return dict(parser["run"])


def build_config(values: Mapping[str, str], environ: Mapping[str, str],
                 **overrides: Union[str, None]) -> RunConfig:
    """Merge configuration sources into run settings.

    Values from the file are overridden by the environment,
    which are overridden by the command-line flags.

    :param values: Settings read from the configuration file.
    :param environ: Environment variables.
    :param overrides: Settings from the command line, None if not given.
    """
    settings = dict(values)
    for key, variable in CONFIG_ENVIRONMENT.items():
        if variable in environ:
            settings[key] = environ[variable]
    settings.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(settings) - CONFIG_KEYS
    if len(unknown) > 0:
        raise ValueError(f"Unknown configuration keys: {sorted(unknown)}")

    config: Dict[str, Any] = {}
    if "families" in settings:
        config["families"] = parse_families(settings["families"])
    if "primes" in settings:
        config["primes"] = tuple(int(p) for p in settings["primes"].split(","))
    for key in ("s_max", "threads"):
        if key in settings:
            config[key] = int(settings[key])
    if "mem_cap" in settings:
        config["mem_cap"] = parse_size(settings["mem_cap"])
    for key in ("format", "output"):
        if key in settings:
            config[key] = settings[key].strip()
    if "timings" in settings:
        flag = settings["timings"].strip().lower()
        if flag not in configparser.ConfigParser.BOOLEAN_STATES:
            raise ValueError(f"Not a boolean: '{settings['timings']}'")
        config["timings"] = configparser.ConfigParser.BOOLEAN_STATES[flag]
    return RunConfig(**config)


############################################################
# COMMAND-LINE INTERFACE
############################################################


EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SKIPPED = 4


def _weight(text: str) -> Weight:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ArgumentTypeError(f"malformed weight: '{text}'") from None


def _residues(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise ArgumentTypeError(f"malformed residue list: '{text}'") from None


def cmd_vr(arguments) -> int:
    spec = FamilySpec.of(arguments.family, *arguments.sizes, p=arguments.p, s=arguments.s)
    limits.mem_cap = build_config({}, os.environ, mem_cap=arguments.mem_cap).mem_cap
    report = threshold_table([spec])[0]
    write_table([report], arguments.format, sys.stdout, timings=arguments.timings)
    return EXIT_SKIPPED if report.skipped else 0


def cmd_scan(arguments) -> int:
    values = load_config(arguments.config) if arguments.config is not None else {}
    families = None if arguments.family is None else ";".join(arguments.family)
    config = build_config(
        values, os.environ,
        families=families,
        primes=arguments.primes,
        s_max=arguments.s_max,
        threads=arguments.threads,
        mem_cap=arguments.mem_cap,
        format=arguments.format,
        output=arguments.output,
        timings=None if arguments.timings else "false",
    )
    limits.mem_cap = config.mem_cap
    if config.output is None:
        reports = threshold_table(config.specs(), threads=config.threads)
        write_table(reports, config.format, sys.stdout, timings=config.timings)
    else:
        with open(config.output, "w", encoding="utf-8", newline="") as stream:
            reports = threshold_table(config.specs(), threads=config.threads)
            write_table(reports, config.format, stream, timings=config.timings)
    return EXIT_SKIPPED if any(r.skipped for r in reports) else 0


def cmd_annihilator(arguments) -> int:
    spec = FamilySpec.of(arguments.family, arguments.n, p=arguments.p, s=arguments.s)
    q = spec.q
    layout = _layout(spec)
    f = build_family_polynomial(layout, spec.p)
    annihilator = indeg_annihilator(f, spec.p, spec.s)
    witness = annihilator.witness
    data: Dict[str, Any] = {
        "family": spec.family,
        "n": spec.n,
        "p": spec.p,
        "s": spec.s,
        "q": q,
        "indeg": annihilator.degree,
        "witness": witness.format(layout.labels),
        "annihilates": not (f * witness).truncate(q),
        "nonzero": bool(witness.truncate(q)),
    }
    if (spec.family == "symmetric") and (spec.p == 2):
        g = char2_symmetric_annihilator(spec.n, spec.s)
        data["closed_form"] = {
            "witness": g.format(layout.labels),
            "degree": g.degree,
            "annihilates": not (f * g).truncate(q),
            "nonzero": bool(g),
            "indeg_at_most_degree": (g.degree is not None) and (annihilator.degree <= g.degree),
        }
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0


def cmd_degenerate(arguments) -> int:
    p = arguments.p
    t_values = arguments.t if arguments.t is not None else list(range(p))
    report = degenerate_pfaffian(arguments.n, p, arguments.s, t_values)
    data = {
        "n": report.n,
        "p": report.p,
        "s": report.s,
        "q": report.q,
        "fibers": [{"t": t, "v": v} for t, v in report.values],
        "composition": {
            "polynomial_part": report.polynomial_part,
            "determinantal_part": report.determinantal_part,
            "v": report.composed,
        },
        "checks": report.checks,
    }
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0


def _format_weight(weight: Sequence[int]) -> str:
    return "(" + ",".join(str(a) for a in weight) + ")"


def cmd_weights(arguments) -> int:
    weight = arguments.weight
    if arguments.operation == "fundamental":
        print(",".join(str(a) for a in to_fundamental(weight)))
    elif arguments.operation == "padic":
        decomposition = p_adic_decompose(weight, arguments.p, s=arguments.s)
        pieces = []
        for i, layer in enumerate(decomposition.layers):
            scale = "" if i == 0 else f"{arguments.p ** i}*"
            pieces.append(scale + _format_weight(layer))
        print(" + ".join(pieces))
    elif arguments.operation == "euler":
        chi = euler_characteristic(weight, len(weight))
        if chi.sign == 0:
            print("0")
        else:
            print(f"sign {chi.sign:+d}, partition {_format_weight(chi.weight)}, "  # type: ignore
                  f"dim {chi.dimension}")
    else:
        holds = vanishing_window(weight, arguments.e, arguments.n, arguments.q, arguments.j)
        print(str(holds).lower())
    return 0


def cmd_hilbert(arguments) -> int:
    print(",".join(str(c) for c in truncated_hilbert_series(arguments.r, arguments.q)))
    return 0


def _add_field_options(parser: ArgumentParser) -> None:
    parser.add_argument("--p", type=int, default=2, help="characteristic")
    parser.add_argument("--s", type=int, default=1, help="Frobenius exponent, q = p^s")


def _build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="frobthresh",
                            description="compute socle degrees of Frobenius powers")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress (repeat for more detail)")
    commands = parser.add_subparsers(metavar="command", dest="command")
    commands.required = True

    vr = commands.add_parser("vr", help="compute the socle degree of one ring")
    vr.add_argument("family", choices=SOCLE_FAMILIES)
    vr.add_argument("sizes", type=int, nargs="+", help="n, or m n")
    _add_field_options(vr)
    vr.add_argument("--mem-cap", help="memory cap in bytes (K, M, G suffixes)")
    vr.add_argument("--format", choices=FORMATS, default="csv")
    vr.add_argument("--no-timings", dest="timings", action="store_false",
                    help="leave the wall time column empty")
    vr.set_defaults(handler=cmd_vr)

    scan = commands.add_parser("scan", help="compute a table of socle degrees")
    scan.add_argument("-c", "--config", type=pathlib.Path, help="configuration file")
    scan.add_argument("--family", action="append",
                      help="family and sizes, like symmetric:2-3 (repeatable)")
    scan.add_argument("--primes", help="comma-separated primes")
    scan.add_argument("--s-max", help="largest Frobenius exponent")
    scan.add_argument("--threads", help="number of worker processes")
    scan.add_argument("--mem-cap", help="memory cap in bytes (K, M, G suffixes)")
    scan.add_argument("--format", choices=FORMATS)
    scan.add_argument("-o", "--output", help="output file, standard output by default")
    scan.add_argument("--no-timings", dest="timings", action="store_false",
                      help="leave the wall time column empty")
    scan.set_defaults(handler=cmd_scan)

    annihilator = commands.add_parser("annihilator",
                                      help="find a least degree annihilator")
    annihilator.add_argument("family", choices=("generic", "pfaffian", "symmetric"))
    annihilator.add_argument("n", type=int)
    _add_field_options(annihilator)
    annihilator.set_defaults(handler=cmd_annihilator)

    degenerate = commands.add_parser("degenerate", help="degenerate a Pfaffian")
    degenerate.add_argument("n", type=int)
    _add_field_options(degenerate)
    degenerate.add_argument("--t", type=_residues,
                            help="comma-separated parameter values, all by default")
    degenerate.set_defaults(handler=cmd_degenerate)

    weights = commands.add_parser("weights", help="weight combinatorics")
    operations = weights.add_subparsers(metavar="operation", dest="operation")
    operations.required = True
    fundamental = operations.add_parser("fundamental", help="fundamental coordinates")
    fundamental.add_argument("weight", type=_weight)
    padic = operations.add_parser("padic", help="p-adic decomposition")
    padic.add_argument("weight", type=_weight)
    padic.add_argument("--p", type=int, required=True)
    padic.add_argument("--s", type=int, help="number of restricted layers")
    euler = operations.add_parser("euler", help="Euler characteristic on Fl_n")
    euler.add_argument("weight", type=_weight)
    window = operations.add_parser("window", help="vanishing hypotheses")
    window.add_argument("weight", type=_weight)
    window.add_argument("--e", type=int, required=True)
    window.add_argument("--n", type=int, required=True)
    window.add_argument("--q", type=int, required=True)
    window.add_argument("--j", type=int, required=True)
    weights.set_defaults(handler=cmd_weights)

    hilbert = commands.add_parser("hilbert", help="Hilbert function of S/m^[q]")
    hilbert.add_argument("r", type=int)
    hilbert.add_argument("q", type=int)
    hilbert.set_defaults(handler=cmd_hilbert)

    return parser


def main(argv: Union[Sequence[str], None] = None) -> None:
    parser = _build_parser()
    arguments = parser.parse_args(argv)
    level = max(logging.DEBUG, logging.WARNING - 10 * arguments.verbose)
    logging.basicConfig(format="%(levelname)s:%(name)s:%(message)s", level=level)

    try:
        code = arguments.handler(arguments)
    except GuardrailExceeded as error:
        print(f"skipped: {error}", file=sys.stderr)
        code = EXIT_SKIPPED
    except ValueError as error:
        parser.error(str(error))
    except OSError as error:
        print(f"{parser.prog}: error: {error}", file=sys.stderr)
        code = EXIT_IO
    sys.exit(code)


if __name__ == "__main__":
    main()
