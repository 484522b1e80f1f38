"""Reduced collective basis and the laser-coupling matrix.

States are ordered as ``G``, the singly-excited states, the doubly-excited
states, then the two continuum sinks ``C`` (doubly excited) and ``c``
(singly excited). Within each sector states are graded by their number of
spatial quanta and then sorted lexicographically, so indices are stable.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
import scipy.sparse as sp

from .specfun import log_double_factorial, wigner3j

SPHERICAL = "spherical"
ELLIPTIC = "elliptic"


class SingleIdx(NamedTuple):
    """Singly-excited state ``psi_{n, 2l, 0}``."""

    n: int
    l: int = 0

    @property
    def quanta(self) -> int:
        return self.n + self.l


class DoubleIdx(NamedTuple):
    """Doubly-excited state ``Psi_{n_c, l_c, n_d, l_d, m}`` (m >= 0 grouping)."""

    n_c: int
    l_c: int
    n_d: int
    l_d: int
    m: int

    @property
    def quanta(self) -> int:
        return self.n_c + self.l_c + self.n_d + self.l_d


class SphDoubleIdx(NamedTuple):
    """Doubly-excited state ``Psi_{n_c, n_d, l}`` of a spherical cloud."""

    n_c: int
    n_d: int
    l: int

    @property
    def quanta(self) -> int:
        return self.n_c + self.n_d + 2 * self.l


State = Union[str, SingleIdx, DoubleIdx, SphDoubleIdx]

GROUND = "G"
CONT_DOUBLE = "C"
CONT_SINGLE = "c"


@dataclass(frozen=True)
class BasisIndex:
    """Ordered enumeration of the reduced Hilbert space."""

    symmetry: str
    n_max: int
    singles: tuple
    doubles: tuple
    _lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lookup = {s: i for i, s in enumerate(self.states)}
        object.__setattr__(self, "_lookup", lookup)

    @property
    def states(self) -> tuple:
        return (GROUND, *self.singles, *self.doubles, CONT_DOUBLE, CONT_SINGLE)

    @property
    def size(self) -> int:
        return 3 + len(self.singles) + len(self.doubles)

    def count(self, include_c: bool = False) -> int:
        """Number of model states; the singly-excited sink ``c`` is optional."""
        return self.size if include_c else self.size - 1

    def index(self, state: State) -> int:
        return self._lookup[state]

    def __getitem__(self, i: int) -> State:
        return self.states[i]

    def __len__(self) -> int:
        return self.size

    @property
    def single_slice(self) -> slice:
        return slice(1, 1 + len(self.singles))

    @property
    def double_slice(self) -> slice:
        start = 1 + len(self.singles)
        return slice(start, start + len(self.doubles))

    @property
    def i_ground(self) -> int:
        return 0

    @property
    def i_rydberg(self) -> int:
        """Index of the symmetric singly-excited state ``|R> = |psi_0>``."""
        return 1

    @property
    def i_psi000(self) -> int:
        """Index of the symmetric doubly-excited state ``|Psi_0>``."""
        return self.double_slice.start

    @property
    def i_cont_double(self) -> int:
        return self.size - 2

    @property
    def i_cont_single(self) -> int:
        return self.size - 1

    def double_blocks(self) -> dict:
        """Group doubly-excited positions (within ``doubles``) by the conserved labels.

        Keys are ``(n_c, l)`` for a spherical cloud and ``(n_c, l_c, m)``
        otherwise; the effective potential is block diagonal in them.
        """
        blocks: dict = {}
        for pos, d in enumerate(self.doubles):
            key = (d.n_c, d.l) if self.symmetry == SPHERICAL else (d.n_c, d.l_c, d.m)
            blocks.setdefault(key, []).append(pos)
        return blocks

    def to_csv(self) -> str:
        """Plain-text dump ``state_id,kind,n,l,n_c,l_c,n_d,l_d,m`` (blank = n/a)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"# symmetry={self.symmetry} n_max={self.n_max}"])
        w.writerow(["state_id", "kind", "n", "l", "n_c", "l_c", "n_d", "l_d", "m"])
        for i, s in enumerate(self.states):
            if isinstance(s, SingleIdx):
                w.writerow([i, "single", s.n, s.l, "", "", "", "", ""])
            elif isinstance(s, DoubleIdx):
                w.writerow([i, "double", "", "", s.n_c, s.l_c, s.n_d, s.l_d, s.m])
            elif isinstance(s, SphDoubleIdx):
                w.writerow([i, "double", "", s.l, s.n_c, s.l, s.n_d, s.l, ""])
            else:
                w.writerow([i, s, "", "", "", "", "", "", ""])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "BasisIndex":
        lines = [ln for ln in text.splitlines() if not ln.startswith("# superatom")]
        meta = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
        symmetry, n_max = meta["symmetry"], int(meta["n_max"])
        singles, doubles = [], []
        for row in csv.DictReader(lines[1:]):
            if row["kind"] == "single":
                singles.append(SingleIdx(int(row["n"]), int(row["l"])))
            elif row["kind"] == "double":
                if symmetry == SPHERICAL:
                    doubles.append(SphDoubleIdx(int(row["n_c"]), int(row["n_d"]), int(row["l"])))
                else:
                    doubles.append(DoubleIdx(*(int(row[k]) for k in ("n_c", "l_c", "n_d", "l_d", "m"))))
        return cls(symmetry, n_max, tuple(singles), tuple(doubles))


def spherical_double_count(n_max: int) -> int:
    """Closed-form number of spherical doubly-excited states."""
    h = n_max // 2
    return round((h + 1) * (h + 2) * (n_max - 4 * h / 3 + 0.5))


def enumerate_basis(n_max: int, symmetry: str = SPHERICAL) -> BasisIndex:
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if symmetry == SPHERICAL:
        singles = [SingleIdx(n, 0) for n in range(n_max + 1)]
        doubles = [
            SphDoubleIdx(n_c, n_d, l)
            for n_c in range(n_max + 1)
            for n_d in range(n_max + 1)
            for l in range(n_max // 2 + 1)
            if n_c + n_d + 2 * l <= n_max
        ]
    elif symmetry == ELLIPTIC:
        singles = [
            SingleIdx(n, l) for n in range(n_max + 1) for l in range(n_max + 1) if n + l <= n_max
        ]
        doubles = []
        for n_c in range(n_max + 1):
            for l_c in range(n_max + 1 - n_c):
                for n_d in range(n_max + 1 - n_c - l_c):
                    for l_d in range(n_max + 1 - n_c - l_c - n_d):
                        for m in range(min(2 * l_c, 2 * l_d) + 1):
                            doubles.append(DoubleIdx(n_c, l_c, n_d, l_d, m))
    else:
        raise ValueError(f"unknown symmetry {symmetry!r}")
    singles.sort(key=lambda s: (s.quanta, *s))
    doubles.sort(key=lambda d: (d.quanta, *d))
    return BasisIndex(symmetry, n_max, tuple(singles), tuple(doubles))


def log_norm_D(n: int, l: int) -> float:
    return (
        math.log(4 * l + 1)
        - n * math.log(2.0)
        - math.lgamma(n + 1.0)
        - log_double_factorial(2 * n + 4 * l + 1)
    )


def norm_D(n: int, l: int) -> float:
    """``(4l+1) / (2^n n! (2n+4l+1)!!)``."""
    return math.exp(log_norm_D(n, l))


def norm_N(n: int, l: int) -> float:
    """Radial normalisation ``sqrt(2^n n! / (2n+2l+1)!!)``."""
    return math.exp(
        0.5 * (n * math.log(2.0) + math.lgamma(n + 1.0) - log_double_factorial(2 * n + 2 * l + 1))
    )


def coupling_A(n: int, l: int, l_c: int, n_d: int, l_d: int, m: int) -> float:
    """Overlap of ``psi_{n,2l,0} (x) psi_0`` with a centre-of-mass/relative pair.

    Zero whenever a selection rule fails.
    """
    n_c = n + l - n_d - l_c - l_d
    if n_c < 0 or n_d < 0 or l_c < 0 or l_d < 0:
        return 0.0
    if not abs(l_c - l_d) <= l <= l_c + l_d:
        return 0.0
    if abs(m) > min(2 * l_c, 2 * l_d):
        return 0.0
    w0 = wigner3j(2 * l_c, 2 * l_d, 2 * l, 0, 0, 0)
    wm = wigner3j(2 * l_c, 2 * l_d, 2 * l, -m, m, 0)
    if w0 == 0.0 or wm == 0.0:
        return 0.0
    sign = -1.0 if (l_c + l_d - l) % 2 else 1.0
    log_mag = (
        math.log(4 * l + 1)
        - (n + l) * math.log(2.0)
        + 0.5 * (log_norm_D(n_c, l_c) + log_norm_D(n_d, l_d) - log_norm_D(n, l))
    )
    return sign * math.exp(log_mag) * w0 * wm


def coupling_S_elliptic(single: SingleIdx, double: DoubleIdx) -> float:
    if double.quanta != single.quanta:
        return 0.0
    a = coupling_A(single.n, single.l, double.l_c, double.n_d, double.l_d, double.m)
    return 2.0 * a / math.sqrt(2.0 if double.m == 0 else 1.0)


def coupling_S_spherical(n: int, n_d: int, l: int) -> float:
    """Amplitude ``S_{n; n_d, l}`` of ``S^dag |psi_n>`` on ``|Psi_{n_c, n_d, l}>``."""
    n_c = n - n_d - 2 * l
    if n_c < 0:
        return 0.0
    log_mag = (
        0.5 * math.log(2.0)
        - n * math.log(2.0)
        + 0.5 * (log_norm_D(n_c, l) + log_norm_D(n_d, l) - math.log(4 * l + 1) - log_norm_D(n, 0))
    )
    return math.exp(log_mag)


@dataclass(frozen=True)
class CouplingMatrix:
    """Laser coupling between singles and doubles.

    ``matrix[d, s]`` is the amplitude of double ``d`` in ``S^dag |single s>``;
    the ``G -> R`` amplitude is 1 and kept implicit.
    """

    basis: BasisIndex
    matrix: sp.csr_matrix

    def sum_rule(self) -> np.ndarray:
        """``sum_d S[d, s]^2`` for every single state ``s``."""
        return np.asarray(self.matrix.multiply(self.matrix).sum(axis=0)).ravel()

    def operator(self, dim: int | None = None) -> sp.csr_matrix:
        """Collective annihilation operator ``S`` embedded in the full basis."""
        b = self.basis
        dim = b.size if dim is None else dim
        op = sp.lil_matrix((dim, dim))
        op[b.i_ground, b.i_rydberg] = 1.0
        coo = self.matrix.tocoo()
        s0, d0 = b.single_slice.start, b.double_slice.start
        for d, s, v in zip(coo.row, coo.col, coo.data):
            op[s0 + s, d0 + d] = v
        return op.tocsr()

    def to_csv(self) -> str:
        """Dump ``row,col,value`` with full-basis indices (row = double, col = single)."""
        b = self.basis
        coo = self.matrix.tocoo()
        lines = ["row,col,value", f"{b.i_rydberg},{b.i_ground},{1.0!r}"]
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            lines.append(
                f"{b.double_slice.start + coo.row[k]},{b.single_slice.start + coo.col[k]},{coo.data[k]!r}"
            )
        return "\n".join(lines) + "\n"


def laser_coupling_matrix(basis: BasisIndex) -> CouplingMatrix:
    rows, cols, vals = [], [], []
    for si, s in enumerate(basis.singles):
        for di, d in enumerate(basis.doubles):
            if d.quanta != s.quanta:
                continue
            if basis.symmetry == SPHERICAL:
                v = coupling_S_spherical(s.n, d.n_d, d.l)
            else:
                v = coupling_S_elliptic(s, d)
            if v != 0.0:
                rows.append(di)
                cols.append(si)
                vals.append(v)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(len(basis.doubles), len(basis.singles)))
    return CouplingMatrix(basis, mat)
