"""The finite-dimensional Hilbert-space model.

A :class:`Model` assigns a dimension to every base wire name and a dense
complex matrix to every generator name (for the plain variant).  A dual
wire evaluates at the same dimension and in the same basis as the plain
wire; conjugation lives entirely in the generator variants.

Conventions, fixed once and used everywhere:

- parallel composition is the Kronecker product with the left factor as
  the slow (most significant) index;
- a cap on a wire of dimension d is the d*d column with ones at the
  positions i*d + i (no normalization scalar), a cup is its conjugate
  transpose;
- dualizing a compound type reverses the wire order, so the conjugate
  and transpose of a multi-wire box pick up explicit index-reversal
  permutations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import (CONJUGATE, DAGGER, PLAIN, TRANSPOSE, Cap, Cup, Diagram,
                   Gen, Id, Par, Seq, Swap, TypingError, WireType,
                   apply_variant, is_state, trace_shape)


class ModelError(Exception):
    """A diagram mentions a name the model does not assign."""


@dataclass(frozen=True)
class Matrix:
    """A dense complex matrix with explicit row and column counts."""

    array: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.array, dtype=complex)
        if arr.ndim != 2:
            raise ValueError("Matrix wants a 2-d array")
        object.__setattr__(self, "array", arr)

    @property
    def rows(self) -> int:
        return self.array.shape[0]

    @property
    def cols(self) -> int:
        return self.array.shape[1]

    @property
    def scalar(self) -> complex:
        if self.array.shape != (1, 1):
            raise ValueError(f"not a scalar: shape {self.array.shape}")
        return complex(self.array[0, 0])

    def to_text(self) -> str:
        lines = [f"{self.rows} {self.cols}"]
        for row in self.array:
            lines.append(" ".join(f"{z.real:.12g} {z.imag:.12g}" for z in row))
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "Matrix":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        rows, cols = (int(n) for n in lines[0].split())
        entries = []
        for ln in lines[1:]:
            nums = [float(x) for x in ln.split()]
            entries.extend(complex(re, im)
                           for re, im in zip(nums[::2], nums[1::2]))
        if len(entries) != rows * cols:
            raise ValueError("entry count does not match rows*cols")
        return cls(np.array(entries, dtype=complex).reshape(rows, cols))

    def to_json(self) -> str:
        flat = [[z.real, z.imag] for z in self.array.reshape(-1)]
        return json.dumps({"rows": self.rows, "cols": self.cols,
                           "entries": flat})


@dataclass(frozen=True)
class Model:
    """Interpretation environment: wire dimensions and generator matrices."""

    dims: Mapping[str, int]
    gens: Mapping[str, np.ndarray]

    def dim_of(self, t: WireType) -> int:
        n = 1
        for w in t.wires:
            n *= self.base_dim(w.base)
        return n

    def base_dim(self, base: str) -> int:
        try:
            d = self.dims[base]
        except KeyError:
            raise ModelError(f"no dimension assigned to wire type {base!r}")
        if d < 1:
            raise ModelError(f"dimension of {base!r} must be >= 1, got {d}")
        return d

    def wire_dims(self, t: WireType) -> tuple[int, ...]:
        return tuple(self.base_dim(w.base) for w in t.wires)

    def matrix_of(self, name: str) -> np.ndarray:
        try:
            m = self.gens[name]
        except KeyError:
            raise ModelError(f"no matrix assigned to generator {name!r}")
        return np.asarray(m, dtype=complex)


def _reversal(dims: tuple[int, ...]) -> np.ndarray:
    """Index permutation sending a dims-ordered flat index to the
    reversed-factor order.  Returns ``perm`` with (Pv)[j] = v[perm[j]]."""
    if len(dims) < 2:
        return np.arange(int(np.prod(dims, dtype=int)))
    k = len(dims)
    grid = np.arange(int(np.prod(dims, dtype=int))).reshape(dims)
    return grid.transpose(tuple(range(k - 1, -1, -1))).reshape(-1)


def variant_matrix(m: np.ndarray, variant: str,
                   dom_dims: tuple[int, ...],
                   cod_dims: tuple[int, ...]) -> np.ndarray:
    """Matrix of a variant given the plain matrix and the plain wire dims.

    Dagger is the conjugate transpose.  Conjugate and transpose carry the
    reversal permutations that realize the order-reversing dual on
    compound types; on one-wire boxes they reduce to the entrywise
    conjugate and the ordinary transpose.
    """
    if variant == PLAIN:
        return m
    if variant == DAGGER:
        return m.conj().T
    if variant == CONJUGATE:
        return m.conj()[np.ix_(_reversal(cod_dims), _reversal(dom_dims))]
    if variant == TRANSPOSE:
        return m.T[np.ix_(_reversal(dom_dims), _reversal(cod_dims))]
    raise ValueError(f"unknown variant {variant!r}")


def _cap_column(d: int) -> np.ndarray:
    col = np.zeros((d * d, 1), dtype=complex)
    col[np.arange(d) * d + np.arange(d), 0] = 1.0
    return col


def _eval(d: Diagram, m: Model) -> np.ndarray:
    if isinstance(d, Id):
        return np.eye(m.dim_of(d.wire_type), dtype=complex)
    if isinstance(d, Cap):
        return _cap_column(m.base_dim(d.wire.base))
    if isinstance(d, Cup):
        return _cap_column(m.base_dim(d.wire.base)).conj().T
    if isinstance(d, Swap):
        dl, dr = m.dim_of(d.left), m.dim_of(d.right)
        s = np.zeros((dl * dr, dl * dr), dtype=complex)
        for i in range(dl):
            for j in range(dr):
                s[j * dl + i, i * dr + j] = 1.0
        return s
    if isinstance(d, Gen):
        sig = d.sig
        mat = m.matrix_of(sig.name)
        dom_dims = m.wire_dims(sig.dom)
        cod_dims = m.wire_dims(sig.cod)
        want = (int(np.prod(cod_dims, dtype=int)),
                int(np.prod(dom_dims, dtype=int)))
        if mat.shape != want:
            raise TypingError(
                f"matrix for {sig.name!r} has shape {mat.shape}, but "
                f"[{sig.dom}] -> [{sig.cod}] needs {want}")
        return variant_matrix(mat, sig.variant, dom_dims, cod_dims)
    if isinstance(d, Seq):
        return _eval(d.second, m) @ _eval(d.first, m)
    if isinstance(d, Par):
        return np.kron(_eval(d.left, m), _eval(d.right, m))
    raise TypeError(f"not a diagram: {d!r}")


def evaluate(d: Diagram, m: Model) -> Matrix:
    """Evaluate a diagram to its dense matrix in the given model."""
    return Matrix(_eval(d, m))


@dataclass(frozen=True)
class Verdict:
    """Result of an equality check between two evaluated diagrams."""

    kind: str  # "equal" | "equal_with_witness" | "unequal"
    witness: complex | None
    max_abs_diff: float

    def __bool__(self) -> bool:
        return self.kind != "unequal"

    def describe(self) -> str:
        if self.kind == "equal":
            return "equal"
        if self.kind == "equal_with_witness":
            c = self.witness
            return f"equal scalar=({c.real:.12g},{c.imag:.12g})"
        return f"unequal max_abs_diff={self.max_abs_diff:.6g}"


def compare_matrices(a: np.ndarray, b: np.ndarray, mode: str = "exact",
                     tol: float = 1e-9) -> Verdict:
    """Compare two equally-shaped matrices, possibly up to a scalar."""
    if a.shape != b.shape:
        raise TypingError(f"shape mismatch: {a.shape} vs {b.shape}")
    if mode == "exact":
        diff = float(np.max(np.abs(a - b))) if a.size else 0.0
        if diff <= tol:
            return Verdict("equal", None, diff)
        return Verdict("unequal", None, diff)
    if mode not in ("up_to_scalar", "up_to_phase"):
        raise ValueError(f"unknown mode {mode!r}")
    if a.size == 0:
        return Verdict("equal", None, 0.0)
    idx = np.unravel_index(int(np.argmax(np.abs(b))), b.shape)
    ref = b[idx]
    if abs(ref) <= tol:
        # b is (numerically) zero: equal only if a is zero too.
        diff = float(np.max(np.abs(a)))
        if diff <= tol:
            return Verdict("equal_with_witness", 1.0 + 0.0j, diff)
        return Verdict("unequal", None, diff)
    c = complex(a[idx] / ref)
    diff = float(np.max(np.abs(a - c * b)))
    if diff > tol * (1.0 + abs(c)):
        return Verdict("unequal", None, diff)
    if mode == "up_to_phase" and abs(abs(c) - 1.0) > tol:
        return Verdict("unequal", None, diff)
    return Verdict("equal_with_witness", c, diff)


def check_eq(d1: Diagram, d2: Diagram, m: Model, mode: str = "exact",
             tol: float = 1e-9) -> Verdict:
    """Evaluate two diagrams and compare entrywise, up to scalar or phase."""
    if d1.dom != d2.dom or d1.cod != d2.cod:
        raise TypingError(
            f"cannot compare [{d1.dom}] -> [{d1.cod}] "
            f"with [{d2.dom}] -> [{d2.cod}]")
    return compare_matrices(_eval(d1, m), _eval(d2, m), mode, tol)


def hs_inner(f: Diagram, g: Diagram, m: Model) -> complex:
    """Trace inner product <f, g> = Tr(dagger(f) o g), built as a diagram.

    For states this is the ordinary inner product <f|g>.
    """
    if f.dom != g.dom or f.cod != g.cod:
        raise TypingError(
            f"hs_inner needs equal shapes, got [{f.dom}] -> [{f.cod}] "
            f"and [{g.dom}] -> [{g.cod}]")
    loop = trace_shape(Seq(g, apply_variant(f, DAGGER)), "full")
    return evaluate(loop, m).scalar


@dataclass(frozen=True)
class BornVerdict:
    lhs: complex
    rhs: complex
    equal: bool


def born_check(phi: Diagram, p: Diagram, m: Model,
               tol: float = 1e-9) -> BornVerdict:
    """Compare Tr(rho_phi o P) with <phi | P phi> for a state phi.

    rho_phi is built diagrammatically as the ket-bra of phi, so both
    sides go through the full diagram pipeline.
    """
    if not is_state(phi):
        raise TypingError(f"born_check wants a state, got dom [{phi.dom}]")
    if p.dom != phi.cod or p.cod != phi.cod:
        raise TypingError(
            f"projector shape [{p.dom}] -> [{p.cod}] does not act on "
            f"states of type [{phi.cod}]")
    rho = Seq(apply_variant(phi, DAGGER), phi)
    lhs = evaluate(trace_shape(Seq(p, rho), "full"), m).scalar
    rhs = evaluate(Seq(Seq(phi, p), apply_variant(phi, DAGGER)), m).scalar
    return BornVerdict(lhs, rhs, abs(lhs - rhs) <= tol)
