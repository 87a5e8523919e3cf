"""Doubling: global-phase elimination and completely positive maps.

``double(f)`` pairs a diagram with its conjugate, ``conjugate(f) (x) f``,
with the conjugate copy on the left (the slow index).  Multiplying ``f``
by a unit-modulus scalar leaves the double unchanged, and the double of
a composite is the composite of the doubles, so doubled diagrams form a
faithful picture of density-matrix dynamics.  An optional ancilla wire
shared by the two copies can be short-circuited with a cup, which turns
a Kraus-style box ``f : A -> B (x) E`` into the superoperator
``rho -> Tr_E(f rho f^dagger)``.

Index conventions: a superoperator acts on column-stacked kets
``v[(a', a)] = rho[a, a']`` (conjugate index slow); the Choi matrix is
the reshuffle ``J[(a,b),(a',b')] = S[(b',b),(a',a)]``, which is positive
semidefinite exactly for completely positive maps.  The transposition
superoperator fails the test, as it should.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (CONJUGATE, Cup, Diagram, Id, Par, Seq, Swap, TypingError,
                   WireType, apply_variant)
from .semantics import Model, evaluate, hs_inner


@dataclass(frozen=True)
class DoubledDiagram:
    """A diagram of the shape conjugate(base) (x) base, with an optional
    ancilla pair short-circuited by a cup."""

    diagram: Diagram
    base: Diagram
    ancilla: WireType | None = None


def double(d: Diagram, ancilla: WireType | None = None) -> DoubledDiagram:
    """Pair ``d`` with its conjugate; optionally trace out an ancilla.

    The ancilla must be a suffix of ``cod(d)``; its two copies are bent
    into each other, so the evaluated result is the superoperator of the
    channel with Kraus map ``d``.
    """
    conj = apply_variant(d, CONJUGATE)
    pair = Par(conj, d)
    if ancilla is None:
        return DoubledDiagram(pair, d, None)
    k = len(ancilla.wires)
    if k == 0 or d.cod.wires[len(d.cod.wires) - k:] != ancilla.wires:
        raise TypingError(
            f"ancilla [{ancilla}] is not a suffix of the output type "
            f"[{d.cod}]")
    keep = WireType(d.cod.wires[:len(d.cod.wires) - k])
    # cod(pair) = E* B* B E; route the E* block past B* B, then close
    # the palindrome E* E with nested cups.
    mid = keep.dual() @ keep
    route = Par(Swap(ancilla.dual(), mid), Id(ancilla))
    closed = Seq(Seq(pair, route), Par(Id(mid), _cup_chain(ancilla)))
    return DoubledDiagram(closed, d, ancilla)


def _cup_chain(ancilla: WireType) -> Diagram:
    """Collapse the palindrome E* (x) E -> I, innermost wire pair first."""
    wires = list(ancilla.wires)
    d: Diagram = Cup(wires[0])
    for w in wires[1:]:
        d = Seq(Par(Par(Id(WireType((w.flip(),))), d), Id(WireType((w,)))),
                Cup(w))
    return d


@dataclass(frozen=True)
class PhaseWitness:
    """Scalars s, t with s*f = t*g and |s| = |t|."""

    s: complex
    t: complex


def global_phase_witness(f: Diagram, g: Diagram, m: Model,
                         tol: float = 1e-9) -> PhaseWitness | None:
    """If double(f) and double(g) agree, produce the pair of trace inner
    products witnessing that f and g differ only by a global phase.

    Returns None when the doubles differ.  The witness is
    ``s = <f, g>`` and ``t = <f, f>``; when both maps vanish the trivial
    witness (1, 1) is returned.
    """
    if f.dom != g.dom or f.cod != g.cod:
        raise TypingError(
            f"phase witness needs equal shapes, got [{f.dom}] -> [{f.cod}] "
            f"and [{g.dom}] -> [{g.cod}]")
    df = evaluate(double(f).diagram, m).array
    dg = evaluate(double(g).diagram, m).array
    if float(np.max(np.abs(df - dg))) > tol:
        return None
    s = hs_inner(f, g, m)
    t = hs_inner(f, f, m)
    if abs(s) <= tol and abs(t) <= tol:
        return PhaseWitness(1.0 + 0.0j, 1.0 + 0.0j)
    return PhaseWitness(s, t)


def choi_matrix(superop: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Reshuffle a doubled-index superoperator into its Choi matrix."""
    superop = np.asarray(superop, dtype=complex)
    if superop.shape != (d_out * d_out, d_in * d_in):
        raise TypingError(
            f"superoperator shape {superop.shape} does not match doubled "
            f"dims ({d_out * d_out}, {d_in * d_in})")
    s4 = superop.reshape(d_out, d_out, d_in, d_in)
    return s4.transpose(3, 1, 2, 0).reshape(d_in * d_out, d_in * d_out)


def is_completely_positive(superop: np.ndarray, d_in: int, d_out: int,
                           tol: float = 1e-9) -> bool:
    """Check complete positivity by testing the Choi matrix for positive
    semidefiniteness (Hermitian with eigenvalues >= -tol)."""
    j = choi_matrix(superop, d_in, d_out)
    if float(np.max(np.abs(j - j.conj().T))) > tol:
        return False
    eigs = np.linalg.eigvalsh((j + j.conj().T) / 2)
    return bool(np.min(eigs) >= -tol)
