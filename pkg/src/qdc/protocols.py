"""Teleportation-family protocols over the qubit model.

Branches are indexed by two bits (x, z), matching the four outcomes of a
measurement in the Bell basis {|0x> + (-1)^z |1(1-x)>}.  The costate for
branch (x, z) is the bipartite costate labeled by sigma_x^x sigma_z^z,
and the unitary correction is the dagger of that label.  All builders
default to the unnormalized cap convention; pass ``normalized=True`` to
attach the explicit 1/sqrt(2) scalar diamonds so that branch weights
become genuine probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (DAGGER, Cap, Diagram, Gen, GeneratorSig, Id, Par, Seq,
                   TypingError, Wire, WireType, apply_variant, coname_of, wt)
from .semantics import Matrix, Model, compare_matrices, evaluate

QUBIT = wt("Q")
_QW = Wire("Q")

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0]], dtype=complex)

BRANCHES = ((0, 0), (0, 1), (1, 0), (1, 1))


def bell_vector(x: int, z: int) -> np.ndarray:
    """Unnormalized Bell ket |0x> + (-1)^z |1(1-x)> as a length-4 array."""
    v = np.zeros(4, dtype=complex)
    v[0 * 2 + x] = 1.0
    v[1 * 2 + (1 - x)] = (-1.0) ** z
    return v


@dataclass(frozen=True)
class QubitConstants:
    """The gate matrices and Bell costate rows used by the protocols."""

    h: np.ndarray
    cnot: np.ndarray
    sigma_x: np.ndarray
    sigma_z: np.ndarray
    bell_bras: dict[tuple[int, int], np.ndarray]

    @classmethod
    def default(cls) -> "QubitConstants":
        return cls(HADAMARD, CNOT, SIGMA_X, SIGMA_Z,
                   {(x, z): bell_vector(x, z).conj().reshape(1, 4)
                    for x, z in BRANCHES})


QUBIT_CONSTANTS = QubitConstants.default()


def qubit_model(extra_gens: dict | None = None,
                extra_dims: dict | None = None) -> Model:
    """The standard interpretation the protocol diagrams evaluate in."""
    gens = {
        "sx": SIGMA_X,
        "sz": SIGMA_Z,
        "h": HADAMARD,
        "cnot": CNOT,
        "invsqrt2": np.array([[1 / np.sqrt(2)]], dtype=complex),
    }
    if extra_gens:
        gens.update(extra_gens)
    dims = {"Q": 2}
    if extra_dims:
        dims.update(extra_dims)
    return Model(dims, gens)


def _bit_pair(x: int, z: int) -> tuple[int, int]:
    if x not in (0, 1) or z not in (0, 1):
        raise ValueError(f"branch bits must be 0 or 1, got ({x}, {z})")
    return x, z


def pauli_label(x: int, z: int) -> Diagram:
    """sigma_x^x sigma_z^z as a diagram (identity for x = z = 0)."""
    _bit_pair(x, z)
    sx = Gen(GeneratorSig("sx", QUBIT, QUBIT))
    sz = Gen(GeneratorSig("sz", QUBIT, QUBIT))
    if (x, z) == (0, 0):
        return Id(QUBIT)
    if (x, z) == (0, 1):
        return sz
    if (x, z) == (1, 0):
        return sx
    return Seq(sz, sx)  # first sigma_z, then sigma_x


def scalar_diamond() -> Diagram:
    return Gen(GeneratorSig("invsqrt2", WireType(), WireType()))


def bell_costate(x: int, z: int) -> Diagram:
    """Costate Q (x) Q* -> I that evaluates to the bra of bell_vector."""
    return coname_of(pauli_label(x, z))


def _with_scalars(d: Diagram, count: int) -> Diagram:
    for _ in range(count):
        d = Par(scalar_diamond(), d)
    return d


def teleport_branch(x: int, z: int, corrected: bool = True,
                    normalized: bool = False) -> Diagram:
    """One branch of the teleportation protocol, an open diagram Q -> Q.

    The shared pair is a cap, the measurement branch is the (x, z) Bell
    costate over the input and the first half of the pair, and the
    correction (the dagger of the branch label) acts on the remaining
    wire.  The same (x, z) indexes both the costate and the correction:
    that shared index is the classical communication.
    """
    _bit_pair(x, z)
    base = Seq(Par(Id(QUBIT), Cap(_QW)),
               Par(bell_costate(x, z), Id(QUBIT)))
    if corrected:
        base = Seq(base, apply_variant(pauli_label(x, z), DAGGER))
    if normalized:
        base = _with_scalars(base, 2)  # one 1/sqrt(2) per qubit cap/cup pair
    return base


def gate_teleport_branch(f: Diagram, x: int, z: int, corrected: bool = True,
                         normalized: bool = False) -> Diagram:
    """Teleport while applying ``f``: the costate carries ``f`` below the
    branch label, so the branch maps the input to (label o f) and the
    plain unitary correction restores exactly ``f``."""
    _bit_pair(x, z)
    if len(f.dom) != 1 or len(f.cod) != 1:
        raise TypingError(
            f"gate teleportation needs a one-wire box, got "
            f"[{f.dom}] -> [{f.cod}]")
    label = f if (x, z) == (0, 0) else Seq(f, pauli_label(x, z))
    base = Seq(Par(Id(f.dom), Cap(f.cod.wires[0])),
               Par(coname_of(label), Id(f.cod)))
    if corrected:
        base = Seq(base, apply_variant(pauli_label(x, z), DAGGER))
    if normalized:
        base = _with_scalars(base, 2)
    return base


def bell_projector(x: int, z: int) -> Diagram:
    """Ket-bra of the (x, z) Bell pair: Q (x) Q* -> Q (x) Q*."""
    bra = bell_costate(x, z)
    return Seq(bra, apply_variant(bra, DAGGER))


def entanglement_swap_branch(x: int, z: int, corrected: bool = True,
                             normalized: bool = False) -> Diagram:
    """One branch of entanglement swapping: I -> Q* Q Q* Q.

    Two caps feed a Bell projector on the middle pair; afterwards the
    outer pair sits in the (x, z)-labeled Bell state, and the correction
    on the last wire rotates it back to the plain one.
    """
    _bit_pair(x, z)
    base = Seq(Par(Cap(_QW), Cap(_QW)),
               Par(Par(Id(wt("Q*")), bell_projector(x, z)), Id(QUBIT)))
    if corrected:
        base = Seq(base, Par(Id(wt("Q* Q Q*")),
                             apply_variant(pauli_label(x, z), DAGGER)))
    if normalized:
        base = _with_scalars(base, 2)
    return base


@dataclass(frozen=True)
class BranchReport:
    """Outcome of checking one protocol branch against its target."""

    branch: tuple[int, int]
    evaluated: Matrix | None
    expected: Matrix
    weight: float | None
    verdict: str
    witness: complex | None = None
    error: str | None = None

    def format(self) -> str:
        x, z = self.branch
        if self.error is not None:
            return f"branch {x}{z}: error {self.error}"
        if self.witness is not None:
            c = self.witness
            scalar = f"({c.real:.6g},{c.imag:.6g})"
        else:
            scalar = "(1,0)" if self.verdict == "equal" else "none"
        w = "none" if self.weight is None else f"{self.weight:.6g}"
        return f"branch {x}{z}: {self.verdict} scalar={scalar} weight={w}"


def verify_protocol(branches: list[tuple[tuple[int, int], Diagram, Matrix]],
                    m: Model, tol: float = 1e-9) -> list[BranchReport]:
    """Evaluate branches and compare each against its expected matrix up
    to a scalar; typing errors are reported per branch, not raised."""
    reports: list[BranchReport] = []
    for branch, diagram, expected in branches:
        try:
            got = evaluate(diagram, m)
            verdict = compare_matrices(got.array, expected.array,
                                       "up_to_scalar", tol)
        except (TypingError, ValueError) as exc:
            reports.append(BranchReport(branch, None, expected, None,
                                        "error", error=str(exc)))
            continue
        weight = None
        if verdict.kind != "unequal":
            c = verdict.witness if verdict.witness is not None else 1.0
            weight = abs(c) ** 2
        reports.append(BranchReport(
            branch, got, expected, weight,
            "equal" if bool(verdict) else "unequal",
            witness=verdict.witness))
    return reports


def total_weight(reports: list[BranchReport]) -> float:
    return sum(r.weight for r in reports if r.weight is not None)
