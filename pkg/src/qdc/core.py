"""Wire types and the diagram term algebra.

A diagram is a finite term built from named boxes, identity wires, swaps,
caps (entangled-pair states) and cups (their adjoints), combined by
sequential composition ``>>`` (read left to right) and parallel
composition ``@``.  Terms are immutable; every term knows its input and
output wire type.  Evaluation against a concrete model lives in
:mod:`qdc.semantics`, rewriting in :mod:`qdc.rewrite`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal


class TypingError(Exception):
    """A diagram was combined with incompatible wire types."""


Orientation = Literal["plain", "dual"]

PLAIN = "plain"
DAGGER = "dagger"
TRANSPOSE = "transpose"
CONJUGATE = "conjugate"

VARIANTS = (PLAIN, DAGGER, TRANSPOSE, CONJUGATE)

# The four variants form a Klein group: composing two distinct non-plain
# variants gives the third, every variant is its own inverse.
_VARIANT_MUL = {
    (PLAIN, PLAIN): PLAIN,
    (PLAIN, DAGGER): DAGGER,
    (PLAIN, TRANSPOSE): TRANSPOSE,
    (PLAIN, CONJUGATE): CONJUGATE,
    (DAGGER, DAGGER): PLAIN,
    (DAGGER, TRANSPOSE): CONJUGATE,
    (DAGGER, CONJUGATE): TRANSPOSE,
    (TRANSPOSE, TRANSPOSE): PLAIN,
    (TRANSPOSE, CONJUGATE): DAGGER,
    (CONJUGATE, CONJUGATE): PLAIN,
}


def mul_variant(a: str, b: str) -> str:
    key = (a, b) if (a, b) in _VARIANT_MUL else (b, a)
    return _VARIANT_MUL[key]


@dataclass(frozen=True)
class Wire:
    """A single oriented wire: a base type name plus an orientation flag."""

    base: str
    dual: bool = False

    def flip(self) -> "Wire":
        return Wire(self.base, not self.dual)

    def __str__(self) -> str:
        return self.base + ("*" if self.dual else "")


@dataclass(frozen=True)
class WireType:
    """An ordered list of oriented wires.  The empty list is the unit I."""

    wires: tuple[Wire, ...] = ()

    def __post_init__(self) -> None:
        if not all(isinstance(w, Wire) for w in self.wires):
            raise TypeError("WireType takes Wire atoms")

    @property
    def is_unit(self) -> bool:
        return not self.wires

    def dual(self) -> "WireType":
        """Reverse the wire order and flip every orientation."""
        return WireType(tuple(w.flip() for w in reversed(self.wires)))

    def tensor(self, other: "WireType") -> "WireType":
        return WireType(self.wires + other.wires)

    def __matmul__(self, other: "WireType") -> "WireType":
        return self.tensor(other)

    def __len__(self) -> int:
        return len(self.wires)

    def __str__(self) -> str:
        if not self.wires:
            return "I"
        return " ".join(str(w) for w in self.wires)


UNIT = WireType()


def wt(text: str) -> WireType:
    """Build a wire type from text like ``"Q"``, ``"Q* R"`` or ``"I"``.

    Atoms are whitespace separated; a trailing ``*`` marks the dual
    orientation.  ``"I"`` (alone) is the empty type.
    """
    text = text.strip()
    if text == "I" or not text:
        return UNIT
    wires = []
    for atom in text.split():
        if atom.endswith("*"):
            name = atom[:-1]
            dual = True
        else:
            name = atom
            dual = False
        if not name.isidentifier():
            raise ValueError(f"bad wire atom {atom!r}")
        wires.append(Wire(name, dual))
    return WireType(tuple(wires))


@dataclass(frozen=True)
class GeneratorSig:
    """A named box: plain-variant input/output types plus a variant flag.

    ``dom``/``cod`` always describe the plain box; the effective types of
    the variant are exposed by :meth:`eff_dom` / :meth:`eff_cod`:

    - ``dagger`` swaps dom and cod,
    - ``transpose`` swaps dom and cod and dualizes both,
    - ``conjugate`` keeps the order but dualizes both.
    """

    name: str
    dom: WireType
    cod: WireType
    variant: str = PLAIN

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    def eff_dom(self) -> WireType:
        if self.variant == PLAIN:
            return self.dom
        if self.variant == DAGGER:
            return self.cod
        if self.variant == TRANSPOSE:
            return self.cod.dual()
        return self.dom.dual()

    def eff_cod(self) -> WireType:
        if self.variant == PLAIN:
            return self.cod
        if self.variant == DAGGER:
            return self.dom
        if self.variant == TRANSPOSE:
            return self.dom.dual()
        return self.cod.dual()

    def apply(self, variant: str) -> "GeneratorSig":
        return GeneratorSig(self.name, self.dom, self.cod,
                            mul_variant(variant, self.variant))


class Diagram:
    """Base class of all diagram terms.

    Subclasses are frozen dataclasses; ``dom`` and ``cod`` are computed
    at construction time, so every reachable term is well typed.
    """

    dom: WireType
    cod: WireType

    def __rshift__(self, other: "Diagram") -> "Diagram":
        return Seq(self, other)

    def __matmul__(self, other: "Diagram") -> "Diagram":
        return Par(self, other)

    def dagger(self) -> "Diagram":
        return apply_variant(self, DAGGER)

    def transpose(self) -> "Diagram":
        return apply_variant(self, TRANSPOSE)

    def conjugate(self) -> "Diagram":
        return apply_variant(self, CONJUGATE)

    def size(self) -> int:
        """Number of nodes in the term tree."""
        raise NotImplementedError

    def __str__(self) -> str:
        from .dsl import pretty

        return pretty(self)


@dataclass(frozen=True, eq=True)
class Gen(Diagram):
    sig: GeneratorSig
    dom: WireType = field(init=False, compare=False)
    cod: WireType = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dom", self.sig.eff_dom())
        object.__setattr__(self, "cod", self.sig.eff_cod())

    def size(self) -> int:
        return 1


@dataclass(frozen=True, eq=True)
class Id(Diagram):
    wire_type: WireType
    dom: WireType = field(init=False, compare=False)
    cod: WireType = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dom", self.wire_type)
        object.__setattr__(self, "cod", self.wire_type)

    def size(self) -> int:
        return 1


@dataclass(frozen=True, eq=True)
class Swap(Diagram):
    left: WireType
    right: WireType
    dom: WireType = field(init=False, compare=False)
    cod: WireType = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dom", self.left @ self.right)
        object.__setattr__(self, "cod", self.right @ self.left)

    def size(self) -> int:
        return 1


def _one_wire(t: WireType | Wire, what: str) -> Wire:
    if isinstance(t, Wire):
        return t
    if isinstance(t, WireType):
        if len(t.wires) != 1:
            raise TypingError(
                f"{what} needs a single base wire, got compound type {t}")
        return t.wires[0]
    raise TypeError(f"{what} takes a Wire or one-wire WireType")


@dataclass(frozen=True, eq=True)
class Cap(Diagram):
    """The entangled-pair state on a wire ``a``: I -> a* (x) a."""

    wire: Wire
    dom: WireType = field(init=False, compare=False)
    cod: WireType = field(init=False, compare=False)

    def __post_init__(self) -> None:
        wire = _one_wire(self.wire, "cap")
        object.__setattr__(self, "wire", wire)
        object.__setattr__(self, "dom", UNIT)
        object.__setattr__(self, "cod", WireType((wire.flip(), wire)))

    def size(self) -> int:
        return 1


@dataclass(frozen=True, eq=True)
class Cup(Diagram):
    """The adjoint of :class:`Cap`: a* (x) a -> I."""

    wire: Wire
    dom: WireType = field(init=False, compare=False)
    cod: WireType = field(init=False, compare=False)

    def __post_init__(self) -> None:
        wire = _one_wire(self.wire, "cup")
        object.__setattr__(self, "wire", wire)
        object.__setattr__(self, "dom", WireType((wire.flip(), wire)))
        object.__setattr__(self, "cod", UNIT)

    def size(self) -> int:
        return 1


@dataclass(frozen=True, eq=True)
class Seq(Diagram):
    """``first`` then ``second``; requires cod(first) == dom(second)."""

    first: Diagram
    second: Diagram
    dom: WireType = field(init=False, compare=False)
    cod: WireType = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.first.cod != self.second.dom:
            raise TypingError(
                "sequential composition mismatch: "
                f"left produces [{self.first.cod}] but "
                f"right expects [{self.second.dom}]")
        object.__setattr__(self, "dom", self.first.dom)
        object.__setattr__(self, "cod", self.second.cod)

    def size(self) -> int:
        return 1 + self.first.size() + self.second.size()


@dataclass(frozen=True, eq=True)
class Par(Diagram):
    """Side-by-side placement; the left factor is the slower index."""

    left: Diagram
    right: Diagram
    dom: WireType = field(init=False, compare=False)
    cod: WireType = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dom", self.left.dom @ self.right.dom)
        object.__setattr__(self, "cod", self.left.cod @ self.right.cod)

    def size(self) -> int:
        return 1 + self.left.size() + self.right.size()


def is_scalar(d: Diagram) -> bool:
    """A scalar (diamond) has no inputs and no outputs."""
    return d.dom.is_unit and d.cod.is_unit


def is_state(d: Diagram) -> bool:
    return d.dom.is_unit


def is_costate(d: Diagram) -> bool:
    return d.cod.is_unit


def build_primitive(kind: str, *args) -> Diagram:
    """Build a primitive diagram: gen, id, cap, cup or swap."""
    if kind == "gen":
        (sig,) = args
        return Gen(sig)
    if kind == "id":
        (t,) = args
        return Id(t)
    if kind == "cap":
        (t,) = args
        return Cap(_one_wire(t, "cap"))
    if kind == "cup":
        (t,) = args
        return Cup(_one_wire(t, "cup"))
    if kind == "swap":
        t1, t2 = args
        return Swap(t1, t2)
    raise ValueError(f"unknown primitive kind {kind!r}")


def compose(mode: str, d1: Diagram, d2: Diagram) -> Diagram:
    """Compose two diagrams sequentially (``seq``) or in parallel (``par``)."""
    if mode == "seq":
        return Seq(d1, d2)
    if mode == "par":
        return Par(d1, d2)
    raise ValueError(f"unknown composition mode {mode!r}")


def apply_variant(d: Diagram, variant: str) -> Diagram:
    """Apply dagger / transpose / conjugate, pushing it onto the leaves.

    The dagger flips a term upside down (sequential order reverses, caps
    and cups exchange); conjugation mirrors it left to right (parallel
    order reverses along with the order-reversing dual on types);
    transposition is the composite of both.  Each is an involution, and
    transpose after conjugate equals the dagger on every term.
    """
    if variant == PLAIN:
        return d
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if isinstance(d, Gen):
        return Gen(d.sig.apply(variant))
    if isinstance(d, Id):
        if variant == DAGGER:
            return d
        return Id(d.wire_type.dual())
    if isinstance(d, Swap):
        if variant == DAGGER:
            return Swap(d.right, d.left)
        if variant == CONJUGATE:
            return Swap(d.right.dual(), d.left.dual())
        return Swap(d.left.dual(), d.right.dual())
    if isinstance(d, Cap):
        return d if variant == CONJUGATE else Cup(d.wire)
    if isinstance(d, Cup):
        return d if variant == CONJUGATE else Cap(d.wire)
    if isinstance(d, Seq):
        a, b = d.first, d.second
        if variant == CONJUGATE:
            return Seq(apply_variant(a, variant), apply_variant(b, variant))
        return Seq(apply_variant(b, variant), apply_variant(a, variant))
    if isinstance(d, Par):
        a, b = d.left, d.right
        if variant == DAGGER:
            return Par(apply_variant(a, variant), apply_variant(b, variant))
        return Par(apply_variant(b, variant), apply_variant(a, variant))
    raise TypeError(f"not a diagram: {d!r}")


def _single_wire_box(f: Diagram, what: str) -> tuple[Wire, Wire]:
    if len(f.dom) != 1 or len(f.cod) != 1:
        raise TypingError(
            f"{what} needs a box with one input and one output wire, "
            f"got [{f.dom}] -> [{f.cod}]")
    return f.dom.wires[0], f.cod.wires[0]


def bipartite_of(f: Diagram, side: str) -> Diagram:
    """The box-labeled bipartite state or costate of a one-wire box.

    ``state`` bends the input of ``f : a -> b`` around a cap, giving
    ``I -> a* (x) b``; ``costate`` bends the output into a cup, giving
    ``a (x) b* -> I``.  The plain cap is the state labeled by the
    identity wire.
    """
    a, b = _single_wire_box(f, "bipartite_of")
    if side == "state":
        if isinstance(f, Id):
            return Cap(a)
        return Seq(Cap(a), Par(Id(WireType((a.flip(),))), f))
    if side == "costate":
        if isinstance(f, Id):
            return Cup(b.flip())
        return Seq(Par(f, Id(WireType((b.flip(),)))), Cup(b.flip()))
    raise ValueError(f"unknown side {side!r}")


def name_of(f: Diagram) -> Diagram:
    return bipartite_of(f, "state")


def coname_of(f: Diagram) -> Diagram:
    return bipartite_of(f, "costate")


def unname(d: Diagram) -> Diagram:
    """Recover the box from its bipartite state: the inverse of name_of.

    Takes a state ``I -> a* (x) b`` and returns the box ``a -> b`` that
    yields it back under :func:`name_of` (plug the state in next to an
    input wire and cup the pair).
    """
    if not d.dom.is_unit or len(d.cod) != 2:
        raise TypingError(
            f"unname needs a two-wire state, got [{d.dom}] -> [{d.cod}]")
    a_star, b = d.cod.wires
    a = a_star.flip()
    return Seq(Par(Id(WireType((a,))), d),
               Par(Cup(a_star), Id(WireType((b,)))))


def projector_of(f: Diagram, corrected: bool = True) -> Diagram:
    """The box-labeled bipartite projector, a costate followed by a state.

    The corrected form conjugates the costate label so that the shape is
    a genuine ket-bra ``a* (x) b -> a* (x) b``.  With ``corrected=False``
    the costate keeps the plain label, which reproduces the rougher
    ``a (x) b* -> a* (x) b`` shape (the two agree for real-matrix labels).
    """
    _single_wire_box(f, "projector_of")
    ket = bipartite_of(f, "state")
    if corrected:
        bra = bipartite_of(apply_variant(f, CONJUGATE), "costate")
    else:
        bra = bipartite_of(f, "costate")
    return Seq(bra, ket)


def _close_last_wire(d: Diagram) -> Diagram:
    """Loop the last output wire of ``d`` back onto its last input wire."""
    if not d.dom.wires or not d.cod.wires:
        raise TypingError(
            f"no wire left to trace out on [{d.dom}] -> [{d.cod}]")
    w_in, w_out = d.dom.wires[-1], d.cod.wires[-1]
    if w_in != w_out:
        raise TypingError(
            f"traced wires must match: input ends with {w_in}, "
            f"output ends with {w_out}")
    w = w_in
    rest_in = WireType(d.dom.wires[:-1])
    rest_out = WireType(d.cod.wires[:-1])
    star = WireType((w.flip(),))
    bend_in = Par(Id(rest_in), Cap(w.flip()))
    bend_out = Par(Id(rest_out), Cup(w.flip()))
    return Seq(Seq(bend_in, Par(d, Id(star))), bend_out)


def trace_shape(d: Diagram, mode: str = "full", wires: int = 1) -> Diagram:
    """Close output wires of ``d`` back onto its input wires.

    ``partial`` traces out the last ``wires`` wires (they must agree
    between input and output); ``full`` requires dom == cod and closes
    everything, producing a scalar diagram.
    """
    if mode == "full":
        if d.dom != d.cod:
            raise TypingError(
                f"full trace needs equal input and output types, "
                f"got [{d.dom}] -> [{d.cod}]")
        out = d
        for _ in range(len(d.dom)):
            out = _close_last_wire(out)
        return out
    if mode == "partial":
        if wires < 0 or wires > min(len(d.dom), len(d.cod)):
            raise TypingError(
                f"cannot trace {wires} wires of [{d.dom}] -> [{d.cod}]")
        out = d
        for _ in range(wires):
            out = _close_last_wire(out)
        return out
    raise ValueError(f"unknown trace mode {mode!r}")


def seq_list(terms: Iterable[Diagram]) -> Diagram:
    """Left-nested sequential composite of a non-empty list."""
    terms = list(terms)
    out = terms[0]
    for t in terms[1:]:
        out = Seq(out, t)
    return out


def par_list(terms: Iterable[Diagram]) -> Diagram:
    """Left-nested parallel composite; the empty list is Id(I)."""
    terms = list(terms)
    if not terms:
        return Id(UNIT)
    out = terms[0]
    for t in terms[1:]:
        out = Par(out, t)
    return out
