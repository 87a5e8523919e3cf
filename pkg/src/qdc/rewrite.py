"""Sound rewriting of diagrams: yanking, box sliding, layering, scalar
floating.

The normalizer works on a transient scheduled form: the term is cut into
primitive cells (boxes, caps, cups, swaps) wired by tokens, every cell is
assigned the earliest layer its inputs allow, and cells keep exact
fractional horizontal positions so the layered term can be rebuilt
deterministically.  The public interface stays purely term based.

Rules, in scan order:

- ``interchange`` / ``float-scalar``: re-layer the term into the eager
  canonical form, with closed scalar components floated to the leftmost
  parallel slot;
- ``yank``: a cup consuming a cap leg splices the zig-zag away (covers
  both zig-zag orientations and cap-cap chains; a cup closing both legs
  of one cap is a loop and is left as a scalar component);
- ``slide-cap`` / ``slide-cup``: a one-wire box on the left leg of a cap
  (left slot of a cup) moves to the right one as its transpose.

Every applied step strictly decreases the lexicographic measure
(cap/cup count, non-canonical-layering debt, box-next-to-left-leg
weight, term size); this is asserted on every step.  Rule application is
transactional: a candidate that cannot be rebuilt into a well-formed
layered term is skipped, so normal forms are sound but not claimed
minimal.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .core import (CONJUGATE, DAGGER, TRANSPOSE, Cap, Cup, Diagram, Gen, Id,
                   Par, Seq, Swap, TypingError, UNIT, Wire, WireType,
                   apply_variant, par_list, seq_list)


@dataclass(frozen=True)
class TraceEntry:
    rule: str
    path: str
    size_before: int
    size_after: int


@dataclass
class RewriteTrace:
    entries: list[TraceEntry] = field(default_factory=list)

    def format(self) -> str:
        return "\n".join(
            f"step {n}: {e.rule} at {e.path} "
            f"(size {e.size_before}->{e.size_after})"
            for n, e in enumerate(self.entries, start=1))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class RewriteRule:
    """A named rewrite with a matcher and a producer, both over the
    scheduled form.  Kept as a thin record; the rule set is fixed."""

    name: str
    description: str


RULES = (
    RewriteRule("interchange",
                "re-slice sequential/parallel nesting into canonical layers"),
    RewriteRule("float-scalar",
                "move closed scalar components to the leftmost slot"),
    RewriteRule("yank", "contract a cup against a cap leg"),
    RewriteRule("slide-cap",
                "move a box off the left cap leg, transposing it"),
    RewriteRule("slide-cup",
                "move a box off the left cup slot, transposing it"),
)


class _RuleSkip(Exception):
    """Candidate redex could not be applied safely; try the next one."""


@dataclass
class _Cell:
    uid: int
    leaf: Diagram
    ins: list[int]
    outs: list[int]
    pos: Fraction
    layer: int = 0


class _State:
    """Cells wired by tokens, plus exact horizontal positions."""

    def __init__(self, dom: WireType):
        self.dom = dom
        self.wire: dict[int, Wire] = {}
        self.pos: dict[int, Fraction] = {}
        self.producer: dict[int, tuple[int, int] | None] = {}
        self.consumer: dict[int, tuple[int, int] | None] = {}
        self.cells: dict[int, _Cell] = {}
        self.order: list[int] = []
        self.dom_tokens: list[int] = []
        self.cod_wires: tuple[Wire, ...] = ()
        self._next_tok = 0
        self._next_cell = 0
        self._allocated: list[Fraction] = []

    # -- construction -----------------------------------------------------

    @classmethod
    def from_diagram(cls, d: Diagram) -> "_State":
        st = cls(d.dom)
        for i, w in enumerate(d.dom.wires):
            st.dom_tokens.append(st._new_token(w, Fraction(i)))
        frontier = st._walk(d, list(st.dom_tokens), 0)
        st.cod_wires = tuple(st.wire[t] for t in frontier)
        assert st.cod_wires == d.cod.wires
        return st

    def _new_token(self, w: Wire, pos: Fraction) -> int:
        t = self._next_tok
        self._next_tok += 1
        self.wire[t] = w
        self.pos[t] = pos
        self.producer[t] = None
        self.consumer[t] = None
        self._allocated.append(pos)
        return t

    def _alloc_between(self, lo: Fraction, hi: Fraction, k: int) -> list[Fraction]:
        inside = [p for p in self._allocated if lo < p < hi]
        if inside:
            lo = max(inside)
        step = (hi - lo) / (k + 1)
        out = [lo + step * (i + 1) for i in range(k)]
        self._allocated.extend(out)
        return out

    def _gap(self, frontier: list[int], offset: int, k_consumed: int
             ) -> tuple[Fraction, Fraction]:
        lo = (self.pos[frontier[offset - 1]] if offset > 0
              else Fraction(-1))
        right = offset + k_consumed
        if right < len(frontier):
            hi = self.pos[frontier[right]]
        else:
            hi = (max(self._allocated) if self._allocated else Fraction(0)) + 1
        return lo, hi

    def _walk(self, d: Diagram, frontier: list[int], offset: int) -> list[int]:
        if isinstance(d, Id):
            return frontier
        if isinstance(d, Seq):
            frontier = self._walk(d.first, frontier, offset)
            return self._walk(d.second, frontier, offset)
        if isinstance(d, Par):
            frontier = self._walk(d.left, frontier, offset)
            return self._walk(d.right, frontier,
                              offset + len(d.left.cod.wires))
        # primitive cell
        k = len(d.dom.wires)
        ins = frontier[offset:offset + k]
        assert tuple(self.wire[t] for t in ins) == d.dom.wires
        lo, hi = self._gap(frontier, offset, k)
        outs: list[int] = []
        n_out = len(d.cod.wires)
        if ins and n_out:
            first = self._new_token(d.cod.wires[0], self.pos[ins[0]])
            rest = self._alloc_between(self.pos[ins[0]], hi, n_out - 1)
            outs = [first] + [self._new_token(w, p)
                              for w, p in zip(d.cod.wires[1:], rest)]
        elif n_out:
            ps = self._alloc_between(lo, hi, n_out)
            outs = [self._new_token(w, p) for w, p in zip(d.cod.wires, ps)]
        if ins:
            cell_pos = self.pos[ins[0]]
        elif outs:
            cell_pos = self.pos[outs[0]]
        else:
            cell_pos = self._alloc_between(lo, hi, 1)[0]
        cell = _Cell(self._next_cell, d, list(ins), outs, cell_pos)
        self._next_cell += 1
        self.cells[cell.uid] = cell
        self.order.append(cell.uid)
        for slot, t in enumerate(ins):
            self.consumer[t] = (cell.uid, slot)
        for leg, t in enumerate(outs):
            self.producer[t] = (cell.uid, leg)
        return frontier[:offset] + outs + frontier[offset + k:]

    # -- scheduling and assembly -------------------------------------------

    def schedule(self) -> int:
        """Assign every cell the earliest layer its inputs allow."""
        layer_of_tok: dict[int, int] = {t: 0 for t in self.dom_tokens}
        pending = [self.cells[u] for u in self.order]
        # order may be non-topological after surgery; iterate to fixpoint
        remaining = list(pending)
        guard = 0
        while remaining:
            progressed = []
            for c in remaining:
                if all(t in layer_of_tok for t in c.ins):
                    c.layer = max([1] + [layer_of_tok[t] + 1 for t in c.ins])
                    for t in c.outs:
                        layer_of_tok[t] = c.layer
                    progressed.append(c)
            if not progressed:
                raise _RuleSkip("cyclic wiring")
            remaining = [c for c in remaining if c not in progressed]
            guard += 1
            if guard > len(pending) + 1:
                raise _RuleSkip("scheduling did not settle")
        return max((c.layer for c in self.cells.values()), default=0)

    def _prod_layer(self, t: int) -> int:
        p = self.producer[t]
        return 0 if p is None else self.cells[p[0]].layer

    def components(self) -> list[set[int]]:
        """Connected components of cells, linked through shared tokens."""
        parent: dict[int, int] = {u: u for u in self.cells}

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a: int, b: int) -> None:
            parent[find(a)] = find(b)

        for t, prod in self.producer.items():
            cons = self.consumer[t]
            if prod is not None and cons is not None:
                union(prod[0], cons[0])
        comps: dict[int, set[int]] = {}
        for u in self.cells:
            comps.setdefault(find(u), set()).add(u)
        return [comps[r] for r in sorted(
            comps, key=lambda r: min(self.order.index(u) for u in comps[r]))]

    def _is_scalar_component(self, comp: set[int]) -> bool:
        for u in comp:
            c = self.cells[u]
            for t in c.ins:
                if self.producer[t] is None:
                    return False
            for t in c.outs:
                if self.consumer[t] is None:
                    return False
        return True

    def _emit(self, comp: set[int] | None, dom: WireType,
              dom_tokens: list[int]) -> Diagram:
        cells = [self.cells[u] for u in self.order
                 if comp is None or u in comp]
        if not cells:
            return Id(dom)
        # local layers within the subset
        layer_of_tok: dict[int, int] = {t: 0 for t in dom_tokens}
        remaining = list(cells)
        while remaining:
            progressed = []
            for c in remaining:
                if all(t in layer_of_tok for t in c.ins):
                    c.layer = max([1] + [layer_of_tok[t] + 1 for t in c.ins])
                    for t in c.outs:
                        layer_of_tok[t] = c.layer
                    progressed.append(c)
            if not progressed:
                raise _RuleSkip("cyclic wiring in emission")
            remaining = [c for c in remaining if c not in progressed]
        max_layer = max(c.layer for c in cells)
        tokens = set(layer_of_tok) | set(dom_tokens)
        seq_index = {u: i for i, u in enumerate(self.order)}
        layer_terms: list[Diagram] = []
        for level in range(1, max_layer + 1):
            boundary = sorted(
                (t for t in tokens
                 if self._prod_layer(t) < level <= self._cons_layer_local(
                     t, cells, max_layer)),
                key=lambda t: self.pos[t])
            level_cells = sorted(
                (c for c in cells if c.layer == level),
                key=lambda c: (c.pos, seq_index[c.uid]))
            layer_terms.append(
                self._emit_layer(level_cells, boundary))
        return seq_list(layer_terms)

    def _cons_layer_local(self, t: int, cells: list[_Cell],
                          max_layer: int) -> int:
        c = self.consumer[t]
        if c is None:
            return max_layer + 1
        cell = self.cells[c[0]]
        if cell not in cells:
            raise _RuleSkip("token crosses component boundary")
        return cell.layer

    def _emit_layer(self, level_cells: list[_Cell],
                    boundary: list[int]) -> Diagram:
        consumed: dict[int, _Cell] = {}
        for c in level_cells:
            for t in c.ins:
                consumed[t] = c
        index = {t: i for i, t in enumerate(boundary)}
        for c in level_cells:
            if c.ins:
                first = index[c.ins[0]]
                if [index[t] for t in c.ins] != list(
                        range(first, first + len(c.ins))):
                    raise _RuleSkip("cell inputs are not adjacent")
        items: list[tuple[Fraction, int, object]] = []
        seq_index = {u: i for i, u in enumerate(self.order)}
        for t in boundary:
            if t in consumed:
                c = consumed[t]
                if c.ins[0] == t:
                    items.append((self.pos[t], seq_index[c.uid], c))
            else:
                items.append((self.pos[t], -1, t))
        for c in level_cells:
            if not c.ins:
                items.append((c.pos, seq_index[c.uid], c))
        items.sort(key=lambda item: (item[0], item[1]))
        elements: list[Diagram] = []
        id_run: list[Wire] = []
        for _, _, obj in items:
            if isinstance(obj, _Cell):
                if id_run:
                    elements.append(Id(WireType(tuple(id_run))))
                    id_run = []
                elements.append(obj.leaf)
            else:
                id_run.append(self.wire[obj])
        if id_run:
            elements.append(Id(WireType(tuple(id_run))))
        return par_list(elements)

    def assemble(self, float_scalars: bool) -> Diagram:
        self.schedule()
        self._check_cod()
        if not float_scalars:
            return self._emit(None, self.dom, list(self.dom_tokens))
        comps = self.components()
        scalars = [c for c in comps if self._is_scalar_component(c)]
        rest = [u for u in self.cells
                if not any(u in s for s in scalars)]
        parts = [self._emit(s, UNIT, []) for s in scalars]
        if rest or not self.dom.is_unit or not parts:
            parts.append(self._emit(set(rest), self.dom,
                                    list(self.dom_tokens)))
        return par_list(parts)

    def _check_cod(self) -> None:
        cod_toks = sorted((t for t in self.wire if self.consumer[t] is None),
                          key=lambda t: self.pos[t])
        if tuple(self.wire[t] for t in cod_toks) != self.cod_wires:
            raise _RuleSkip("output wires would be reordered")

    # -- measure -----------------------------------------------------------

    def potential(self) -> int:
        """Weight of boxes sitting on left cap legs / left cup slots."""
        total = 0
        for c in self.cells.values():
            if not isinstance(c.leaf, Gen):
                continue
            if len(c.ins) == 1 and len(c.outs) == 1:
                prod = self.producer[c.ins[0]]
                if prod is not None and isinstance(
                        self.cells[prod[0]].leaf, Cap) and prod[1] == 0:
                    total += 1
                cons = self.consumer[c.outs[0]]
                if cons is not None and isinstance(
                        self.cells[cons[0]].leaf, Cup) and cons[1] == 0:
                    total += 2
        return total

    # -- surgery helpers ----------------------------------------------------

    def _reaches(self, start_uid: int, target_uid: int) -> bool:
        seen = set()
        stack = [start_uid]
        while stack:
            u = stack.pop()
            if u == target_uid:
                return True
            if u in seen:
                continue
            seen.add(u)
            for t in self.cells[u].outs:
                cons = self.consumer[t]
                if cons is not None:
                    stack.append(cons[0])
        return False

    def _delete_cell(self, uid: int) -> None:
        cell = self.cells.pop(uid)
        self.order.remove(uid)
        for t in cell.outs:
            del self.wire[t], self.pos[t], self.producer[t], self.consumer[t]

    def _redirect(self, old_tok: int, new_tok: int) -> None:
        """Consumers of old_tok consume new_tok instead; old_tok dies."""
        cons = self.consumer[old_tok]
        self.consumer[new_tok] = cons
        if cons is not None:
            cell, slot = cons
            self.cells[cell].ins[slot] = new_tok

    def apply_yank(self, cup_uid: int, cap_uid: int,
                   src_tok: int, dead_leg: int) -> None:
        cap = self.cells[cap_uid]
        other_leg = cap.outs[1] if cap.outs[0] == dead_leg else cap.outs[0]
        self.consumer[src_tok] = None
        self._delete_cell(cup_uid)
        keep_cons = self.consumer[other_leg]
        self._delete_cell(cap_uid)
        self.consumer[src_tok] = keep_cons
        if keep_cons is not None:
            cell, slot = keep_cons
            self.cells[cell].ins[slot] = src_tok

    def apply_slide_cap(self, gen_uid: int, cap_uid: int) -> None:
        gen = self.cells[gen_uid]
        cap = self.cells[cap_uid]
        left, right = cap.outs
        out_tok = gen.outs[0]
        z = self.wire[out_tok]
        flipped = apply_variant(gen.leaf, TRANSPOSE)
        new_cap = Cap(z.flip())
        # new cap keeps the old leg positions; the transposed box sits on
        # the right leg and feeds whatever the old right leg fed.
        new_left = self._new_token(new_cap.cod.wires[0], self.pos[left])
        new_right = self._new_token(new_cap.cod.wires[1], self.pos[right])
        box_out = self._new_token(self.wire[right], self.pos[right])
        cap_idx = self.order.index(cap_uid)
        gen_idx = self.order.index(gen_uid)
        right_cons = self.consumer[right]
        out_cons = self.consumer[out_tok]
        self._delete_cell(gen_uid)
        self._delete_cell(cap_uid)
        cap_cell = _Cell(self._next_cell, new_cap, [],
                         [new_left, new_right], self.pos[new_left])
        self._next_cell += 1
        box_cell = _Cell(self._next_cell, flipped, [new_right], [box_out],
                         self.pos[new_right])
        self._next_cell += 1
        self.cells[cap_cell.uid] = cap_cell
        self.cells[box_cell.uid] = box_cell
        self.order.insert(min(cap_idx, gen_idx), cap_cell.uid)
        self.order.insert(min(cap_idx, gen_idx) + 1, box_cell.uid)
        self.producer[new_left] = (cap_cell.uid, 0)
        self.producer[new_right] = (cap_cell.uid, 1)
        self.consumer[new_right] = (box_cell.uid, 0)
        self.producer[box_out] = (box_cell.uid, 0)
        self.consumer[new_left] = out_cons
        if out_cons is not None:
            self.cells[out_cons[0]].ins[out_cons[1]] = new_left
        self.consumer[box_out] = right_cons
        if right_cons is not None:
            self.cells[right_cons[0]].ins[right_cons[1]] = box_out

    def apply_slide_cup(self, gen_uid: int, cup_uid: int) -> None:
        gen = self.cells[gen_uid]
        cup = self.cells[cup_uid]
        t_in = gen.ins[0]
        u2 = cup.ins[1]
        w = self.wire[t_in]
        flipped = apply_variant(gen.leaf, TRANSPOSE)
        box_out = self._new_token(w.flip(), self.pos[u2])
        new_cup = Cup(w.flip())
        cup_idx = self.order.index(cup_uid)
        self._delete_cell(gen_uid)
        box_cell = _Cell(self._next_cell, flipped, [u2], [box_out],
                         self.pos[u2])
        self._next_cell += 1
        cup_cell = _Cell(self._next_cell, new_cup, [t_in, box_out], [],
                         self.pos[t_in])
        self._next_cell += 1
        self._delete_cell(cup_uid)
        self.cells[box_cell.uid] = box_cell
        self.cells[cup_cell.uid] = cup_cell
        self.order.insert(cup_idx, box_cell.uid)
        self.order.insert(cup_idx + 1, cup_cell.uid)
        self.consumer[u2] = (box_cell.uid, 0)
        self.producer[box_out] = (box_cell.uid, 0)
        self.consumer[box_out] = (cup_cell.uid, 1)
        self.consumer[t_in] = (cup_cell.uid, 0)

    # -- redex scan ----------------------------------------------------------

    def scan(self) -> Iterator[tuple[str, tuple]]:
        self.schedule()
        seq_index = {u: i for i, u in enumerate(self.order)}
        ordered = sorted(self.cells.values(),
                         key=lambda c: (c.layer, c.pos, seq_index[c.uid]))
        for c in ordered:
            if not isinstance(c.leaf, Cup):
                continue
            t1, t2 = c.ins
            p1, p2 = self.producer[t1], self.producer[t2]
            cap1 = (p1 is not None
                    and isinstance(self.cells[p1[0]].leaf, Cap))
            cap2 = (p2 is not None
                    and isinstance(self.cells[p2[0]].leaf, Cap))
            if cap1 and cap2 and p1[0] == p2[0]:
                continue  # closed loop: a scalar, not a redex
            if cap2 and p2[1] == 0:
                if self._yank_safe(p2[0], t2, t1):
                    yield ("yank", (c.uid, p2[0], t1, t2))
                    continue
            if cap1 and p1[1] == 1:
                if self._yank_safe(p1[0], t1, t2):
                    yield ("yank", (c.uid, p1[0], t2, t1))
        for c in ordered:
            if c.uid not in self.cells:
                continue
            if not isinstance(c.leaf, Gen):
                continue
            if len(c.ins) != 1 or len(c.outs) != 1:
                continue
            prod = self.producer[c.ins[0]]
            if (prod is not None and prod[1] == 0
                    and isinstance(self.cells[prod[0]].leaf, Cap)):
                yield ("slide-cap", (c.uid, prod[0]))
                continue
            cons = self.consumer[c.outs[0]]
            if (cons is not None and cons[1] == 0
                    and isinstance(self.cells[cons[0]].leaf, Cup)):
                yield ("slide-cup", (c.uid, cons[0]))

    def _yank_safe(self, cap_uid: int, dead_leg_tok: int,
                   src_tok: int) -> bool:
        cap = self.cells[cap_uid]
        other = (cap.outs[1] if cap.outs[0] == dead_leg_tok
                 else cap.outs[0])
        keep_cons = self.consumer[other]
        src_prod = self.producer[src_tok]
        if keep_cons is None or src_prod is None:
            return True
        # splicing adds the edge producer(src) -> consumer(other leg);
        # refuse if that closes a cycle (the pair is a trace loop).
        return not self._reaches(keep_cons[0], src_prod[0])

    def describe_site(self, uid: int) -> str:
        c = self.cells.get(uid)
        if c is None:
            return "?"
        return f"layer {c.layer}"


def _n_capcup(d: Diagram) -> int:
    if isinstance(d, (Cap, Cup)):
        return 1
    if isinstance(d, Seq):
        return _n_capcup(d.first) + _n_capcup(d.second)
    if isinstance(d, Par):
        return _n_capcup(d.left) + _n_capcup(d.right)
    return 0


def _measure(d: Diagram) -> tuple:
    st = _State.from_diagram(d)
    canonical = st.assemble(float_scalars=True)
    debt = 0 if canonical == d else 1
    return (_n_capcup(d), debt, st.potential(), d.size())


def rewrite_step(d: Diagram) -> Optional[tuple[Diagram, TraceEntry]]:
    """Apply one rewrite to ``d`` if a redex exists.

    Returns the rewritten diagram and a trace entry, or None when ``d``
    is already in normal form.  Deterministic: redexes are scanned in
    layer order, leftmost first.
    """
    st = _State.from_diagram(d)
    no_float = st.assemble(float_scalars=False)
    target = st.assemble(float_scalars=True)
    if target != d:
        rule = "interchange" if no_float != d else "float-scalar"
        entry = TraceEntry(rule, "whole term", d.size(), target.size())
        return target, entry
    for kind, payload in st.scan():
        trial = copy.deepcopy(st)
        try:
            if kind == "yank":
                cup_uid, cap_uid, src, dead = payload
                site = trial.describe_site(cup_uid)
                trial.apply_yank(cup_uid, cap_uid, src, dead)
            elif kind == "slide-cap":
                gen_uid, cap_uid = payload
                site = trial.describe_site(gen_uid)
                trial.apply_slide_cap(gen_uid, cap_uid)
            else:
                gen_uid, cup_uid = payload
                site = trial.describe_site(gen_uid)
                trial.apply_slide_cup(gen_uid, cup_uid)
            out = trial.assemble(float_scalars=True)
        except _RuleSkip:
            continue
        entry = TraceEntry(kind, site, d.size(), out.size())
        return out, entry
    return None


_MAX_STEPS = 10_000


def normalize(d: Diagram) -> tuple[Diagram, RewriteTrace]:
    """Rewrite to a fixpoint of :func:`rewrite_step`.

    The lexicographic termination measure is asserted to drop on every
    step, so this cannot loop; the result has no reachable yanking
    redexes, boxes sit right of the caps and cups they touch, and closed
    scalar parts are floated to the leftmost parallel slot.
    """
    trace = RewriteTrace()
    current = d
    measure = _measure(current)
    for _ in range(_MAX_STEPS):
        step = rewrite_step(current)
        if step is None:
            return current, trace
        current, entry = step
        trace.entries.append(entry)
        new_measure = _measure(current)
        assert new_measure < measure, (
            f"measure did not decrease: {measure} -> {new_measure} "
            f"on {entry.rule}")
        measure = new_measure
    raise RuntimeError("normalize exceeded the step budget")


def replay(d: Diagram, trace: RewriteTrace) -> Diagram:
    """Re-run a recorded trace from ``d``, checking each step matches."""
    current = d
    for expected in trace.entries:
        step = rewrite_step(current)
        if step is None:
            raise ValueError("trace expects a step but none applies")
        current, entry = step
        if entry != expected:
            raise ValueError(f"trace mismatch: {entry} != {expected}")
    return current


def canonical_form(d: Diagram) -> Diagram:
    """The layered canonical form modulo associativity, units and
    interchange (scalars stay in place)."""
    return _State.from_diagram(d).assemble(float_scalars=False)


def structural_eq(d1: Diagram, d2: Diagram) -> bool:
    """Equality modulo Seq/Par associativity, unit laws and interchange."""
    if d1.dom != d2.dom or d1.cod != d2.cod:
        return False
    return canonical_form(d1) == canonical_form(d2)
