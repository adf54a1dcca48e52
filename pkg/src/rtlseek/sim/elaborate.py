"""Flatten a parsed design into signals and compiled processes.

Every net and reg becomes an unsigned bit-vector slot in a flat value list.
Continuous assigns, ``@(*)``/level-sensitive always blocks, port connections
and gate primitives become combinational processes; edge-sensitive always
blocks become clocked processes. Combinational processes are topologically
ordered using bit-level read/write masks, so a ripple chain through
``c[i] -> c[i+1]`` is not mistaken for a loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from ..verilog import ast as A
from ..verilog.consteval import NotConstant, const_eval

MAX_DEPTH = 32

Values = list  # flat list of ints, indexed by signal id


class ElaborationError(Exception):
    pass


def _mask(width: int) -> int:
    return (1 << width) - 1


@dataclass
class Signal:
    name: str
    width: int
    lsb: int = 0


@dataclass
class Process:
    label: str
    run: Callable  # run(rt) for statements
    reads: dict[int, int]
    writes: dict[int, int]
    triggers: tuple[tuple[int, str], ...] = ()

    @property
    def clocked(self) -> bool:
        return bool(self.triggers)


@dataclass
class SimDesign:
    top: str
    signals: list[Signal]
    ports: dict[str, tuple[str, int]]  # port name -> (direction, signal id)
    comb: list[Process]  # topologically ordered
    clocked: list[Process]
    alias: dict[str, int] = field(default_factory=dict)  # hierarchical name -> signal id

    @property
    def net_count(self) -> int:
        return len(self.signals)

    def signal_id(self, name: str) -> int:
        return self.alias[name]


def _or_masks(into: dict[int, int], other: dict[int, int]) -> None:
    for sig, m in other.items():
        into[sig] = into.get(sig, 0) | m


class _ModuleScope:
    """Name resolution for one instance during flattening."""

    def __init__(self, builder: "_Builder", module: A.ModuleDecl, prefix: str, params: dict[str, tuple[int, int]]):
        self.b = builder
        self.module = module
        self.prefix = prefix
        self.params = params
        self.sigs: dict[str, int] = {}

    def const(self, expr: A.Expr) -> int:
        try:
            return const_eval(expr, self.params)[0]
        except NotConstant as exc:
            raise ElaborationError(f"{self.prefix or self.module.name}: expression is not constant ({exc})") from None

    def range_width(self, rng: Optional[A.Range]) -> tuple[int, int]:
        if rng is None:
            return 1, 0
        msb, lsb = self.const(rng.msb), self.const(rng.lsb)
        if msb < lsb:
            raise ElaborationError(f"{self.prefix or self.module.name}: ascending ranges [{msb}:{lsb}] are not supported")
        return msb - lsb + 1, lsb

    def sig(self, name: str) -> Optional[int]:
        return self.sigs.get(name)

    # -- widths ------------------------------------------------------------

    def width(self, e: A.Expr) -> int:
        if isinstance(e, A.Identifier):
            sid = self.sigs.get(e.name)
            if sid is not None:
                return self.b.signals[sid].width
            if e.name in self.params:
                return self.params[e.name][1]
            raise ElaborationError(f"unknown identifier {e.name!r}")
        if isinstance(e, A.Number):
            return e.width
        if isinstance(e, A.Unary):
            return self.width(e.operand) if e.op in ("~", "-", "+") else 1
        if isinstance(e, A.Binary):
            if e.op in ("==", "!=", "===", "!==", "<", "<=", ">", ">=", "&&", "||"):
                return 1
            if e.op in ("<<", ">>", "<<<", ">>>", "**"):
                return self.width(e.left)
            return max(self.width(e.left), self.width(e.right))
        if isinstance(e, A.Ternary):
            return max(self.width(e.then), self.width(e.otherwise))
        if isinstance(e, A.Concat):
            return sum(self.width(p) for p in e.parts)
        if isinstance(e, A.Replication):
            return self.const(e.count) * sum(self.width(p) for p in e.parts)
        if isinstance(e, A.BitSelect):
            return 1
        if isinstance(e, A.PartSelect):
            hi, lo = self.const(e.msb), self.const(e.lsb)
            if hi < lo:
                raise ElaborationError("reversed part-select")
            return hi - lo + 1
        raise ElaborationError(f"unsupported expression {type(e).__name__}")

    # -- read masks ------------------------------------------------------------

    def reads(self, e: A.Expr, out: dict[int, int]) -> None:
        if isinstance(e, A.Identifier):
            sid = self.sigs.get(e.name)
            if sid is not None:
                out[sid] = out.get(sid, 0) | _mask(self.b.signals[sid].width)
            return
        if isinstance(e, (A.BitSelect, A.PartSelect)):
            sid = self.sigs.get(e.target.name)
            if sid is None:
                for c in e.children():
                    if c is not e.target:
                        self.reads(c, out)
                return
            sig = self.b.signals[sid]
            try:
                if isinstance(e, A.BitSelect):
                    lo = hi = const_eval(e.index, self.params)[0]
                else:
                    hi, lo = self.const(e.msb), self.const(e.lsb)
                m = 0
                for bit in range(max(lo, sig.lsb), min(hi, sig.lsb + sig.width - 1) + 1):
                    m |= 1 << (bit - sig.lsb)
            except NotConstant:
                m = _mask(sig.width)
                self.reads(e.index, out)
            out[sid] = out.get(sid, 0) | m
            return
        for c in e.children():
            self.reads(c, out)

    # -- expression compilation ------------------------------------------------

    def compile(self, e: A.Expr, ctx: int) -> Callable[[Values], int]:
        """Compile ``e`` evaluated in a context at least ``ctx`` bits wide."""
        if isinstance(e, A.Number):
            value = e.value
            return lambda v: value
        if isinstance(e, A.Identifier):
            sid = self.sigs.get(e.name)
            if sid is None:
                value = self.params[e.name][0]
                return lambda v: value
            return lambda v: v[sid]
        w = max(self.width(e), ctx)
        m = _mask(w)
        if isinstance(e, A.Unary):
            op = e.op
            if op in ("~", "-", "+"):
                f = self.compile(e.operand, w)
                if op == "~":
                    return lambda v: ~f(v) & m
                if op == "-":
                    return lambda v: -f(v) & m
                return f
            ow = self.width(e.operand)
            om = _mask(ow)
            f = self.compile(e.operand, ow)
            if op == "!":
                return lambda v: int(f(v) == 0)
            if op == "&":
                return lambda v: int(f(v) == om)
            if op == "~&":
                return lambda v: int(f(v) != om)
            if op == "|":
                return lambda v: int(f(v) != 0)
            if op == "~|":
                return lambda v: int(f(v) == 0)
            if op == "^":
                return lambda v: bin(f(v)).count("1") & 1
            return lambda v: (bin(f(v)).count("1") & 1) ^ 1
        if isinstance(e, A.Binary):
            return self._binary(e, w, m)
        if isinstance(e, A.Ternary):
            c = self.compile(e.cond, self.width(e.cond))
            t = self.compile(e.then, w)
            o = self.compile(e.otherwise, w)
            return lambda v: t(v) if c(v) else o(v)
        if isinstance(e, (A.Concat, A.Replication)):
            parts = [(self.compile(p, self.width(p)), self.width(p)) for p in e.parts]
            count = self.const(e.count) if isinstance(e, A.Replication) else 1
            unit = sum(pw for _, pw in parts)

            def concat(v, parts=parts, count=count, unit=unit):
                acc = 0
                for f, pw in parts:
                    acc = (acc << pw) | f(v)
                out = 0
                for _ in range(count):
                    out = (out << unit) | acc
                return out

            return concat
        if isinstance(e, A.BitSelect):
            return self._select(e.target, e.index, None)
        if isinstance(e, A.PartSelect):
            return self._select(e.target, e.msb, e.lsb)
        raise ElaborationError(f"unsupported expression {type(e).__name__}")

    def _select(self, target: A.Identifier, first: A.Expr, second: Optional[A.Expr]):
        sid = self.sigs.get(target.name)
        if sid is None:
            base_value, base_width = self.params[target.name]
            base = lambda v: base_value
            lsb, width = 0, base_width
        else:
            base = lambda v: v[sid]
            lsb, width = self.b.signals[sid].lsb, self.b.signals[sid].width
        if second is not None:
            hi, lo = self.const(first), self.const(second)
            shift = lo - lsb
            m = _mask(hi - lo + 1)
            if shift >= 0:
                return lambda v: (base(v) >> shift) & m
            return lambda v: (base(v) << -shift) & m
        try:
            idx = const_eval(first, self.params)[0]
        except NotConstant:
            fi = self.compile(first, self.width(first))

            def dyn(v):
                i = fi(v) - lsb
                if 0 <= i < width:
                    return (base(v) >> i) & 1
                return 0

            return dyn
        shift = idx - lsb
        if 0 <= shift < width:
            return lambda v: (base(v) >> shift) & 1
        return lambda v: 0

    def _binary(self, e: A.Binary, w: int, m: int):
        op = e.op
        if op in ("==", "!=", "===", "!==", "<", "<=", ">", ">="):
            ow = max(self.width(e.left), self.width(e.right))
            l, r = self.compile(e.left, ow), self.compile(e.right, ow)
            if op in ("==", "==="):
                return lambda v: int(l(v) == r(v))
            if op in ("!=", "!=="):
                return lambda v: int(l(v) != r(v))
            if op == "<":
                return lambda v: int(l(v) < r(v))
            if op == "<=":
                return lambda v: int(l(v) <= r(v))
            if op == ">":
                return lambda v: int(l(v) > r(v))
            return lambda v: int(l(v) >= r(v))
        if op in ("&&", "||"):
            l = self.compile(e.left, self.width(e.left))
            r = self.compile(e.right, self.width(e.right))
            if op == "&&":
                return lambda v: int(bool(l(v)) and bool(r(v)))
            return lambda v: int(bool(l(v)) or bool(r(v)))
        if op in ("<<", ">>", "<<<", ">>>", "**"):
            l = self.compile(e.left, w)
            r = self.compile(e.right, self.width(e.right))
            if op in ("<<", "<<<"):
                return lambda v: (l(v) << r(v)) & m if r(v) < w else 0
            if op in (">>", ">>>"):
                return lambda v: l(v) >> r(v)
            return lambda v: pow(l(v), r(v), 1 << w)
        l, r = self.compile(e.left, w), self.compile(e.right, w)
        if op == "+":
            return lambda v: (l(v) + r(v)) & m
        if op == "-":
            return lambda v: (l(v) - r(v)) & m
        if op == "*":
            return lambda v: (l(v) * r(v)) & m
        if op == "/":
            return lambda v: (l(v) // rv) & m if (rv := r(v)) else 0
        if op == "%":
            return lambda v: (l(v) % rv) & m if (rv := r(v)) else 0
        if op == "&":
            return lambda v: l(v) & r(v)
        if op == "|":
            return lambda v: l(v) | r(v)
        if op == "^":
            return lambda v: l(v) ^ r(v)
        if op in ("~^", "^~"):
            return lambda v: ~(l(v) ^ r(v)) & m
        raise ElaborationError(f"unsupported operator {op!r}")

    # -- lvalues -------------------------------------------------------------

    def lvalue(self, e: A.Expr) -> tuple[int, Callable, dict[int, int], dict[int, int]]:
        """Return (width, writer, write masks, index read masks).

        ``writer(v, value)`` yields ``(sig, mask, bits)`` updates.
        """
        if isinstance(e, A.Concat):
            parts = [self.lvalue(p) for p in e.parts]
            total = sum(p[0] for p in parts)
            writes: dict[int, int] = {}
            reads: dict[int, int] = {}
            layout = []
            offset = total
            for pw, writer, pwrites, preads in parts:
                offset -= pw
                layout.append((offset, _mask(pw), writer))
                _or_masks(writes, pwrites)
                _or_masks(reads, preads)

            def concat_writer(v, value, layout=layout):
                out = []
                for off, pm, writer in layout:
                    out.extend(writer(v, (value >> off) & pm))
                return out

            return total, concat_writer, writes, reads
        target = e.target if isinstance(e, (A.BitSelect, A.PartSelect)) else e
        if not isinstance(target, A.Identifier):
            raise ElaborationError("invalid assignment target")
        sid = self.sigs.get(target.name)
        if sid is None:
            raise ElaborationError(f"cannot assign to {target.name!r}")
        sig = self.b.signals[sid]
        full = _mask(sig.width)
        if isinstance(e, A.Identifier):
            return sig.width, lambda v, value: ((sid, full, value & full),), {sid: full}, {}
        if isinstance(e, A.PartSelect):
            hi, lo = self.const(e.msb), self.const(e.lsb)
            if hi < lo:
                raise ElaborationError("reversed part-select")
            width = hi - lo + 1
            shift = lo - sig.lsb
            m = 0
            for bit in range(hi - lo + 1):
                pos = shift + bit
                if 0 <= pos < sig.width:
                    m |= 1 << pos
            if shift >= 0:
                return width, lambda v, value: ((sid, m, (value << shift) & m),), {sid: m}, {}
            return width, lambda v, value: ((sid, m, (value >> -shift) & m),), {sid: m}, {}
        try:
            idx = const_eval(e.index, self.params)[0]
        except NotConstant:
            fi = self.compile(e.index, self.width(e.index))
            lsb, sw = sig.lsb, sig.width
            reads: dict[int, int] = {}
            self.reads(e.index, reads)

            def dyn_writer(v, value):
                i = fi(v) - lsb
                if 0 <= i < sw:
                    return ((sid, 1 << i, (value & 1) << i),)
                return ()

            return 1, dyn_writer, {sid: full}, reads
        pos = idx - sig.lsb
        if not 0 <= pos < sig.width:
            return 1, lambda v, value: (), {}, {}
        bit = 1 << pos
        return 1, lambda v, value: ((sid, bit, (value & 1) << pos),), {sid: bit}, {}

    # -- statements ------------------------------------------------------------

    def stmt(self, s: A.Stmt, reads: dict[int, int], writes: dict[int, int]) -> Callable:
        """Compile a statement to ``run(rt)``; accumulates read/write masks."""
        if isinstance(s, (A.BlockingAssign, A.NonBlockingAssign)):
            lw, writer, w_masks, idx_reads = self.lvalue(s.lhs)
            self.reads(s.rhs, reads)
            _or_masks(reads, idx_reads)
            _or_masks(writes, w_masks)
            rhs = self.compile(s.rhs, lw)
            lm = _mask(lw)
            if isinstance(s, A.BlockingAssign):
                def blocking(rt):
                    v = rt.values
                    for sid, m, bits in writer(v, rhs(v) & lm):
                        rt.write(sid, (v[sid] & ~m) | bits)
                return blocking

            def nonblocking(rt):
                v = rt.values
                rt.nba.extend(writer(v, rhs(v) & lm))
            return nonblocking
        if isinstance(s, A.If):
            self.reads(s.cond, reads)
            cond = self.compile(s.cond, self.width(s.cond))
            then = self.stmt(s.then, reads, writes)
            if s.otherwise is None:
                def if_(rt):
                    if cond(rt.values):
                        then(rt)
                return if_
            other = self.stmt(s.otherwise, reads, writes)

            def if_else(rt):
                if cond(rt.values):
                    then(rt)
                else:
                    other(rt)
            return if_else
        if isinstance(s, A.Case):
            self.reads(s.expr, reads)
            cw = max([self.width(s.expr)] + [self.width(l) for arm in s.items for l in arm.labels])
            subject = self.compile(s.expr, cw)
            arms = []
            for arm in s.items:
                labels = []
                for l in arm.labels:
                    self.reads(l, reads)
                    labels.append(self.compile(l, cw))
                arms.append((labels, self.stmt(arm.body, reads, writes)))
            default = self.stmt(s.default, reads, writes) if s.default is not None else None

            def case(rt):
                v = rt.values
                key = subject(v)
                for labels, body in arms:
                    for label in labels:
                        if label(v) == key:
                            body(rt)
                            return
                if default is not None:
                    default(rt)
            return case
        if isinstance(s, A.Block):
            body = [self.stmt(sub, reads, writes) for sub in s.stmts]

            def block(rt):
                for f in body:
                    f(rt)
            return block
        if isinstance(s, A.NullStmt):
            return lambda rt: None
        raise ElaborationError(f"unsupported statement {type(s).__name__}")


class _Builder:
    def __init__(self, library: dict[str, A.ModuleDecl]):
        self.library = library
        self.signals: list[Signal] = []
        self.names: dict[str, int] = {}
        self.processes: list[Process] = []

    def new_signal(self, name: str, width: int, lsb: int) -> int:
        self.signals.append(Signal(name, width, lsb))
        sid = len(self.signals) - 1
        self.names[name] = sid
        return sid

    def add_assign(self, scope: _ModuleScope, label: str, lhs: A.Expr, rhs_fn, rhs_reads: dict[int, int]) -> None:
        lw, writer, w_masks, idx_reads = scope.lvalue(lhs)
        reads = dict(rhs_reads)
        _or_masks(reads, idx_reads)
        lm = _mask(lw)

        def run(rt):
            v = rt.values
            for sid, m, bits in writer(v, rhs_fn(v) & lm):
                rt.write(sid, (v[sid] & ~m) | bits)

        self.processes.append(Process(label, run, reads, w_masks))
        return lw

    def instantiate(self, module: A.ModuleDecl, prefix: str, overrides: dict[str, tuple[int, int]], depth: int,
                    bindings: Optional[dict[str, int]] = None) -> _ModuleScope:
        if depth > MAX_DEPTH:
            raise ElaborationError(f"instantiation depth exceeds {MAX_DEPTH} (recursive hierarchy?)")
        params = _module_params(module, overrides, prefix or module.name)
        scope = _ModuleScope(self, module, prefix, params)

        bindings = bindings or {}
        for port in module.ports:
            if port.direction == "inout":
                raise ElaborationError(f"{prefix}{port.name}: inout ports are not supported")
            width, lsb = scope.range_width(port.range)
            if port.name in bindings:
                sid = bindings[port.name]
                self.names[prefix + port.name] = sid
            else:
                sid = self.new_signal(prefix + port.name, width, lsb)
            scope.sigs[port.name] = sid
        for item in module.items:
            if isinstance(item, A.NetDecl):
                width, lsb = scope.range_width(item.range)
                for name in item.names:
                    scope.sigs[name] = self.new_signal(prefix + name, width, lsb)

        for n, item in enumerate(module.items):
            label = f"{prefix}{module.name}.item{n}"
            if isinstance(item, A.ContinuousAssign):
                lw, _, _, _ = scope.lvalue(item.lhs)
                reads: dict[int, int] = {}
                scope.reads(item.rhs, reads)
                self.add_assign(scope, label, item.lhs, scope.compile(item.rhs, lw), reads)
            elif isinstance(item, A.AlwaysBlock):
                reads, writes = {}, {}
                run = scope.stmt(item.body, reads, writes)
                triggers = ()
                if item.sensitivity.style == "edge":
                    triggers = tuple((scope.sigs[s.signal], s.edge) for s in item.sensitivity.items)
                self.processes.append(Process(label, run, reads, writes, triggers))
            elif isinstance(item, A.Instantiation):
                if item.module in A.GATE_PRIMITIVES:
                    self.gate(scope, item, label)
                else:
                    self.child(scope, item, depth)
        return scope

    def gate(self, scope: _ModuleScope, item: A.Instantiation, label: str) -> None:
        out, *ins = [c.expr for c in item.connections]
        if out is None or any(e is None for e in ins):
            raise ElaborationError(f"{label}: gate terminals cannot be empty")
        ow, _, _, _ = scope.lvalue(out)
        w = max([ow] + [scope.width(e) for e in ins])
        m = _mask(w)
        fns = [scope.compile(e, w) for e in ins]
        reads: dict[int, int] = {}
        for e in ins:
            scope.reads(e, reads)
        kind = item.module
        base = kind[1:] if kind in ("nand", "nor", "xnor") else kind

        def combine(v):
            vals = [f(v) for f in fns]
            if base == "and":
                acc = m
                for x in vals:
                    acc &= x
            elif base == "or":
                acc = 0
                for x in vals:
                    acc |= x
            elif base == "xor":
                acc = 0
                for x in vals:
                    acc ^= x
            elif base == "not":
                acc = ~vals[0]
            else:  # buf
                acc = vals[0]
            if kind in ("nand", "nor", "xnor"):
                acc = ~acc
            return acc & m

        self.add_assign(scope, label, out, combine, reads)

    def child(self, scope: _ModuleScope, item: A.Instantiation, depth: int) -> None:
        where = f"{scope.prefix}{item.name}"
        child = self.library.get(item.module)
        if child is None:
            raise ElaborationError(f"{where}: unresolved module {item.module!r}")
        overrides: dict[str, tuple[int, int]] = {}
        settable = [p.name for p in child.parameters if not p.local]
        for i, conn in enumerate(item.parameters):
            name = conn.port if conn.port is not None else (settable[i] if i < len(settable) else None)
            if name is None or name not in settable:
                raise ElaborationError(f"{where}: no parameter {conn.port or i!r} on module {child.name!r}")
            if conn.expr is not None:
                try:
                    overrides[name] = const_eval(conn.expr, scope.params)
                except NotConstant:
                    raise ElaborationError(f"{where}: parameter override {name!r} is not constant") from None
        port_names = [p.name for p in child.ports]
        conns: dict[str, Optional[A.Expr]] = {}
        for i, conn in enumerate(item.connections):
            if conn.port is None:
                if i >= len(port_names):
                    raise ElaborationError(f"{where}: too many connections for module {child.name!r}")
                conns[port_names[i]] = conn.expr
            else:
                if conn.port not in port_names:
                    raise ElaborationError(f"{where}: module {child.name!r} has no port {conn.port!r}")
                if conn.port in conns:
                    raise ElaborationError(f"{where}: port {conn.port!r} connected twice")
                conns[conn.port] = conn.expr

        # whole-signal connections of equal width share storage with the parent
        prefix = f"{scope.prefix}{item.name}."
        probe = _ModuleScope(self, child, prefix, _module_params(child, overrides, where))
        bindings: dict[str, int] = {}
        for port in child.ports:
            expr = conns.get(port.name)
            if isinstance(expr, A.Identifier) and expr.name in scope.sigs:
                width, lsb = probe.range_width(port.range)
                psig = self.signals[scope.sigs[expr.name]]
                if psig.width == width and psig.lsb == lsb:
                    bindings[port.name] = scope.sigs[expr.name]

        inner = self.instantiate(child, prefix, overrides, depth + 1, bindings)
        for port in child.ports:
            if port.name in bindings:
                continue
            expr = conns.get(port.name)
            if expr is None:
                continue
            csid = inner.sigs[port.name]
            cw = self.signals[csid].width
            label = f"{prefix}{port.name}"
            if port.direction == "input":
                reads: dict[int, int] = {}
                scope.reads(expr, reads)
                fn = scope.compile(expr, cw)
                self.add_assign(inner, label, A.Identifier(port.name), fn, reads)
            else:
                try:
                    scope.lvalue(expr)
                except ElaborationError:
                    raise ElaborationError(f"{label}: output port must connect to an assignable expression") from None
                self.add_assign(scope, label, expr, lambda v, csid=csid: v[csid], {csid: _mask(cw)})


def _module_params(module: A.ModuleDecl, overrides: dict[str, tuple[int, int]], where: str) -> dict[str, tuple[int, int]]:
    params: dict[str, tuple[int, int]] = {}
    for p in module.parameters:
        if not p.local and p.name in overrides:
            value, width = overrides[p.name]
        else:
            try:
                value, width = const_eval(p.value, params)
            except NotConstant as exc:
                raise ElaborationError(f"{where}: parameter {p.name!r} is not constant ({exc})") from None
        if p.range is not None:
            try:
                msb, lsb = const_eval(p.range.msb, params)[0], const_eval(p.range.lsb, params)[0]
            except NotConstant:
                raise ElaborationError(f"{where}: range of parameter {p.name!r} is not constant") from None
            width = abs(msb - lsb) + 1
            value &= _mask(width)
        params[p.name] = (value, width)
    return params


def _topo_order(procs: list[Process]) -> list[Process]:
    n = len(procs)
    writers: dict[int, list[tuple[int, int]]] = {}
    for i, p in enumerate(procs):
        for sid, m in p.writes.items():
            writers.setdefault(sid, []).append((i, m))
    succ: list[set[int]] = [set() for _ in range(n)]
    indeg = [0] * n
    for j, q in enumerate(procs):
        for sid, rm in q.reads.items():
            for i, wm in writers.get(sid, ()):
                if i != j and wm & rm and j not in succ[i]:
                    succ[i].add(j)
                    indeg[j] += 1
    import heapq

    ready = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in sorted(succ[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    if len(order) != n:
        stuck = [procs[i].label for i in range(n) if indeg[i] > 0]
        raise ElaborationError("combinational cycle through " + ", ".join(stuck[:6]))
    return [procs[i] for i in order]


def _check_drivers(b: _Builder) -> None:
    driven: dict[int, list[tuple[int, Process]]] = {}
    for p in b.processes:
        for sid, m in p.writes.items():
            for other_m, other in driven.get(sid, ()):
                if other_m & m and not (p.clocked and other.clocked):
                    raise ElaborationError(
                        f"{b.signals[sid].name} has multiple drivers ({other.label}, {p.label})"
                    )
            driven.setdefault(sid, []).append((m, p))


def pick_top(tree: A.SyntaxTree, top: Optional[str] = None) -> A.ModuleDecl:
    if top is not None:
        m = tree.module(top)
        if m is None:
            raise ElaborationError(f"no module named {top!r}")
        return m
    if len(tree.modules) == 1:
        return tree.modules[0]
    used = {i.module for m in tree.modules for i in m.items if isinstance(i, A.Instantiation)}
    roots = [m for m in tree.modules if m.name not in used]
    if len(roots) != 1:
        raise ElaborationError(
            "cannot infer the top module; candidates: " + ", ".join(m.name for m in roots or tree.modules)
        )
    return roots[0]


def elaborate(tree: A.SyntaxTree, top: Optional[str] = None, library: Optional[list[A.ModuleDecl]] = None) -> SimDesign:
    """Flatten ``tree`` below its top module.

    ``library`` supplies extra module definitions for instantiations that the
    tree itself does not define.
    """
    modules: dict[str, A.ModuleDecl] = {}
    for m in library or ():
        modules[m.name] = m
    for m in tree.modules:
        modules[m.name] = m
    root = pick_top(tree, top)
    b = _Builder(modules)
    scope = b.instantiate(root, "", {}, 0)
    _check_drivers(b)
    comb = _topo_order([p for p in b.processes if not p.clocked])
    clocked = [p for p in b.processes if p.clocked]
    ports = {p.name: (p.direction, scope.sigs[p.name]) for p in root.ports}
    for direction, sid in ports.values():
        if direction == "input":
            for p in b.processes:
                if sid in p.writes:
                    raise ElaborationError(f"input port {b.signals[sid].name!r} is driven inside the design")
    return SimDesign(root.name, b.signals, ports, comb, clocked, dict(b.names))
