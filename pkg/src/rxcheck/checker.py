"""The refinement checker.

Walks a resolved program and enforces:

* the transitivity condition: a method may only call methods whose effect is
  at or below its own (``effect.transitivity``), with the refinement that an
  effect-polymorphic method may call another effect-polymorphic method only
  through the same receiver (``effect.poly.receiver``);
* the inheritance condition: an override's effect must be at or below the
  overridden method's (``effect.inheritance``);
* qualifier subsumption for arguments, assignments, and returns
  (``type.argument``);
* thread propagation through fluent chains, by solving each call's
  polymorphic binding (the thread binding is the join of the concrete
  qualifiers at all ``@PolyThread`` positions) and instantiating the return
  type;
* the subscribe rule: a UI-effectful callback may only be attached to a
  stream whose receiver is ``@UIThread`` (or the unreachable
  ``@BottomThread``). The rule fires for any stream-receiver method with
  effect-polymorphic callback parameters, which in the built-in model means
  ``subscribe`` and ``onErrorReturn`` (their callbacks run on the receiver
  stream's thread).

Lambdas have no annotation syntax; their effect is inferred from the target
type when it is concrete, and otherwise from a scan of the lambda's own body
(calls inside nested lambdas belong to the inner lambda, not the outer one).

The checker is flow-insensitive and trusts declared qualifiers; expressions
it cannot type (lambda parameters, unbound names) are treated conservatively
as the top of the relevant lattice.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .diagnostics import Diagnostic, Span, sort_diagnostics
from .frontend.ast import (
    UNKNOWN,
    AnnotatedType,
    AnonClass,
    CallbackType,
    ClassDecl,
    ExprNode,
    ExprStmt,
    FieldRef,
    IfStmt,
    Lambda,
    Literal,
    LocalDecl,
    MethodCall,
    MethodDecl,
    NamedType,
    New,
    PrimitiveType,
    ReturnStmt,
    SchedulerType,
    Stmt,
    StreamType,
    UnitType,
    UnknownType,
    VarRef,
    CALLBACK_INTERFACES,
    MARK_POLY,
)
from .frontend.printer import type_str
from .frontend.resolve import ResolvedProgram
from .qualifiers import (
    EffectQual,
    PolyBinding,
    ThreadQual,
    UnboundPolyQualifier,
    effect_join,
    effect_leq,
    instantiate,
    thread_join,
    thread_leq,
)
from .stubs import MethodSig, StubEnv


@dataclass(frozen=True)
class ClassRef:
    """A class name used in receiver position (static call syntax)."""

    name: str


class UnknownInterface(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


class TypeEnv:
    """Lexically scoped typing context for one method or lambda body."""

    def __init__(
        self,
        rp: ResolvedProgram,
        stubs: StubEnv,
        owner: str | None,
        current_effect: EffectQual,
        return_target: AnnotatedType | None = None,
    ):
        self.rp = rp
        self.stubs = stubs
        self.owner = owner
        self.current_effect = current_effect
        self.return_target = return_target
        self.scopes: list[dict[str, AnnotatedType]] = [{}]

    @classmethod
    def for_method(
        cls,
        rp: ResolvedProgram,
        owner: str | None = None,
        current_effect: EffectQual = EffectQual.SAFE,
    ) -> "TypeEnv":
        return cls(rp, rp.stubs, owner, current_effect)

    def push(self) -> None:
        self.scopes.append({})

    def pop(self) -> None:
        self.scopes.pop()

    def define(self, name: str, t: AnnotatedType) -> None:
        self.scopes[-1][name] = t

    def lookup(self, name: str) -> AnnotatedType | None:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None


def _is_unknown(t: AnnotatedType | ClassRef) -> bool:
    return isinstance(t, ClassRef) or isinstance(t.base, UnknownType)


def _thread_of(t: AnnotatedType | ClassRef) -> ThreadQual:
    """Thread qualifier of an actual, conservatively top when unknowable."""
    if _is_unknown(t):
        return ThreadQual.ANY
    return t.thread if t.thread is not None else ThreadQual.ANY


def _effect_of(t: AnnotatedType | ClassRef) -> EffectQual:
    """Effect qualifier of an actual; unknown values are treated as UI."""
    if _is_unknown(t):
        return EffectQual.UI
    return t.effect if t.effect is not None else EffectQual.SAFE


# ---------------------------------------------------------------------------
# Spec-level single checks


def check_call_effect(
    caller_effect: EffectQual,
    callee: MethodSig,
    same_receiver: bool,
    span: Span,
) -> Diagnostic | None:
    """Transitivity condition, plus the same-receiver rule for poly callers."""
    if (
        caller_effect is EffectQual.POLY
        and callee.effect is EffectQual.POLY
        and not same_receiver
    ):
        return Diagnostic(
            "effect.poly.receiver",
            span,
            f"a @PolyUIEffect method may call the @PolyUIEffect method "
            f"'{callee.owner}#{callee.name}' only on the same receiver",
            related=(callee.span,),
        )
    if not effect_leq(callee.effect, caller_effect):
        return Diagnostic(
            "effect.transitivity",
            span,
            f"calling method '{callee.owner}#{callee.name}' with effect "
            f"{callee.effect} from a context limited to {caller_effect}",
            related=(callee.span,),
        )
    return None


def check_override(sub: MethodSig, super_: MethodSig) -> Diagnostic | None:
    """Inheritance condition: an override may not raise the effect."""
    if not effect_leq(sub.effect, super_.effect):
        return Diagnostic(
            "effect.inheritance",
            sub.span,
            f"method '{sub.owner}#{sub.name}' with effect {sub.effect} overrides "
            f"'{super_.owner}#{super_.name}' declared {super_.effect}",
            related=(super_.span,),
        )
    return None


def check_subscribe(
    stream_thread: ThreadQual,
    callback_effect: EffectQual,
    span: Span = Span("<subscribe>", 1, 1, 1, 1),
    treat_any_as_error: bool = True,
) -> Diagnostic | None:
    """The subscribe rule: UI callbacks need a UI-threaded receiver stream.

    Safe callbacks are accepted on any stream. ``@AnyThread`` receivers
    reject UI callbacks by default, since such a stream may emit on a
    background thread; ``treat_any_as_error=False`` switches to the laxer
    reading that accepts them (useful only to demonstrate its unsoundness).
    """
    if stream_thread is ThreadQual.POLY or callback_effect is EffectQual.POLY:
        raise ValueError("check_subscribe requires concrete qualifiers")
    if callback_effect is not EffectQual.UI:
        return None
    rejected = (
        (ThreadQual.COMP, ThreadQual.ANY) if treat_any_as_error else (ThreadQual.COMP,)
    )
    if stream_thread in rejected:
        return Diagnostic(
            "rx.thread.violation",
            span,
            f"Subscribing a callback with @UIEffect to an observable scheduled "
            f"on {stream_thread}; @UIEffect effects are limited to @UIThread "
            f"observables",
        )
    return None


# ---------------------------------------------------------------------------
# The program checker


@dataclass
class InferredLambda:
    lam: Lambda
    effect: EffectQual
    owner: str | None


class Checker:
    def __init__(self, rp: ResolvedProgram, stubs: StubEnv | None = None,
                 treat_any_subscribe_as_error: bool = True):
        self.rp = rp
        self.stubs = stubs if stubs is not None else rp.stubs
        self.treat_any_as_error = treat_any_subscribe_as_error
        self.diags: list[Diagnostic] = []
        self.inferred_lambdas: list[InferredLambda] = []

    # -- lookups (user tables first, then the stub environment) -------------

    def lookup_method(self, owner: str, name: str, arity: int) -> MethodSig | None:
        cls: str | None = owner
        while cls is not None:
            sig = self.rp.sigs.get((cls, name, arity))
            if sig is None:
                sig = self.stubs.lookup(cls, name, arity)
            if sig is not None:
                return sig
            cls = self.rp.superclass.get(cls)
        return self.stubs.lookup(owner, name, arity)

    def mark_of(self, class_name: str) -> str | None:
        cls = self.rp.classes.get(class_name)
        if cls is not None:
            return cls.mark
        return self.stubs.mark_of(class_name)

    def knows_class(self, name: str) -> bool:
        return name in self.rp.classes or self.stubs.knows_class(name)

    def sam_of(self, interface: str) -> MethodSig | None:
        if interface in self.rp.classes:
            return self.rp.sam_of(interface)
        return self.stubs.sam_of(interface)

    # -- entry point -------------------------------------------------------

    def run(self) -> list[Diagnostic]:
        self.diags.extend(self.rp.diagnostics)
        for _, cls in self.rp.program.all_classes():
            self.check_class(cls)
        return sort_diagnostics(self.diags)

    def check_class(self, cls: ClassDecl) -> None:
        for m in cls.methods:
            sub_sig = self.rp.sigs.get((cls.name, m.name, m.arity))
            if sub_sig is not None:
                super_sig = self._find_override(cls, m.name, m.arity)
                if super_sig is not None:
                    d = check_override(sub_sig, super_sig)
                    if d:
                        self.diags.append(d)
            if m.body is not None:
                self.check_method(cls, m)

    def _find_override(self, cls: ClassDecl, name: str, arity: int) -> MethodSig | None:
        parent = self.rp.superclass.get(cls.name)
        while parent is not None:
            sig = self.rp.sigs.get((parent, name, arity))
            if sig is None:
                sig = self.stubs.lookup(parent, name, arity)
            if sig is not None:
                return sig
            parent = self.rp.superclass.get(parent)
        return None

    def check_method(self, cls: ClassDecl, m: MethodDecl) -> None:
        assert m.effect is not None, "resolve_annotations must run first"
        env = TypeEnv(self.rp, self.stubs, cls.name, m.effect, m.return_type)
        sig = self.rp.sigs.get((cls.name, m.name, m.arity))
        if not m.is_static and sig is not None:
            env.define("this", sig.receiver)
        for p in m.params:
            env.define(p.name, p.declared_type)
        self.check_stmts(m.body or [], env)

    # -- statements ----------------------------------------------------------

    def check_stmts(self, stmts: list[Stmt], env: TypeEnv) -> None:
        for s in stmts:
            if isinstance(s, LocalDecl):
                t = self.type_expr(s.init, env, target=s.declared_type)
                self.subsume(t, s.declared_type, s.span, "initializer")
                env.define(s.name, s.declared_type)
            elif isinstance(s, ExprStmt):
                self.type_expr(s.expr, env)
            elif isinstance(s, ReturnStmt):
                if s.value is not None:
                    t = self.type_expr(s.value, env, target=env.return_target)
                    if env.return_target is not None:
                        self.subsume(t, env.return_target, s.span, "return value")
            elif isinstance(s, IfStmt):
                self.type_expr(s.cond, env)
                env.push()
                self.check_stmts(s.then_body, env)
                env.pop()
                env.push()
                self.check_stmts(s.else_body, env)
                env.pop()

    # -- expressions ------------------------------------------------------------

    def type_expr(
        self,
        e: ExprNode,
        env: TypeEnv,
        target: AnnotatedType | None = None,
    ) -> AnnotatedType | ClassRef:
        if isinstance(e, Literal):
            if e.kind == "int":
                return AnnotatedType(PrimitiveType("int"))
            if e.kind == "string":
                return AnnotatedType(PrimitiveType("String"))
            if e.kind == "boolean":
                return AnnotatedType(PrimitiveType("boolean"))
            return UNKNOWN  # null
        if isinstance(e, VarRef):
            t = env.lookup(e.name)
            if t is not None:
                return t
            if env.owner is not None:
                ft = self.rp.lookup_field(env.owner, e.name)
                if ft is not None:
                    return ft
            if self.knows_class(e.name):
                return ClassRef(e.name)
            return UNKNOWN
        if isinstance(e, FieldRef):
            recv = self.type_expr(e.receiver, env)
            if isinstance(recv, AnnotatedType) and isinstance(recv.base, NamedType):
                ft = self.rp.lookup_field(recv.base.name, e.name)
                if ft is not None:
                    return ft
            return UNKNOWN
        if isinstance(e, MethodCall):
            return self.check_call(e, env)
        if isinstance(e, Lambda):
            if target is None:
                self.diags.append(
                    Diagnostic(
                        "infer.unknown.interface",
                        e.span,
                        "a lambda expression requires a functional-interface target type",
                    )
                )
                return UNKNOWN
            eff = self.handle_lambda(e, target, env)
            if eff is None:
                return UNKNOWN
            return AnnotatedType(target.base, eff)
        if isinstance(e, AnonClass):
            return self.check_anon_class(e, env)
        if isinstance(e, New):
            for a in e.args:
                self.type_expr(a, env)
            qual = (
                EffectQual.SAFE if self.mark_of(e.class_name) == MARK_POLY else None
            )
            return AnnotatedType(self._class_base(e.class_name), qual)
        raise TypeError(f"unhandled expression {e!r}")

    def _class_base(self, name: str):
        return CallbackType(name) if name in CALLBACK_INTERFACES else NamedType(name)

    # -- calls ----------------------------------------------------------------------

    def _owner_of(self, t: AnnotatedType) -> str | None:
        if isinstance(t.base, StreamType):
            return "Observable"
        if isinstance(t.base, SchedulerType):
            return "Scheduler"
        if isinstance(t.base, CallbackType):
            return t.base.interface
        if isinstance(t.base, NamedType):
            return t.base.name
        return None

    def check_call(self, call: MethodCall, env: TypeEnv) -> AnnotatedType:
        t, diags = self.type_chain(call, env)
        self.diags.extend(diags)
        return t

    def type_chain(
        self, call: MethodCall, env: TypeEnv
    ) -> tuple[AnnotatedType, list[Diagnostic]]:
        """Type one call: resolve, bind polymorphic qualifiers, check, instantiate.

        Diagnostics are returned rather than recorded so this can serve as a
        standalone query; ``check_call`` records them.
        """
        diags: list[Diagnostic] = []
        arity = len(call.args)

        recv_type: AnnotatedType | None = None
        is_static = False
        if call.receiver is None:
            if env.owner is None:
                diags.append(self._unknown_method(call, "<no receiver>"))
                return UNKNOWN, diags
            sig = self.lookup_method(env.owner, call.name, arity)
            if sig is None:
                diags.append(self._unknown_method(call, env.owner))
                self._type_args_blind(call, env)
                return UNKNOWN, diags
            this_t = env.lookup("this")
            recv_type = this_t if this_t is not None else sig.receiver
            same_receiver = True
        else:
            recv = self.type_expr(call.receiver, env)
            same_receiver = isinstance(call.receiver, VarRef) and call.receiver.name == "this"
            if isinstance(recv, ClassRef):
                sig = self.lookup_method(recv.name, call.name, arity)
                if sig is None or not sig.is_static:
                    diags.append(self._unknown_method(call, recv.name))
                    self._type_args_blind(call, env)
                    return UNKNOWN, diags
                is_static = True
            elif isinstance(recv.base, UnknownType):
                diags.append(
                    Diagnostic(
                        "resolve.unknown.method",
                        call.span,
                        f"cannot resolve method '{call.name}' on a receiver of unknown type",
                    )
                )
                self._type_args_blind(call, env)
                return UNKNOWN, diags
            else:
                owner = self._owner_of(recv)
                if owner is None:
                    diags.append(self._unknown_method(call, type_str(recv)))
                    self._type_args_blind(call, env)
                    return UNKNOWN, diags
                sig = self.lookup_method(owner, call.name, arity)
                if sig is None:
                    diags.append(self._unknown_method(call, owner))
                    self._type_args_blind(call, env)
                    return UNKNOWN, diags
                recv_type = recv

        # Argument typing; lambdas infer against their formal's type.
        arg_types: list[AnnotatedType | ClassRef] = []
        for arg, formal in zip(call.args, sig.params):
            if isinstance(arg, Lambda):
                eff = self.handle_lambda(arg, formal, env)
                arg_types.append(
                    AnnotatedType(formal.base, eff) if eff is not None else UNKNOWN
                )
            else:
                arg_types.append(self.type_expr(arg, env, target=formal))

        # Effect transitivity. A polymorphic callee reached through a
        # qualified instance takes that instance's effect.
        callee_effect = sig.effect
        if callee_effect is EffectQual.POLY and not same_receiver and recv_type is not None:
            inst = recv_type.effect
            if inst is not None:
                callee_effect = inst
        d = check_call_effect(
            env.current_effect, replace(sig, effect=callee_effect), same_receiver, call.span
        )
        if d:
            diags.append(d)

        # Solve the thread binding: join of concrete actuals at poly positions.
        pairs: list[tuple[AnnotatedType, AnnotatedType | ClassRef]] = []
        if not is_static and recv_type is not None:
            pairs.append((sig.receiver, recv_type))
        pairs.extend(zip(sig.params, arg_types))

        thread_binding: ThreadQual | None = None
        poly_thread_actuals = [
            _thread_if_known(a) for f, a in pairs if f.thread is ThreadQual.POLY
        ]
        if poly_thread_actuals:
            if all(q is ThreadQual.POLY for q in poly_thread_actuals):
                thread_binding = ThreadQual.POLY  # pass the variable through
            elif any(q is ThreadQual.POLY for q in poly_thread_actuals):
                thread_binding = ThreadQual.ANY  # mixed: sound upper bound
            else:
                acc = poly_thread_actuals[0]
                for q in poly_thread_actuals[1:]:
                    acc = thread_join(acc, q)
                thread_binding = acc

        # Solve the effect binding from callback arguments at poly positions.
        effect_binding: EffectQual | None = None
        poly_effect_positions = [
            a for f, a in zip(sig.params, arg_types) if f.effect is EffectQual.POLY
        ]
        for a in poly_effect_positions:
            eff = _effect_of(a)
            effect_binding = eff if effect_binding is None else effect_join(effect_binding, eff)

        # Concretely-qualified formals demand subsumption from their actuals.
        if not is_static and recv_type is not None and sig.receiver.thread not in (
            None,
            ThreadQual.POLY,
        ):
            self._check_actual(recv_type, sig.receiver, call.span, diags, "receiver")
        for (formal, actual), arg in zip(zip(sig.params, arg_types), call.args):
            self._check_actual(actual, formal, arg.span, diags, "argument")

        # The subscribe rule: effect-polymorphic callbacks attached to a
        # stream run on that stream's thread, so a UI-effectful callback
        # needs a UI-threaded receiver.
        if (
            recv_type is not None
            and isinstance(recv_type.base, StreamType)
            and poly_effect_positions
        ):
            stream_q = recv_type.thread or ThreadQual.ANY
            if stream_q is ThreadQual.POLY:
                stream_q = ThreadQual.ANY  # a poly stream may resolve anywhere
            cb_eff = effect_binding if effect_binding is not None else EffectQual.SAFE
            if cb_eff is EffectQual.POLY:
                cb_eff = EffectQual.UI  # may be instantiated as UI elsewhere
            d = check_subscribe(stream_q, cb_eff, call.span, self.treat_any_as_error)
            if d:
                diags.append(d)

        # Instantiate the return type; a binding that is itself the caller's
        # polymorphic variable flows through unchanged.
        ret = sig.ret
        qual = ret.qualifier
        if (qual is ThreadQual.POLY and thread_binding is not ThreadQual.POLY) or (
            qual is EffectQual.POLY and effect_binding is not EffectQual.POLY
        ):
            binding = PolyBinding(
                thread=thread_binding if thread_binding is not ThreadQual.POLY else None,
                effect=effect_binding if effect_binding is not EffectQual.POLY else None,
            )
            try:
                qual = instantiate(qual, binding)
            except UnboundPolyQualifier as exc:
                diags.append(Diagnostic("type.poly.unbound", call.span, str(exc)))
                return UNKNOWN, diags
        result_base = ret.base
        if isinstance(result_base, StreamType) and result_base.elem_is_var:
            if recv_type is not None and isinstance(recv_type.base, StreamType):
                result_base = StreamType(recv_type.base.elem, recv_type.base.elem_is_var)
        return AnnotatedType(result_base, qual), diags

    def _unknown_method(self, call: MethodCall, owner: str) -> Diagnostic:
        return Diagnostic(
            "resolve.unknown.method",
            call.span,
            f"no method '{call.name}' taking {len(call.args)} argument(s) on '{owner}'",
        )

    def _type_args_blind(self, call: MethodCall, env: TypeEnv) -> None:
        for a in call.args:
            if not isinstance(a, Lambda):
                self.type_expr(a, env)

    def _check_actual(
        self,
        actual: AnnotatedType | ClassRef,
        formal: AnnotatedType,
        span: Span,
        diags: list[Diagnostic],
        what: str,
    ) -> None:
        self.subsume(actual, formal, span, what, diags)

    # -- subsumption ------------------------------------------------------------------

    def subsume(
        self,
        actual: AnnotatedType | ClassRef,
        formal: AnnotatedType,
        span: Span,
        what: str,
        diags: list[Diagnostic] | None = None,
    ) -> None:
        """Check r-value/actual against l-value/formal; emit ``type.argument``."""
        sink = diags if diags is not None else self.diags
        if isinstance(actual, ClassRef):
            sink.append(
                Diagnostic(
                    "type.argument", span, f"class '{actual.name}' used as a value"
                )
            )
            return
        if not self._base_compatible(actual, formal):
            sink.append(
                Diagnostic(
                    "type.argument",
                    span,
                    f"{what} of type {type_str(actual)} is not compatible with "
                    f"{type_str(formal)}",
                )
            )
            return
        fq = formal.qualifier
        if fq is None or fq is ThreadQual.POLY or fq is EffectQual.POLY:
            return
        if isinstance(fq, ThreadQual):
            aq = _thread_of(actual)
            if aq is ThreadQual.POLY:
                aq = ThreadQual.ANY  # a variable may resolve to any concrete thread
            if not thread_leq(aq, fq):
                sink.append(
                    Diagnostic(
                        "type.argument",
                        span,
                        f"{what} is {aq} but {fq} is required",
                    )
                )
        else:
            ae = _effect_of(actual)
            if not effect_leq(ae, fq):
                sink.append(
                    Diagnostic(
                        "type.argument",
                        span,
                        f"{what} has effect {ae} but at most {fq} is allowed",
                    )
                )

    def _base_compatible(self, actual: AnnotatedType, formal: AnnotatedType) -> bool:
        a, f = actual.base, formal.base
        if isinstance(a, UnknownType) or isinstance(f, UnknownType):
            return True
        if isinstance(f, NamedType) and f.name == "Object":
            return True
        if isinstance(a, StreamType) and isinstance(f, StreamType):
            if a.elem_is_var or f.elem_is_var:
                return True
            return a.elem == f.elem
        if isinstance(a, SchedulerType) and isinstance(f, SchedulerType):
            return True
        if isinstance(a, CallbackType) and isinstance(f, CallbackType):
            return a.interface == f.interface
        if isinstance(a, NamedType) and isinstance(f, NamedType):
            if a.name == f.name:
                return True
            parent = self.rp.superclass.get(a.name)
            while parent is not None:
                if parent == f.name:
                    return True
                parent = self.rp.superclass.get(parent)
            return False
        if isinstance(a, PrimitiveType) and isinstance(f, PrimitiveType):
            if a.name == f.name:
                return True
            return a.name == "int" and f.name == "long"
        if isinstance(a, UnitType) and isinstance(f, UnitType):
            return True
        return False

    # -- lambdas and anonymous classes ------------------------------------------------

    def handle_lambda(
        self, lam: Lambda, target: AnnotatedType, env: TypeEnv
    ) -> EffectQual | None:
        """Infer the lambda's effect against its target and check its body."""
        try:
            eff = self.infer_lambda_effect(lam, target, env)
        except UnknownInterface as exc:
            self.diags.append(exc.diagnostic)
            return None
        self.inferred_lambdas.append(InferredLambda(lam, eff, env.owner))
        body_env = TypeEnv(self.rp, self.stubs, env.owner, eff, None)
        body_env.scopes = [dict(s) for s in env.scopes]
        body_env.push()
        for p in lam.params:
            body_env.define(p, UNKNOWN)
        if isinstance(lam.body, list):
            self.check_stmts(lam.body, body_env)
        else:
            self.type_expr(lam.body, body_env)
        return eff

    def infer_lambda_effect(
        self, lam: Lambda, target: AnnotatedType, env: TypeEnv
    ) -> EffectQual:
        """Effect for a lambda against ``target``.

        A concrete target qualifier is taken as-is (the body is then checked
        against it). A polymorphic target makes the effect depend on the
        lambda's own body: UI iff it directly calls a UI-effectful method.
        """
        iface = self._functional_interface_of(target)
        if iface is None:
            raise UnknownInterface(
                Diagnostic(
                    "infer.unknown.interface",
                    lam.span,
                    f"target type {type_str(target)} is not a known functional interface",
                )
            )
        target_eff = target.effect
        if target_eff is None:
            sam = self.sam_of(iface)
            target_eff = sam.effect if sam is not None else EffectQual.SAFE
        if target_eff is not EffectQual.POLY:
            return target_eff
        return (
            EffectQual.UI
            if self._body_calls_ui(lam.body, lam.params, env)
            else EffectQual.SAFE
        )

    def _functional_interface_of(self, target: AnnotatedType) -> str | None:
        base = target.base
        name = None
        if isinstance(base, CallbackType):
            name = base.interface
        elif isinstance(base, NamedType):
            name = base.name
        if name is None:
            return None
        return name if self.sam_of(name) is not None else None

    def _body_calls_ui(
        self, body: ExprNode | list[Stmt], params: list[str], env: TypeEnv
    ) -> bool:
        """Scan for a direct call to a UI-effectful method.

        Nested lambda bodies and anonymous-class methods are excluded; each
        callback is inferred independently.
        """
        scan_env = TypeEnv(self.rp, self.stubs, env.owner, env.current_effect, None)
        scan_env.scopes = [dict(s) for s in env.scopes]
        scan_env.push()
        for p in params:
            scan_env.define(p, UNKNOWN)

        def scan_expr(e: ExprNode) -> bool:
            if isinstance(e, MethodCall):
                if self._quiet_call_effect(e, scan_env) is EffectQual.UI:
                    return True
                if e.receiver is not None and scan_expr(e.receiver):
                    return True
                return any(scan_expr(a) for a in e.args if not isinstance(a, Lambda))
            if isinstance(e, FieldRef):
                return scan_expr(e.receiver)
            if isinstance(e, New):
                return any(scan_expr(a) for a in e.args)
            if isinstance(e, (Lambda, AnonClass, VarRef, Literal)):
                return False
            return False

        def scan_stmts(stmts: list[Stmt]) -> bool:
            for s in stmts:
                if isinstance(s, LocalDecl):
                    scan_env.define(s.name, s.declared_type)
                    if not isinstance(s.init, Lambda) and scan_expr(s.init):
                        return True
                elif isinstance(s, ExprStmt):
                    if not isinstance(s.expr, Lambda) and scan_expr(s.expr):
                        return True
                elif isinstance(s, ReturnStmt):
                    if s.value is not None and not isinstance(s.value, Lambda):
                        if scan_expr(s.value):
                            return True
                elif isinstance(s, IfStmt):
                    if scan_expr(s.cond) or scan_stmts(s.then_body) or scan_stmts(s.else_body):
                        return True
            return False

        if isinstance(body, list):
            return scan_stmts(body)
        return scan_expr(body)

    def _quiet_call_effect(self, call: MethodCall, env: TypeEnv) -> EffectQual | None:
        """Resolve a call's effective callee effect without emitting diagnostics."""
        arity = len(call.args)
        recv_type: AnnotatedType | None = None
        if call.receiver is None:
            if env.owner is None:
                return None
            sig = self.lookup_method(env.owner, call.name, arity)
        else:
            quiet = Checker(self.rp, self.stubs, self.treat_any_as_error)
            recv = quiet.type_expr(call.receiver, env)
            if isinstance(recv, ClassRef):
                sig = self.lookup_method(recv.name, call.name, arity)
            elif isinstance(recv.base, UnknownType):
                return None
            else:
                owner = self._owner_of(recv)
                sig = self.lookup_method(owner, call.name, arity) if owner else None
                recv_type = recv
        if sig is None:
            return None
        eff = sig.effect
        if eff is EffectQual.POLY and recv_type is not None:
            inst = recv_type.effect
            if inst is not None:
                eff = inst
        return eff

    def check_anon_class(self, anon: AnonClass, env: TypeEnv) -> AnnotatedType:
        sam = self.sam_of(anon.interface)
        if sam is None:
            self.diags.append(
                Diagnostic(
                    "infer.unknown.interface",
                    anon.span,
                    f"'{anon.interface}' is not a known functional interface",
                )
            )
            return UNKNOWN
        inst_qual = anon.qualifier if anon.qualifier is not None else EffectQual.SAFE
        super_effect = sam.effect if sam.effect is not EffectQual.POLY else inst_qual
        for m in anon.methods:
            m_eff = m.annotations[0] if m.annotations else inst_qual
            if m.name == sam.name and m.arity == sam.arity:
                sub_sig = MethodSig(
                    owner=f"<anon {anon.interface}>",
                    name=m.name,
                    effect=m_eff,
                    receiver=AnnotatedType(self._class_base(anon.interface), inst_qual),
                    params=tuple(p.declared_type for p in m.params),
                    ret=m.return_type,
                    span=m.name_span,
                )
                d = check_override(sub_sig, replace(sam, effect=super_effect))
                if d:
                    self.diags.append(d)
            if m.body is not None:
                body_env = TypeEnv(self.rp, self.stubs, env.owner, m_eff, m.return_type)
                body_env.scopes = [dict(s) for s in env.scopes]
                body_env.push()
                for p in m.params:
                    body_env.define(p.name, p.declared_type)
                self.check_stmts(m.body, body_env)
        return AnnotatedType(self._class_base(anon.interface), inst_qual)


def _thread_if_known(t: AnnotatedType | ClassRef) -> ThreadQual:
    """Thread qualifier at a poly binding position; POLY passes through."""
    if _is_unknown(t):
        return ThreadQual.ANY
    if t.thread is not None:
        return t.thread
    return ThreadQual.ANY


# ---------------------------------------------------------------------------
# Public entry points


def check_program(
    rp: ResolvedProgram,
    env: StubEnv | None = None,
    treat_any_subscribe_as_error: bool = True,
) -> list[Diagnostic]:
    """Check a resolved program; the empty list means it is accepted."""
    checker = Checker(rp, env, treat_any_subscribe_as_error)
    return checker.run()


def type_chain(
    call: MethodCall, env: TypeEnv
) -> tuple[AnnotatedType, list[Diagnostic]]:
    """Type a single (possibly chained) call expression in ``env``."""
    checker = Checker(env.rp, env.stubs)
    t, diags = checker.type_chain(call, env)
    return t, sort_diagnostics(diags + checker.diags)


def infer_lambda_effect(lam: Lambda, target: AnnotatedType, env: TypeEnv) -> EffectQual:
    """Infer a lambda's effect against its target type.

    Raises :class:`UnknownInterface` when the target is not a functional
    interface known to the environment.
    """
    checker = Checker(env.rp, env.stubs)
    return checker.infer_lambda_effect(lam, target, env)
