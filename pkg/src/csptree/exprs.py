"""Expression evaluation and pre/post-specified function solving.

Expressions are small JSON-shaped trees evaluated strictly against a
variable store.  Quantifiers range over enumerable domains and are solved
exhaustively.  Arithmetic is closed over the configured bounds: a result
that leaves the range raises ``RangeBlocked``, which callers treat as the
enclosing guard or communication being disabled rather than as a crash.

A pre/post-specified function is solved as a definite description: the
result type is enumerated and the unique value satisfying every
postcondition is returned.  No solution or several solutions mean the
model's specification is buggy and fail loudly; a violated precondition
blocks the caller (the calling process deadlocks at that point).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .coretypes import CoreConfig, ModelError, TypeRef, TypeTable, enumerate_type
from .values import BoolV, EnumV, IntV, ListV, PrimV, RecV, Value


class EvalBlocked(Exception):
    """The enclosing guard/communication is disabled."""


class RangeBlocked(EvalBlocked):
    pass


class PreconditionViolated(EvalBlocked):
    pass


class SpecBugError(ModelError):
    """A definite description with no, or several, solutions."""


class NoSolutionError(SpecBugError):
    pass


class NonUniqueSolutionError(SpecBugError):
    pass


@dataclass
class SpecFunction:
    name: str
    params: List[Tuple[str, TypeRef]]
    result: TypeRef
    pre: List[dict] = field(default_factory=list)
    post: List[dict] = field(default_factory=list)


class Evaluator:
    def __init__(self, types: TypeTable, cfg: CoreConfig, functions: Dict[str, SpecFunction]):
        self.types = types
        self.cfg = cfg
        self.functions = functions
        self._solve_cache: Dict[Tuple[str, Tuple[Value, ...]], Value] = {}

    # -- numbers ----------------------------------------------------------

    def _num(self, v: Value) -> int:
        if isinstance(v, IntV):
            return v.n
        if isinstance(v, PrimV):
            return v.index
        raise ModelError(f"not numeric: {v!r}")

    def _closed(self, n: int, rng: str) -> Value:
        lo, hi = self.cfg.range_of(rng)
        if not (lo <= n <= hi):
            raise RangeBlocked(f"{n} outside {rng} range [{lo},{hi}]")
        return IntV(n)

    # -- evaluation ---------------------------------------------------------

    def eval(self, e: dict, env: Dict[str, Value]) -> Value:
        if not isinstance(e, dict) or len(e) < 1:
            raise ModelError(f"bad expression {e!r}")
        if "var" in e:
            name = e["var"]
            if name not in env:
                raise ModelError(f"unbound variable {name!r}")
            return env[name]
        if "int" in e:
            return IntV(e["int"])
        if "bool" in e:
            return BoolV(e["bool"])
        if "lit" in e:
            tid, lit = e["lit"]
            decl = self.types.decl(tid)
            if lit not in decl.literals:
                raise ModelError(f"unknown literal {tid}_{lit}")
            return EnumV(tid, lit)
        if "prim" in e:
            tid, idx = e["prim"]
            return PrimV(tid, idx)
        if "plus" in e or "minus" in e or "neg" in e:
            rng = e.get("range", "int")
            if "neg" in e:
                (x,) = e["neg"] if isinstance(e["neg"], list) else [e["neg"]]
                return self._closed(-self._num(self.eval(x, env)), rng)
            op = "plus" if "plus" in e else "minus"
            a, b = e[op]
            na, nb = self._num(self.eval(a, env)), self._num(self.eval(b, env))
            return self._closed(na + nb if op == "plus" else na - nb, rng)
        for op in ("lt", "le", "gt", "ge"):
            if op in e:
                a, b = e[op]
                na, nb = self._num(self.eval(a, env)), self._num(self.eval(b, env))
                return BoolV(
                    {"lt": na < nb, "le": na <= nb, "gt": na > nb, "ge": na >= nb}[op]
                )
        if "eq" in e:
            a, b = e["eq"]
            return BoolV(self.eval(a, env) == self.eval(b, env))
        if "ne" in e:
            a, b = e["ne"]
            return BoolV(self.eval(a, env) != self.eval(b, env))
        if "and" in e:
            return BoolV(all(self._bool(x, env) for x in e["and"]))
        if "or" in e:
            return BoolV(any(self._bool(x, env) for x in e["or"]))
        if "not" in e:
            return BoolV(not self._bool(e["not"], env))
        if "ite" in e:
            c, t, f = e["ite"]
            return self.eval(t if self._bool(c, env) else f, env)
        if "field" in e:
            rec_e, fname = e["field"]
            rec = self.eval(rec_e, env)
            if not isinstance(rec, RecV):
                raise ModelError(f"field access on non-record {rec!r}")
            decl = self.types.decl(rec.type_id)
            for (name, _t), v in zip(decl.fields, rec.fields):
                if name == fname:
                    return v
            raise ModelError(f"unknown field {fname!r} of {rec.type_id}")
        if "blength" in e:
            xs = self.eval(e["blength"], env)
            if not isinstance(xs, ListV):
                raise ModelError("blength of non-sequence")
            return IntV(len(xs.items))
        if "bnth" in e:
            xs_e, i_e = e["bnth"]
            xs, i = self.eval(xs_e, env), self._num(self.eval(i_e, env))
            if not isinstance(xs, ListV):
                raise ModelError("bnth of non-sequence")
            if not (0 <= i < len(xs.items)):
                raise ModelError(f"bnth index {i} out of range")
            return xs.items[i]
        if "bmake" in e:
            bound, elems = e["bmake"]
            items = tuple(self.eval(x, env) for x in elems)
            if len(items) > bound:
                raise ModelError("bmake exceeds bound")
            return ListV(bound, items)
        if "bappend" in e:
            a, b = e["bappend"]
            xa, xb = self.eval(a, env), self.eval(b, env)
            if not isinstance(xa, ListV) or not isinstance(xb, ListV):
                raise ModelError("bappend of non-sequences")
            items = xa.items + xb.items
            bound = max(xa.bound, xb.bound)
            if len(items) > bound:
                raise ModelError("bappend exceeds bound")
            return ListV(bound, items)
        if "app" in e:
            fname, *args = e["app"]
            vals = tuple(self.eval(x, env) for x in args)
            return self.apply(fname, vals)
        if "forall" in e or "exists" in e:
            op = "forall" if "forall" in e else "exists"
            var, domain, body = e[op]
            vals = self._domain(domain, env)
            results = (self._bool(body, {**env, var: v}) for v in vals)
            return BoolV(all(results) if op == "forall" else any(results))
        raise ModelError(f"bad expression {e!r}")

    def _bool(self, e: dict, env) -> bool:
        v = self.eval(e, env)
        if not isinstance(v, BoolV):
            raise ModelError(f"expected boolean, got {v!r}")
        return v.flag

    def _domain(self, domain, env) -> List[Value]:
        if isinstance(domain, dict) and "nat_below" in domain:
            n = self._num(self.eval(domain["nat_below"], env))
            return [IntV(i) for i in range(n)]
        return enumerate_type(domain, self.types, self.cfg)

    def guard_holds(self, e: dict, env: Dict[str, Value]) -> bool:
        """Boolean guard with closed-arithmetic semantics: a blocked
        sub-expression disables the guard."""
        if e is None:
            return True
        try:
            return self._bool(e, env)
        except EvalBlocked:
            return False

    # -- definite descriptions -------------------------------------------

    def apply(self, fname: str, args: Tuple[Value, ...]) -> Value:
        if fname not in self.functions:
            raise ModelError(f"unknown function {fname!r}")
        key = (fname, args)
        if key in self._solve_cache:
            return self._solve_cache[key]
        f = self.functions[fname]
        if len(args) != len(f.params):
            raise ModelError(f"{fname} expects {len(f.params)} args, got {len(args)}")
        env = {p: v for (p, _t), v in zip(f.params, args)}
        for pre in f.pre:
            if not self._bool(pre, env):
                raise PreconditionViolated(f"{fname}{args}")
        solutions = []
        for cand in enumerate_type(f.result, self.types, self.cfg):
            cand_env = {**env, "result": cand}
            if all(self._bool(p, cand_env) for p in f.post):
                solutions.append(cand)
        if not solutions:
            raise NoSolutionError(f"{fname}{args}: no result satisfies the postconditions")
        if len(solutions) > 1:
            raise NonUniqueSolutionError(
                f"{fname}{args}: {len(solutions)} results satisfy the postconditions"
            )
        self._solve_cache[key] = solutions[0]
        return solutions[0]


def free_vars(e, acc=None) -> set:
    """Free variables of an expression; quantifier binders are excluded."""
    if acc is None:
        acc = set()
    if isinstance(e, list):
        for x in e:
            free_vars(x, acc)
        return acc
    if not isinstance(e, dict):
        return acc
    if "var" in e:
        acc.add(e["var"])
        return acc
    for op in ("forall", "exists"):
        if op in e:
            var, domain, body = e[op]
            inner = free_vars(body, set())
            inner.discard(var)
            acc |= inner
            free_vars(domain, acc)
            return acc
    for k, v in e.items():
        if k in ("lit", "prim", "range"):
            continue
        free_vars(v, acc)
    return acc
