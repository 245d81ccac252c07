"""CPLEX-style LP text: writer and a reader for the subset the writer emits."""
from __future__ import annotations

import math
import re

from .model import BINARY, CONTINUOUS, EQ, GE, LE, MAX, MIN, MilpModel

_BAD = re.compile(r"[^A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~\[\]]")
_TERMS_PER_LINE = 8


def _safe_names(model: MilpModel) -> list[str]:
    out, seen = [], set()
    for v in model.variables:
        s = _BAD.sub("_", v.name) or "v"
        if s[0].isdigit() or s[0] in ".eE":
            s = "v" + s
        base, k = s, 1
        while s.lower() in seen:
            s = f"{base}_{k}"
            k += 1
        seen.add(s.lower())
        out.append(s)
    return out


def _num(a: float) -> str:
    if a == int(a) and abs(a) < 1e15:
        return str(int(a))
    return repr(float(a))


def _expr(terms, names) -> list[str]:
    parts = []
    for i, (v, a) in enumerate(terms):
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {_num(abs(a))} {names[v]}" if i or a < 0 else f"{_num(a)} {names[v]}")
    lines = []
    for i in range(0, len(parts), _TERMS_PER_LINE):
        lines.append(" ".join(parts[i:i + _TERMS_PER_LINE]))
    return lines or ["0 " + names[0]] if names else lines


def export_lp_text(model: MilpModel) -> str:
    names = _safe_names(model)
    out = [f"\\ {model.name}"]
    if model.objective_constant:
        out.append(f"\\ objective constant: {_num(model.objective_constant)}")
    out.append("Maximize" if model.objective_sense == MAX else "Minimize")
    obj = _expr(sorted(model.objective.items()), names) if names else []
    if obj:
        out.append(" obj: " + obj[0])
        out.extend("  " + line for line in obj[1:])
    out.append("Subject To")
    sense_txt = {LE: "<=", GE: ">=", EQ: "="}
    cnames = set()
    for i, c in enumerate(model.constraints):
        cname = _BAD.sub("_", c.name) or f"c{i}"
        if cname[0].isdigit() or cname.lower() in cnames:
            cname = f"r{i}_{cname}"
        cnames.add(cname.lower())
        lines = _expr(c.terms, names) if c.terms else ["0 " + names[0]]
        lines[-1] += f" {sense_txt[c.sense]} {_num(c.rhs)}"
        out.append(f" {cname}: " + lines[0])
        out.extend("  " + line for line in lines[1:])
    out.append("Bounds")
    for v, nm in zip(model.variables, names):
        lo, hi = v.lower, v.upper
        if math.isinf(lo) and math.isinf(hi):
            out.append(f" {nm} free")
        elif lo == hi:
            out.append(f" {nm} = {_num(lo)}")
        else:
            lo_s = "-inf" if math.isinf(lo) else _num(lo)
            hi_s = "+inf" if math.isinf(hi) else _num(hi)
            out.append(f" {lo_s} <= {nm} <= {hi_s}")
    bins = [nm for v, nm in zip(model.variables, names) if v.kind == BINARY]
    if bins:
        out.append("Binaries")
        for i in range(0, len(bins), _TERMS_PER_LINE):
            out.append(" " + " ".join(bins[i:i + _TERMS_PER_LINE]))
    out.append("End")
    return "\n".join(out) + "\n"


# -- reader --

_SECTIONS = {
    "maximize": "max", "maximise": "max", "maximum": "max", "max": "max",
    "minimize": "min", "minimise": "min", "minimum": "min", "min": "min",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}
_TOKEN = re.compile(r"\s*(<=|>=|=<|=>|=|<|>|[+-]|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?![A-Za-z_])"
                    r"|[A-Za-z_!\"#$%&()/,.;?@`'{}|~\[\]][A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~\[\].]*)")


class LpFormatError(ValueError):
    pass


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise LpFormatError(f"cannot tokenize near {text[pos:pos + 20]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def _is_num(tok: str) -> bool:
    try:
        float(tok)
        return tok.lower() not in ("inf", "infinity", "nan")
    except ValueError:
        return False


def _parse_terms(toks: list[str], var) -> list[tuple[int, float]]:
    terms, sign, coef, i = [], 1.0, None, 0
    while i < len(toks):
        t = toks[i]
        if t in "+-":
            sign = -1.0 if t == "-" else 1.0
            coef = None
        elif _is_num(t):
            coef = float(t)
        else:
            terms.append((var(t), sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
        i += 1
    return terms


def _bound_value(tok: str, neg: bool = False) -> float:
    low = tok.lower().lstrip("+")
    if low in ("inf", "infinity"):
        v = math.inf
    else:
        v = float(low)
    return -v if neg else v


def read_lp_text(text: str) -> MilpModel:
    model = MilpModel()
    ids: dict[str, int] = {}
    bounds: dict[int, tuple[float, float]] = {}
    constant = 0.0

    def var(name: str) -> int:
        key = name
        if key not in ids:
            ids[key] = model.add_variable(0.0, math.inf, CONTINUOUS, name)
        return ids[key]

    # group logical statements per section
    section = None
    stmts: dict[str, list[str]] = {"obj": [], "st": [], "bounds": [], "bin": [], "gen": []}
    sense = MIN
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip() if not raw.strip().startswith("\\") else ""
        m = re.match(r"\\\s*objective constant:\s*(\S+)", raw.strip())
        if m:
            constant = float(m.group(1))
        if model.name == "model" and raw.startswith("\\ ") and ":" not in raw:
            model.name = raw[2:].strip() or "model"
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section in ("max", "min"):
                sense = MAX if section == "max" else MIN
                section = "obj"
            if section == "end":
                break
            continue
        if section is None:
            raise LpFormatError(f"text before any section: {line!r}")
        if section in ("obj", "st"):
            starts_new = bool(re.match(r"^[^:<>=]+:", line)) or not stmts[section]
            if section == "st" and stmts[section] and not starts_new:
                # a continuation unless the previous statement already has its sense
                prev = stmts[section][-1]
                if re.search(r"(<=|>=|=<|=>|=|<|>)", prev):
                    starts_new = True
            if starts_new:
                stmts[section].append(line)
            else:
                stmts[section][-1] += " " + line
        else:
            stmts[section].append(line)
    # bounds first so variable ids follow the Bounds listing order
    if stmts["gen"]:
        raise LpFormatError("general integer variables are not supported")
    for s in stmts["bounds"]:
        toks = _tokens(s)
        # fold signs into the following number / inf
        folded, i = [], 0
        while i < len(toks):
            if toks[i] in "+-" and i + 1 < len(toks) and (_is_num(toks[i + 1]) or toks[i + 1].lower() in ("inf", "infinity")):
                folded.append((toks[i + 1], toks[i] == "-"))
                i += 2
            else:
                folded.append((toks[i], False))
                i += 1
        words = [t for t, _ in folded]
        if len(words) == 2 and words[1].lower() == "free":
            j = var(words[0])
            bounds[j] = (-math.inf, math.inf)
            continue
        if len(folded) == 5:
            j = var(words[2])
            bounds[j] = (_bound_value(*folded[0]), _bound_value(*folded[4]))
            continue
        if len(folded) == 3:
            a, op, b = words
            if _is_num(a) or a.lower() in ("inf", "infinity"):
                j = var(b)
                val = _bound_value(*folded[0])
                op = {"<=": ">=", ">=": "<=", "=<": ">=", "=>": "<=", "<": ">=", ">": "<="}.get(op, op)
            else:
                j = var(a)
                val = _bound_value(*folded[2])
            lo, hi = bounds.get(j, (0.0, math.inf))
            if op in ("<=", "=<", "<"):
                hi = val
            elif op in (">=", "=>", ">"):
                lo = val
            else:
                lo = hi = val
            bounds[j] = (lo, hi)
            continue
        raise LpFormatError(f"cannot read bound {s!r}")
    obj_terms = []
    for s in stmts["obj"]:
        body = s.split(":", 1)[1] if ":" in s else s
        obj_terms += _parse_terms(_tokens(body), var)
    for s in stmts["st"]:
        name = None
        if re.match(r"^[^:<>=]+:", s):
            name, s = s.split(":", 1)
            name = name.strip()
        toks = _tokens(s)
        k = next((i for i, t in enumerate(toks) if t in ("<=", ">=", "=<", "=>", "=", "<", ">")), None)
        if k is None or k + 1 >= len(toks):
            raise LpFormatError(f"constraint without sense or right-hand side: {s!r}")
        op = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">=", "=": "=="}.get(toks[k], toks[k])
        rhs_toks = toks[k + 1:]
        neg = rhs_toks[0] == "-"
        rhs = float(rhs_toks[-1]) * (-1.0 if neg else 1.0)
        model.add_constraint(_parse_terms(toks[:k], var), op, rhs, name)
    binset = set()
    for s in stmts["bin"]:
        for t in s.split():
            binset.add(var(t))
    for j, (lo, hi) in bounds.items():
        model.set_bounds(j, lo, hi)
    for j in sorted(binset):
        v = model.variables[j]
        lo = v.lower if j in bounds else 0.0
        hi = v.upper if j in bounds else 1.0
        model.variables[j] = type(v)(v.id, v.name, max(lo, 0.0), min(hi, 1.0), BINARY)
    model.set_objective(obj_terms, sense, constant)
    return model
