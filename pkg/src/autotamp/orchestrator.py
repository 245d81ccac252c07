"""Language-model methods: STL translation with syntactic and semantic re-prompting, and baselines.

Every prompt is one system message plus one user message. Earlier turns of the
same conversation are replayed inside the user message between tags, so a
transcript is a pure function of the conversation so far and scripted replay
by transcript hash is exact.
"""
from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Mapping, Sequence

from . import monitor, stl
from .diagnostics import Code, DiagnosticError, error, render
from .geometry import Environment, Trajectory, check_kinematics
from .llm import LlmClient, LlmError, Message
from .planner import PlanConfig, PlanResult, plan, state_at, subtask_plan, walls_clause

METHODS = ("end2end", "naive", "saycan", "feedback", "autotamp")
MAX_SYNTACTIC = 5
MAX_SEMANTIC = 3
MAX_REPLANS = 5
TOP_K = 5
MAX_SUBTASKS = 12
STOP_OPTION = "done()"
SATISFIED = "SATISFIED"
USER_SPLIT = "=== user ==="


class Timeout(RuntimeError):
    pass


# -- prompts ----------------------------------------------------------------------

def load_prompt(name: str) -> str:
    return resources.files("autotamp").joinpath("prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def describe_environment(env: Environment) -> str:
    x0, x1, y0, y1 = env.workspace
    num = stl.format_number
    lines = [f"Workspace: x from {num(x0)} to {num(x1)}, y from {num(y0)} to {num(y1)}.", "Regions:"]
    for r in env.regions:
        attrs = ", ".join(f"{k}={v}" for k, v in sorted(r.attributes.items()))
        lines.append(f"- {r.name}: x from {num(r.x_min)} to {num(r.x_max)}, y from {num(r.y_min)} to "
                     f"{num(r.y_max)}" + (f" ({attrs})" if attrs else ""))
    groups: dict[str, list[str]] = {}
    for r in env.regions:
        if r.group:
            groups.setdefault(r.group, []).append(r.name)
    for g, names in sorted(groups.items()):
        lines.append(f"Group {g}: {', '.join(names)}")
    lines.append("Robots:")
    for a in env.agents:
        lines.append(f"- {a.name}: starts at ({num(a.start[0])}, {num(a.start[1])}), half width "
                     f"{num(a.half_width)}, maximum speed {num(a.v_max)}")
    if math.isfinite(env.time_limit):
        lines.append(f"Time limit: {num(env.time_limit)} seconds.")
    return "\n".join(lines)


def render_history(history: Sequence[tuple[str, str]]) -> str:
    out = []
    for user, reply in history:
        out.append(f"<previous_user_input>\n{user}\n</previous_user_input>\n"
                   f"<previous_response>\n{reply}\n</previous_response>\n")
    return "".join(out)


def build_prompt(template: str, env: Environment, current: str, history: Sequence[tuple[str, str]] = (),
                 examples: str = "") -> tuple[Message, ...]:
    system, _, user = template.partition(USER_SPLIT)
    fill = {"{environment}": describe_environment(env), "{examples}": examples.strip()}
    for k, v in fill.items():
        system = system.replace(k, v)
    user = user.lstrip("\n").replace("{history}", render_history(history)).replace("{instruction}", current)
    return (Message("system", system.strip()), Message("user", user.rstrip()))


@dataclass
class Conversation:
    """One prompt template plus the turns exchanged so far; every call goes through ``ask``."""

    template: str
    env: Environment
    client: LlmClient
    log: "RunLog"
    examples: str = ""
    history: list[tuple[str, str]] = field(default_factory=list)

    def prompt(self, current: str) -> tuple[Message, ...]:
        return build_prompt(self.template, self.env, current, self.history, self.examples)

    def ask(self, current: str) -> str:
        msgs = self.prompt(current)
        reply = self.log.complete(self.client, msgs)
        self.history.append((current, reply))
        return reply


class RunLog:
    """Full message log and per-phase timers of one method run."""

    def __init__(self, deadline: float = math.inf):
        self.messages: list[Message] = []
        self.timings = {"client": 0.0, "planner": 0.0}
        self.deadline = deadline
        self.t0 = time.perf_counter()

    def check(self):
        if time.perf_counter() > self.deadline:
            raise Timeout("per-case time limit reached")

    def complete(self, client: LlmClient, msgs: Sequence[Message]) -> str:
        self.check()
        t = time.perf_counter()
        try:
            reply = client.complete(msgs)
        finally:
            self.timings["client"] += time.perf_counter() - t
        self.messages += list(msgs) + [Message("assistant", reply)]
        return reply

    def score(self, client: LlmClient, msgs: Sequence[Message], options: Sequence[str]) -> list[float]:
        self.check()
        t = time.perf_counter()
        try:
            scores = client.score_options(msgs, options)
        finally:
            self.timings["client"] += time.perf_counter() - t
        self.messages += list(msgs) + [Message("assistant", json.dumps(dict(zip(options, scores))))]
        return scores

    def plan(self, fn, *args, cfg: PlanConfig, **kw) -> PlanResult:
        self.check()
        left = self.deadline - time.perf_counter()
        if left < cfg.time_limit:
            cfg = replace(cfg, time_limit=max(left, 0.0))
        t = time.perf_counter()
        try:
            return fn(*args, cfg, **kw)
        finally:
            self.timings["planner"] += time.perf_counter() - t

    def total(self) -> dict[str, float]:
        return {"total": time.perf_counter() - self.t0, **self.timings}


@dataclass(frozen=True)
class MethodOutcome:
    method: str
    final_stl: stl.Formula | None
    trajectory: Trajectory | None
    success: bool
    iterations: Mapping[str, int]
    transcript: tuple[Message, ...] = ()
    timings: Mapping[str, float] = field(default_factory=dict)
    message: str = ""
    syntactic_attempts: tuple[int, ...] = ()

    def __post_init__(self):
        if self.success and self.trajectory is None:
            raise ValueError("a successful outcome needs a trajectory")

    def to_dict(self, timings: bool = True) -> dict:
        return {
            "method": self.method,
            "final_stl": stl.serialize_preorder(self.final_stl) if self.final_stl is not None else None,
            "trajectory": self.trajectory.to_dict() if self.trajectory is not None else None,
            "success": self.success,
            "iterations": dict(self.iterations),
            "syntactic_attempts": list(self.syntactic_attempts),
            "message": self.message,
            "timings": dict(self.timings) if timings else {},
            "transcript": [m.to_dict() for m in self.transcript],
        }


def _iters(syntactic: int = 0, semantic: int = 0, replans: int = 0) -> dict[str, int]:
    return {"syntactic": syntactic, "semantic": semantic, "replans": replans}


def verify(traj: Trajectory | None, env: Environment, checker: stl.Formula | None,
           produced: stl.Formula | None = None) -> tuple[bool, str]:
    """Monitor verdict against the checker formula (or the produced formula when there is none)."""
    if traj is None:
        return False, "no trajectory"
    target = checker if checker is not None else produced
    if target is None:
        return False, "nothing to check the trajectory against"
    problems = monitor.violations(target, traj, env)
    return (not problems), "; ".join(problems)


def _outcome(method, log: RunLog, final, traj, env, checker, iters, message="", attempts=()):
    ok, why = verify(traj, env, checker, final)
    if not ok and traj is not None and why not in message:
        message = (message + "; " if message else "") + why
    return MethodOutcome(method, final, traj, ok, iters, tuple(log.messages), log.total(), message,
                         tuple(attempts))


# -- STL translation and the two correction loops ---------------------------------

def translation_conversation(env: Environment, client: LlmClient, log: RunLog) -> Conversation:
    return Conversation(load_prompt("translate"), env, client, log, load_prompt("translate_examples"))


def translate_to_stl(instruction: str, env: Environment, client: LlmClient) -> str:
    """One completion: the model's raw STL text for ``instruction``."""
    return translation_conversation(env, client, RunLog()).ask(instruction)


def extract_stl_text(reply: str) -> str:
    """The STL line of a reply: strips code fences and a leading 'STL:' label."""
    lines = [ln.strip() for ln in reply.splitlines() if ln.strip() and not ln.strip().startswith("```")]
    if not lines:
        return ""
    line = lines[-1]
    if line.lower().startswith("stl:"):
        line = line[4:].strip()
    return line


@dataclass(frozen=True)
class SyntacticResult:
    formula: stl.Formula | None
    text: str
    iterations: int
    diagnostics: tuple = ()

    @property
    def ok(self) -> bool:
        return self.formula is not None


def check_stl(text: str, env: Environment) -> tuple[stl.Formula | None, list]:
    try:
        f = stl.parse_preorder(extract_stl_text(text))
    except DiagnosticError as exc:
        return None, exc.diagnostics
    diags = stl.validate(f, env)
    return (None, diags) if diags else (f, [])


def syntax_feedback(diags) -> str:
    return ("The STL formula you wrote has the following errors:\n" + render(diags) +
            "\nPlease reply with a corrected STL formula in pre-order form, on a single line.")


def _syntactic(conv: Conversation, request: str, max_iters: int) -> SyntacticResult:
    diags: list = []
    reply = ""
    for k in range(1, max_iters + 1):
        reply = conv.ask(request)
        f, diags = check_stl(reply, conv.env)
        if f is not None:
            return SyntacticResult(f, extract_stl_text(reply), k)
        request = syntax_feedback(diags)
    return SyntacticResult(None, extract_stl_text(reply), max_iters, tuple(diags))


def syntactic_loop(instruction: str, env: Environment, client: LlmClient,
                   max_iters: int = MAX_SYNTACTIC) -> SyntacticResult:
    """Translate, then re-prompt with parser/validator diagnostics until the STL is clean."""
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    return _syntactic(translation_conversation(env, client, RunLog()), instruction, max_iters)


def parse_verdict(reply: str) -> tuple[bool, str]:
    text = reply.strip()
    if text.startswith(SATISFIED):
        return True, text[len(SATISFIED):].lstrip(" :.-\n")
    if text.startswith("VIOLATED"):
        return False, text[len("VIOLATED"):].lstrip(" :.-\n")
    return False, text


def semantic_request(instruction: str, f: stl.Formula, res: PlanResult, env: Environment) -> str:
    seq = monitor.render_state_sequence(monitor.state_sequence(res.trajectory, env))
    return (f"Instruction: {instruction}\nSTL used for planning: {stl.serialize_preorder(f)}\n"
            f"Planned state sequence:\n{seq}\n"
            "Does the state sequence satisfy the instruction?")


def semantic_loop(instruction: str, env: Environment, client: LlmClient, cfg: PlanConfig,
                  max_iters: int = MAX_SEMANTIC, checker: stl.Formula | None = None,
                  max_syntactic: int = MAX_SYNTACTIC, semantic: bool = True, deadline: float = math.inf,
                  method: str = "autotamp") -> MethodOutcome:
    """Translate (with syntactic checks), plan, and let the model judge the planned region sequence.

    Stops when the model approves, when a corrected STL is textually identical to
    the previous one, or after ``max_iters`` rounds. Success is the monitor verdict
    against ``checker``, never the model's verdict.
    """
    log = RunLog(deadline)
    conv = translation_conversation(env, client, log)
    judge = Conversation(load_prompt("semantic"), env, client, log)
    attempts: list[int] = []
    request = instruction
    last_text = None
    final = traj = None
    message = ""
    rounds = 0
    try:
        while rounds < max_iters:
            rounds += 1
            syn = _syntactic(conv, request, max_syntactic)
            attempts.append(syn.iterations)
            if not syn.ok:
                message = "syntactic check failed: " + "; ".join(d.message for d in syn.diagnostics)
                break
            text = stl.serialize_preorder(syn.formula)
            if text == last_text:
                message = "the corrected STL is unchanged"
                break
            last_text = text
            final = syn.formula
            res = log.plan(plan, final, env, cfg=cfg)
            traj = res.trajectory
            if not semantic:
                break
            if traj is None:
                why = "; ".join(d.message for d in res.diagnostics) or res.status
                message = f"planning failed: {why}"
                request = (f"The planner could not find a trajectory for this STL: {why}\n"
                           "Please reply with a modified STL formula on a single line.")
                continue
            ok, why = parse_verdict(judge.ask(semantic_request(instruction, final, res, env)))
            if ok:
                message = ""
                break
            message = f"semantic check: {why}"
            request = ("The planned trajectory does not satisfy the instruction. "
                       f"Planned state sequence:\n"
                       f"{monitor.render_state_sequence(monitor.state_sequence(traj, env))}\n"
                       f"Problem: {why}\nPlease reply with a modified STL formula on a single line.")
    except (Timeout, LlmError) as exc:
        message = str(exc)
    iters = _iters(max(attempts, default=0), rounds, 0)
    return _outcome(method, log, final, traj, env, checker, iters, message, attempts)


def run_autotamp(instruction: str, env: Environment, client: LlmClient, cfg: PlanConfig,
                 checker: stl.Formula | None = None, deadline: float = math.inf) -> MethodOutcome:
    return semantic_loop(instruction, env, client, cfg, checker=checker, deadline=deadline)


# -- sub-task baselines -----------------------------------------------------------

_SUBTASK = re.compile(r"^enter\(\s*([A-Za-z_][A-Za-z0-9_ ]*?)\s*\)\s*@\s*([0-9]+(?:\.[0-9]*)?)\s*$")


def subtasks_to_stl(seq: Sequence[tuple[str, float]], env: Environment) -> stl.Formula:
    """finally[t1, t1] enter(r1) and ... and globally not_enter(walls)."""
    prev = 0.0
    parts: list[stl.Formula] = []
    for region, t in seq:
        if not t > prev or (not parts and not t > 0):
            raise ValueError(f"sub-task times must strictly increase from 0, got {[t for _, t in seq]}")
        prev = t
        parts.append(stl.eventually(stl.enter(region), t, t))
    walls = walls_clause(env)
    if walls is not None:
        parts.append(walls)
    if not parts:
        raise ValueError("an empty plan in a map without walls has no formula")
    return stl.conj(*parts)


def parse_subtasks(text: str, env: Environment) -> list[tuple[str, float]]:
    """Lines of ``enter(region) @ t``; raises ValueError with a readable reason."""
    out = []
    for raw in text.strip().strip("`").splitlines():
        line = raw.strip().lstrip("-*").strip()
        if not line:
            continue
        m = _SUBTASK.match(line)
        if not m:
            raise ValueError(f"cannot read the line {line!r}; expected 'enter(region) @ t'")
        region, t = stl.normalize_name(m.group(1)), float(m.group(2))
        if not env.has_region(region):
            raise ValueError(f"region '{region}' does not exist in the map")
        out.append((region, t))
    if not out:
        raise ValueError("no sub-tasks found; expected lines of the form 'enter(region) @ t'")
    prev = 0.0
    for _, t in out:
        if not t > prev:
            raise ValueError("sub-task times must be positive and strictly increasing")
        prev = t
    return out


FORMAT_REMINDER = ("I could not read your answer ({why}). Reply only with lines of the form "
                   "'enter(region) @ t', one sub-task per line, with strictly increasing times.")


def _ask_subtasks(conv: Conversation, request: str) -> tuple[list | None, str]:
    """One request plus at most one format re-prompt."""
    reply = conv.ask(request)
    try:
        return parse_subtasks(reply, conv.env), ""
    except ValueError as exc:
        reply = conv.ask(FORMAT_REMINDER.format(why=exc))
    try:
        return parse_subtasks(reply, conv.env), ""
    except ValueError as exc:
        return None, f"unreadable sub-task plan: {exc}"


def _plan_subtasks(seq, env, cfg, log) -> tuple[stl.Formula, PlanResult]:
    f = subtasks_to_stl(seq, env)
    return f, log.plan(plan, f, env, cfg=cfg)


def _starts(env: Environment) -> dict[str, tuple[float, float]]:
    return {a.name: a.start for a in env.agents}


def first_infeasible(seq, env: Environment, cfg: PlanConfig, log: RunLog) -> int | None:
    """Index of the first sub-task that cannot be executed after the ones before it."""
    state = _starts(env)
    prev = 0.0
    for k, (region, t) in enumerate(seq):
        res = log.plan(subtask_plan, (region, t - prev), state, env, cfg=cfg)
        if not res.feasible:
            return k
        state = state_at(res.trajectory, t - prev)
        prev = t
    return None


def run_naive(instruction: str, env: Environment, client: LlmClient, cfg: PlanConfig,
              checker: stl.Formula | None = None, deadline: float = math.inf) -> MethodOutcome:
    """The whole sub-task sequence in one go, no executability checks."""
    log = RunLog(deadline)
    conv = Conversation(load_prompt("task_plan"), env, client, log)
    final = traj = None
    message = ""
    try:
        seq, message = _ask_subtasks(conv, instruction)
        if seq is not None:
            final, res = _plan_subtasks(seq, env, cfg, log)
            traj = res.trajectory
            if traj is None:
                message = "sub-task plan is not executable: " + "; ".join(d.message for d in res.diagnostics)
    except (Timeout, LlmError) as exc:
        message = str(exc)
    return _outcome("naive", log, final, traj, env, checker, _iters(replans=1), message)


def run_feedback(instruction: str, env: Environment, client: LlmClient, cfg: PlanConfig,
                 checker: stl.Formula | None = None, deadline: float = math.inf,
                 max_replans: int = MAX_REPLANS) -> MethodOutcome:
    """Naive plus per-sub-task executability checks; the first infeasible action is reported back."""
    log = RunLog(deadline)
    conv = Conversation(load_prompt("task_plan"), env, client, log)
    final = traj = None
    message = ""
    request = instruction
    rounds = 0
    try:
        while rounds < max_replans:
            rounds += 1
            seq, message = _ask_subtasks(conv, request)
            if seq is None:
                break
            bad = first_infeasible(seq, env, cfg, log)
            if bad is not None:
                region, t = seq[bad]
                message = f"sub-task {bad + 1} enter({region}) @ {stl.format_number(t)} is not executable"
                request = (f"The action enter({region}) @ {stl.format_number(t)} cannot be executed from the "
                           "state reached by the previous actions. Please reply with a new full sequence.")
                continue
            final, res = _plan_subtasks(seq, env, cfg, log)
            traj = res.trajectory
            message = "" if traj is not None else "the full sub-task plan is not executable"
            break
    except (Timeout, LlmError) as exc:
        message = str(exc)
    return _outcome("feedback", log, final, traj, env, checker, _iters(replans=rounds), message)


def travel_time(state: Mapping[str, tuple[float, float]], region: str, env: Environment) -> float:
    """Generous whole-second time budget for the closest agent to reach ``region``'s centre."""
    best = math.inf
    for r in env.resolve(region):
        cx, cy = 0.5 * (r.x_min + r.x_max), 0.5 * (r.y_min + r.y_max)
        for a in env.agents:
            x, y = state[a.name]
            best = min(best, math.hypot(cx - x, cy - y) / a.v_max)
    return float(max(1, math.ceil(2 * best)))


def saycan_options(env: Environment) -> list[str]:
    walls = {r.name for r in env.resolve("walls")} if env.has_region("walls") else set()
    return [f"enter({r.name})" for r in env.regions if r.name not in walls] + [STOP_OPTION]


def run_saycan(instruction: str, env: Environment, client: LlmClient, cfg: PlanConfig,
               checker: stl.Formula | None = None, deadline: float = math.inf, top_k: int = TOP_K,
               max_steps: int = MAX_SUBTASKS) -> MethodOutcome:
    """Step by step: score every option, gate the top K by executability, take the best survivor."""
    log = RunLog(deadline)
    template = load_prompt("task_plan")
    options = saycan_options(env)
    seq: list[tuple[str, float]] = []
    state = _starts(env)
    now = 0.0
    final = traj = None
    message = ""
    try:
        while len(seq) < max_steps:
            done = "\n".join(f"enter({r}) @ {stl.format_number(t)}" for r, t in seq) or "(none yet)"
            msgs = build_prompt(template, env, f"{instruction}\nSub-tasks so far:\n{done}\n"
                                               "Which sub-task comes next?")
            scores = log.score(client, msgs, options)
            ranked = sorted(range(len(options)), key=lambda i: (-scores[i], i))[:top_k]
            choice = None
            for i in ranked:
                if options[i] == STOP_OPTION:
                    choice = (STOP_OPTION, None)
                    break
                region = options[i][len("enter("):-1]
                dt = travel_time(state, region, env)
                res = log.plan(subtask_plan, (region, dt), state, env, cfg=cfg)
                if res.feasible:
                    choice = (region, (dt, res))
                    break
            if choice is None:
                message = f"none of the top {top_k} options is executable"
                break
            if choice[0] == STOP_OPTION:
                break
            region, (dt, res) = choice
            now += dt
            seq.append((region, now))
            state = state_at(res.trajectory, dt)
        else:
            message = f"stopped after {max_steps} sub-tasks"
        if seq and not message:
            final, res = _plan_subtasks(seq, env, cfg, log)
            traj = res.trajectory
            if traj is None:
                message = "the chosen sub-task sequence does not fit the planning horizon"
        elif not seq and not message:
            message = "the stop option was chosen before any sub-task"
    except (Timeout, LlmError) as exc:
        message = str(exc)
    return _outcome("saycan", log, final, traj, env, checker, _iters(replans=len(seq)), message)


# -- end-to-end waypoints ---------------------------------------------------------

def parse_waypoints(text: str, env: Environment) -> Trajectory:
    """JSON {agent: [[x, y, t], ...]}; a bare list is accepted for a single agent."""
    body = text.strip()
    if body.startswith("```"):
        body = body.strip("`")
        body = body.split("\n", 1)[1] if "\n" in body else body
    start, end = min((i for i in (body.find("{"), body.find("[")) if i >= 0), default=-1), \
        max(body.rfind("}"), body.rfind("]"))
    if start < 0 or end < start:
        raise DiagnosticError([_schema("no JSON waypoint list found in the reply")])
    try:
        data = json.loads(body[start:end + 1])
    except json.JSONDecodeError as exc:
        raise DiagnosticError([_schema(f"waypoints are not valid JSON: {exc}")]) from None
    if isinstance(data, list):
        if len(env.agents) != 1:
            raise DiagnosticError([_schema("give one waypoint list per robot as a JSON object")])
        data = {env.agents[0].name: data}
    return Trajectory.from_dict(data)


def _schema(msg: str):
    return error(Code.SCHEMA, msg)


def run_end2end(instruction: str, env: Environment, client: LlmClient, cfg: PlanConfig | None = None,
                checker: stl.Formula | None = None, deadline: float = math.inf,
                max_replans: int = MAX_REPLANS) -> MethodOutcome:
    """The model writes waypoints; kinematic and specification violations are fed back verbatim."""
    log = RunLog(deadline)
    conv = Conversation(load_prompt("end2end"), env, client, log)
    traj = None
    message = ""
    request = instruction
    rounds = 0
    try:
        while rounds < max_replans:
            rounds += 1
            reply = conv.ask(request)
            try:
                cand = parse_waypoints(reply, env)
            except DiagnosticError as exc:
                problems = [d.message for d in exc.diagnostics]
                cand = None
            else:
                problems = monitor.violations(checker, cand, env) if checker is not None else \
                    [d.message for d in check_kinematics(cand, env)]
            traj = cand
            if not problems:
                message = ""
                break
            message = "; ".join(problems)
            request = "Your trajectory has these problems:\n" + "\n".join(f"- {p}" for p in problems) + \
                "\nPlease reply with a corrected JSON waypoint object."
    except (Timeout, LlmError) as exc:
        message = str(exc)
    return _outcome("end2end", log, None, traj, env, checker, _iters(replans=rounds), message)


RUNNERS = {
    "end2end": run_end2end, "naive": run_naive, "saycan": run_saycan, "feedback": run_feedback,
    "autotamp": run_autotamp,
}


def run_method(method: str, instruction: str, env: Environment, client: LlmClient, cfg: PlanConfig,
               checker: stl.Formula | None = None, deadline: float = math.inf) -> MethodOutcome:
    if method not in RUNNERS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return RUNNERS[method](instruction, env, client, cfg, checker=checker, deadline=deadline)


__all__ = [
    "METHODS", "MethodOutcome", "SyntacticResult", "Conversation", "RunLog", "Timeout", "translate_to_stl",
    "syntactic_loop", "semantic_loop", "subtasks_to_stl", "parse_subtasks", "parse_waypoints", "run_naive",
    "run_saycan", "run_feedback", "run_end2end", "run_autotamp", "run_method", "describe_environment",
    "build_prompt", "load_prompt", "parse_verdict", "extract_stl_text", "check_stl", "verify",
    "first_infeasible", "travel_time", "saycan_options",
]
