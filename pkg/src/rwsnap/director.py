"""Hand-driven scheduling of a single execution.

The explorer enumerates schedules; the :class:`Director` builds *one* schedule
step by step under program control.  It is the tool for constructing known-bad
interleavings (mutant counterexamples) and known-extreme ones (starvation,
adversarial joiners), while recording the token list so the same run can be
replayed through :func:`rwsnap.sim.run_schedule` or the CLI.

A director drives processes explicitly.  ``peek``/``run_until_pending`` start a
process's next operation as a side effect (the invocation must happen before
its first step becomes visible), so the order in which processes are *touched*
fixes the order of invocation events.
"""

from __future__ import annotations

from typing import Any, Optional

from .core import ScenarioError, STEP_TYPES
from .sim import Execution, SimConfig, crash_token


class DirectorError(ScenarioError):
    """A hand-written schedule did not unfold as scripted."""


class Director:
    """Deterministic, recording wrapper around one :class:`Execution`."""

    def __init__(self, cfg: SimConfig):
        self.ex = Execution(cfg)
        self.tokens: list = []  # int pid per step, "crash:<pid>" per crash

    # -- primitives -----------------------------------------------------------

    def peek(self, pid: int):
        """The step request ``pid`` would perform next (starts its op)."""
        return self.ex.peek(pid)

    def step(self, pid: int, count: int = 1) -> "Director":
        """Perform ``count`` steps of ``pid``."""
        for _ in range(count):
            self.ex.perform(pid)
            self.tokens.append(pid)
        return self

    def crash(self, pid: int) -> "Director":
        self.ex.crash(pid)
        self.tokens.append(crash_token(pid))
        return self

    # -- guided runs ----------------------------------------------------------

    def run_until_pending(
        self,
        pid: int,
        kind: type,
        *,
        limit: int = 5000,
        allow_response: bool = False,
        **fields: Any,
    ) -> Any:
        """Step ``pid`` until its next request is a ``kind`` matching ``fields``.

        Stops *before* the matching step is performed and returns the pending
        request.  If the current operation responds first, returns ``None``
        when ``allow_response`` is set and raises otherwise; raises if
        ``limit`` steps pass without a match.
        """
        if kind not in STEP_TYPES:
            raise DirectorError(f"not a step request type: {kind!r}")
        m = self.ex.machines[pid]
        for _ in range(limit):
            req = self.ex.peek(pid)
            if isinstance(req, kind) and all(
                getattr(req, name) == want for name, want in fields.items()
            ):
                return req
            was_idx = m.idx
            self.step(pid)
            if m.idx != was_idx:
                if allow_response:
                    return None
                raise DirectorError(
                    f"operation {pid}:{was_idx} responded before reaching "
                    f"{kind.__name__}({fields})"
                )
        raise DirectorError(
            f"no {kind.__name__}({fields}) for process {pid} within {limit} steps"
        )

    def run_op(self, pid: int, *, limit: int = 5000) -> "Director":
        """Run ``pid``'s next operation from invocation through response."""
        m = self.ex.machines[pid]
        self.ex.peek(pid)  # invoke
        return self.finish_op(pid, limit=limit)

    def finish_op(self, pid: int, *, limit: int = 5000) -> "Director":
        """Run ``pid``'s already-invoked operation through its response."""
        m = self.ex.machines[pid]
        if not m.started:
            raise DirectorError(f"process {pid} has no operation in flight")
        for _ in range(limit):
            self.step(pid)
            if not m.started:
                return self
        raise DirectorError(f"operation of process {pid} still live after {limit} steps")

    def run_remaining(self, *, limit: int = 100000) -> "Director":
        """Round-robin every runnable process until the execution is done."""
        for _ in range(limit):
            pids = self.ex.runnable()
            if not pids:
                return self
            self.step(pids[0])
        raise DirectorError(f"execution still live after {limit} steps")

    # -- inspection -----------------------------------------------------------

    def state(self) -> dict:
        """Shared-memory view for demo output and assertions."""
        ex = self.ex
        return {
            "progress": tuple(ex.progress),
            "help": tuple(ex.help),
            "memory": tuple(ex.mem),
        }

    def scan_views(self, pid: int) -> list[tuple]:
        """Views returned by completed scans of ``pid``, in script order."""
        out = []
        for rec in self.ex.results.get(pid, ()):
            if rec[0] == "scan":
                out.append(rec[1])
        return out

    @property
    def violations(self):
        return self.ex.violations

    @property
    def stats(self):
        return self.ex.stats
