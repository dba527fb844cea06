"""Exception hierarchy shared by every ctxcode subsystem."""

from __future__ import annotations


class CtxError(Exception):
    """Base class for all ctxcode errors."""


# -- agent profiles ---------------------------------------------------------


class AgentFileError(CtxError):
    """A profile file could not be parsed. ``line`` is 1-based, 0 when unknown."""

    def __init__(self, message: str, line: int = 0, path: str | None = None):
        self.message = message
        self.line = line
        self.path = path
        super().__init__(self._format())

    def _format(self) -> str:
        where = f"{self.path}:" if self.path else ""
        if self.line:
            where += f"line {self.line}: "
        elif where:
            where += " "
        return f"{where}{self.message}"

    def with_path(self, path: str) -> "AgentFileError":
        err = type(self).__new__(type(self))
        AgentFileError.__init__(err, self.message, self.line, path)
        return err


class MissingField(AgentFileError):
    pass


class UnknownHeaderKey(AgentFileError):
    pass


class EmptyPrompt(AgentFileError):
    pass


class UnknownTool(AgentFileError):
    pass


class InvalidProfile(AgentFileError):
    """Header value is present but malformed (bad name, unknown model alias)."""


class DuplicateAgentName(CtxError):
    def __init__(self, name: str, first: str, second: str):
        self.name, self.paths = name, (first, second)
        super().__init__(f"agent name {name!r} declared in both {first} and {second}")


class ProfileNotFound(CtxError, KeyError):
    def __init__(self, name: str, known: list[str]):
        self.name, self.known = name, list(known)
        super().__init__(f"no agent named {name!r}; known agents: {self.known}")

    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0]


# -- context assembly -------------------------------------------------------


class BudgetTooSmall(CtxError):
    def __init__(self, budget: int, required: int):
        self.budget, self.required = budget, required
        super().__init__(
            f"token budget {budget} cannot hold role prompt and task specification "
            f"(needs {required})"
        )


# -- retrieval / knowledge ----------------------------------------------------


class UnsupportedLanguage(CtxError):
    pass


class ProviderUnavailable(CtxError):
    pass


class EmptyIndex(CtxError):
    pass


class InvalidPattern(CtxError):
    pass


class IndexPersistenceError(CtxError):
    pass


class EmptyCorpus(CtxError):
    pass


class NoRelevantDoc(CtxError):
    pass


# -- provider -----------------------------------------------------------------


class NoFixtureMatch(CtxError):
    def __init__(self, agent_name: str, prompt_digest: str):
        self.agent_name, self.prompt_digest = agent_name, prompt_digest
        super().__init__(
            f"no unconsumed fixture entry matches agent {agent_name!r} "
            f"(prompt digest {prompt_digest})"
        )


class FixtureFormatError(CtxError):
    pass


# -- sandbox tools ------------------------------------------------------------


class ToolError(CtxError):
    """Recoverable tool failure; reported back to the agent as a failed ToolResult."""


class PathEscapesSandbox(ToolError):
    pass


class PathNotFound(ToolError):
    pass


class LockNotHeld(ToolError):
    pass


class FindNotFound(ToolError):
    pass


class AmbiguousMatch(ToolError):
    pass


class CommandNotAllowed(ToolError):
    pass


class CommandNotFound(CtxError):
    pass


class PermissionDenied(CtxError):
    """An agent invoked a tool its profile does not grant. Never recoverable."""


# -- orchestration ------------------------------------------------------------


class LockConflict(CtxError):
    def __init__(self, path: str, holder: str, requester: str):
        self.path, self.holder, self.requester = path, holder, requester
        super().__init__(f"{requester} cannot lock {path}: held by {holder}")


class SpecValidationFailed(CtxError):
    pass


class PlanValidationFailed(CtxError):
    pass


class ActionCapExceeded(CtxError):
    pass


class StepBlocked(CtxError):
    pass


class ReviewerUnavailable(CtxError):
    pass


class ReviewValidationFailed(CtxError):
    pass


class TestsFailed(CtxError):
    """The test suite still fails after the retry budget is spent."""

    __test__ = False


class DiffReplayMismatch(CtxError):
    pass


class PatchApplyError(CtxError):
    pass


class InvalidTransition(CtxError):
    pass


class MalformedTranscript(CtxError):
    def __init__(self, line: int, reason: str):
        self.line, self.reason = line, reason
        super().__init__(f"malformed transcript at line {line}: {reason}")
