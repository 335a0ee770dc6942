"""Exception hierarchy shared by every sc2dec module."""


class Sc2decError(Exception):
    pass


class ToolNotFound(Sc2decError):
    """A compiler or disassembler executable could not be resolved on PATH."""


class ToolTimeout(Sc2decError):
    """An external tool exceeded its wall-clock cap."""


class DisassemblyFailed(Sc2decError):
    pass


class FunctionNotFound(Sc2decError):
    pass


class NoDebugInfo(Sc2decError):
    """Interleaved disassembly carried no source-comment lines for a function."""


class EmptySequence(Sc2decError):
    pass


class EmptyCorpus(Sc2decError):
    pass


class BackendMisconfigured(Sc2decError):
    pass


class NetworkError(Sc2decError):
    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class UnknownSample(Sc2decError):
    pass
