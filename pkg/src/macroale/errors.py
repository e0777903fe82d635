"""Exception hierarchy shared by all modules."""


class MacroAleError(Exception):
    """Base class for errors raised by this package."""


class MeshError(MacroAleError):
    """Invalid mesh construction request."""


class ResolutionError(MacroAleError):
    """The interface is not resolvable on the current mesh; use a finer one."""


class DegenerateCutError(MacroAleError):
    """A sub-element has non-positive volume after edge-node placement."""


class AssemblyError(MacroAleError):
    pass


class SolverError(MacroAleError):
    pass


class ConfigError(MacroAleError):
    """Invalid or incomplete scenario configuration."""
