"""Refactor MiniJ loops into Java 8 stream pipelines, verified exhaustively.

The pieces compose front to back: `syntax`/`checker`/`lower` read MiniJ
into heap-level IR, `interp` and `fastexec` execute it over the bounded
universe from `universe`, `cegis` searches the pipeline space from `space`,
`vcgen` verifies candidates, and `codegen` prints the winning Java. `cli`
wires them into the `streamify` command.
"""

__version__ = "0.1.0"

from .cegis import NoRefactoring, Refactoring, SearchConfig, synthesize
from .universe import Bounds

__all__ = ["Bounds", "NoRefactoring", "Refactoring", "SearchConfig",
           "synthesize", "__version__"]
