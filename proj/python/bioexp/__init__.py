"""Error-exponent trade-off computations for secret-key authentication.

The heavy lifting lives in the compiled extension ``_core``; this package
re-exports its surface. Installed wheels place ``_core`` inside the package;
in-tree test runs put it on ``sys.path`` next to the build directory.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:  # pragma: no cover - in-tree layout
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
