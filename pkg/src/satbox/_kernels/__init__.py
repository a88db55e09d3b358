"""Hot kernels for the Galerkin right-hand side.

The compiled extension is used when available; set SATBOX_PURE_PYTHON=1
to force the numpy fallback.  Both expose the same two functions and are
checked against each other in the test suite.
"""

import os

if os.environ.get("SATBOX_PURE_PYTHON"):
    from . import pyref as _impl
else:
    try:
        from . import quadcore as _impl
    except ImportError:
        from . import pyref as _impl

BACKEND = _impl.BACKEND
quad_apply = _impl.quad_apply
quad_jact = _impl.quad_jact
