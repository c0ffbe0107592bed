"""Backend selection for the hot kernels.

The compiled extension is preferred when present; the pure-Python twin is
the fallback. Both expose the same functions with identical numerics (see
``_pykern``). Selection can be forced with the environment variable
``COE_BACKEND``: ``c`` (require the extension), ``py`` (force the
fallback) or ``auto`` (default).
"""

from __future__ import annotations

import os

from . import _pykern


def _select(name: str):
    if name == "py":
        return _pykern
    try:
        from . import _native
    except ImportError:
        if name == "c":
            raise ImportError(
                "COE_BACKEND=c but the compiled kernel extension is not "
                "built; reinstall the package or use COE_BACKEND=py"
            ) from None
        return _pykern
    return _native


_choice = os.environ.get("COE_BACKEND", "auto").lower()
if _choice not in ("auto", "c", "py"):
    raise ImportError(f"unrecognized COE_BACKEND value {_choice!r}")

_impl = _select(_choice)

BACKEND = _impl.BACKEND_NAME

entropy = _impl.entropy
kl = _impl.kl
js = _impl.js
hellinger = _impl.hellinger
tv = _impl.tv
mixture = _impl.mixture


def available_backends() -> dict:
    """Both kernel implementations, keyed by name; used by the benchmark."""
    backends = {"py": _pykern}
    try:
        from . import _native
    except ImportError:
        pass
    else:
        backends["c"] = _native
    return backends
