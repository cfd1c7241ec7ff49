"""Backend selection for the envelope scan.

The compiled extension is used when it imports; otherwise the numpy version.
Both produce bit-identical results.
"""

from . import _envelope_py

try:
    from . import _envelope as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _envelope_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

_active = "compiled" if _compiled is not None else "python"


def backend() -> str:
    return _active


def use_backend(name: str) -> None:
    global _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    _active = name


def envelope_many(c, radii, out_w2, out_k) -> int:
    return BACKENDS[_active].envelope_many(c, radii, out_w2, out_k)
