"""Hot kernels. The compiled extension is used when it imports; otherwise the
NumPy fallback provides the same per-step functions (without the fused run
loops). Set ``CONSERVEX_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
if os.environ.get("CONSERVEX_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _fast as _impl
        BACKEND = "native"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

FUSED = _impl.FUSED
budget_prefix_max = _impl.budget_prefix_max
sherman_morrison = _impl.sherman_morrison
ucbvi_upper = _impl.ucbvi_upper
ucbvi_lower = _impl.ucbvi_lower
policy_value = _impl.policy_value
lsvi_bonus = _impl.lsvi_bonus
lsvi_upper = _impl.lsvi_upper
lsvi_lower = _impl.lsvi_lower

fast = _impl if FUSED else None
fallback = _fallback

__all__ = [
    "BACKEND", "FUSED", "budget_prefix_max", "sherman_morrison", "ucbvi_upper", "ucbvi_lower",
    "policy_value", "lsvi_bonus", "lsvi_upper", "lsvi_lower", "fast", "fallback",
]
