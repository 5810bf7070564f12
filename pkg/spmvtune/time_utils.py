"""Time utilities for spmvtune - duration formatting and UTC timestamps."""

from datetime import datetime, timezone

_UNITS = ((1.0, "s"), (1e-3, "ms"), (1e-6, "us"), (1e-9, "ns"))


def format_duration(seconds: float) -> str:
    """Format a duration with an adaptive unit, e.g. ``1.50 ms``.

    Args:
        seconds: Duration in seconds

    Returns:
        Human-readable duration string
    """
    if seconds is None:
        return "-"
    if seconds >= 60:
        minutes, rest = divmod(seconds, 60)
        return f"{int(minutes)} min {rest:.1f} s"
    for scale, unit in _UNITS:
        if abs(seconds) >= scale:
            return f"{seconds / scale:.2f} {unit}"
    return f"{seconds / 1e-9:.2f} ns"


def utc_timestamp() -> str:
    """Current time as an ISO-8601 UTC string with second precision."""
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()
