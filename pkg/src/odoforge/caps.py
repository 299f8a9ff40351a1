"""Resource caps.  Exceeding a cap is always an error, never a silent truncation.

``ODOFORGE_CAPS`` overrides the defaults, e.g. ``ODOFORGE_CAPS="max_states=50000,core=2000000"``.
"""

from __future__ import annotations

import os

DEFAULTS = {
    "free_radius": 12,  # ball radius for free groups of rank 2
    "abelian_radius": 50,  # per-coordinate radius for free-abelian groups
    "free_gamma_radius": 7,  # period-group ball used when falsifying periods in free groups
    "max_states": 10_000,
    "core": 1_000_000,
}


def get(name: str) -> int:
    raw = os.environ.get("ODOFORGE_CAPS", "")
    for item in raw.split(","):
        if "=" not in item:
            continue
        key, _, value = item.partition("=")
        if key.strip() == name:
            return int(value)
    return DEFAULTS[name]
