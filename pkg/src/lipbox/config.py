"""Resource caps shared across the package."""

from __future__ import annotations

import os
from dataclasses import dataclass

ENV_PREFIX = "LIPBOX_CAP_"


class CapExceeded(Exception):
    """A configured size cap would be exceeded; raised before heavy work starts."""


@dataclass(frozen=True)
class Caps:
    points: int = 8         # metric space size including the base point
    dim: int = 6            # normed-space dimension accepted by the CLI
    vertices: int = 100000  # vertex enumeration output cap
    iters: int = 200        # constraint-generation iteration cap
    enum_dim: int = 10      # ambient dimension accepted by enumerate_vertices


def caps_from_env(base: Caps | None = None) -> Caps:
    """Caps with LIPBOX_CAP_{POINTS,DIM,VERTICES,ITERS} environment overrides applied."""
    base = base if base is not None else Caps()
    kw = dict(
        points=base.points,
        dim=base.dim,
        vertices=base.vertices,
        iters=base.iters,
        enum_dim=base.enum_dim,
    )
    for name in ("points", "dim", "vertices", "iters"):
        raw = os.environ.get(ENV_PREFIX + name.upper())
        if raw is None:
            continue
        try:
            kw[name] = int(raw)
        except ValueError as exc:
            raise ValueError(
                f"{ENV_PREFIX}{name.upper()} must be an integer, got {raw!r}"
            ) from exc
    return Caps(**kw)
