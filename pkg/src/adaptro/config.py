"""Numerical tolerances shared by every solver path."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-7
    dup: float = 1e-8
    mip: float = 1e-6
    # threshold for treating a certificate value as strictly positive
    pos: float = 1e-6
    conv: float = 1e-9
    vertex: float = 1e-7

    def with_(self, **kw) -> "Tolerances":
        return replace(self, **kw)


DEFAULT_TOL = Tolerances()
