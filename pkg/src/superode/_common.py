from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Verdict:
    """Outcome of an exact check; truthy iff the check passed."""

    ok: bool
    detail: str = ""
    data: dict = field(default_factory=dict, compare=False)

    def __bool__(self):
        return self.ok
