"""Named residual checks and reports."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float
    required: bool = True

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
            "required": self.required,
        }


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    def add(self, name, residual, tolerance, required=True) -> Check:
        c = Check(name, float(residual), float(tolerance), required)
        self.checks.append(c)
        return c

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.checks.extend(other.checks)
        return self

    @property
    def passed(self) -> bool:
        """True iff every required check passed."""
        return all(c.passed for c in self.checks if c.required)

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name) -> bool:
        return any(c.name == name for c in self.checks)

    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    def to_list(self) -> list[dict]:
        return [c.to_dict() for c in self.checks]
