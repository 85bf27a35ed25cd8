"""Named numerical tolerances shared across the package."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-9
    psd: float = 1e-9
    unit: float = 1e-10
    eig: float = 1e-10
    nullspace: float = 1e-10
    cptp: float = 1e-8
    support: float = 1e-10
    hs_drop: float = 1e-10
    cluster: float = 1e-8
    prop: float = 1e-8
    nz: float = 1e-8
    split: float = 1e-8
    steady: float = 1e-8
    invariance: float = 1e-8
    oracle_subspace: float = 1e-7

    def with_overrides(self, overrides: dict | None) -> "Tolerances":
        if not overrides:
            return self
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise KeyError(f"unknown tolerance name(s): {', '.join(unknown)}")
        for name, value in overrides.items():
            if not (float(value) > 0):
                raise ValueError(f"tolerance {name!r} must be positive, got {value!r}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Tolerances()
