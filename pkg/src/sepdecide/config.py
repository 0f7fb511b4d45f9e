"""Tolerances and run configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-9
    trace: float = 1e-9
    psd: float = 1e-10
    rank: float = 1e-10
    recon: float = 1e-9
    sym: float = 1e-10
    iso: float = 1e-9
    pivot: float = 1e-10
    root: float = 1e-7
    proj: float = 1e-6
    # smallest singular value treated as zero when extracting the univariate
    uni: float = 1e-8
    feas: float = 1e-8
    weight: float = 1e-10
    sep: float = 1e-7

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"tolerance {f.name!r} must be positive")


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class RunConfig:
    """Everything that influences a decision run.

    ``k_max=None`` means ``(m*n)**2`` for the state being decided.
    ``family`` selects the quadratic system fed to the XL solver: the
    biconcurrence eigen-matrices (``"T"``) or the raw concurrence matrices
    (``"C"``).
    """

    tol: Tolerances = field(default_factory=Tolerances)
    d_max: int = 10
    k_max: int | None = None
    memory_budget: int = 200_000_000
    fallback_restarts: int = 64
    fallback_steps: int = 2000
    seed: int = 0
    family: str = "T"
    dimension_precheck: bool = True

    def __post_init__(self):
        if self.d_max < 2:
            raise ValueError("d_max must be at least 2")
        if self.family not in ("T", "C"):
            raise ValueError("family must be 'T' or 'C'")
        if self.k_max is not None and self.k_max < 1:
            raise ValueError("k_max must be positive")
        if self.fallback_restarts < 0 or self.fallback_steps < 0:
            raise ValueError("fallback budget must be nonnegative")

    def with_tol(self, **kw) -> "RunConfig":
        return replace(self, tol=replace(self.tol, **kw))

    def to_dict(self) -> dict:
        return asdict(self)
