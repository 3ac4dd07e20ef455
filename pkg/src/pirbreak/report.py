"""Result record shared by both attacks and the experiment harness."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class AttackReport:
    variant: str
    recovered_index: int | None = None
    planted_index: int | None = None
    cvp_count_preprocess: int = 0
    cvp_count_final: int = 0
    iterations: list[dict] = field(default_factory=list)
    final_stage: list[dict] = field(default_factory=list)
    wall_ms: float = 0.0
    seed: int | None = None
    fallback_triggered: bool = False
    restarted: bool = False
    error: str | None = None

    @property
    def success(self) -> bool | None:
        if self.planted_index is None:
            return None
        return self.recovered_index == self.planted_index

    @property
    def cvp_count(self) -> int:
        return self.cvp_count_preprocess + self.cvp_count_final

    def to_dict(self) -> dict:
        d = asdict(self)
        d["success"] = self.success
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AttackReport":
        d = dict(d)
        d.pop("success", None)
        return cls(**d)
