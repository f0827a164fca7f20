"""The record every Monte Carlo estimator returns."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

CSV_COLUMNS = ("quantity", "value", "std_error", "N", "horizon", "step", "seed")


@dataclass(frozen=True)
class EstimatorReport:
    quantity: str
    value: float
    std_error: float
    n_samples: int
    horizon: float
    seed: int
    step: float | None = None
    wall_time: float = 0.0
    params: dict = field(default_factory=dict)
    warnings: tuple = ()

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError(f"std_error must be nonnegative, got {self.std_error}")

    def within(self, target, n_se=3.0):
        return abs(self.value - target) <= n_se * self.std_error

    def csv_row(self):
        return {
            "quantity": self.quantity,
            "value": repr(float(self.value)),
            "std_error": repr(float(self.std_error)),
            "N": str(self.n_samples),
            "horizon": repr(float(self.horizon)),
            "step": "" if self.step is None else repr(float(self.step)),
            "seed": str(self.seed),
        }

    def to_dict(self):
        d = asdict(self)
        d["warnings"] = list(self.warnings)
        return d
