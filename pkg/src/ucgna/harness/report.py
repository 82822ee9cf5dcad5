"""Run reports, cost breakdowns and their JSON/CSV forms."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field


@dataclass
class CostBreakdown:
    power: float
    gas: float
    loss: float = 0.0

    @property
    def total(self) -> float:
        return self.power + self.gas + self.loss

    def to_dict(self) -> dict:
        return {"power": self.power, "gas": self.gas, "loss": self.loss, "total": self.total}


@dataclass
class ValidityEntry:
    """Bid-validity test of one committed GFPP in one period."""
    generator: str
    t: int
    zone: str
    psi: float
    rho: float
    p: float
    slack: float

    @property
    def loss(self) -> float:
        return max(0.0, -self.slack) * self.p


@dataclass
class RunReport:
    system: str
    mode: str
    eta_p: float
    eta_g: float
    alpha: float | None
    status: str
    commitment: list = field(default_factory=list)      # dicts: unit, t, fuel, zone, u, p
    nodal_prices: dict = field(default_factory=dict)    # "junction:t" -> price
    zonal_prices: dict = field(default_factory=dict)    # "zone:t" -> price
    shed: dict = field(default_factory=dict)            # "junction:t" -> quantity
    validity: list = field(default_factory=list)        # ValidityEntry
    costs: CostBreakdown | None = None
    objective: float = math.nan
    gap: float = 0.0
    iterations: int = 0
    wall: float = 0.0
    method: str = ""
    eliminated: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def total_shed(self) -> float:
        return float(sum(self.shed.values()))

    def committed(self, zone: str | None = None, fuel: str | None = "gas") -> int:
        """Number of committed unit-periods, optionally filtered by zone and fuel."""
        return sum(1 for r in self.commitment if r["u"] > 0.5 and (fuel is None or r["fuel"] == fuel)
                   and (zone is None or r["zone"] == zone))

    def zone_price(self, zone: str, t: int = 1) -> float:
        return self.zonal_prices[f"{zone}:{t}"]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["costs"] = self.costs.to_dict() if self.costs else None
        d["validity"] = [dict(asdict(v), loss=v.loss) for v in self.validity]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, default=_jsonable)

    def table_row(self) -> str:
        """Objective and gap in the ``objective / gap`` style."""
        return f"{self.objective:.1f} / {100.0 * self.gap:.1f}"


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    try:
        return float(v)
    except (TypeError, ValueError):
        return str(v)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return ""
    if v == 0.0:
        return "0"
    return f"{v:.9g}"


def csv_columns(zones) -> list[str]:
    return (["eta_p", "eta_g", "mode", "power_cost", "gas_cost", "loss", "total"]
            + [f"psi_{z}" for z in zones] + ["gap", "wall_s", "shed", "status"])


def csv_row(report: RunReport | None, zones, eta_p, eta_g, mode, with_wall: bool) -> list[str]:
    if report is None or report.costs is None:
        status = "error" if report is None else report.status
        return [_fmt(eta_p), _fmt(eta_g), mode, "", "", "", ""] + [""] * len(zones) + ["", "", "", status]
    c = report.costs
    # period-1 zonal prices; multi-period systems report all periods in the JSON
    psis = [_fmt(report.zonal_prices.get(f"{z}:1")) for z in zones]
    return ([_fmt(eta_p), _fmt(eta_g), mode, _fmt(c.power), _fmt(c.gas), _fmt(c.loss), _fmt(c.total)] + psis
            + [_fmt(report.gap), _fmt(report.wall) if with_wall else "", _fmt(report.total_shed), report.status])


def write_csv(rows, zones, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_columns(zones))
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
