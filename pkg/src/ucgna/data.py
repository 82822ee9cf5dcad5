"""Test-system files: JSON documents with power, gas and coupling sections."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .coupling import BidValidityParams, CouplingSpec, GFPPLink, HeatRateCurve, PriceZone, validate_coupling
from .gas import GasEdge, GasSystem, Junction, validate_gas
from .power import Bid, Bus, Generator, Line, PowerSystem, validate_network

BUNDLED = ("toy2x2", "mini_ne")


class DataError(ValueError):
    """Malformed or inconsistent system data; ``diagnostics`` lists every problem found."""

    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


@dataclass
class TestSystem:
    name: str
    power: PowerSystem
    gas: GasSystem
    coupling: CouplingSpec
    T: int = 1

    __test__ = False   # not a pytest class

    def diagnostics(self) -> list[str]:
        out = [d for d in validate_network(self.power) if not d.startswith("warning")]
        out += validate_gas(self.gas)
        out += validate_coupling(self.coupling, self.power, self.gas)
        return out

    def warnings(self) -> list[str]:
        return [d for d in validate_network(self.power) if d.startswith("warning")]


def _num(v, default=None):
    if v is None:
        return default
    return float(v)


def _parse(doc: dict) -> TestSystem:
    try:
        pw = doc["power"]
        buses = [Bus(b["id"], _num(b.get("theta_min"), -math.pi), _num(b.get("theta_max"), math.pi),
                     [float(v) for v in b.get("load", [])]) for b in pw["buses"]]
        lines = [Line(ln["id"], ln["head"], ln["tail"], float(ln["susceptance"]), float(ln["limit"]),
                      _num(ln.get("angle_diff"), math.pi / 2)) for ln in pw.get("lines", [])]
        gens = []
        for g in pw["generators"]:
            gens.append(Generator(
                id=g["id"], bus=g["bus"], fuel=g.get("fuel", "other"),
                no_load_cost=float(g.get("no_load_cost", 0.0)),
                startup=[(int(a), float(c)) for a, c in g.get("startup", [])],
                p_min=float(g.get("p_min", 0.0)), p_max=float(g["p_max"]),
                ramp_down=_num(g.get("ramp_down"), math.inf), ramp_up=_num(g.get("ramp_up"), math.inf),
                initial_status=int(g.get("initial_status", 0)), initial_output=float(g.get("initial_output", 0.0)),
                min_up=int(g.get("min_up", 1)), min_down=int(g.get("min_down", 1)),
                forced_on=int(g.get("forced_on", 0)), forced_off=int(g.get("forced_off", 0)),
                bids=[Bid(float(p), float(q)) for p, q in g.get("bids", [])]))
        power = PowerSystem(buses, lines, gens, pw.get("reference_bus"))
        gs = doc["gas"]
        junctions = [Junction(j["id"], float(j.get("pressure_min", 0.0)), _num(j.get("pressure_max"), math.inf),
                              [float(v) for v in j.get("demand", [])], float(j.get("shed_penalty", 130.0)),
                              [(float(c), float(s)) for c, s in j.get("supply", [])],
                              float(j.get("supply_min", 0.0))) for j in gs["junctions"]]
        edges = [GasEdge(a["id"], a["head"], a["tail"], a.get("kind", "pipe"), float(a.get("weymouth", 1.0)),
                         float(a.get("ratio_min", 1.0)), float(a.get("ratio_max", 1.0))) for a in gs.get("edges", [])]
        gas = GasSystem(junctions, edges)
        cp = doc.get("coupling", {})
        cap = float(cp.get("price_cap", 200.0))
        zones = [PriceZone(z["id"], list(z["members"]), z.get("averaging")) for z in cp.get("zones", [])]
        links, curves, validity = [], {}, {}
        for lk in cp.get("gfpps", []):
            links.append(GFPPLink(lk["generator"], lk["bus"], lk["junction"], lk.get("zone", "")))
            h = lk["heat_rate"]
            curves[lk["generator"]] = HeatRateCurve(float(h[0]), float(h[1]), float(h[2]) if len(h) > 2 else 0.0)
            validity[lk["generator"]] = BidValidityParams(float(lk.get("alpha_u", 1.0)),
                                                          float(lk.get("price_cap", cap)))
        coupling = CouplingSpec(links, curves, zones, validity, cap)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed system document: {exc!r}") from exc
    return TestSystem(doc.get("name", "system"), power, gas, coupling, int(doc.get("T", 1)))


def parse_system(doc: dict, validate: bool = True) -> TestSystem:
    system = _parse(doc)
    if validate:
        diags = system.diagnostics()
        if diags:
            raise DataError(f"{len(diags)} problem(s) in system {system.name!r}: " + "; ".join(diags), diags)
    return system


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("ucgna") / "data" / f"{name}.json"))


def load_system(path, validate: bool = True) -> TestSystem:
    """Load a system file; a bare bundled name (``toy2x2``, ``mini_ne``) is also accepted."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise DataError(f"system file not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"cannot parse {p}: {exc}") from exc
    return parse_system(doc, validate)


def scale_loads(system: TestSystem, eta_p: float = 1.0, eta_g: float = 1.0) -> TestSystem:
    """Multiply every bus load by ``eta_p`` and every gas demand by ``eta_g``."""
    if not (eta_p > 0 and eta_g > 0):
        raise ValueError("load multipliers must be positive")
    return replace(system, power=system.power.scaled(eta_p), gas=system.gas.scaled(eta_g),
                   coupling=copy.deepcopy(system.coupling))
