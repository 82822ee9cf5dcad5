"""Stress sweeps over power and gas load multipliers."""
from __future__ import annotations

import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..config import Config
from ..data import TestSystem
from .report import RunReport, csv_row, write_csv
from .runs import run_scenario

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cell:
    eta_p: float
    eta_g: float
    mode: str


@dataclass
class CellResult:
    cell: Cell
    report: RunReport | None
    error: str = ""


def grid(eta_p, eta_g, modes) -> list[Cell]:
    """Cells in grid order: power multiplier, then gas multiplier, then mode."""
    if not eta_p or not eta_g or not modes:
        raise ValueError("sweep grids must be nonempty")
    for v in list(eta_p) + list(eta_g):
        if not v > 0:
            raise ValueError("load multipliers must be positive")
    return [Cell(float(a), float(b), m) for a in eta_p for b in eta_g for m in modes]


def _run_cell(args) -> CellResult:
    system, cell, config, log_dir = args
    try:
        rep = run_scenario(system, cell.mode, cell.eta_p, cell.eta_g, config, log_dir)
        return CellResult(cell, rep)
    except Exception as exc:   # a failed cell is recorded and the sweep goes on
        return CellResult(cell, None, f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}")


def sweep(system: TestSystem, eta_p, eta_g, modes=("A", "B"), config: Config | None = None, jobs: int = 1,
          out_dir=None, with_wall: bool = False) -> tuple[list[CellResult], str]:
    """Run every cell and return the results (grid order) and the aggregate CSV text.

    Wall times go to the per-run JSON reports; they enter the CSV only with
    ``with_wall`` because they differ between otherwise identical runs.
    """
    cfg = config or Config()
    cells = grid(eta_p, eta_g, modes)
    out = Path(out_dir) if out_dir else None
    log_dir = str(out / "logs") if out else None
    work = [(system, c, cfg, log_dir) for c in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_cell, work))     # map keeps grid order
    else:
        results = [_run_cell(w) for w in work]
    zones = [z.id for z in system.coupling.zones]
    rows = [csv_row(r.report, zones, r.cell.eta_p, r.cell.eta_g, r.cell.mode, with_wall) for r in results]
    text = write_csv(rows, zones, out / "sweep.csv" if out else None)
    if out:
        rdir = out / "reports"
        rdir.mkdir(parents=True, exist_ok=True)
        for r in results:
            name = f"{r.cell.mode}_{r.cell.eta_p:g}_{r.cell.eta_g:g}"
            if r.report is not None:
                (rdir / f"{name}.json").write_text(r.report.to_json())
            else:
                (rdir / f"{name}.error.txt").write_text(r.error)
    for r in results:
        if r.report is None:
            log.error("cell %s failed: %s", r.cell, r.error.splitlines()[0])
    return results, text
