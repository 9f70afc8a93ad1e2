"""Drive a configured run and persist what it produces.

Output layout under ``config.out``::

    config.ini
    series.csv
    snapshots/step_000000.csv (+ .json), one every ``snapshot_stride`` steps
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .evolution import PatchSystem, simulate
from .scenarios import build_scenario
from .storage import SeriesWriter, read_metadata, read_snapshot, write_snapshot

log = logging.getLogger(__name__)


@dataclass
class RunSummary:
    out: str
    steps: int
    final_step: int
    time: float
    status: str
    last_snapshot: str
    series: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def snapshot_path(out, step: int) -> Path:
    return Path(out) / "snapshots" / f"step_{step:06d}.csv"


def initial_system(config: RunConfig) -> PatchSystem:
    system = build_scenario(config.scenario, config.alpha, config.kernel, config.redistribution,
                            seed=config.seed)
    if system.mode != config.mode:
        raise ValueError(f"scenario {config.scenario.name} is posed in {system.mode} variables, "
                         f"config asks for {config.mode}")
    return system


def execute(config: RunConfig, *, system: PatchSystem | None = None, resume=None,
            workers: int | None = None, backward: bool = False) -> RunSummary:
    """Run ``config`` and write config, series and snapshots to ``config.out``.

    With ``resume`` (a snapshot path) the run continues from that snapshot's
    state and step, the series file is truncated to that step, and
    ``max_steps`` counts from there. Because snapshots hold every double
    exactly, the continuation is bit-identical to an uninterrupted run.
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    config.save(out / "config.ini")
    chash = config.hash()
    series_path = out / "series.csv"
    if resume is not None:
        meta = read_metadata(resume)
        if meta.get("config_hash") not in (None, chash):
            log.warning("resuming from a snapshot written under a different config")
        system = read_snapshot(resume)
        step0 = int(meta.get("step", 0))
        series = SeriesWriter.resume(series_path, step0)
    else:
        if system is None:
            system = initial_system(config)
        step0 = 0
        series = SeriesWriter(series_path)
    if system.mode != config.mode:
        raise ValueError(f"system is in {system.mode} variables, config asks for {config.mode}")

    stride = config.snapshot_stride
    last_snap = ""
    state, rec = system, None
    for state, rec in simulate(system, B=config.step_factor, redistribution=config.redistribution,
                               stop=config.stop, dt_max=config.dt_max, backward=backward,
                               workers=workers, step0=step0):
        # a contact record repeats the last good step; keep one row per step
        if not series.rows or int(series.rows[-1][0]) != rec.step:
            series.append(rec)
        if rec.step % stride == 0 or rec.status != "ok":
            last_snap = str(write_snapshot(snapshot_path(out, rec.step), state, step=rec.step,
                                           config_hash=chash, extra={"status": rec.status}))
            series.flush()
    if rec is not None and rec.step % stride != 0 and rec.status == "ok":
        last_snap = str(write_snapshot(snapshot_path(out, rec.step), state, step=rec.step,
                                       config_hash=chash, extra={"status": rec.status}))
    series.flush()
    return RunSummary(str(out), rec.step - step0, rec.step, state.time, rec.status, last_snap,
                      str(series_path))
