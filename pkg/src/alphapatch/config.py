"""Run configuration as a plain INI file.

Sections: ``[run]``, ``[scenario]``, ``[kernel]``, ``[redistribution]`` and
``[stop]``. Scenario parameters other than ``name`` are stored as JSON
literals so that numbers and lists survive the round trip unchanged.
"""
from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .evolution import MODES, RedistributionParams, StopConditions, default_B
from .kernel import KernelParams
from .scenarios import SCENARIOS, ScenarioSpec

_SELFSIMILAR_SCENARIOS = ("wedge", "wedge_repelling", "wedge_near_separatrix")


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.7
    mode: str = "physical"
    scenario: ScenarioSpec = field(default_factory=lambda: ScenarioSpec("two_circles"))
    kernel: KernelParams = field(default_factory=KernelParams)
    redistribution: RedistributionParams = field(default_factory=RedistributionParams)
    B: float | None = None
    dt_max: float | None = None
    stop: StopConditions = field(default_factory=lambda: StopConditions(max_steps=100))
    snapshot_stride: int = 10
    out: str = "run"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.scenario.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario.name!r}")
        if self.B is not None and self.B <= 0.0:
            raise ValueError("B must be positive")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")
        if self.stop.t_end is None and self.stop.max_steps is None:
            raise ValueError("need t_end or max_steps in [stop]")

    @property
    def step_factor(self) -> float:
        return default_B(self.alpha) if self.B is None else self.B

    def to_parser(self) -> configparser.ConfigParser:
        cp = configparser.ConfigParser(interpolation=None)
        cp["run"] = {
            "alpha": repr(self.alpha),
            "mode": self.mode,
            "B": _opt(self.B),
            "dt_max": _opt(self.dt_max),
            "snapshot_stride": str(self.snapshot_stride),
            "out": self.out,
            "seed": str(self.seed),
        }
        cp["scenario"] = {"name": self.scenario.name}
        for k, v in sorted(self.scenario.params.items()):
            cp["scenario"][k] = json.dumps(v)
        cp["kernel"] = {k: repr(v) for k, v in asdict(self.kernel).items()}
        cp["redistribution"] = {k: repr(v) for k, v in asdict(self.redistribution).items()}
        cp["stop"] = {k: _opt(v) for k, v in asdict(self.stop).items()}
        return cp

    def dumps(self) -> str:
        buf = io.StringIO()
        self.to_parser().write(buf)
        return buf.getvalue()

    def hash(self) -> str:
        """Digest of the canonical text form (the output directory is excluded)."""
        return hashlib.sha256(replace(self, out="").dumps().encode()).hexdigest()[:16]

    def save(self, path) -> None:
        from .storage import atomic_write
        atomic_write(path, self.dumps())

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        return cls.from_parser(cp)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.loads(Path(path).read_text())

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "RunConfig":
        known = {"run", "scenario", "kernel", "redistribution", "stop"}
        unknown = set(cp.sections()) - known
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        kw = {}
        run = cp["run"] if cp.has_section("run") else {}
        # configparser lowercases keys, hence "b"
        convert = {"alpha": ("alpha", float), "mode": ("mode", str), "b": ("B", _float_or_none),
                   "dt_max": ("dt_max", _float_or_none), "snapshot_stride": ("snapshot_stride", int),
                   "out": ("out", str), "seed": ("seed", int)}
        for key, raw in run.items():
            if key not in convert:
                raise ValueError(f"unknown key {key!r} in [run]")
            name, conv = convert[key]
            kw[name] = conv(raw)
        if cp.has_section("scenario"):
            sec = dict(cp["scenario"])
            name = sec.pop("name", "two_circles")
            kw["scenario"] = ScenarioSpec(name, {k: json.loads(v) for k, v in sec.items()})
        if cp.has_section("kernel"):
            kw["kernel"] = KernelParams(**_typed(KernelParams, cp["kernel"]))
        if cp.has_section("redistribution"):
            kw["redistribution"] = RedistributionParams(
                **_typed(RedistributionParams, _restore_case(cp["redistribution"], ("L",))))
        if cp.has_section("stop"):
            kw["stop"] = StopConditions(**_typed(StopConditions, cp["stop"]))
        return cls(**kw)


def default_config(scenario: str = "two_circles", **overrides) -> RunConfig:
    """Defaults per scenario. Self-similar runs remesh in physical units, cap
    the step at 0.05 and stop at tau = 5.5."""
    if scenario in _SELFSIMILAR_SCENARIOS:
        kw = dict(mode="selfsimilar", dt_max=0.05,
                  redistribution=RedistributionParams(physical_units=True),
                  stop=StopConditions(t_end=5.5), snapshot_stride=20)
    else:
        kw = dict(mode="physical")
    kw.update(overrides)
    return RunConfig(scenario=ScenarioSpec(scenario), **kw)


def _opt(v) -> str:
    return "none" if v is None else repr(v)


def _float_or_none(s: str):
    return None if s.strip().lower() in ("", "none") else float(s)


def _restore_case(section, names) -> dict:
    # configparser lowercases keys
    lower = {n.lower(): n for n in names}
    return {lower.get(k, k): v for k, v in section.items()}


def _typed(cls, section) -> dict:
    out = {}
    names = {f.name: f for f in fields(cls)}
    for key, raw in section.items():
        if key not in names:
            raise ValueError(f"unknown key {key!r} for {cls.__name__}")
        text = raw.strip()
        if text.lower() in ("", "none"):
            out[key] = None
            continue
        ftype = str(names[key].type)
        if ftype.startswith("bool"):
            if text.lower() not in ("true", "false"):
                raise ValueError(f"{key} must be true or false, got {raw!r}")
            out[key] = text.lower() == "true"
        else:
            out[key] = int(text) if ftype.startswith("int") else float(text)
    return out
