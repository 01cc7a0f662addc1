"""Run configuration: a JSON document with five sections.

Precedence, lowest to highest: field defaults, the ``--config`` file,
explicit command-line flags. Unknown keys are rejected at every level.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from .netmodel import NetworkSnapshot
from .offline import DiversityConfig
from .online import SwitchPolicy, UtilityWeights
from .qubo import ObjectiveParams
from .samplers import SAParams, SamplerConfig
from .sim import Disturbance, EnergyParams, MobilityParams, ScenarioSpec


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ScenarioSection(_Section):
    family: Literal["I0", "I1", "I2", "I3", "I4"] = Field("I2", description="centralisation family")
    n: int = Field(10, ge=4, description="number of UAVs")
    seed: int = Field(0, ge=0, description="root seed for every random stream")
    horizon_s: float = Field(30.0, gt=0)
    step_s: float = Field(1.0, gt=0)
    max_speed_mps: float = Field(5.0, ge=0)
    waypoint_pause_s: float = Field(0.0, ge=0)
    shadowing_sigma_db: float = Field(4.0, ge=0)
    shadowing_rho: float = Field(0.9, ge=0, le=1)
    initial_energy_j: float = Field(1000.0, ge=0)
    idle_w: float = Field(1.0, ge=0)
    tx_j_per_bit: float = Field(1.0, ge=0)
    disturbance_times_s: list[float] = Field([12.0, 19.0, 25.0])
    disturbance_fraction: float = Field(0.3, ge=0, le=1)
    disturbance_duration_steps: int = Field(2, ge=0)
    disturbance_mode: Literal["node", "link"] = "node"
    freeze: bool = Field(False, description="no motion and no shadowing")
    tx_power_dbm: float = 20.0
    bandwidth_hz: float = Field(1.0, gt=0, description="1.0 gives capacities in bit/s/Hz")
    noise_dbm: float = -90.0
    carrier_freq_hz: float = Field(2.4e9, gt=0)
    capacity_gap: float = Field(2.0, ge=1, description="SNR gap Gamma")

    def radio(self) -> dict:
        return {
            "tx_power_dbm": self.tx_power_dbm,
            "bandwidth_hz": self.bandwidth_hz,
            "noise_dbm": self.noise_dbm,
            "carrier_freq_hz": self.carrier_freq_hz,
            "capacity_gap": self.capacity_gap,
        }

    def spec(self, snapshot: NetworkSnapshot, seed: int | None = None) -> ScenarioSpec:
        dist = tuple(
            Disturbance(t, self.disturbance_fraction, self.disturbance_duration_steps,
                        self.disturbance_mode)
            for t in self.disturbance_times_s
        )
        spec = ScenarioSpec(
            snapshot,
            horizon_s=self.horizon_s,
            step_s=self.step_s,
            mobility=MobilityParams(self.max_speed_mps, self.waypoint_pause_s),
            shadowing_sigma_db=self.shadowing_sigma_db,
            shadowing_rho=self.shadowing_rho,
            energy=EnergyParams(self.initial_energy_j, self.idle_w, self.tx_j_per_bit),
            disturbances=dist,
            seed=self.seed if seed is None else seed,
        )
        if self.freeze:
            spec = replace(spec, mobility=MobilityParams(0.0), shadowing_sigma_db=0.0)
        return spec


class ObjectiveSection(_Section):
    alpha: float = Field(1.0, ge=0)
    beta: float = Field(0.01, ge=0)

    def params(self) -> ObjectiveParams:
        return ObjectiveParams(self.alpha, self.beta)


class OfflineSection(_Section):
    rounds: int = Field(3, ge=1, description="sampling rounds R")
    samples_per_round: int = Field(10, ge=1, description="samples per round k")
    lam: float | None = Field(None, ge=0, description="penalty weight; null = 0.5 * mean |diag Q|")
    portfolio_size: int = Field(10, ge=1)
    sweeps: int = Field(100, ge=1, description="SA sweeps per offline sample")
    t_initial: float | None = None
    t_final: float | None = None
    restarts_per_sample: int = Field(1, ge=1)
    solver: Literal["sa", "brute", "remote"] = "sa"
    endpoint: str | None = Field(None, description="remote URL or job directory")

    def diversity(self) -> DiversityConfig:
        return DiversityConfig(self.rounds, self.samples_per_round, self.lam)

    def sampler_config(self, seed: int) -> SamplerConfig:
        sa = SAParams(self.sweeps, self.t_initial, self.t_final, self.restarts_per_sample)
        return SamplerConfig(self.samples_per_round, seed, sa)


class OnlineSection(_Section):
    w_perf: float = Field(1.0, ge=0)
    w_life: float = Field(0.01, ge=0)
    hysteresis_margin: float = Field(0.05, ge=0)
    min_dwell_s: float = Field(3.0, ge=0)
    switch_outage_steps: float = Field(0.1, ge=0)

    def weights(self) -> UtilityWeights:
        return UtilityWeights(self.w_perf, self.w_life)

    def policy(self) -> SwitchPolicy:
        return SwitchPolicy(self.hysteresis_margin, self.min_dwell_s, self.switch_outage_steps)


class ExperimentSection(_Section):
    num_runs: int = Field(20, ge=1)
    output_dir: str = "out"
    jobs: int = Field(1, ge=1)


class RunConfig(_Section):
    scenario: ScenarioSection = ScenarioSection()
    objective: ObjectiveSection = ObjectiveSection()
    offline: OfflineSection = OfflineSection()
    online: OnlineSection = OnlineSection()
    experiment: ExperimentSection = ExperimentSection()

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls()
        return cls.model_validate(json.loads(Path(path).read_text()))

    def override(self, section: str, **values) -> "RunConfig":
        """Copy with non-``None`` ``values`` applied to ``section`` (re-validated)."""
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        data = self.model_dump()
        data[section].update(values)
        return RunConfig.model_validate(data)
