"""Design vector -> physical sizing -> gate area and first-order metrics.

Unit conventions throughout: currents in uA, transconductances in uS
(so gm = gm/ID * ID directly), widths/lengths in um, capacitance in pF,
voltages in V. With these, gm[uS] * R[MOhm] is a dimensionless gain,
gm[uS] / C[pF] * 1e6 is in Hz, and I[uA] / C[pF] is in V/us.

The analytic model here is the cheap feasibility filter that runs before
any simulation: standard first-order folded-cascode expressions whose
coefficients are all named topology knobs, so the filter can be
calibrated against the verification backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

from .luts import DeviceKind, DeviceLut, LutError


@dataclass(frozen=True)
class DesignVector:
    """Mixed position: per-group gm/ID, per-group length index, tail current."""

    gmid: tuple[float, ...]
    l_index: tuple[int, ...]
    i_t: float  # uA

    def __post_init__(self) -> None:
        if len(self.gmid) != len(self.l_index):
            raise ValueError("gmid and l_index must have one entry per group")
        if self.i_t <= 0:
            raise ValueError(f"tail current must be positive, got {self.i_t}")


@dataclass(frozen=True)
class GroupSpec:
    """One matched transistor group of the topology."""

    name: str
    device_kind: DeviceKind
    multiplicity: int
    current_ratio: float  # per-device ID = ratio * I_T
    allowed_lengths: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.multiplicity < 1:
            raise ValueError(f"group {self.name}: multiplicity must be >= 1")
        if self.current_ratio <= 0:
            raise ValueError(f"group {self.name}: current ratio must be positive")
        if not self.allowed_lengths:
            raise ValueError(f"group {self.name}: empty allowed length set")
        if any(b <= a for a, b in zip(self.allowed_lengths, self.allowed_lengths[1:])):
            raise ValueError(f"group {self.name}: allowed lengths must be strictly increasing")


@dataclass(frozen=True)
class TopologySpec:
    """Circuit structure and analytic-model coefficients, all configuration.

    ``output_stacks`` lists (cascode_group, load_group) pairs; each stack
    contributes (gm_c/gds_c)/gds_l to the output resistance and the stacks
    combine in parallel. ``load_capacitance_pf`` is the differential load;
    each single-ended output sees twice that.
    """

    groups: tuple[GroupSpec, ...]
    supply_voltage: float  # V
    load_capacitance_pf: float  # differential C_L
    total_current_ratio: float  # IDD = ratio * I_T
    input_group: str
    output_stacks: tuple[tuple[str, str], ...]
    tail_group: str | None = None
    nd_pole_fraction: float = 0.5
    slew_current_fraction: float = 0.5
    area_weighted: bool = True  # False restores the literal one-W.L-per-group sum

    def __post_init__(self) -> None:
        if not self.groups:
            raise ValueError("topology needs at least one group")
        if self.supply_voltage <= 0:
            raise ValueError("supply voltage must be positive")
        if self.load_capacitance_pf <= 0:
            raise ValueError("load capacitance must be positive")
        if self.total_current_ratio <= 0:
            raise ValueError("total current ratio must be positive")
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise ValueError("group names must be unique")
        referenced = [self.input_group] + [n for pair in self.output_stacks for n in pair]
        if self.tail_group is not None:
            referenced.append(self.tail_group)
        for name in referenced:
            if name not in names:
                raise ValueError(f"topology references unknown group {name!r}")
        if not self.output_stacks:
            raise ValueError("topology needs at least one output stack")

    @property
    def single_ended_load_pf(self) -> float:
        return 2.0 * self.load_capacitance_pf

    def group_index(self, name: str) -> int:
        for i, g in enumerate(self.groups):
            if g.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True)
class GroupSizing:
    name: str
    multiplicity: int
    width_um: float
    length_um: float
    drain_current_ua: float
    gmid: float
    gm_us: float
    gds_us: float
    vgs_v: float
    vdssat_v: float
    transit_hz: float  # gm/Cgg at the operating point


@dataclass(frozen=True)
class SizingSolution:
    groups: tuple[GroupSizing, ...]
    idd_ua: float
    tail_current_ua: float

    def group(self, name: str) -> GroupSizing:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)


@dataclass(frozen=True)
class PerfGoals:
    """Pass thresholds; None means unconstrained."""

    min_av0_db: float | None = None
    min_gbw_hz: float | None = None
    min_pm_deg: float | None = None
    min_sr_v_per_us: float | None = None
    min_cmrr_db: float | None = None
    min_psrr_db: float | None = None
    max_power_uw: float | None = None

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if value is not None and not math.isfinite(value):
                raise ValueError(f"goal {name} must be finite, got {value}")

    def without_rejection_ratios(self) -> "PerfGoals":
        """Goals with CMRR/PSRR dropped (checked only at verification)."""
        return replace(self, min_cmrr_db=None, min_psrr_db=None)

    def any_set(self) -> bool:
        return any(v is not None for v in vars(self).values())


@dataclass(frozen=True)
class PerfMetrics:
    av0_db: float | None = None
    gbw_hz: float | None = None
    pm_deg: float | None = None
    sr_v_per_us: float | None = None
    sr_fall_v_per_us: float | None = None
    cmrr_db: float | None = None
    psrr_db: float | None = None
    power_uw: float | None = None
    gate_area_um2: float | None = None
    source: str | None = None  # "analytic" | "surrogate" | "simulator"

    def __post_init__(self) -> None:
        if self.gate_area_um2 is not None and self.gate_area_um2 <= 0:
            raise ValueError("gate area must be positive")
        if self.power_uw is not None and self.power_uw < 0:
            raise ValueError("power must be non-negative")


#: goal attr, metric attr, comparison ("min" -> metric >= goal, "max" -> metric <= goal)
_GOAL_TABLE = (
    ("av0", "min_av0_db", "av0_db", "min"),
    ("gbw", "min_gbw_hz", "gbw_hz", "min"),
    ("pm", "min_pm_deg", "pm_deg", "min"),
    ("sr", "min_sr_v_per_us", "sr_v_per_us", "min"),
    ("cmrr", "min_cmrr_db", "cmrr_db", "min"),
    ("psrr", "min_psrr_db", "psrr_db", "min"),
    ("power", "max_power_uw", "power_uw", "max"),
)


def failed_goals(metrics: PerfMetrics, goals: PerfGoals) -> tuple[str, ...]:
    """Names of violated constraints; a set goal with a missing metric fails.

    This single comparator backs both the survivability filter and the
    verification verdict so the two stages can never disagree on the
    comparison itself.
    """
    failures = []
    for name, goal_attr, metric_attr, kind in _GOAL_TABLE:
        threshold = getattr(goals, goal_attr)
        if threshold is None:
            continue
        value = getattr(metrics, metric_attr)
        if value is None:
            failures.append(name)
        elif kind == "min" and not value >= threshold:
            failures.append(name)
        elif kind == "max" and not value <= threshold:
            failures.append(name)
    return tuple(failures)


def size_circuit(
    x: DesignVector,
    luts: Mapping[DeviceKind, DeviceLut],
    topo: TopologySpec,
) -> SizingSolution:
    """Deterministically realize W/L and bias for every group from the tables.

    LUT range errors propagate (GmidOutOfRange etc.); callers treat them
    as infeasible candidates, not crashes.
    """
    if len(x.gmid) != len(topo.groups):
        raise ValueError(
            f"design vector has {len(x.gmid)} groups, topology has {len(topo.groups)}"
        )
    sized = []
    for i, spec in enumerate(topo.groups):
        if not 0 <= x.l_index[i] < len(spec.allowed_lengths):
            raise ValueError(
                f"group {spec.name}: length index {x.l_index[i]} outside allowed set"
            )
        lut = luts[spec.device_kind]
        gmid = x.gmid[i]
        length = spec.allowed_lengths[x.l_index[i]]
        id_ua = spec.current_ratio * x.i_t
        width = lut.width_for_current(gmid, length, id_ua)
        gm_us = gmid * id_ua
        gds_us = gm_us / lut.lookup("gm_gds", gmid, length)
        sized.append(
            GroupSizing(
                name=spec.name,
                multiplicity=spec.multiplicity,
                width_um=width,
                length_um=length,
                drain_current_ua=id_ua,
                gmid=gmid,
                gm_us=gm_us,
                gds_us=gds_us,
                vgs_v=lut.lookup("vgs", gmid, length),
                vdssat_v=lut.lookup("vdssat", gmid, length),
                transit_hz=lut.lookup("gm_cgg", gmid, length),
            )
        )
    return SizingSolution(
        groups=tuple(sized),
        idd_ua=topo.total_current_ratio * x.i_t,
        tail_current_ua=x.i_t,
    )


def gate_area(s: SizingSolution, topo: TopologySpec) -> float:
    """Total gate area in um^2, device-count-weighted unless disabled."""
    if topo.area_weighted:
        return sum(g.multiplicity * g.width_um * g.length_um for g in s.groups)
    return sum(g.width_um * g.length_um for g in s.groups)


def analytic_metrics(s: SizingSolution, topo: TopologySpec) -> PerfMetrics:
    """First-order metrics for the pre-simulation filter.

    CMRR/PSRR are left unset here; symmetric first-order models predict
    them poorly, so they are checked only at verification.
    """
    gm_in = s.group(topo.input_group).gm_us
    r_out_mohm = 1.0 / sum(
        1.0 / ((s.group(c).gm_us / s.group(c).gds_us) / s.group(l).gds_us)
        for c, l in topo.output_stacks
    )
    av0 = gm_in * r_out_mohm
    c_se = topo.single_ended_load_pf
    gbw_hz = gm_in / (2.0 * math.pi * c_se) * 1e6
    f_nd = topo.nd_pole_fraction * min(s.group(c).transit_hz for c, _ in topo.output_stacks)
    pm_deg = 90.0 - math.degrees(math.atan(gbw_hz / f_nd))
    sr = topo.slew_current_fraction * s.tail_current_ua / c_se
    return PerfMetrics(
        av0_db=20.0 * math.log10(av0),
        gbw_hz=gbw_hz,
        pm_deg=pm_deg,
        sr_v_per_us=sr,
        power_uw=topo.supply_voltage * s.idd_ua,
        gate_area_um2=gate_area(s, topo),
        source="analytic",
    )


@dataclass(frozen=True)
class SurvivabilityResult:
    passed: bool
    metrics: PerfMetrics | None
    failures: tuple[str, ...]


def survivability(
    x: DesignVector,
    luts: Mapping[DeviceKind, DeviceLut],
    topo: TopologySpec,
    goals: PerfGoals,
) -> SurvivabilityResult:
    """Cheap analytic feasibility filter; never invokes a simulator.

    Out-of-grid positions are reported as failures, so the swarm handles
    infeasible-by-construction candidates uniformly.
    """
    try:
        sized = size_circuit(x, luts, topo)
    except LutError as exc:
        return SurvivabilityResult(False, None, (f"lut:{type(exc).__name__}",))
    metrics = analytic_metrics(sized, topo)
    failures = failed_goals(metrics, goals.without_rejection_ratios())
    return SurvivabilityResult(not failures, metrics, failures)


def fitness(
    x: DesignVector,
    luts: Mapping[DeviceKind, DeviceLut],
    topo: TopologySpec,
) -> float:
    """Gate area of the realized sizing; LUT errors propagate as infeasibility."""
    return gate_area(size_circuit(x, luts, topo), topo)
