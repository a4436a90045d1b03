"""gm/ID characterization tables: loading, validation, interpolation.

A table maps (gm/ID, L) to the device quantities needed for sizing. The
channel length axis is discrete: queries must hit a tabulated L exactly,
while gm/ID is interpolated piecewise-linearly within each length's sample
range. Units are fixed by the file format: L in um, gm/ID in 1/V, current
density in uA/um, transit figure gm/Cgg in Hz, voltages in V.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_HEADER = ("L_um", "gmid", "jd_uA_per_um", "gm_gds", "gm_cgg_hz", "vgs_v", "vdssat_v")

#: canonical column keys -> CSV column names
COLUMNS = {
    "jd": "jd_uA_per_um",
    "gm_gds": "gm_gds",
    "gm_cgg": "gm_cgg_hz",
    "vgs": "vgs_v",
    "vdssat": "vdssat_v",
}

# relative tolerance used to match a queried L against the stored grid;
# tight on purpose so configuration mistakes (e.g. 0.35 vs 0.3) surface
# as errors rather than silent nearest-neighbor hits
_L_MATCH_RTOL = 1e-9


class DeviceKind(enum.Enum):
    N = "n_type"
    P = "p_type"


class LutError(Exception):
    """Base class for table construction and query failures."""


class ParseError(LutError):
    pass


class MissingColumn(LutError):
    pass


class NonMonotonicAxis(LutError):
    pass


class EmptyLength(LutError):
    pass


class InvalidLutData(LutError):
    """A structurally valid table with physically impossible values."""


class LengthNotInGrid(LutError):
    pass


class GmidOutOfRange(LutError):
    pass


class UnknownColumn(LutError):
    pass


class NonPositiveCurrent(LutError):
    pass


class InvalidRange(LutError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LutSlice:
    """All samples of one channel length: a shared gm/ID axis plus columns."""

    gmid: np.ndarray
    columns: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        object.__setattr__(self, "gmid", _frozen(self.gmid))
        object.__setattr__(self, "columns", {k: _frozen(v) for k, v in self.columns.items()})


@dataclass(frozen=True)
class DeviceLut:
    """Immutable characterization table for one device kind.

    ``lengths`` is the discrete channel-length set; ``slices[i]`` holds the
    samples for ``lengths[i]``. Safe to share across concurrent readers.
    """

    device_kind: DeviceKind
    lengths: tuple[float, ...]
    slices: tuple[LutSlice, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.lengths) != len(self.slices):
            raise InvalidLutData("lengths and slices must be parallel")
        if not self.lengths:
            raise InvalidLutData("table has no lengths")
        if any(l <= 0 for l in self.lengths):
            raise InvalidLutData("channel lengths must be positive")
        if any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise InvalidLutData("channel lengths must be strictly increasing")
        for length, sl in zip(self.lengths, self.slices):
            if sl.gmid.size < 2:
                raise EmptyLength(f"L={length} has fewer than 2 gm/ID samples")
            if np.any(sl.gmid <= 0):
                raise InvalidLutData(f"L={length}: gm/ID samples must be positive")
            if np.any(np.diff(sl.gmid) <= 0):
                raise NonMonotonicAxis(f"L={length}: gm/ID axis not strictly increasing")
            missing = set(COLUMNS) - set(sl.columns)
            if missing:
                raise MissingColumn(f"L={length}: missing columns {sorted(missing)}")
            for key in ("jd", "gm_gds"):
                if np.any(sl.columns[key] <= 0):
                    raise InvalidLutData(f"L={length}: column {key} must be positive")
            for key, col in sl.columns.items():
                if col.shape != sl.gmid.shape:
                    raise InvalidLutData(f"L={length}: column {key} length mismatch")

    def length_index(self, length_um: float) -> int:
        for i, stored in enumerate(self.lengths):
            if stored == length_um or math.isclose(stored, length_um, rel_tol=_L_MATCH_RTOL):
                return i
        raise LengthNotInGrid(
            f"L={length_um} um not in grid {list(self.lengths)} (L is discrete, no interpolation)"
        )

    def gmid_range(self, length_um: float) -> tuple[float, float]:
        sl = self.slices[self.length_index(length_um)]
        return float(sl.gmid[0]), float(sl.gmid[-1])

    def lookup(self, column: str, gmid: float, length_um: float) -> float:
        """Interpolate ``column`` at (gmid, L); exact axis hits return stored values.

        Raises UnknownColumn, LengthNotInGrid, or GmidOutOfRange.
        """
        if column not in COLUMNS:
            raise UnknownColumn(f"unknown column {column!r}; expected one of {sorted(COLUMNS)}")
        sl = self.slices[self.length_index(length_um)]
        axis = sl.gmid
        if gmid < axis[0] or gmid > axis[-1]:
            raise GmidOutOfRange(
                f"gm/ID={gmid} outside [{axis[0]}, {axis[-1]}] for L={length_um}"
            )
        values = sl.columns[column]
        k = int(np.searchsorted(axis, gmid))
        if k < axis.size and axis[k] == gmid:
            return float(values[k])
        x0, x1 = axis[k - 1], axis[k]
        y0, y1 = values[k - 1], values[k]
        return float(y0 + (gmid - x0) * (y1 - y0) / (x1 - x0))

    def width_for_current(self, gmid: float, length_um: float, id_ua: float) -> float:
        """Device width (um) that carries ``id_ua`` at the given operating point."""
        if id_ua <= 0:
            raise NonPositiveCurrent(f"drain current must be positive, got {id_ua}")
        return id_ua / self.lookup("jd", gmid, length_um)

    def gmid_for_current_density(self, jd_ua_per_um: float, length_um: float) -> float:
        """Invert the JD column at fixed L (JD must be strictly decreasing in gm/ID)."""
        sl = self.slices[self.length_index(length_um)]
        jd = sl.columns["jd"]
        if np.any(np.diff(jd) >= 0):
            raise InvalidLutData(
                f"L={length_um}: current density not strictly decreasing; cannot invert"
            )
        if jd_ua_per_um > jd[0] or jd_ua_per_um < jd[-1]:
            raise GmidOutOfRange(
                f"JD={jd_ua_per_um} outside [{jd[-1]}, {jd[0]}] for L={length_um}"
            )
        # np.interp wants ascending x
        return float(np.interp(jd_ua_per_um, jd[::-1], sl.gmid[::-1]))


def load_lut(path: str | Path, device_kind: DeviceKind | str) -> DeviceLut:
    """Load a characterization CSV (see CSV_HEADER); row order is irrelevant.

    Lines starting with ``#`` are comments. Raises MissingColumn,
    NonMonotonicAxis (duplicate axis points), EmptyLength, or ParseError.
    """
    kind = DeviceKind(device_kind) if not isinstance(device_kind, DeviceKind) else device_kind
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [
            (n, row)
            for n, row in enumerate(csv.reader(fh), start=1)
            if row and not row[0].lstrip().startswith("#")
        ]
    if not rows:
        raise ParseError(f"{path}: no data rows")
    header_no, header = rows[0]
    names = [h.strip() for h in header]
    missing = set(CSV_HEADER) - set(names)
    if missing:
        raise MissingColumn(f"{path}: missing column(s) {sorted(missing)}")
    idx = {name: names.index(name) for name in CSV_HEADER}

    by_length: dict[float, list[tuple[float, tuple[float, ...]]]] = {}
    for n, row in rows[1:]:
        try:
            length = float(row[idx["L_um"]])
            gmid = float(row[idx["gmid"]])
            vals = tuple(float(row[idx[COLUMNS[c]]]) for c in COLUMNS)
        except (ValueError, IndexError) as exc:
            raise ParseError(f"{path}:{n}: {exc}") from exc
        by_length.setdefault(length, []).append((gmid, vals))

    lengths = sorted(by_length)
    slices = []
    for length in lengths:
        samples = sorted(by_length[length], key=lambda s: s[0])
        gmids = [g for g, _ in samples]
        if len(set(gmids)) != len(gmids):
            raise NonMonotonicAxis(f"{path}: duplicate gm/ID sample for L={length}")
        if len(gmids) < 2:
            raise EmptyLength(f"{path}: L={length} has fewer than 2 samples")
        cols = {
            c: np.array([vals[i] for _, vals in samples])
            for i, c in enumerate(COLUMNS)
        }
        slices.append(LutSlice(gmid=np.array(gmids), columns=cols))
    return DeviceLut(device_kind=kind, lengths=tuple(lengths), slices=tuple(slices))


def write_lut(lut: DeviceLut, path: str | Path) -> None:
    """Write a table in the canonical CSV format (round-trips through load_lut)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for length, sl in zip(lut.lengths, lut.slices):
            for k in range(sl.gmid.size):
                writer.writerow(
                    [repr(float(length)), repr(float(sl.gmid[k]))]
                    + [repr(float(sl.columns[c][k])) for c in COLUMNS]
                )


@dataclass(frozen=True)
class SyntheticModel:
    """Smooth analytic device model behind generate_synthetic_lut.

    The curves follow the qualitative weak/strong-inversion trends (current
    density falls with gm/ID, intrinsic gain grows with L, transit figure
    falls with L and gm/ID) but the constants are test fixtures, not
    physics claims.
    """

    jd0_ua_per_um: float = 100.0
    l0_um: float = 0.15
    jd_decay: float = 6.0
    gain_per_l: float = 8.0
    gain_cutoff: float = 28.0
    ft0_hz: float = 30e9
    ft_decay: float = 10.0
    vgs0_v: float = 1.0
    vgs_slope: float = 0.035

    def jd(self, gmid: float, length_um: float) -> float:
        return self.jd0_ua_per_um * (self.l0_um / length_um) * math.exp(-gmid / self.jd_decay)

    def gm_gds(self, gmid: float, length_um: float) -> float:
        return self.gain_per_l * (length_um / self.l0_um) * (self.gain_cutoff - gmid)

    def gm_cgg(self, gmid: float, length_um: float) -> float:
        return self.ft0_hz * (self.l0_um / length_um) ** 2 * math.exp(-gmid / self.ft_decay)

    def vgs(self, gmid: float) -> float:
        return self.vgs0_v - self.vgs_slope * gmid

    def vdssat(self, gmid: float) -> float:
        return 2.0 / gmid


def generate_synthetic_lut(
    device_kind: DeviceKind | str,
    lengths: list[float] | tuple[float, ...],
    gmid_range: tuple[float, float],
    sample_count: int,
    model: SyntheticModel = SyntheticModel(),
) -> DeviceLut:
    """Deterministic test table from the closed-form SyntheticModel."""
    kind = DeviceKind(device_kind) if not isinstance(device_kind, DeviceKind) else device_kind
    lo, hi = gmid_range
    if sample_count < 2:
        raise InvalidRange(f"sample_count must be >= 2, got {sample_count}")
    if not (0 < lo < hi):
        raise InvalidRange(f"gmid_range must be positive and increasing, got {gmid_range}")
    if hi >= model.gain_cutoff:
        raise InvalidRange(
            f"gmid_range upper {hi} reaches the model gain cutoff {model.gain_cutoff}"
        )
    if any(l <= 0 for l in lengths):
        raise InvalidRange(f"lengths must be positive, got {lengths}")

    axis = np.linspace(lo, hi, sample_count)
    slices = []
    for length in sorted(lengths):
        slices.append(
            LutSlice(
                gmid=axis.copy(),
                columns={
                    "jd": np.array([model.jd(g, length) for g in axis]),
                    "gm_gds": np.array([model.gm_gds(g, length) for g in axis]),
                    "gm_cgg": np.array([model.gm_cgg(g, length) for g in axis]),
                    "vgs": np.array([model.vgs(g) for g in axis]),
                    "vdssat": np.array([model.vdssat(g) for g in axis]),
                },
            )
        )
    return DeviceLut(device_kind=kind, lengths=tuple(sorted(lengths)), slices=tuple(slices))
