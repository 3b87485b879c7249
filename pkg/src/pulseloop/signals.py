"""Uniformly sampled time-series container shared by all signal modules."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: Recognized channel kinds.
KINDS = ("ecg", "respiration", "eda")


@dataclass
class Signal:
    """A uniformly sampled channel with its sample rate and units.

    Parameters
    ----------
    data : ndarray
        Sample values (float64).
    fs : float
        Sampling rate in Hz.
    kind : str
        One of ``ecg``, ``respiration``, ``eda``.
    units : str
        Physical units of the samples (mV, a.u., uS).
    t0 : float
        Time of the first sample on the session clock, seconds.
    """

    data: np.ndarray
    fs: float
    kind: str
    units: str = ""
    t0: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.fs <= 0 or not np.isfinite(self.fs):
            raise ValueError(f"invalid sample rate: {self.fs}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown channel kind: {self.kind!r}")

    @property
    def duration(self) -> float:
        """Signal duration in seconds."""
        return len(self.data) / self.fs

    def times(self) -> np.ndarray:
        """Sample timestamps in seconds."""
        return self.t0 + np.arange(len(self.data)) / self.fs

    def to_csv(self, path) -> None:
        """Write the signal as ``time_s,value`` rows with a comment header."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# kind={self.kind} fs={self.fs} units={self.units} t0={self.t0}\n")
            writer = csv.writer(fh)
            writer.writerow(["time_s", "value"])
            for t, v in zip(self.times(), self.data):
                writer.writerow([f"{t:.6f}", repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "Signal":
        """Read a signal written by :meth:`to_csv`."""
        path = Path(path)
        with path.open() as fh:
            header = fh.readline()
            if not header.startswith("#"):
                raise ValueError(f"{path}: missing signal header line")
            meta = dict(tok.split("=", 1) for tok in header[1:].split())
            reader = csv.reader(fh)
            next(reader)  # column names
            values = [float(row[1]) for row in reader if row]
        return cls(
            data=np.array(values),
            fs=float(meta["fs"]),
            kind=meta["kind"],
            units=meta.get("units", ""),
            t0=float(meta.get("t0", 0.0)),
        )
