"""Simulated wire: frame records, symbol metering, and the cost ledger.

Every symbol that crosses the wire is logged exactly once.  Costs follow the
normalized definitions: reading cost counts symbols downloaded in the read
phase, writing cost counts symbols uploaded in the write phase, both divided
by the (unpadded) submodel length.  One-time query uploads in the write
phase are logged but flagged unmetered, mirroring how the closed forms
amortize them away.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

READ_Q = "READ_Q"
READ_A = "READ_A"
WRITE_U = "WRITE_U"
SPARSE_POS = "SPARSE_POS"
DOWNLINK_SET = "DOWNLINK_SET"
PERM_SETUP = "PERM_SETUP"
WRITE_QGEN = "WRITE_QGEN"

DOWN = "down"
UP = "up"
PHASE_READ = "read"
PHASE_WRITE = "write"


@dataclass(frozen=True)
class Frame:
    tick: int
    session: int     # iteration index within the run
    kind: str
    phase: str
    direction: str
    db: int          # 0 denotes the coordinator
    subpacket: int   # -1 when not subpacket-scoped
    symbols: int
    metered: bool = True

    def line(self) -> str:
        return (
            f"{self.tick:06d} {self.kind} sess={self.session} phase={self.phase} "
            f"dir={self.direction} db={self.db} sp={self.subpacket} "
            f"sym={self.symbols} metered={int(self.metered)}"
        )


class FrameLog:
    def __init__(self):
        self.frames: list[Frame] = []
        self._tick = 0
        self.session = 0

    def record(self, kind, phase, direction, db, symbols, subpacket=-1, metered=True) -> Frame:
        frame = Frame(
            tick=self._tick, session=self.session, kind=kind, phase=phase,
            direction=direction, db=db, subpacket=subpacket, symbols=symbols,
            metered=metered,
        )
        self.frames.append(frame)
        self._tick += 1
        return frame

    def trace(self) -> str:
        return "\n".join(f.line() for f in self.frames) + ("\n" if self.frames else "")


@dataclass
class CostLedger:
    """Per-phase symbol totals with the normalized cost views."""

    normalizer: int
    read_down: int = 0
    read_up: int = 0
    write_down: int = 0
    write_up: int = 0
    write_up_unmetered: int = 0
    totals: dict = field(default_factory=dict)

    def add(self, frame: Frame) -> None:
        key = (frame.phase, frame.direction, frame.metered)
        self.totals[key] = self.totals.get(key, 0) + frame.symbols
        if frame.phase == PHASE_READ and frame.direction == DOWN and frame.metered:
            self.read_down += frame.symbols
        elif frame.phase == PHASE_READ and frame.direction == UP and frame.metered:
            self.read_up += frame.symbols
        elif frame.phase == PHASE_WRITE and frame.direction == DOWN and frame.metered:
            self.write_down += frame.symbols
        elif frame.phase == PHASE_WRITE and frame.direction == UP:
            if frame.metered:
                self.write_up += frame.symbols
            else:
                self.write_up_unmetered += frame.symbols

    @property
    def c_read(self) -> Fraction:
        return Fraction(self.read_down, self.normalizer)

    @property
    def c_write(self) -> Fraction:
        return Fraction(self.write_up, self.normalizer)

    @property
    def c_total(self) -> Fraction:
        return self.c_read + self.c_write

    def as_dict(self) -> dict:
        return {
            "normalizer": self.normalizer,
            "read_down": self.read_down,
            "read_up": self.read_up,
            "write_down": self.write_down,
            "write_up": self.write_up,
            "write_up_unmetered": self.write_up_unmetered,
            "c_read": str(self.c_read),
            "c_write": str(self.c_write),
            "c_total": str(self.c_total),
        }
