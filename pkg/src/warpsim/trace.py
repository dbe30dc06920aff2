"""Trace stream: one CSV line per frame or packet event.

Columns are ``time,node,event,kind,uid,src,dst,tx,rx,bytes``. With
``full=False`` only application and drop events are written, which keeps
full-scale runs small.
"""

from __future__ import annotations

from typing import TextIO

from .engine import format_time
from .frames import Frame, trace_fields

TRACE_HEADER = "time,node,event,kind,uid,src,dst,tx,rx,bytes"


class Tracer:
    def __init__(self, sink: TextIO | None = None, full: bool = False):
        self.sink = sink
        self.full = full and sink is not None
        self.lines = 0
        if sink is not None:
            sink.write(TRACE_HEADER + "\n")

    def _write(self, line: str) -> None:
        if self.sink is not None:
            self.sink.write(line)
            self.lines += 1

    def frame_event(self, t_ns: int, node: int, event: str, f: Frame) -> None:
        if self.full:
            self._write(f"{format_time(t_ns)},{node},{event},{trace_fields(f)}\n")

    def event(self, t_ns: int, node: int, event: str, f: Frame) -> None:
        """Always recorded (application and drop events)."""
        if self.sink is not None:
            self._write(f"{format_time(t_ns)},{node},{event},{trace_fields(f)}\n")

    def app_event(self, t_ns: int, node: int, event: str, uid: int, src, dst, size: int) -> None:
        if self.sink is not None:
            self._write(f"{format_time(t_ns)},{node},{event},app,{uid},{src},{dst},,,{size}\n")


NULL_TRACER = Tracer()
