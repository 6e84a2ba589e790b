"""Newline-delimited event log with a stable field order.

Each line is ``{"seq", "at_ms", "kind", ["request_id"], ["version"], "detail"}``;
``at_ms`` carries exact microsecond resolution.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional

from ..metrics import IntegrityError


class EventLog:
    def __init__(self):
        self.records: list[dict] = []

    def append(self, at_us: int, kind: str, request_id: Optional[str] = None,
               version: Optional[str] = None, **detail) -> dict:
        rec = {"seq": len(self.records), "at_ms": at_us / 1000, "kind": kind}
        if request_id is not None:
            rec["request_id"] = request_id
        if version is not None:
            rec["version"] = version
        rec["detail"] = detail
        self.records.append(rec)
        return rec

    def __len__(self) -> int:
        return len(self.records)

    def lines(self) -> Iterable[str]:
        for rec in self.records:
            yield encode(rec)

    def dumps(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.lines():
                fh.write(line + "\n")


def encode(rec: dict) -> str:
    head = {k: rec[k] for k in ("seq", "at_ms", "kind", "request_id", "version") if k in rec}
    head["detail"] = dict(sorted(rec["detail"].items()))
    return json.dumps(head, separators=(",", ":"))


def parse_lines(lines: Iterable[str]) -> list[dict]:
    """Parse log lines, checking sequence continuity and the end-of-run marker."""
    records: list[dict] = []
    last = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            raise IntegrityError(f"line {lineno}: unparseable record", last) from None
        if not isinstance(rec, dict) or {"seq", "at_ms", "kind", "detail"} - rec.keys():
            raise IntegrityError(f"line {lineno}: record missing fields", last)
        expected = 0 if last is None else last + 1
        if rec["seq"] != expected:
            raise IntegrityError(f"line {lineno}: expected seq {expected}, found {rec['seq']}", last)
        records.append(rec)
        last = rec["seq"]
    if not records or records[-1]["kind"] != "RunEnd":
        raise IntegrityError("log truncated: no RunEnd record", last)
    end = records[-1]["detail"]
    arrivals = sum(1 for r in records if r["kind"] == "Arrival")
    done = sum(1 for r in records if r["kind"] == "RequestDone")
    if end.get("arrivals") != arrivals or end.get("terminal") != done or arrivals != done:
        raise IntegrityError(
            f"log inconsistent: {arrivals} arrivals, {done} terminal records, RunEnd says {end}", last
        )
    return records


def read_log(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return parse_lines(fh)
