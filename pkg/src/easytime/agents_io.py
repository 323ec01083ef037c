"""Event sources and persistence.

Manual agents and replay logs are files of event lines; automatic agents
push the same lines over TCP.  One line is ``mp,rfid,timestamp_ms[,payload]``.
Rosters and results are CSV.  The listener may serve many connections but
always hands events to its sink through one ordered queue.
"""

from __future__ import annotations

import csv
import logging
import queue
import socket
import threading
from pathlib import Path

from .runtime import (
    GENDERS,
    DuplicateRfidError,
    DuplicateRunnerIdError,
    Event,
    ResultTable,
    Runner,
)

logger = logging.getLogger(__name__)

ROSTER_HEADER = ["id", "rfid", "last_name", "first_name", "gender", "category"]


class MalformedRowError(Exception):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class MalformedEventError(Exception):
    def __init__(self, reason: str, line: int | None = None):
        at = f"line {line}: " if line is not None else ""
        super().__init__(f"{at}{reason}")
        self.line = line
        self.reason = reason


def load_runners(path: str | Path) -> list[Runner]:
    """Read and validate a roster CSV (exact header, unique ids and rfids)."""
    with open(path, newline="", encoding="ascii") as handle:
        reader = csv.reader(handle)
        rows = list(reader)
    if not rows or rows[0] != ROSTER_HEADER:
        raise MalformedRowError(1, f"header must be {','.join(ROSTER_HEADER)}")

    runners: list[Runner] = []
    seen_rfids: set[str] = set()
    seen_ids: set[int] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(ROSTER_HEADER):
            raise MalformedRowError(lineno, f"expected {len(ROSTER_HEADER)} fields, got {len(row)}")
        raw_id, rfid, last_name, first_name, gender, raw_category = row
        try:
            runner_id = int(raw_id)
        except ValueError:
            raise MalformedRowError(lineno, f"id {raw_id!r} is not an integer") from None
        if not rfid:
            raise MalformedRowError(lineno, "empty rfid")
        if gender not in GENDERS:
            raise MalformedRowError(lineno, f"gender must be one of {'/'.join(GENDERS)}, got {gender!r}")
        try:
            category = int(raw_category)
        except ValueError:
            raise MalformedRowError(lineno, f"category {raw_category!r} is not an integer") from None
        if category < 0:
            raise MalformedRowError(lineno, f"category must be >= 0, got {category}")
        if rfid in seen_rfids:
            raise DuplicateRfidError(f"line {lineno}: rfid {rfid} appears twice")
        if runner_id in seen_ids:
            raise DuplicateRunnerIdError(f"line {lineno}: runner id {runner_id} appears twice")
        seen_rfids.add(rfid)
        seen_ids.add(runner_id)
        runners.append(Runner(runner_id, rfid, last_name, first_name, gender, category))
    return runners


def parse_event_line(line: str) -> Event:
    """Parse one ``mp,rfid,timestamp_ms[,payload]`` line."""
    fields = [f.strip() for f in line.strip().split(",")]
    if len(fields) == 1:
        raise MalformedEventError("missing rfid")
    if len(fields) == 2:
        raise MalformedEventError("missing timestamp")
    if len(fields) > 4:
        raise MalformedEventError(f"too many fields ({len(fields)})")
    raw_mp, rfid, raw_ts = fields[0], fields[1], fields[2]
    try:
        mp_id = int(raw_mp)
    except ValueError:
        raise MalformedEventError(f"mp {raw_mp!r} is not an integer") from None
    if not rfid:
        raise MalformedEventError("empty rfid")
    try:
        timestamp_ms = int(raw_ts)
    except ValueError:
        raise MalformedEventError(f"timestamp {raw_ts!r} is not an integer") from None
    if timestamp_ms < 0:
        raise MalformedEventError(f"timestamp must be >= 0, got {timestamp_ms}")
    payload: int | None = None
    if len(fields) == 4:
        try:
            payload = int(fields[3])
        except ValueError:
            raise MalformedEventError(f"payload {fields[3]!r} is not an integer") from None
        if payload < 0:
            raise MalformedEventError(f"payload must be >= 0, got {payload}")
    return Event(mp_id, rfid, timestamp_ms, payload)


def format_event(event: Event) -> str:
    line = f"{event.mp_id},{event.rfid},{event.timestamp_ms}"
    if event.payload is not None:
        line += f",{event.payload}"
    return line


def read_event_log(path: str | Path) -> list[Event]:
    """Events from a file, sorted by timestamp with stable ties.

    Blank lines and lines starting with ``#`` are skipped.
    """
    events: list[Event] = []
    with open(path, encoding="ascii") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                events.append(parse_event_line(stripped))
            except MalformedEventError as exc:
                raise MalformedEventError(exc.reason, line=lineno) from None
    events.sort(key=lambda e: e.timestamp_ms)  # sort() is stable
    return events


def write_event_log(events, path: str | Path) -> None:
    with open(path, "w", encoding="ascii") as handle:
        for event in events:
            handle.write(format_event(event) + "\n")


class AutoAgentListener:
    """TCP line-protocol server standing in for automatic measuring devices.

    Every well-formed line is acknowledged with ``OK`` and queued; malformed
    lines get ``ERR <reason>`` and are skipped without closing the
    connection.  A single dispatcher thread drains the queue into the sink,
    so the sink sees events serialized in arrival order no matter how many
    clients are connected.
    """

    def __init__(self, port: int, sink):
        self._sink = sink
        self._queue: queue.Queue = queue.Queue()
        self._stopping = threading.Event()
        self._conn_threads: list[threading.Thread] = []
        self._server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._server.bind(("0.0.0.0", port))
        except OSError:
            self._server.close()
            raise
        self._server.listen()
        self._server.settimeout(0.2)
        self.port = self._server.getsockname()[1]
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._dispatch_thread = threading.Thread(target=self._dispatch_loop, daemon=True)
        self._accept_thread.start()
        self._dispatch_thread.start()
        logger.info("listening on port %d", self.port)

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                conn, addr = self._server.accept()
            except TimeoutError:
                continue
            except OSError:
                break
            thread = threading.Thread(target=self._serve, args=(conn, addr), daemon=True)
            self._conn_threads.append(thread)
            thread.start()

    def _serve(self, conn: socket.socket, addr) -> None:
        logger.debug("connection from %s", addr)
        # short receive timeout so stop() is not held up by idle clients
        conn.settimeout(0.2)
        buffer = b""
        with conn:
            while not self._stopping.is_set():
                try:
                    chunk = conn.recv(4096)
                except TimeoutError:
                    continue
                except OSError:
                    break
                if not chunk:
                    break
                buffer += chunk
                while b"\n" in buffer:
                    raw, buffer = buffer.split(b"\n", 1)
                    line = raw.decode("ascii", errors="replace").strip()
                    if not line:
                        continue
                    try:
                        event = parse_event_line(line)
                    except MalformedEventError as exc:
                        reply = f"ERR {exc.reason}\n"
                    else:
                        self._queue.put(event)
                        reply = "OK\n"
                    try:
                        conn.sendall(reply.encode("ascii"))
                    except OSError:
                        return

    def _dispatch_loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                break
            try:
                self._sink(item)
            except Exception:
                logger.exception("event sink failed")

    def stop(self) -> None:
        """Stop accepting, drain queued events into the sink, then return."""
        self._stopping.set()
        try:
            self._server.close()
        except OSError:
            pass
        for thread in self._conn_threads:
            thread.join(timeout=2.0)
        self._queue.put(None)
        self._dispatch_thread.join(timeout=5.0)

    def __enter__(self) -> "AutoAgentListener":
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()


def listen_auto(port: int, sink) -> AutoAgentListener:
    """Start the listener; raises OSError if the port cannot be bound."""
    return AutoAgentListener(port, sink)


def write_results(tables: list[ResultTable], out_dir: str | Path) -> list[Path]:
    """One CSV per table under ``out_dir``; undefined values become empty cells."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for table in tables:
        name = f"results_{table.label}.csv" if table.label else "results.csv"
        path = out / name
        with open(path, "w", newline="", encoding="ascii") as handle:
            writer = csv.writer(handle)
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow(["" if cell is None else cell for cell in row])
        written.append(path)
    return written
