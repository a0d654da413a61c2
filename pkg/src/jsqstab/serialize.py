"""CSV and JSON writers for streams, paths, comparisons and trajectories.

Floats are written with ``repr`` so that files round-trip exactly and are
byte-identical across runs with the same seed.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .network_sim import NetworkTrajectory, measure_internal_rates
from .point_process import EventStream
from .queue_core import CoupledComparison, QueuePath


def _f(x) -> str:
    return repr(float(x))


def _write(path, text: str) -> None:
    Path(path).write_text(text)


def stream_to_csv(stream: EventStream) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if stream.marks is None:
        w.writerow(["epoch"])
        w.writerows([_f(t)] for t in stream.epochs)
    else:
        w.writerow(["epoch", "mark"])
        w.writerows([_f(t), int(k)] for t, k in zip(stream.epochs, stream.marks))
    return buf.getvalue()


def stream_from_csv(text: str, origin: float = 0.0) -> EventStream:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] not in (["epoch"], ["epoch", "mark"]):
        raise ParameterError("stream CSV needs an 'epoch[,mark]' header")
    body = rows[1:]
    epochs = np.array([float(r[0]) for r in body])
    marks = np.array([int(r[1]) for r in body]) if len(rows[0]) == 2 else None
    return EventStream(epochs, marks, origin)


def path_to_csv(path: QueuePath) -> str:
    lines = ["time,level"]
    lines += [f"{_f(t)},{int(q)}" for t, q in zip(path.times, path.levels)]
    return "\n".join(lines) + "\n"


def path_from_csv(text: str) -> QueuePath:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["time", "level"]:
        raise ParameterError("path CSV needs a 'time,level' header")
    return QueuePath([float(r[0]) for r in rows[1:]], [int(r[1]) for r in rows[1:]])


def comparison_to_csv(cmp: CoupledComparison) -> str:
    lines = ["time,q1,q2,q3"]
    lines += [
        f"{_f(t)},{int(a)},{int(b)},{int(c)}"
        for t, a, b, c in zip(cmp.epochs, cmp.q1, cmp.q2, cmp.q3)
    ]
    return "\n".join(lines) + "\n"


def trajectory_to_csv(traj: NetworkTrajectory) -> str:
    """One row per epoch at which any queue changes, levels of all queues."""
    m = traj.m
    epochs = np.unique(np.concatenate([p.times for p in traj.paths]))
    levels = np.column_stack([p.level_at(epochs) for p in traj.paths])
    buf = io.StringIO()
    buf.write(",".join(["time"] + [f"q_{j + 1}" for j in range(m)]) + "\n")
    for t, row in zip(epochs.tolist(), levels.tolist()):
        buf.write(repr(t) + "," + ",".join(map(str, row)) + "\n")
    return buf.getvalue()


def trajectory_summary(traj: NetworkTrajectory) -> dict:
    fixed, opp = measure_internal_rates(traj)
    return {
        "horizon": traj.horizon,
        "busy_fraction": [float(v) for v in traj.busy_fraction],
        "internal_rates": [[float(v) for v in row] for row in fixed],
        "internal_opportunistic_rates": [float(v) for v in opp],
        "routing_tally": {
            "to_queue": traj.routing_tally[:, : traj.m].tolist(),
            "to_shortest": traj.routing_tally[:, traj.m].tolist(),
            "leave": traj.routing_tally[:, traj.m + 1].tolist(),
        },
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_json(path, obj) -> None:
    _write(path, dumps(obj))


def write_text(path, text: str) -> None:
    _write(path, text)
