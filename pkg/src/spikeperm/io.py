"""CSV input and output.

Every file written here starts with one ``#meta`` line holding a JSON
object (configuration, library version, timestamp). Readers skip lines that
start with ``#``. The timestamp is the only field that changes between two
runs with the same configuration.
"""

import csv
import datetime
import io
import json

import numpy as np

from .core import Sample

META_PREFIX = "#meta "


def _version():
    from . import __version__
    return __version__


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def meta_line(config, timestamp=None):
    """Render the ``#meta`` header for ``config`` (any JSON-able mapping)."""
    if timestamp is None:
        timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    payload = {"version": _version(), "config": _jsonable(config), "timestamp": timestamp}
    return META_PREFIX + json.dumps(payload, sort_keys=True)


def parse_meta(line):
    if not line.startswith(META_PREFIX):
        return None
    return json.loads(line[len(META_PREFIX):])


def read_meta(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            meta = parse_meta(line.rstrip("\n"))
            if meta is not None:
                return meta
    return None


def strip_timestamp(text):
    """Drop the timestamp field from any ``#meta`` lines of ``text``."""
    out = []
    for line in text.splitlines():
        meta = parse_meta(line)
        if meta is not None:
            meta.pop("timestamp", None)
            line = META_PREFIX + json.dumps(meta, sort_keys=True)
        out.append(line)
    return "\n".join(out)


def format_float(x):
    """Shortest round-trip representation, so outputs are byte-stable."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_table(path_or_fh, header, rows, config):
    """Write ``rows`` under ``header`` with a leading ``#meta`` line.

    ``path_or_fh`` may be a path, an open text handle, or ``None`` to get
    the text back.
    """
    buf = io.StringIO()
    buf.write(meta_line(config) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else format_float(v) for v in row])
    text = buf.getvalue()
    if path_or_fh is None:
        return text
    if hasattr(path_or_fh, "write"):
        path_or_fh.write(text)
    else:
        with open(path_or_fh, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def write_spike_csv(sample, path, config=None):
    """Write a sample in the ``trial,process,time`` format (trials from 1)."""
    cfg = {"n": sample.n, "T": sample.T}
    cfg.update(config or {})
    rows = []
    for i, tr in enumerate(sample.trials, start=1):
        rows.extend((i, 1, t) for t in tr.x1.times)
        rows.extend((i, 2, t) for t in tr.x2.times)
    return write_table(path, ["trial", "process", "time"], rows, cfg)


def read_spike_csv(path, T=None, n=None):
    """Read a ``trial,process,time`` CSV into a :class:`Sample`.

    ``T`` and ``n`` default to the values recorded in the ``#meta`` line;
    ``n`` otherwise falls back to the largest trial index, which loses
    trailing trials that have no spikes at all.
    """
    meta = read_meta(path)
    cfg = (meta or {}).get("config", {})
    if T is None:
        T = cfg.get("T")
    if T is None:
        raise ValueError("horizon T not given and not recorded in the file")
    if n is None:
        n = cfg.get("n")
    times = {}
    with open(path, encoding="utf-8") as fh:
        lines = (ln for ln in fh if not ln.startswith("#"))
        reader = csv.DictReader(lines)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["trial", "process", "time"]:
            raise ValueError("expected header trial,process,time")
        for rec in reader:
            trial, proc = int(rec["trial"]), int(rec["process"])
            if proc not in (1, 2):
                raise ValueError(f"process must be 1 or 2, got {proc}")
            if trial < 1:
                raise ValueError("trial indices start at 1")
            times.setdefault((trial, proc), []).append(float(rec["time"]))
    top = max((k[0] for k in times), default=0)
    n = top if n is None else int(n)
    if top > n:
        raise ValueError(f"trial index {top} exceeds n={n}")
    x1s = [times.get((i, 1), []) for i in range(1, n + 1)]
    x2s = [times.get((i, 2), []) for i in range(1, n + 1)]
    return Sample.from_arrays(x1s, x2s, float(T))
