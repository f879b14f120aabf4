"""Event-stream files and synthetic event-sensor data.

File layout (CSV)::

    # n_inputs=64
    neuron_id,time_ms,label
    @sample,duration=300,label=2
    3,0,2
    17,4,2
    @sample,duration=300,label=0
    ...

Comment lines (``#``) before the header may declare ``n_inputs``.  The
``label`` column is optional.  ``@sample`` records start a new sample and
declare its duration (ms) and, optionally, its label; times restart at 0 for
every sample.  A file without ``@sample`` records holds a single sample
whose duration is the declared ``duration`` or the last event time + 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lif import SpikeRaster

HEADER = ("neuron_id", "time_ms")


class EventFormatError(ValueError):
    """Malformed event-stream file; the message names the line."""


@dataclass
class EventSample:
    raster: SpikeRaster
    label: int | None = None


@dataclass
class EventStream:
    n_inputs: int
    samples: list[EventSample] = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([-1 if s.label is None else s.label for s in self.samples])

    def concatenate(self, gap_ms: int = 0) -> SpikeRaster:
        """Back-to-back raster of all samples with ``gap_ms`` silent steps between them."""
        parts = []
        for k, s in enumerate(self.samples):
            if k and gap_ms:
                parts.append(np.zeros((gap_ms, self.n_inputs), dtype=bool))
            parts.append(s.raster.dense)
        if not parts:
            return SpikeRaster.empty(self.n_inputs, 0)
        return SpikeRaster(np.concatenate(parts, axis=0))

    def padded(self, duration: int | None = None) -> np.ndarray:
        """``(B, T, n_inputs)`` array, zero-padded (or truncated) to ``duration``."""
        if duration is None:
            duration = max((s.raster.duration for s in self.samples), default=0)
        out = np.zeros((len(self.samples), duration, self.n_inputs), dtype=bool)
        for k, s in enumerate(self.samples):
            keep = min(duration, s.raster.duration)
            out[k, :keep] = s.raster.dense[:keep]
        return out


def _kv(parts, path, lineno) -> dict:
    out = {}
    for item in parts:
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise EventFormatError(f"{path}:{lineno}: expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _int(text, what, path, lineno) -> int:
    try:
        return int(text)
    except ValueError:
        raise EventFormatError(f"{path}:{lineno}: {what} is not an integer: {text!r}") from None


def load_events(path, n_inputs: int | None = None) -> EventStream:
    """Strictly parse an event-stream file.

    Raises:
        EventFormatError: on any malformed line, with the line number.
    """
    meta = {}
    header = None
    samples = []
    current = None  # dict(duration, label, events)

    def close(lineno):
        if current is None:
            return
        events = current["events"]
        duration = current["duration"]
        if duration is None:
            duration = int(meta.get("duration", 1 + max((t for _, t in events), default=-1)))
        if duration <= 0 and events:
            raise EventFormatError(f"{path}:{lineno}: sample has events but no duration")
        width = n_inputs
        dense = np.zeros((max(duration, 0), width), dtype=bool)
        for (nid, t) in events:
            if t >= duration:
                raise EventFormatError(f"{path}:{current['lines'][(nid, t)]}: "
                                       f"time {t} beyond sample duration {duration}")
            dense[t, nid] = True
        samples.append(EventSample(SpikeRaster(dense), current["label"]))

    with open(path) as fh:
        lineno = 0
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if header is None:
                if line.startswith("#"):
                    meta.update(_kv(line[1:].replace(",", " ").split(), path, lineno))
                    continue
                cols = [c.strip() for c in line.split(",")]
                if tuple(cols[:2]) != HEADER or cols[2:] not in ([], ["label"]):
                    raise EventFormatError(
                        f"{path}:{lineno}: bad header {line!r}; expected 'neuron_id,time_ms[,label]'")
                header = cols
                if n_inputs is None:
                    if "n_inputs" not in meta:
                        raise EventFormatError(f"{path}: input width undeclared; add '# n_inputs=N'")
                    n_inputs = _int(meta["n_inputs"], "n_inputs", path, lineno)
                continue
            if line.startswith("#"):
                continue
            if line.startswith("@sample"):
                close(lineno)
                kv = _kv(line.split(",")[1:], path, lineno)
                duration = _int(kv["duration"], "duration", path, lineno) if "duration" in kv else None
                label = _int(kv["label"], "label", path, lineno) if "label" in kv else None
                current = {"duration": duration, "label": label, "events": [], "lines": {}, "last": -1}
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != len(header):
                raise EventFormatError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
            nid = _int(fields[0], "neuron_id", path, lineno)
            try:
                t = int(np.floor(float(fields[1])))
            except ValueError:
                raise EventFormatError(f"{path}:{lineno}: time_ms is not a number: {fields[1]!r}") from None
            if not 0 <= nid < n_inputs:
                raise EventFormatError(f"{path}:{lineno}: neuron_id {nid} outside [0, {n_inputs})")
            if t < 0:
                raise EventFormatError(f"{path}:{lineno}: negative time {fields[1]}")
            if current is None:
                current = {"duration": None, "label": None, "events": [], "lines": {}, "last": -1}
            if current["duration"] is not None and t >= current["duration"]:
                raise EventFormatError(f"{path}:{lineno}: time {fields[1]} beyond sample duration "
                                       f"{current['duration']}")
            if t < current["last"]:
                raise EventFormatError(f"{path}:{lineno}: time {fields[1]} decreases within a sample")
            current["last"] = t
            if len(fields) == 3:
                label = _int(fields[2], "label", path, lineno)
                if current["label"] is None:
                    current["label"] = label
                elif current["label"] != label:
                    raise EventFormatError(f"{path}:{lineno}: label {label} differs from sample label "
                                           f"{current['label']}")
            current["events"].append((nid, t))
            current["lines"].setdefault((nid, t), lineno)
    if header is None:
        raise EventFormatError(f"{path}: missing header line")
    close(lineno)
    return EventStream(int(n_inputs), samples)


def save_events(path, stream: EventStream) -> None:
    with_labels = any(s.label is not None for s in stream.samples)
    with open(path, "w") as fh:
        fh.write(f"# n_inputs={stream.n_inputs}\n")
        fh.write(",".join(HEADER + (("label",) if with_labels else ())) + "\n")
        for s in stream.samples:
            rec = f"@sample,duration={s.raster.duration}"
            if s.label is not None:
                rec += f",label={s.label}"
            fh.write(rec + "\n")
            suffix = f",{s.label}" if with_labels else ""
            if with_labels and s.label is None:
                raise ValueError("cannot mix labelled and unlabelled samples in one file")
            for nid, t in s.raster.events:
                fh.write(f"{nid},{t}{suffix}\n")


def synthetic_task(n_classes: int = 4, n_per_class: int = 40, n_inputs: int = 64,
                   duration: int = 300, seed: int = 0, base_rate: float = 5.0,
                   peak_rate: float = 60.0, active_fraction: float = 0.25,
                   segment_ms: int = 50, jitter_ms: int = 10) -> EventStream:
    """Classes of spatiotemporal Poisson patterns, shuffled.

    Each class has a template that switches each (channel, ``segment_ms``
    segment) between ``base_rate`` and ``peak_rate``.  A sample is a Poisson
    realization of its class template, shifted in time by a uniform jitter of
    up to ``jitter_ms`` either way.
    """
    rng = np.random.default_rng(seed)
    n_seg = int(np.ceil(duration / segment_ms))
    templates = np.where(rng.random((n_classes, n_seg, n_inputs)) < active_fraction,
                         peak_rate, base_rate)
    seg_of_t = np.arange(duration) // segment_ms
    labels = rng.permutation(np.repeat(np.arange(n_classes), n_per_class))
    samples = []
    for label in labels.tolist():
        shift = int(rng.integers(-jitter_ms, jitter_ms + 1)) if jitter_ms else 0
        seg = np.clip((np.arange(duration) - shift) // segment_ms, 0, n_seg - 1) if shift else seg_of_t
        rate = templates[label][seg]  # (duration, n_inputs)
        dense = rng.random((duration, n_inputs)) < np.minimum(1.0, rate / 1000.0)
        samples.append(EventSample(SpikeRaster(dense), int(label)))
    return EventStream(n_inputs, samples)


def save_csv(path, header, rows, fmt=str) -> None:
    """Write a header and rows; ``fmt`` renders each cell."""
    try:
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(x) for x in row) + "\n")
    except OSError as err:
        raise OSError(f"cannot write {path}: {err}") from err
