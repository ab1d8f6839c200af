"""
Measured (or synthetic) variance traces and their on-disk form.

Trace values are shot-noise normalized with vacuum = 1, which is how spectrum-analyzer data is usually plotted. The
model works with vacuum = 1/2, so the fit compares trace values against twice the model variance.

A trace CSV has a header of either ``frequency_hz,variance_linear`` or ``frequency_hz,variance_db_rel_shot`` (extra
columns are ignored, linear wins when both are present). Lines starting with '#' before the header are provenance
comments. A manifest JSON lists the trace files:

    {"traces": [{"file": "trace_0.csv", "detuning_hz": -710000.0, "angle_label": "A", "metadata": {...}}, ...]}
"""

import json
import logging
import os
from collections import namedtuple, OrderedDict

import numpy as np
import pandas as pd

from optics.errors import InvalidParameter, TraceFormatError

logger = logging.getLogger(__name__)

LINEAR_COLUMN = "variance_linear"
DB_COLUMN = "variance_db_rel_shot"

PowerSpectrum = namedtuple("PowerSpectrum", ["frequencies_hz", "values", "unit"])


class Trace:

    def __init__(self, frequencies_hz, values, angle_label="", detuning_hz=0.0, metadata=None, name=""):
        self.frequencies_hz = np.asarray(frequencies_hz, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.angle_label = str(angle_label)
        self.detuning_hz = float(detuning_hz)
        self.metadata = dict(metadata or {})
        self.name = name
        if self.frequencies_hz.ndim != 1 or self.frequencies_hz.shape != self.values.shape:
            raise InvalidParameter("values", self.values.shape, "must match the frequency grid")
        if np.any(np.diff(self.frequencies_hz) <= 0):
            raise InvalidParameter("frequencies_hz", name, "the grid must be strictly increasing")
        if np.any(~np.isfinite(self.values)) or np.any(self.values <= 0):
            raise InvalidParameter("values", name, "normalized variances must be finite and positive")

    @property
    def db(self):
        return 10 * np.log10(self.values)

    def __len__(self):
        return len(self.values)

    def to_frame(self):
        return pd.DataFrame({"frequency_hz": self.frequencies_hz, LINEAR_COLUMN: self.values})


class TraceSet:
    """Traces grouped by ancilla detuning; traces in one group share delta_a."""

    def __init__(self, traces):
        self.traces = list(traces)
        if not self.traces:
            raise InvalidParameter("traces", self.traces, "a trace set needs at least one trace")

    @property
    def groups(self):
        """Ordered mapping detuning_hz -> list of trace indices, in order of first appearance."""
        groups = OrderedDict()
        for index, trace in enumerate(self.traces):
            groups.setdefault(trace.detuning_hz, []).append(index)
        return groups

    def group_of(self, index):
        return list(self.groups).index(self.traces[index].detuning_hz)

    def __len__(self):
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def __getitem__(self, index):
        return self.traces[index]

    def to_frame(self):
        """Long format with one row per (trace, frequency)"""
        frames = []
        for index, trace in enumerate(self.traces):
            frame = trace.to_frame()
            frame.insert(0, "trace", index)
            frame.insert(1, "detuning_hz", trace.detuning_hz)
            frame.insert(2, "angle_label", trace.angle_label)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


def to_linear_power(spectrum):
    if spectrum.unit.lower() in ("dbm", "db"):
        return 10 ** (np.asarray(spectrum.values, dtype=float) / 10)
    if spectrum.unit.lower() == "linear":
        return np.asarray(spectrum.values, dtype=float)
    raise InvalidParameter("unit", spectrum.unit, "expected 'linear', 'dB' or 'dBm'")


def shot_noise_normalize(raw, shot, dark, angle_label="", detuning_hz=0.0, metadata=None, name=""):
    """
    Turn three analyzer sweeps on the same grid into a shot-noise normalized trace, (raw - dark) / (shot - dark).
    The subtraction happens in linear power.
    """
    frequencies_hz = np.asarray(raw.frequencies_hz, dtype=float)
    for label, spectrum in (("shot", shot), ("dark", dark)):
        if not np.array_equal(frequencies_hz, np.asarray(spectrum.frequencies_hz, dtype=float)):
            raise InvalidParameter(label, name, "must share the frequency grid of the raw sweep")
    raw_power, shot_power, dark_power = (to_linear_power(s) for s in (raw, shot, dark))
    clearance = shot_power - dark_power
    if np.any(clearance <= 0):
        at = frequencies_hz[np.argmax(clearance <= 0)]
        raise InvalidParameter("shot", at, "shot noise must exceed dark noise, but doesn't at {:g} Hz".format(at))
    return Trace(frequencies_hz, (raw_power - dark_power) / clearance, angle_label, detuning_hz, metadata, name)


def count_comment_lines(path):
    count = 0
    try:
        with open(path, encoding="utf-8") as f:
            for line in f:
                if not line.startswith("#"):
                    break
                count += 1
    except UnicodeDecodeError as e:
        raise TraceFormatError(path, "not UTF-8 text (byte {})".format(e.start))
    except OSError as e:
        raise TraceFormatError(path, e.strerror or str(e))
    return count


def read_trace_csv(path, angle_label="", detuning_hz=0.0, metadata=None):
    """Read one trace file, detecting linear or dB values from the header."""
    if not os.path.exists(path):
        raise TraceFormatError(path, "file not found")
    if os.path.isdir(path):
        raise TraceFormatError(path, "is a directory, not a trace file")
    skipped = count_comment_lines(path)
    try:
        frame = pd.read_csv(path, skiprows=skipped, float_precision="round_trip", encoding="utf-8")
    except pd.errors.ParserError as e:
        raise TraceFormatError(path, str(e))
    except UnicodeDecodeError as e:
        raise TraceFormatError(path, "not UTF-8 text (byte {})".format(e.start))
    except pd.errors.EmptyDataError:
        raise TraceFormatError(path, "no header or data", skipped + 1)

    if "frequency_hz" not in frame.columns:
        raise TraceFormatError(path, "header must start with frequency_hz", skipped + 1)
    if LINEAR_COLUMN in frame.columns:
        column = LINEAR_COLUMN
    elif DB_COLUMN in frame.columns:
        column = DB_COLUMN
    else:
        raise TraceFormatError(path, "expected a {} or {} column".format(LINEAR_COLUMN, DB_COLUMN), skipped + 1)
    if frame.empty:
        raise TraceFormatError(path, "no data rows", skipped + 2)

    numbers = frame[["frequency_hz", column]].apply(pd.to_numeric, errors="coerce")
    bad_rows = np.flatnonzero(numbers.isna().any(axis=1).to_numpy())
    if len(bad_rows):
        # +1 for the header, +1 because file lines count from 1
        raise TraceFormatError(path, "missing or non-numeric value", skipped + bad_rows[0] + 2)

    values = numbers[column].to_numpy()
    if column == DB_COLUMN:
        values = 10 ** (values / 10)
    name = os.path.splitext(os.path.basename(path))[0]
    try:
        return Trace(numbers["frequency_hz"].to_numpy(), values, angle_label, detuning_hz, metadata, name)
    except InvalidParameter as e:
        raise TraceFormatError(path, str(e))


def read_manifest(manifest_path):
    """Load every trace listed in a manifest; file paths are relative to the manifest."""
    try:
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
    except FileNotFoundError:
        raise TraceFormatError(manifest_path, "file not found")
    except json.JSONDecodeError as e:
        raise TraceFormatError(manifest_path, e.msg, e.lineno)
    except UnicodeDecodeError as e:
        raise TraceFormatError(manifest_path, "not UTF-8 text (byte {})".format(e.start))
    except OSError as e:
        raise TraceFormatError(manifest_path, e.strerror or str(e))

    base = os.path.dirname(os.path.abspath(manifest_path))
    traces = []
    for entry in manifest.get("traces", []):
        if "file" not in entry:
            raise TraceFormatError(manifest_path, "every trace entry needs a 'file'")
        traces.append(read_trace_csv(
            os.path.join(base, entry["file"]),
            angle_label=entry.get("angle_label", ""),
            detuning_hz=entry.get("detuning_hz", 0.0),
            metadata=entry.get("metadata"),
        ))
    if not traces:
        raise TraceFormatError(manifest_path, "the manifest lists no traces")
    logger.info("Loaded %d trace(s) in %d detuning group(s) from %s", len(traces), len(TraceSet(traces).groups),
                manifest_path)
    return TraceSet(traces)


def manifest_entry(trace, filename):
    return {
        "file": filename,
        "detuning_hz": trace.detuning_hz,
        "angle_label": trace.angle_label,
        "metadata": trace.metadata,
    }
