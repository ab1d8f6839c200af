"""
Run configuration and the on-disk form of every command output.

CSV files start with one provenance comment line and use '%.17g' floats, JSON files are written with sorted keys and
two-space indentation, so reading a file back and writing it again reproduces it byte for byte.
"""

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from app_config import TOOL_NAME, VERSION
from characterize.traces import count_comment_lines
from optics.errors import EnmoError, ParameterFileError
from optics.params import Band, Variant

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "both")
FLOAT_FORMAT = "%.17g"


def read_json(path):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ParameterFileError(path, "file not found")
    except json.JSONDecodeError as e:
        raise ParameterFileError(path, "line {} column {}: {}".format(e.lineno, e.colno, e.msg))
    except UnicodeDecodeError as e:
        raise ParameterFileError(path, "not UTF-8 text (byte {})".format(e.start))
    except OSError as e:
        raise ParameterFileError(path, e.strerror or str(e))


def plain(value):
    """numpy scalars and arrays to Python types; non-finite floats become null"""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, Variant):
        return value.value
    return value


def dump_json(data):
    return json.dumps(plain(data), sort_keys=True, indent=2) + "\n"


def write_json(data, path):
    with open(path, "w", newline="\n") as f:
        f.write(dump_json(data))
    logger.info("Wrote %s", path)
    return path


def config_hash(data):
    return hashlib.sha256(json.dumps(plain(data), sort_keys=True).encode("utf-8")).hexdigest()


class Provenance:

    def __init__(self, config_hash, variant, tool=TOOL_NAME, version=VERSION):
        self.tool = tool
        self.version = version
        self.config_hash = config_hash
        self.variant = Variant.parse(variant).value if variant is not None else "none"

    @property
    def header(self):
        return "# tool={} version={} config_hash={} variant={}".format(self.tool, self.version, self.config_hash,
                                                                      self.variant)

    def to_dict(self):
        return {"tool": self.tool, "version": self.version, "config_hash": self.config_hash, "variant": self.variant}

    @classmethod
    def parse(cls, line):
        fields = dict(item.split("=", 1) for item in line.lstrip("#").split())
        return cls(fields["config_hash"], None if fields["variant"] == "none" else fields["variant"], fields["tool"],
                   fields["version"])

    def __eq__(self, other):
        return isinstance(other, Provenance) and self.to_dict() == other.to_dict()


def write_csv(frame, path, provenance):
    with open(path, "w", newline="\n") as f:
        f.write(provenance.header + "\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %s", path)
    return path


def read_csv(path):
    """Return (provenance or None, frame)."""
    skipped = count_comment_lines(path)
    provenance = None
    if skipped:
        with open(path) as f:
            first = f.readline().strip()
        try:
            provenance = Provenance.parse(first)
        except (KeyError, ValueError):
            provenance = None
    return provenance, pd.read_csv(path, skiprows=skipped, float_precision="round_trip")


def write_table(frame, out_dir, stem, fmt, provenance):
    """Write a table as CSV, as JSON records, or both. Returns the written paths."""
    paths = []
    if fmt in ("csv", "both"):
        paths.append(write_csv(frame, os.path.join(out_dir, stem + ".csv"), provenance))
    if fmt in ("json", "both"):
        records = {"provenance": provenance.to_dict(), "columns": list(frame.columns),
                   "rows": frame.to_dict(orient="records")}
        paths.append(write_json(records, os.path.join(out_dir, stem + ".json")))
    return paths


def resolve(base_dir, value):
    """Config entries are either inline dicts or paths relative to the config file."""
    if isinstance(value, str):
        return read_json(value if os.path.isabs(value) else os.path.join(base_dir, value))
    return value


@dataclass
class RunConfig:
    """
    Everything a command reads from --config. Command-line flags override the matching keys.

    Example:
        {"params": "table_i.json", "band": {"f_min_hz": 1e4, "f_max_hz": 2e6, "n_points": 400},
         "variant": "as-printed", "psi_rad": [0.3, 1.87], "eta": 0.53, "detuning_hz": -710e3}
    """

    params: dict = None
    oms: dict = None
    band: Band = None
    variant: str = None
    out: str = "out"
    seed: int = 0
    format: str = "csv"
    psi_rad: list = field(default_factory=lambda: [0.0])
    eta: float = 1.0
    detuning_hz: float = None
    extra: dict = field(default_factory=dict)
    path: str = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ParameterFileError(self.path or "config", "format must be one of {}".format(list(FORMATS)))
        if self.variant is not None:
            self.variant = Variant.parse(self.variant).value

    KNOWN = ("params", "oms", "band", "variant", "out", "seed", "format", "psi_rad", "eta", "detuning_hz")

    @classmethod
    def from_dict(cls, data, path=None):
        base_dir = os.path.dirname(os.path.abspath(path)) if path else os.getcwd()
        try:
            params = resolve(base_dir, data.get("params"))
            oms = resolve(base_dir, data.get("oms"))
            if oms is None and isinstance(params, dict) and "oms" in params:
                oms = params["oms"]
            band = Band.from_dict(data["band"]) if "band" in data else None
            return cls(
                params=params,
                oms=oms,
                band=band,
                variant=data.get("variant"),
                out=data.get("out", "out"),
                seed=int(data.get("seed", 0)),
                format=data.get("format", "csv"),
                psi_rad=[float(p) for p in np.atleast_1d(data.get("psi_rad", [0.0]))],
                eta=float(data.get("eta", 1.0)),
                detuning_hz=None if data.get("detuning_hz") is None else float(data["detuning_hz"]),
                extra={k: v for k, v in data.items() if k not in cls.KNOWN},
                path=path,
            )
        except EnmoError as e:
            if isinstance(e, ParameterFileError):
                raise
            raise ParameterFileError(path or "config", str(e))
        except (KeyError, TypeError, ValueError) as e:
            raise ParameterFileError(path or "config", "bad or missing entry: {}".format(e))

    @classmethod
    def load(cls, path):
        if path is None:
            return cls()
        data = read_json(path)
        if not isinstance(data, dict):
            raise ParameterFileError(path, "expected a JSON object")
        return cls.from_dict(data, path)

    def override(self, out=None, seed=None, variant=None, fmt=None, detuning_hz=None):
        if out is not None:
            self.out = out
        if seed is not None:
            self.seed = seed
        if variant is not None:
            self.variant = Variant.parse(variant).value
        if fmt is not None:
            if fmt not in FORMATS:
                raise ParameterFileError("--format", "must be one of {}".format(list(FORMATS)))
            self.format = fmt
        if detuning_hz is not None:
            self.detuning_hz = float(detuning_hz)
        return self

    def require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise ParameterFileError(self.path or "config", "missing '{}'".format(name))

    def to_dict(self):
        return {
            "params": self.params,
            "oms": self.oms,
            "band": self.band.to_dict() if self.band else None,
            "variant": self.variant,
            "seed": self.seed,
            "format": self.format,
            "psi_rad": self.psi_rad,
            "eta": self.eta,
            "detuning_hz": self.detuning_hz,
            "extra": self.extra,
        }

    def provenance(self, **inputs):
        """Provenance of a run: the hash covers the resolved config plus any other inputs of the command."""
        return Provenance(config_hash(dict(self.to_dict(), **inputs)), self.variant)

    def out_dir(self):
        os.makedirs(self.out, exist_ok=True)
        return self.out
