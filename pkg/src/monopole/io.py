"""File formats: volume files, run configuration and JSON output.

A volume file is one JSON header line

    {"nx": .., "ny": .., "nz": .., "origin": [..], "spacing": [..], "field": .., "units": ..}

followed by CSV rows ``ix,iy,iz,value`` in C order of ``(ix, iy, iz)``.
Complex or matrix-valued fields write ``re,im`` pairs for each component in
C order. The ``config`` field stores ``A_1, A_2, A_3, Phi`` (sixteen complex
numbers per row).
"""

import configparser
import json
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ValidationError
from .grid import GridSpec

HEADER_KEYS = ("nx", "ny", "nz", "origin", "spacing", "field", "units")
CONFIG_FIELD = "config"


def _fmt(v):
    return repr(float(v))


def write_volume(path, grid, values, field, units="dimensionless"):
    """Write ``values`` of shape ``grid.counts + component_shape``."""
    values = np.asarray(values)
    if values.shape[:3] != grid.counts:
        raise ValidationError(f"values of shape {values.shape} do not match grid {grid.counts}")
    nx, ny, nz = grid.counts
    header = {"nx": nx, "ny": ny, "nz": nz, "origin": list(grid.origin),
              "spacing": list(grid.spacing), "field": field, "units": units}
    flat = values.reshape(grid.size, -1)
    if np.iscomplexobj(flat):
        cols = np.empty((grid.size, 2 * flat.shape[1]))
        cols[:, 0::2] = flat.real
        cols[:, 1::2] = flat.imag
    else:
        cols = flat.astype(float)
    idx = np.indices(grid.counts).reshape(3, -1).T
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for (i, j, k), row in zip(idx, cols):
            fh.write(f"{i},{j},{k}," + ",".join(_fmt(v) for v in row) + "\n")


@dataclass(frozen=True)
class Volume:
    grid: GridSpec
    values: np.ndarray
    field: str
    units: str


def read_volume(path, complex_values=None):
    """Read a volume file; pairs are combined into complex numbers when the
    field is ``config`` or ``complex_values`` is true."""
    with open(path, encoding="ascii") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: volume header is not JSON") from exc
        missing = [key for key in HEADER_KEYS if key not in header]
        if missing:
            raise ValidationError(f"{path}: volume header lacks {missing}")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ValidationError(f"{path}: malformed volume rows ({exc})") from exc
    grid = GridSpec(header["origin"], header["spacing"], (header["nx"], header["ny"], header["nz"]))
    if data.shape[0] != grid.size:
        raise ValidationError(f"{path}: expected {grid.size} rows, found {data.shape[0]}")
    idx = data[:, :3].astype(int)
    order = np.ravel_multi_index(idx.T, grid.counts)
    cols = np.empty_like(data[:, 3:])
    cols[order] = data[:, 3:]
    field = header["field"]
    if complex_values is None:
        complex_values = field == CONFIG_FIELD
    if complex_values:
        vals = cols[:, 0::2] + 1j * cols[:, 1::2]
    else:
        vals = cols
    if field == CONFIG_FIELD:
        if vals.shape[1] != 16:
            raise ValidationError(f"{path}: config rows need 16 complex entries")
        vals = vals.reshape(grid.counts + (4, 2, 2))
    elif vals.shape[1] == 1:
        vals = vals.reshape(grid.counts)
    else:
        vals = vals.reshape(grid.counts + (vals.shape[1],))
    return Volume(grid, vals, field, header["units"])


def write_config_volume(path, grid, connection, higgs):
    """``connection`` is ``counts + (3, 2, 2)``, ``higgs`` ``counts + (2, 2)``."""
    stacked = np.concatenate([connection, np.asarray(higgs)[..., None, :, :]], axis=-3)
    write_volume(path, grid, stacked, CONFIG_FIELD)


def read_config_volume(path):
    vol = read_volume(path)
    if vol.field != CONFIG_FIELD:
        raise ValidationError(f"{path}: field is {vol.field!r}, expected {CONFIG_FIELD!r}")
    return vol.grid, vol.values[..., :3, :, :], vol.values[..., 3, :, :]


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec = GridSpec.cube(-2.0, 2.0, 21)
    ode_tol: float = 1e-10
    fd_step: float = 1e-3
    quad_order: int = 64
    t_max: float = 25.0
    k: int = 1
    seed: int = 42
    thread_cap: Optional[int] = None

    def __post_init__(self):
        for name in ("ode_tol", "fd_step", "t_max"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.quad_order < 2:
            raise ValidationError("quad_order must be at least 2")
        if self.thread_cap is not None and self.thread_cap < 1:
            raise ValidationError("thread_cap must be at least 1")

    def with_overrides(self, **kwargs):
        return replace(self, **{key: val for key, val in kwargs.items() if val is not None})

    def to_json(self):
        return {"grid": self.grid.to_json(), "ode_tol": self.ode_tol, "fd_step": self.fd_step,
                "quad_order": self.quad_order, "t_max": self.t_max, "k": self.k,
                "seed": self.seed, "thread_cap": self.thread_cap}


def parse_triple(text):
    vals = [float(v) for v in text.replace(",", " ").split()]
    if len(vals) == 1:
        vals = vals * 3
    if len(vals) != 3:
        raise ValidationError(f"expected one or three numbers, got {text!r}")
    return tuple(vals)


def parse_grid(text):
    """``LO:HI:N`` for a cube with ``N`` points per axis."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid must look like LO:HI:N, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ValidationError(f"grid must look like LO:HI:N, got {text!r}") from exc
    return GridSpec.cube(lo, hi, n)


def load_run_config(path):
    """Read ``[grid]``, ``[tolerances]`` and ``[run]`` sections."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    cfg = RunConfig()
    out = {}
    try:
        if parser.has_section("grid"):
            g = parser["grid"]
            if "box" in g:
                out["grid"] = parse_grid(g["box"])
            else:
                base = cfg.grid
                out["grid"] = GridSpec(parse_triple(g.get("origin", " ".join(map(str, base.origin)))),
                                       parse_triple(g.get("spacing", " ".join(map(str, base.spacing)))),
                                       tuple(int(v) for v in parse_triple(g.get("counts", "21"))))
        if parser.has_section("tolerances"):
            t = parser["tolerances"]
            for key in ("ode_tol", "fd_step", "t_max"):
                if key in t:
                    out[key] = t.getfloat(key)
            if "quad_order" in t:
                out["quad_order"] = t.getint("quad_order")
        if parser.has_section("run"):
            r = parser["run"]
            for key in ("k", "seed", "thread_cap"):
                if key in r:
                    out[key] = r.getint(key)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{path}: {exc}") from exc
    return cfg.with_overrides(**out)


# ---------------------------------------------------------------------------
# JSON


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    return obj


def dumps(obj):
    return json.dumps(to_jsonable(obj), indent=2)


def flatten(obj, prefix=""):
    """``(key, value)`` rows for scalar leaves of a nested JSON object."""
    rows = []
    if isinstance(obj, dict):
        for key, val in obj.items():
            rows += flatten(val, f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(obj, list):
        for i, val in enumerate(obj):
            rows += flatten(val, f"{prefix}[{i}]")
    else:
        rows.append((prefix, obj))
    return rows


def dumps_csv(obj):
    lines = ["key,value"]
    for key, val in flatten(to_jsonable(obj)):
        lines.append(f"{key},{json.dumps(val)}")
    return "\n".join(lines) + "\n"
