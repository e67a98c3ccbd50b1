"""
File formats.

Matrices are {"rows": n, "cols": m, "data": [[re, im], ...]} in row-major
order. Datasets, generators and reports are JSON objects built from that;
reference matrices and run configuration are YAML.
"""
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from estimators.base import FitReport
from estimators.dataset import TomographyDataset

from .config import VERSION
from .cp import LindbladSystem, Supergenerator
from .errors import InputError

logger = logging.getLogger(f"lindblad_fit.{__name__}")


def matrix_to_json(m: np.ndarray) -> Dict[str, Any]:
    m = np.asarray(m, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.ravel(order="C")],
    }


def matrix_from_json(obj: Any, name: str = "matrix") -> np.ndarray:
    if not isinstance(obj, dict) or not {"rows", "cols", "data"} <= set(obj):
        raise InputError(f"{name}: expected an object with rows, cols and data")
    rows, cols, data = obj["rows"], obj["cols"], obj["data"]
    if not isinstance(rows, int) or not isinstance(cols, int) or rows < 1 or cols < 1:
        raise InputError(f"{name}: rows and cols must be positive integers")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise InputError(f"{name}: expected {rows * cols} entries, got {len(data) if isinstance(data, list) else 'none'}")
    try:
        values = [complex(float(re), float(im)) for re, im in data]
    except (TypeError, ValueError):
        raise InputError(f"{name}: entries must be [re, im] pairs")
    return np.array(values, dtype=complex).reshape(rows, cols)


def generator_to_json(g: Supergenerator) -> Dict[str, Any]:
    out = {
        "n": g.n,
        "basis": g.basis,
        "hamiltonian_part": matrix_to_json(g.hamiltonian_part),
        "relaxation_part": matrix_to_json(g.relaxation_part),
    }
    if g.hamiltonian is not None:
        out["hamiltonian"] = matrix_to_json(g.hamiltonian)
    return out


def generator_from_json(obj: Dict[str, Any]) -> Supergenerator:
    if not isinstance(obj, dict) or "relaxation_part" not in obj:
        raise InputError("generator: missing relaxation_part")
    basis = obj.get("basis", "zeeman")
    relaxation = matrix_from_json(obj["relaxation_part"], "relaxation_part")
    h = matrix_from_json(obj["hamiltonian"], "hamiltonian") if "hamiltonian" in obj else None
    g = Supergenerator.from_hamiltonian(h, relaxation, basis)
    if "n" in obj and obj["n"] != g.n:
        raise InputError(f"generator: n={obj['n']} does not match matrix size (N={g.n})")
    if h is None and "hamiltonian_part" in obj:
        hc = matrix_from_json(obj["hamiltonian_part"], "hamiltonian_part")
        g = Supergenerator(g.n, hc, relaxation, basis, None)
    return g


def dataset_to_json(ds: TomographyDataset) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "n": ds.n,
        "hamiltonian": matrix_to_json(ds.hamiltonian),
        "times": list(ds.times),
        "metadata": ds.metadata,
    }
    if ds.propagators is not None:
        out["propagators"] = [matrix_to_json(p) for p in ds.propagators]
    if ds.state_pairs is not None:
        out["state_pairs"] = [
            [{"input": matrix_to_json(a), "output": matrix_to_json(b)} for a, b in pairs]
            for pairs in ds.state_pairs
        ]
    return out


def dataset_from_json(obj: Dict[str, Any]) -> TomographyDataset:
    for key in ("n", "hamiltonian", "times"):
        if key not in obj:
            raise InputError(f"dataset: missing '{key}'")
    props = None
    pairs = None
    if "propagators" in obj:
        props = [matrix_from_json(p, f"propagators[{i}]") for i, p in enumerate(obj["propagators"])]
    if "state_pairs" in obj:
        pairs = [
            [(matrix_from_json(p["input"], "input"), matrix_from_json(p["output"], "output")) for p in group]
            for group in obj["state_pairs"]
        ]
    return TomographyDataset(
        n=int(obj["n"]),
        times=list(obj["times"]),
        hamiltonian=matrix_from_json(obj["hamiltonian"], "hamiltonian"),
        propagators=props,
        state_pairs=pairs,
        metadata=dict(obj.get("metadata", {})),
    )


def lindblads_to_json(ls: LindbladSystem) -> List[Dict[str, Any]]:
    return [
        {"weight": r["weight"], "matrix": matrix_to_json(r["matrix"]), "provenance": r["provenance"]}
        for r in ls.to_records()
    ]


def lindblads_from_json(records: List[Dict[str, Any]]) -> LindbladSystem:
    return LindbladSystem(
        [matrix_from_json(r["matrix"]) for r in records],
        [float(r["weight"]) for r in records],
        [r.get("provenance", "spectral") for r in records],
    )


def _finite_or_none(x: float) -> Optional[float]:
    return float(x) if np.isfinite(x) else None


def report_to_json(report: FitReport) -> Dict[str, Any]:
    return {
        "method": report.method,
        "chi_squared": report.chi_squared,
        "penalty_at_solution": _finite_or_none(report.penalty_at_solution),
        "iterations": report.iterations,
        "converged": report.converged,
        "residual_per_time": report.residual_per_time,
        "diagnostics": report.diagnostics,
        "estimate": generator_to_json(report.estimate),
    }


def config_digest(config: Dict[str, Any]) -> str:
    canonical = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    command: str
    inputs: List[str]
    config: Dict[str, Any]
    version: str = VERSION
    started: str = field(default_factory=lambda: datetime.now().isoformat())
    finished: Optional[str] = None
    session: Dict[str, Any] = field(default_factory=dict)

    @property
    def config_digest(self) -> str:
        return config_digest(self.config)

    def finish(self, session: Dict[str, Any]):
        self.finished = datetime.now().isoformat()
        self.session = session

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "config": self.config,
            "config_digest": self.config_digest,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "session": self.session,
        }


def load_json(path: str) -> Any:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except FileNotFoundError:
        raise InputError(f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON ({e})")


def write_json(path: str, payload: Dict[str, Any], manifest: Optional[RunManifest] = None):
    out = dict(payload)
    if manifest is not None:
        out["manifest"] = manifest.to_dict()
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        json.dump(out, f, indent=2, default=_json_default)
    logger.info(f"wrote {path}")


def _json_default(obj: Any):
    if isinstance(obj, np.ndarray):
        return matrix_to_json(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def load_yaml(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}")
    except yaml.YAMLError as e:
        raise InputError(f"{path}: invalid YAML ({e})")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a mapping at top level")
    return data


def load_fixtures(path: str) -> Dict[str, np.ndarray]:
    """Reference matrices from a YAML file as float arrays"""
    data = load_yaml(path)
    out = {}
    for key, value in data.items():
        if isinstance(value, dict) and "matrix" in value:
            out[key] = np.array(value["matrix"], dtype=float)
        elif isinstance(value, (list, int, float)):
            out[key] = np.array(value, dtype=float)
    return out
