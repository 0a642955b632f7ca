"""
JSON documents for load and power control scenarios
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from ..errors import ScenarioError
from ..models import Layout, LoadScenario, PowerScenario
from .load import compute_gains, validate_scenario
from .power import deinterleave, interleave, validate_power_scenario


logger = logging.getLogger(__name__)

BEAMFORMER_SETS = ("sphere", "codebook")

Scenario = Union[LoadScenario, PowerScenario]


def _compact(values: np.ndarray) -> Any:
    # a constant vector is stored as its scalar
    values = np.asarray(values, dtype=float)
    if values.size and np.all(values == values[0]):
        return float(values[0])
    return values.tolist()


def _expand(value: Any, size: int, name: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        return np.full(size, float(value))
    array = np.asarray(value, dtype=float)
    if array.shape != (size,):
        raise ScenarioError(f"{name} must be a scalar or have {size} entries")
    return array


def load_scenario_to_dict(s: LoadScenario) -> Dict[str, Any]:
    """Serialize a load scenario; gains are recomputed from the geometry on load."""
    return {
        "kind": "load",
        "k": s.k,
        "layout": s.layout.value,
        "bs_positions": s.bs_positions.tolist(),
        "user_positions": s.user_positions.tolist(),
        "assignment": [int(b) for b in s.assignment],
        "params": {
            "R": s.resource_blocks,
            "B": s.bandwidth,
            "d": _compact(s.demand),
            "p": _compact(s.power),
            "sigma2": s.sigma2,
            "freq_mhz": s.freq_mhz,
            "h_bs": s.h_bs,
            "h_user": s.h_user,
        },
        "seed": s.seed,
    }


def load_scenario_from_dict(doc: Dict[str, Any]) -> LoadScenario:
    """
    Build a load scenario from its document.

    Raises:
        ScenarioError: On missing keys or inconsistent content
    """
    try:
        params = doc["params"]
        bs = np.asarray(doc["bs_positions"], dtype=float).reshape(-1, 2)
        users = np.asarray(doc["user_positions"], dtype=float).reshape(-1, 2)
        if int(doc["k"]) != bs.shape[0]:
            raise ScenarioError(f"k={doc['k']} does not match {bs.shape[0]} station positions")
        layout = Layout(doc.get("layout", Layout.GRID.value))
        freq, h_bs, h_user = float(params["freq_mhz"]), float(params["h_bs"]), float(params["h_user"])
        scenario = LoadScenario(
            bs_positions=bs,
            user_positions=users,
            assignment=np.asarray(doc["assignment"], dtype=int),
            gain=compute_gains(bs, users, freq, h_bs, h_user),
            power=_expand(params["p"], bs.shape[0], "p"),
            demand=_expand(params["d"], users.shape[0], "d"),
            sigma2=float(params["sigma2"]),
            resource_blocks=int(params["R"]),
            bandwidth=float(params["B"]),
            freq_mhz=freq,
            h_bs=h_bs,
            h_user=h_user,
            layout=layout,
            seed=doc.get("seed"),
        )
    except KeyError as e:
        raise ScenarioError(f"Load scenario document is missing {e}")
    except (TypeError, ValueError) as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError(f"Invalid load scenario document: {e}")
    validate_scenario(scenario)
    strongest = np.argmax(scenario.gain, axis=1)
    moved = np.flatnonzero(scenario.assignment != strongest)
    if len(moved):
        logger.warning(f"{len(moved)} user(s) are not assigned to their lowest path loss "
                       f"station (first: user {int(moved[0])})")
    return scenario


def power_scenario_to_dict(s: PowerScenario) -> Dict[str, Any]:
    """Serialize a power scenario with covariances as interleaved real/imag lists."""
    doc = {
        "kind": "power",
        "k": s.k,
        "m": s.m,
        "L": s.antennas,
        "candidates": [[int(b) for b in c] for c in s.candidates],
        "covariances": [
            {"u": int(u), "b": int(b), "data": interleave(r)}
            for (u, b), r in sorted(s.covariances.items())
        ],
        "gamma": [float(g) for g in s.gamma],
        "sigma2": s.sigma2,
        "seed": s.seed,
        "beamformer_set": "sphere" if s.codebook is None else "codebook",
    }
    if s.p_bar is not None:
        doc["p_bar"] = s.p_bar
    if s.codebook is not None:
        doc["codebook"] = [
            {"n": int(np.asarray(words).shape[0]), "data": interleave(words)} for words in s.codebook
        ]
    return doc


def power_scenario_from_dict(doc: Dict[str, Any]) -> PowerScenario:
    """
    Build a power scenario from its document.

    Raises:
        ScenarioError: On missing keys, unsupported beamformer sets or invalid content
    """
    beamformer_set = doc.get("beamformer_set", "sphere")
    if beamformer_set not in BEAMFORMER_SETS:
        raise ScenarioError(
            f"Unsupported beamformer set {beamformer_set!r}; expected one of {BEAMFORMER_SETS}"
        )
    try:
        antennas = int(doc["L"])
        covariances = {
            (int(entry["u"]), int(entry["b"])): deinterleave(entry["data"], (antennas, antennas))
            for entry in doc["covariances"]
        }
        codebook = None
        if beamformer_set == "codebook":
            codebook = [deinterleave(entry["data"], (int(entry["n"]), antennas))
                        for entry in doc["codebook"]]
        p_bar = doc.get("p_bar")
        scenario = PowerScenario(
            k=int(doc["k"]),
            m=int(doc["m"]),
            antennas=antennas,
            candidates=[[int(b) for b in c] for c in doc["candidates"]],
            covariances=covariances,
            gamma=np.asarray(doc["gamma"], dtype=float),
            sigma2=float(doc["sigma2"]),
            p_bar=None if p_bar is None else float(p_bar),
            seed=doc.get("seed"),
            codebook=codebook,
        )
    except KeyError as e:
        raise ScenarioError(f"Power scenario document is missing {e}")
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"Invalid power scenario document: {e}")
    validate_power_scenario(scenario)
    return scenario


def scenario_to_dict(s: Scenario) -> Dict[str, Any]:
    if isinstance(s, LoadScenario):
        return load_scenario_to_dict(s)
    return power_scenario_to_dict(s)


def scenario_from_dict(doc: Dict[str, Any]) -> Scenario:
    """Dispatch on the document's keys (``user_positions`` or ``covariances``)."""
    if "user_positions" in doc:
        return load_scenario_from_dict(doc)
    if "covariances" in doc:
        return power_scenario_from_dict(doc)
    raise ScenarioError("Document is neither a load nor a power scenario")


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def save_scenario(s: Scenario, path: Union[str, Path]) -> Path:
    """Write a scenario document."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_scenario(s))
    logger.info(f"Saved scenario to {path}")
    return path


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Read a scenario document.

    Raises:
        ScenarioError: If the file is missing or not a valid document
    """
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"Scenario file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioError(f"Scenario file {path} is not valid JSON: {e}")
    return scenario_from_dict(doc)
