"""Run configuration: JSON schema, cross-field validation and a semantic hash."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .experiments.scenarios import STANDARD_SCENARIO, SWEEP_SCENARIO
from .integrator import SchemeConfig
from .lattice import make_grid
from .norms import NormConfig
from .potentials import ConfigError, PotentialSpec, check_exponents, check_resolved

__all__ = ["RunConfig", "SCHEMA_VERSION", "default_config", "load_config", "canonical_json"]

SCHEMA_VERSION = 1

# fields that do not change results and are left out of the hash
NON_SEMANTIC = ("output",)

_DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "scheme": {"name": "strang", "dt": 1e-3, "T": 0.25, "store_every": 1, "offsets": None},
    "norms": {
        "alpha": 0.55,
        "beta_prime": None,
        "b": 0.48,
        "pq_pairs": [[2.0, 6.0], ["inf", 2.0]],
        "pad": 4,
        "windows": [0.25, 0.5, 1.0],
    },
    "sweep": {"scenario": "sweep", "N_list": SWEEP_SCENARIO["potential"]["N"]},
    "verify": {"ensemble": 50, "resolutions": [12, 16]},
    "oracle": {"n": 16, "states": 10},
    "seed": 0,
    "output": {"verbosity": "info"},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _num(x) -> float:
    if isinstance(x, str):
        if x.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"expected a number or 'inf', got {x!r}")
    return float(x)


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass
class RunConfig:
    """Everything needed to reproduce a run.

    ``data`` keeps the JSON layout: grid, potential, phi, k, depth, normalize,
    scheme, norms, sweep, verify, oracle, seed, output.
    """

    data: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        version = d.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version}; expected {SCHEMA_VERSION}")
        return cls(_merge(default_config().data, d))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        d = self.to_dict()
        d["seed"] = int(seed)
        return RunConfig(d)

    # -- typed views ---------------------------------------------------------

    def grid(self):
        g = self.data["grid"]
        return make_grid(int(g["d"]), int(g["n"]), float(g["L"]))

    def N_values(self) -> list[float]:
        N = self.data["potential"]["N"]
        return [float(x) for x in N] if isinstance(N, (list, tuple)) else [float(N)]

    def potential(self, bigN: float | None = None) -> PotentialSpec:
        p = self.data["potential"]
        N = self.N_values()[0] if bigN is None else bigN
        return PotentialSpec(float(p["beta"]), float(N), p.get("profile", "bump"), float(p.get("amplitude", 1.0)),
                             p.get("table"))

    def scheme(self) -> SchemeConfig:
        s = self.data["scheme"]
        off = s.get("offsets")
        off = None if off is None else tuple(tuple(int(v) for v in o) for o in off)
        return SchemeConfig(s.get("name", "strang"), float(s["dt"]), float(s["T"]), int(s.get("store_every", 1)),
                            off)

    def norms(self) -> NormConfig:
        n = self.data["norms"]
        bp = n.get("beta_prime")
        return NormConfig(
            alpha=float(n["alpha"]),
            beta_prime=None if bp is None else float(bp),
            b=float(n["b"]),
            pq_pairs=tuple((_num(p), _num(q)) for p, q in n["pq_pairs"]),
            pad=int(n.get("pad", 4)),
            windows=tuple(float(w) for w in n.get("windows", (0.25, 0.5, 1.0))),
        )

    def recipe(self) -> dict:
        keys = ("grid", "potential", "phi", "k", "depth", "normalize")
        return {k: copy.deepcopy(self.data[k]) for k in keys if k in self.data}

    # -- validation and identity --------------------------------------------

    def validate(self) -> None:
        """Raise ConfigError naming the first violated condition."""
        try:
            grid = self.grid()
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from None
        p = self.data["potential"]
        beta = float(p["beta"])
        if not 0 <= beta < 1:
            raise ConfigError(f"0 <= beta < 1 violated: beta = {beta}")
        Ns = self.N_values()
        if any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ConfigError("N-list strictly increasing violated")
        nc = self.norms()
        check_exponents(nc.alpha, beta)
        bp = nc.resolved_beta_prime(beta)
        if not beta < bp < 1:
            raise ConfigError(f"beta < beta' < 1 violated: beta = {beta}, beta' = {bp}")
        check_resolved(self.potential(max(Ns)), grid)
        s = self.data["scheme"]
        if not float(s["T"]) <= 1:
            raise ConfigError(f"T <= 1 violated: T = {s['T']}")
        try:
            self.scheme()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0 < nc.b < 1:
            raise ConfigError(f"0 < b < 1 violated: b = {nc.b}")

    def semantic(self) -> dict:
        return {k: v for k, v in self.data.items() if k not in NON_SEMANTIC}

    def hash(self) -> str:
        """sha256 of the canonical JSON of every semantic field."""
        return hashlib.sha256(canonical_json(self.semantic()).encode()).hexdigest()

    def dumps(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def default_config() -> RunConfig:
    d = copy.deepcopy(_DEFAULTS)
    d.update(copy.deepcopy(STANDARD_SCENARIO))
    return RunConfig(d)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return default_config()
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return RunConfig.from_dict(raw)
