"""Simulation designs 1 to 4 and the Monte Carlo rejection-rate harness."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np

from ._backend import resolve_threads
from .config import RunConfig
from .core import CONTINUOUS, DISCRETE, Dataset, from_arrays
from .errors import HetfxError, InvalidConfig

log = logging.getLogger(__name__)

DGP_IDS = (1, 2, 3, 4)
# child streams, one per primitive, so a sample of size n is a prefix of size n' > n
_STREAMS = {"x": 0, "eps": 1, "u": 2, "z": 3}


@dataclass(frozen=True)
class DgpSpec:
    """One simulation design.

    ``gamma`` only matters for designs 2 and 4; ``gamma = 0`` reduces them to
    designs 1 and 3.
    """

    id: int = 1
    n: int = 1000
    rho: float = 0.7
    gamma: float = 0.0
    pz: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.id not in DGP_IDS:
            raise InvalidConfig(f"dgp id must be one of {DGP_IDS}")
        if int(self.n) < 1:
            raise InvalidConfig("n must be positive")
        if not (0.0 <= self.rho < 1.0):
            raise InvalidConfig("rho must lie in [0, 1)")
        if not self.gamma >= 0.0:
            raise InvalidConfig("gamma must be nonnegative")
        if not (0.0 < self.pz < 1.0):
            raise InvalidConfig("pz must lie in (0, 1)")
        if int(self.seed) < 0:
            raise InvalidConfig("seed must be nonnegative")

    @property
    def continuous(self) -> bool:
        return self.id in (3, 4)

    @property
    def heterogeneous(self) -> bool:
        return self.id in (2, 4) and self.gamma > 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(_STREAMS[name],)))


def gen_dgp(spec: DgpSpec) -> Dataset:
    """Draw a sample from design ``spec.id``.

    X is uniform on {1,...,5} (designs 1, 2) or on [0, 1] (designs 3, 4);
    ε and u are independent U(0,1); η = ρε + sqrt(1 − ρ²)u; Z ~ Bernoulli(pz);
    D = 1(Z − η > 0); Y = DX + (1 + γD)Xε, with γ = 0 for designs 1 and 3.
    """
    n = int(spec.n)
    ux = _stream(spec.seed, "x").random(n)
    eps = _stream(spec.seed, "eps").random(n)
    u = _stream(spec.seed, "u").random(n)
    z = (_stream(spec.seed, "z").random(n) < spec.pz).astype(np.int8)
    if spec.continuous:
        x = ux
        kind = CONTINUOUS
    else:
        x = np.floor(5.0 * ux) + 1.0
        kind = DISCRETE
    eta = spec.rho * eps + math.sqrt(1.0 - spec.rho ** 2) * u
    d = (z - eta > 0).astype(np.int8)
    gamma = spec.gamma if spec.id in (2, 4) else 0.0
    if gamma == 0.0:
        y = d * x + x * eps
    else:
        y = d * x + (1.0 + gamma * d) * x * eps
    return from_arrays(y, d, z, x[:, None], (kind,))


def replicate_seed(master: int, r: int) -> int:
    """Seed of replicate ``r``; depends only on ``(master, r)``."""
    ss = np.random.SeedSequence(int(master), spawn_key=(int(r),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class RejectionTable:
    """Rejection rates by design cell and significance level.

    ``rows`` maps ``(dgp, n, pz, rho, gamma)`` to ``{alpha: rate}``.
    """

    rows: dict[tuple, dict[float, float]]
    reps: int
    bootstrap_reps: int
    failures: dict[tuple, int] = field(default_factory=dict)
    completed: dict[tuple, int] = field(default_factory=dict)
    decision: str = "pvalue"

    def __post_init__(self):
        for rates in self.rows.values():
            for r in rates.values():
                if not (0.0 <= r <= 1.0):
                    raise InvalidConfig(f"rejection rate {r} outside [0, 1]")

    def rate(self, alpha: float, *, dgp: int | None = None, n: int | None = None,
             pz: float | None = None, rho: float | None = None, gamma: float | None = None) -> float:
        """Rate for the single design cell matching the given coordinates."""
        want = {"dgp": dgp, "n": n, "pz": pz, "rho": rho, "gamma": gamma}
        hits = [k for k in self.rows
                if all(v is None or _close(k[i], v) for i, v in enumerate(want.values()))]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} design cells match {want}")
        return self.rows[hits[0]][_alpha_key(self.rows[hits[0]], alpha)]

    @property
    def alphas(self) -> list[float]:
        return sorted({a for rates in self.rows.values() for a in rates})

    def to_records(self) -> list[dict[str, Any]]:
        out = []
        for key in sorted(self.rows):
            dgp, n, pz, rho, gamma = key
            for a in sorted(self.rows[key]):
                out.append({"dgp": dgp, "n": n, "pz": pz, "rho": rho, "gamma": gamma,
                            "alpha": a, "rate": self.rows[key][a],
                            "completed": self.completed.get(key, self.reps),
                            "failures": self.failures.get(key, 0)})
        return out

    def to_json(self) -> str:
        return json.dumps({"reps": self.reps, "bootstrap_reps": self.bootstrap_reps,
                           "decision": self.decision, "rows": self.to_records()}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RejectionTable":
        data = json.loads(text)
        rows: dict[tuple, dict[float, float]] = {}
        completed: dict[tuple, int] = {}
        failures: dict[tuple, int] = {}
        for rec in data["rows"]:
            key = (int(rec["dgp"]), int(rec["n"]), float(rec["pz"]), float(rec["rho"]),
                   float(rec["gamma"]))
            rows.setdefault(key, {})[float(rec["alpha"])] = float(rec["rate"])
            completed[key] = int(rec["completed"])
            failures[key] = int(rec["failures"])
        return cls(rows, int(data["reps"]), int(data["bootstrap_reps"]), failures, completed,
                   data.get("decision", "pvalue"))

    def to_csv(self) -> str:
        """Wide layout: a row per (dgp, gamma, n, pz), a column per (alpha, rho)."""
        alphas = self.alphas
        rhos = sorted({k[3] for k in self.rows})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dgp", "gamma", "n", "pz"]
                   + [f"alpha={a:g}/rho={r:g}" for a in alphas for r in rhos])
        row_keys = sorted({(k[0], k[4], k[1], k[2]) for k in self.rows})
        for dgp, gamma, n, pz in row_keys:
            cells = []
            for a in alphas:
                for r in rhos:
                    rates = self.rows.get((dgp, n, pz, r, gamma))
                    cells.append("" if rates is None or a not in rates else f"{rates[a]:.4f}")
            w.writerow([dgp, f"{gamma:g}", n, f"{pz:g}"] + cells)
        return buf.getvalue()


def _close(a, b) -> bool:
    return math.isclose(float(a), float(b), rel_tol=0, abs_tol=1e-12)


def _alpha_key(rates: dict[float, float], alpha: float) -> float:
    for a in rates:
        if _close(a, alpha):
            return a
    raise KeyError(f"alpha {alpha} not tabulated")


def _reject(report, alpha: float, decision: str) -> bool:
    if decision == "critical":
        return report.statistic > report.critical_values[alpha]
    # identical to the critical-value rule for p = share of draws >= statistic
    return report.p_value <= alpha


def _one_replicate(spec: DgpSpec, config: RunConfig, alphas, decision: str):
    from .bootstrap.runner import run_test

    data = gen_dgp(spec)
    report = run_test(data, config.with_seed(spec.seed))
    return {a: _reject(report, a, decision) for a in alphas}


def expand_specs(dgp: int = 1, n: Iterable[int] = (1000,), rho: Iterable[float] = (0.7,),
                 pz: Iterable[float] = (0.5,), gamma: Iterable[float] = (0.0,),
                 seed: int = 0) -> list[DgpSpec]:
    """Cartesian product of design parameters."""
    return [DgpSpec(dgp, int(nn), float(r), float(g), float(p), seed)
            for nn, p, r, g in itertools.product(n, pz, rho, gamma)]


def monte_carlo(specs: DgpSpec | Sequence[DgpSpec], reps: int, config: RunConfig | None = None,
                workers: int | None = None, decision: str = "pvalue") -> RejectionTable:
    """Rejection rates over ``reps`` replicates of every design in ``specs``.

    Replicate ``r`` of every design draws its data with
    ``replicate_seed(spec.seed, r)``, so designs share random numbers and
    results do not depend on ``workers``. Replicates that raise are
    logged, counted and left out of the rate.
    """
    if int(reps) < 1:
        raise InvalidConfig("reps must be at least 1")
    if decision not in ("pvalue", "critical"):
        raise InvalidConfig("decision must be 'pvalue' or 'critical'")
    config = config or RunConfig()
    specs = [specs] if isinstance(specs, DgpSpec) else list(specs)
    alphas = config.report_alphas
    workers = resolve_threads(workers)
    # parallelism goes to replicates; each test runs single-threaded
    inner = replace(config, threads=1) if workers > 1 else config
    rows: dict[tuple, dict[float, float]] = {}
    failures: dict[tuple, int] = {}
    completed: dict[tuple, int] = {}
    for spec in specs:
        key = (spec.id, spec.n, spec.pz, spec.rho, spec.gamma if spec.id in (2, 4) else 0.0)
        jobs = [replace(spec, seed=replicate_seed(spec.seed, r)) for r in range(int(reps))]

        def task(s, _cfg=inner):
            try:
                return _one_replicate(s, _cfg, alphas, decision)
            except HetfxError as exc:
                log.warning("replicate with seed %d failed: %s", s.seed, exc)
                return None

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(task, jobs))
        else:
            results = [task(s) for s in jobs]
        ok = [r for r in results if r is not None]
        failures[key] = len(results) - len(ok)
        completed[key] = len(ok)
        if failures[key]:
            log.warning("%d of %d replicates failed for %s", failures[key], len(results), key)
        # a design with no completed replicate reports 0 with completed = 0
        rows[key] = {a: (sum(r[a] for r in ok) / len(ok) if ok else 0.0) for a in alphas}
    return RejectionTable(rows, int(reps), config.multiplier.reps, failures, completed, decision)
