"""Command-line front end.

    sparsegeom query --input P.csv --queries Q.csv --variant anif --k 2
    sparsegeom oracle-check --variant anis --k 3 --trials 300
    sparsegeom bench --variant anif --k 2 --n 100,200,400,800 --backend tree
    sparsegeom reduce ksum --numbers 5,7,-12,3 --k 3

Every command writes JSON Lines to ``--output`` (default stdout). Invalid
configurations and library errors print one JSON object to stderr and exit
with status 2; ``oracle-check`` exits with 1 when a factor exceeds its bound.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, _kernels
from .ann import BACKENDS, AnnConfig
from .book import AnisIndex
from .bouquet import DEFAULT_BUDGET, AnifIndex
from .brute import exhaustive_linear, oracle_for
from .config import configure_logging
from .errors import ConfigError, SparseGeomError
from .io import ResultRecord, load_pointset
from .offline import offline_nearest_segment
from .reductions import detect_affine_degeneracy, hopcroft_lift, solve_ksum
from .star import OnlineSegmentIndex

VARIANTS = ("slr", "anlf", "anif", "anis", "segment", "segment-offline")


@dataclass(frozen=True)
class RunConfig:
    command: str
    variant: str = "anif"
    k: int = 2
    epsilon: float = 0.25
    backend: str = "exact"
    seed: int = 0
    threads: int = 1
    budget: int = DEFAULT_BUDGET
    input: str | None = None
    queries: str | None = None
    output: str | None = None

    def validate(self) -> "RunConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if not 0 < self.epsilon <= 8:
            raise ConfigError("epsilon must lie in (0, 8]")
        if self.variant in ("segment", "segment-offline") and self.k != 2:
            raise ConfigError("segment variants need k = 2")
        if self.variant == "anis" and not 2 <= self.k <= 5:
            raise ConfigError("anis needs 2 <= k <= 5")
        if not 1 <= self.k <= 6:
            raise ConfigError("k must lie in [1, 6]")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        return self

    def echo(self) -> dict:
        return {"variant": self.variant, "k": self.k, "epsilon": self.epsilon, "backend": self.backend,
                "budget": self.budget}


def bound_for(variant: str, epsilon: float) -> float:
    return {"slr": 1.0, "anis": 1 + 2 * epsilon, "segment-offline": 2 * (1 + epsilon)}.get(variant, 1 + epsilon)


class Engine:
    """A built structure for one variant, answering one query at a time."""

    def __init__(self, cfg: RunConfig, points: np.ndarray):
        self.cfg = cfg
        self.points = points
        ann = AnnConfig(epsilon=cfg.epsilon, backend=cfg.backend)
        start = time.perf_counter()
        v = cfg.variant
        if v == "anif":
            self.index = AnifIndex(points, cfg.k, cfg.epsilon, ann, budget=cfg.budget)
        elif v == "anlf":
            self.index = AnifIndex(points, cfg.k, cfg.epsilon, ann, linear=True, budget=cfg.budget)
        elif v == "anis":
            self.index = AnisIndex(points, cfg.k, cfg.epsilon, ann, seed=cfg.seed, budget=cfg.budget)
        elif v == "segment":
            self.index = OnlineSegmentIndex(points, cfg.epsilon, ann)
        else:
            if v == "slr" and math.comb(len(points), cfg.k) > cfg.budget:
                raise ConfigError("exhaustive search exceeds the structure budget")
            self.index = None
        self.ann = ann
        self.build_ms = 1000 * (time.perf_counter() - start)

    def query(self, q):
        v = self.cfg.variant
        if v == "slr":
            return exhaustive_linear(self.points, q, self.cfg.k)
        if v == "segment-offline":
            return offline_nearest_segment(self.points, q, self.cfg.epsilon, self.ann)
        return self.index.query(q)


def _run_queries(engine: Engine, queries, threads: int):
    def one(q):
        t = time.perf_counter()
        res = engine.query(q)
        return res, 1000 * (time.perf_counter() - t)

    if threads == 1:
        return [one(q) for q in queries]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map keeps input order, so output does not depend on scheduling
        return list(pool.map(one, queries))


def _record(cfg, engine, res, ms, i) -> ResultRecord:
    return ResultRecord.from_result(res, build_ms=engine.build_ms, query_ms=ms, seed=cfg.seed,
                                    backend=cfg.backend, query_index=i, config=cfg.echo(),
                                    version=__version__)


def _random_instance(rng, n, dim, trials):
    P = rng.normal(size=(n, dim))
    Q = rng.normal(size=(trials, dim))
    return P, Q


def cmd_query(cfg: RunConfig, args, out):
    if not cfg.input or not cfg.queries:
        raise ConfigError("query needs --input and --queries")
    P = load_pointset(cfg.input).coords
    Q = load_pointset(cfg.queries).coords
    if Q.shape[1] != P.shape[1]:
        raise ConfigError("queries and points differ in dimension")
    engine = Engine(cfg, P)
    for i, (res, ms) in enumerate(_run_queries(engine, Q, cfg.threads)):
        out(_record(cfg, engine, res, ms, i).to_dict())
    return 0


def cmd_oracle_check(cfg: RunConfig, args, out):
    rng = np.random.default_rng(cfg.seed)
    if cfg.input:
        P = load_pointset(cfg.input).coords
        Q = load_pointset(cfg.queries).coords if cfg.queries else rng.normal(size=(args.trials or 100, P.shape[1]))
    else:
        P, Q = _random_instance(rng, args.n_points, args.dim, args.trials or 100)
    engine = Engine(cfg, P)
    oracle = oracle_for(cfg.variant)
    bound = bound_for(cfg.variant, cfg.epsilon)
    worst = 0.0
    violations = 0
    for i, (res, ms) in enumerate(_run_queries(engine, Q, cfg.threads)):
        ref = oracle(P, Q[i], cfg.k).distance
        factor = res.distance / ref if ref > 0 else (1.0 if res.distance <= 1e-9 else math.inf)
        ok = ref - 1e-9 <= res.distance <= bound * ref + 1e-9
        violations += not ok
        worst = max(worst, factor)
        rec = _record(cfg, engine, res, ms, i).to_dict()
        rec["oracle_distance"] = ref
        rec["factor"] = factor
        out(rec)
    out({"summary": "oracle-check", "variant": cfg.variant, "trials": len(Q), "max_factor": worst,
         "bound": bound, "violations": violations, "seed": cfg.seed})
    return 0 if violations == 0 else 1


def cmd_bench(cfg: RunConfig, args, out):
    rng = np.random.default_rng(cfg.seed)
    sizes = [int(s) for s in args.n.split(",")]
    times = []
    for n in sizes:
        P, Q = _random_instance(rng, n, args.dim, args.trials or 50)
        engine = Engine(cfg, P)
        engine.query(Q[0])  # warm caches and compiled kernels
        start = time.perf_counter()
        for q in Q:
            engine.query(q)
        ms = 1000 * (time.perf_counter() - start) / len(Q)
        times.append(ms)
        out({"n": n, "build_ms": engine.build_ms, "query_ms": ms, "variant": cfg.variant, "k": cfg.k,
             "backend": cfg.backend, "kernels": _kernels.backend_name(), "seed": cfg.seed})
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0]) if len(sizes) > 1 else math.nan
    out({"summary": "bench", "slope": slope, "n": sizes, "query_ms": times})
    return 0


def cmd_reduce(cfg: RunConfig, args, out):
    rng = np.random.default_rng(cfg.seed)
    if args.problem == "ksum":
        numbers = [int(x) for x in args.numbers.split(",")] if args.numbers else None
        if numbers is None:
            raise ConfigError("reduce ksum needs --numbers")
        found = solve_ksum(numbers, cfg.k, cfg.epsilon, args.trials, cfg.seed,
                           "anis" if cfg.variant == "anis" else "anif",
                           AnnConfig(epsilon=cfg.epsilon, backend=cfg.backend))
        out({"problem": "ksum", "k": cfg.k, "found": None if found is None else list(found),
             "values": None if found is None else [numbers[i] for i in found], "seed": cfg.seed})
        return 0
    if args.problem == "hopcroft":
        worst = 0.0
        trials = args.trials or 1000
        for _ in range(trials):
            a, b, c, d = rng.normal(size=(4, 4))
            u, v = hopcroft_lift(a, b, c, d)
            det = float(np.linalg.det(np.column_stack([a, b, c, d])))
            worst = max(worst, abs(u @ v - det) / max(abs(det), 1e-300))
        out({"problem": "hopcroft", "trials": trials, "max_relative_error": worst, "seed": cfg.seed})
        return 0 if worst <= 1e-9 else 1
    if args.problem == "degeneracy":
        if cfg.input:
            P = load_pointset(cfg.input).coords
        else:
            P = rng.normal(size=(args.n_points, args.dim))
        rep = detect_affine_degeneracy(P, seed=cfg.seed, config=AnnConfig(epsilon=cfg.epsilon,
                                                                           backend=cfg.backend))
        out({"problem": "degeneracy", "degenerate": rep.degenerate,
             "witness": None if rep.witness is None else list(rep.witness),
             "min_distance": rep.min_distance, "samples": rep.samples, "seed": cfg.seed})
        return 0
    raise ConfigError(f"unknown problem {args.problem!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input")
    common.add_argument("--queries")
    common.add_argument("--variant", default="anif")
    common.add_argument("--k", type=int, default=2)
    common.add_argument("--epsilon", type=float, default=0.25)
    common.add_argument("--backend", default="exact")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--output")
    common.add_argument("--budget-structures", type=float, default=DEFAULT_BUDGET, dest="budget")
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--n-points", type=int, default=25, dest="n_points")
    common.add_argument("--dim", type=int, default=4)

    parser = argparse.ArgumentParser(prog="sparsegeom", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("query", parents=[common], help="answer queries from a file")
    sub.add_parser("oracle-check", parents=[common], help="compare a variant with exhaustive search")
    bench = sub.add_parser("bench", parents=[common], help="time queries over a grid of n")
    bench.add_argument("--n", default="100,200,400,800")
    red = sub.add_parser("reduce", parents=[common], help="run a reduction")
    red.add_argument("problem", choices=("ksum", "hopcroft", "degeneracy"))
    red.add_argument("--numbers")
    return parser


@contextmanager
def _sink(path):
    if path:
        with open(path, "w") as f:
            yield lambda rec: f.write(json.dumps(rec) + "\n")
    else:
        yield lambda rec: sys.stdout.write(json.dumps(rec) + "\n")


def main(argv=None) -> int:
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command, variant=args.variant.lower(), k=args.k, epsilon=args.epsilon,
            backend=args.backend.lower(), seed=args.seed, threads=args.threads, budget=int(args.budget),
            input=args.input, queries=args.queries, output=args.output,
        ).validate()
        handler = {"query": cmd_query, "oracle-check": cmd_oracle_check, "bench": cmd_bench,
                   "reduce": cmd_reduce}[args.command]
        with _sink(cfg.output) as out:
            return handler(cfg, args, out)
    except (SparseGeomError, OSError) as e:
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e),
                                     "config": asdict(cfg) if "cfg" in locals() else None}) + "\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
