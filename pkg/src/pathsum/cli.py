"""Command-line interface: ``pathsum --matrix J.mtx --entry 1 2 --verify``.

Exit status is 0 on success, 1 on any error (reported as a JSON object on
stderr) and 2 when ``--verify`` finds a deviation above ``1e-8`` from the
direct inverse.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._linalg import RCOND_MIN, lu_with_rcond
from .engine import PathSumEngine
from .errors import (
    ConfigurationError,
    NotPositiveDefiniteError,
    PathSumError,
    SingularityError,
    UnsupportedPartitionError,
)
from .gabp import gabp_marginals
from .graph import build_graph
from .io import load_matrix, parse_partition
from .model import BlockPartition, InformationModel
from .validation import determinant_formula_entry, diagnose, direct_inverse, is_positive_definite

log = logging.getLogger("pathsum")

METHODS = ("pathsum", "gabp", "determinant", "direct")
VERIFY_THRESHOLD = 1e-8
EXIT_OK, EXIT_ERROR, EXIT_DEVIATION = 0, 1, 2


@dataclass
class QuerySpec:
    """One CLI invocation. Query indices are 1-based block ids."""

    matrix_path: str
    partition: Optional[str] = None
    queries: List[tuple] = field(default_factory=list)
    method: str = "pathsum"
    verify: bool = False
    diagnose: bool = False
    skip_spd_check: bool = False
    drop_tolerance: float = 0.0
    threads: int = 1


def _check_spd(model: InformationModel):
    lu_piv, rcond = lu_with_rcond(model.J)
    if lu_piv is None or rcond < RCOND_MIN:
        raise SingularityError(f"information matrix is singular (rcond={rcond:.3g})")
    if not is_positive_definite(model.J):
        raise NotPositiveDefiniteError(
            "information matrix is not positive definite; pass --skip-spd-check to evaluate anyway"
        )


class _Runner:
    def __init__(self, spec: QuerySpec, model, partition, graph):
        self.spec = spec
        self.model = model
        self.partition = partition
        self.graph = graph
        self.method = spec.method
        self._engine = None
        self._sigma = None
        self._gabp = None
        if self.method in ("gabp", "determinant") and not partition.is_trivial:
            raise UnsupportedPartitionError(f"method {self.method!r} needs the singleton partition")
        if self.method == "gabp":
            self._gabp = gabp_marginals(model, graph)

    @property
    def engine(self):
        if self._engine is None:
            self._engine = PathSumEngine(self.graph)
        return self._engine

    def block(self, sigma, omega, alpha):
        blocks = self.partition.blocks
        return sigma[np.ix_(blocks[omega], blocks[alpha])]

    def covariance(self):
        if self._sigma is None:
            if self.method == "direct":
                self._sigma = direct_inverse(self.model)
            elif self.method == "determinant":
                n = self.model.n
                self._sigma = np.array(
                    [[determinant_formula_entry(self.model, a, w) for a in range(n)] for w in range(n)]
                )
            else:
                sigma = self.engine.covariance(self.spec.threads)
                if self.method == "gabp":
                    idx = [b[0] for b in self.partition.blocks]
                    sigma[idx, idx] = self._gabp.variances
                self._sigma = sigma
        return self._sigma

    def entry(self, alpha, omega):
        extra = {}
        if self.method == "direct":
            value = self.block(self.covariance(), omega, alpha)
        elif self.method == "determinant":
            a, w = self.partition.blocks[alpha][0], self.partition.blocks[omega][0]
            value = np.array([[determinant_formula_entry(self.model, a, w)]])
        elif self.method == "gabp" and alpha == omega:
            value = np.array([[self._gabp.variances[alpha]]])
        else:
            res = self.engine.entry(alpha, omega)
            value = res.value
            extra = {"path_count": res.path_count, "max_depth": res.max_depth, "leaf_count": res.leaf_count}
        return value, extra

    def run(self, query):
        kind = query[0]
        if kind in ("entry", "diag"):
            alpha = query[1] - 1
            omega = (query[2] if kind == "entry" else query[1]) - 1
            for v in (alpha, omega):
                if not 0 <= v < self.partition.size:
                    raise ConfigurationError(f"block index {v + 1} outside 1..{self.partition.size}")
            value, extra = self.entry(alpha, omega)
            out = {"query": kind, "alpha": alpha + 1, "omega": omega + 1, "value": value.tolist(), **extra}
            return out, value
        if kind == "full":
            value = self.covariance()
            return {"query": "full", "value": value.tolist()}, value
        if kind == "mean":
            if self.model.h is None:
                raise ConfigurationError("--mean needs a potential vector h in the model file")
            value = self.covariance() @ self.model.h
            return {"query": "mean", "value": value.tolist()}, value
        raise ConfigurationError(f"unknown query {kind!r}")


def _reference(runner, query, sigma_ref):
    kind = query[0]
    if kind in ("entry", "diag"):
        alpha = query[1] - 1
        omega = (query[2] if kind == "entry" else query[1]) - 1
        return runner.block(sigma_ref, omega, alpha)
    if kind == "full":
        return sigma_ref
    return sigma_ref @ runner.model.h


def _relative_deviation(value, ref):
    scale = np.linalg.norm(ref)
    diff = np.linalg.norm(np.asarray(value) - ref)
    return float(diff / scale) if scale > 0 else float(diff)


def run_queries(spec: QuerySpec) -> tuple:
    """Execute ``spec``; returns ``(document, exit_status)``.

    Raises :class:`PathSumError` subclasses for every failure other than a
    verification deviation.
    """
    if spec.method not in METHODS:
        raise ConfigurationError(f"unknown method {spec.method!r}")
    if spec.threads < 1:
        raise ConfigurationError("--threads must be at least 1")
    if spec.drop_tolerance < 0:
        raise ConfigurationError("--drop-tolerance must be nonnegative")
    started = time.perf_counter()
    model = load_matrix(spec.matrix_path, require_nonzero_diagonal=not spec.skip_spd_check)
    partition = (BlockPartition.singletons(model.n) if spec.partition is None
                 else parse_partition(spec.partition, model.n))
    doc = {"matrix": str(spec.matrix_path), "n": model.n, "blocks": partition.size, "method": spec.method}
    if spec.diagnose:
        doc["diagnostics"] = diagnose(model).to_dict()
    if not spec.queries:
        doc["elapsed_seconds"] = time.perf_counter() - started
        return doc, EXIT_OK
    if not spec.skip_spd_check:
        _check_spd(model)
    graph = build_graph(model, partition, spec.drop_tolerance)
    runner = _Runner(spec, model, partition, graph)
    log.info("running %d queries with method %s on %d blocks", len(spec.queries), spec.method, partition.size)
    if spec.threads > 1 and len(spec.queries) > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            results = list(pool.map(runner.run, spec.queries))
    else:
        results = [runner.run(q) for q in spec.queries]
    doc["queries"] = [r[0] for r in results]
    status = EXIT_OK
    if spec.verify:
        sigma_ref = direct_inverse(model)
        devs = [_relative_deviation(value, _reference(runner, q, sigma_ref))
                for q, (_, value) in zip(spec.queries, results)]
        worst = max(devs)
        for entry, dev in zip(doc["queries"], devs):
            entry["deviation"] = dev
        doc["verification"] = {"max_relative_deviation": worst, "threshold": VERIFY_THRESHOLD,
                               "passed": worst <= VERIFY_THRESHOLD}
        if worst > VERIFY_THRESHOLD:
            status = EXIT_DEVIATION
    doc["elapsed_seconds"] = time.perf_counter() - started
    return doc, status


def _format_table(doc) -> str:
    lines = [f"matrix {doc['matrix']}  n={doc['n']}  blocks={doc['blocks']}  method={doc['method']}"]
    for q in doc.get("queries", []):
        label = q["query"]
        if "alpha" in q:
            label += f" ({q['omega']},{q['alpha']})"
        lines.append(label)
        value = np.atleast_2d(np.asarray(q["value"]))
        for row in value:
            lines.append("  " + "  ".join(f"{x:12.6f}" for x in row))
        if "deviation" in q:
            lines.append(f"  deviation {q['deviation']:.3e}")
    if "diagnostics" in doc:
        for key, val in doc["diagnostics"].items():
            lines.append(f"{key}: {round(val, 6) if isinstance(val, float) else val}")
    if "verification" in doc:
        lines.append(f"max relative deviation: {doc['verification']['max_relative_deviation']:.3e}")
    return "\n".join(lines)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": "usage", "message": message}) + "\n")
        sys.exit(EXIT_ERROR)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pathsum", description="Exact GMRF covariances from simple paths and cycles.")
    p.add_argument("--matrix", required=True, metavar="PATH", help="Matrix Market (.mtx) or JSON model")
    p.add_argument("--partition", metavar="JSON", help="block index lists, e.g. '[[1,2,3],[4,5,6]]', or a JSON file")
    p.add_argument("--entry", nargs=2, type=int, action="append", default=[], metavar=("A", "W"),
                   help="covariance block Sigma[W, A] (1-based block ids); repeatable")
    p.add_argument("--diag", type=int, action="append", default=[], metavar="A", help="diagonal block; repeatable")
    p.add_argument("--full", action="store_true", help="full covariance matrix")
    p.add_argument("--mean", action="store_true", help="mean vector (needs h in the model file)")
    p.add_argument("--method", choices=METHODS, default="pathsum")
    p.add_argument("--verify", action="store_true", help="compare each result with the direct inverse")
    p.add_argument("--diagnose", action="store_true", help="report walk-summability and definiteness")
    p.add_argument("--skip-spd-check", action="store_true", help="do not require J to be positive definite")
    p.add_argument("--drop-tolerance", type=float, default=0.0, metavar="X",
                   help="treat blocks with all |entries| <= X as absent")
    p.add_argument("--threads", type=int, default=1, metavar="N")
    p.add_argument("--output", choices=("json", "table"), default="json")
    return p


def _configure_logging():
    level = os.environ.get("PATHSUM_LOG", "warn").strip().upper()
    level = {"WARN": "WARNING"}.get(level, level)
    if level not in ("ERROR", "WARNING", "INFO", "DEBUG"):
        level = "WARNING"
    logging.basicConfig(level=getattr(logging, level), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    queries = [("entry", a, w) for a, w in args.entry] + [("diag", a) for a in args.diag]
    if args.full:
        queries.append(("full",))
    if args.mean:
        queries.append(("mean",))
    spec = QuerySpec(
        matrix_path=args.matrix, partition=args.partition, queries=queries, method=args.method,
        verify=args.verify, diagnose=args.diagnose, skip_spd_check=args.skip_spd_check,
        drop_tolerance=args.drop_tolerance, threads=args.threads,
    )
    if not queries and not args.diagnose:
        sys.stderr.write(json.dumps({"error": "usage", "message": "no query given; use --entry, --diag, --full, --mean or --diagnose"}) + "\n")
        return EXIT_ERROR
    try:
        doc, status = run_queries(spec)
    except PathSumError as exc:
        log.debug("query failed", exc_info=True)
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return EXIT_ERROR
    if args.output == "table":
        print(_format_table(doc))
    else:
        print(json.dumps(doc, indent=2))
    return status


if __name__ == "__main__":
    sys.exit(main())
