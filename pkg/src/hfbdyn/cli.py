"""Command-line entry point: ``hfbdyn <command> [options]``.

Exit codes: 0 success, 1 invalid configuration, 2 usage error,
3 evolution aborted on non-finite values, 4 a check (lemma, oracle) failed.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, canonical_json, load_config
from .experiments.lemmas import LEMMAS
from .experiments.oracle_suite import oracle_suite
from .experiments.scenarios import instantiate, scenario
from .experiments.sweep import n_sweep
from .integrator import EvolutionAborted, evolve
from .io import FormatError, load_trace, save_state, save_trace, write_csv, write_json
from .norms import NormConfig, composite_norms
from .potentials import ConfigError
from .trace import SpaceTimeTrace

__all__ = ["main", "build_parser", "run_dir"]

log = logging.getLogger("hfbdyn")

EXIT_OK, EXIT_CONFIG, EXIT_USAGE, EXIT_ABORT, EXIT_CHECK = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("runs"), help="parent directory for run directories")
    common.add_argument("--seed", type=int, default=None, help="overrides the configured seed")
    common.add_argument("--serial", action="store_true", help="run everything in one thread")
    common.add_argument("--threads", type=int, default=1, help="worker threads for independent runs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="hfbdyn", description="Bosonic HFB simulator and diagnostics")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("simulate", parents=[common], help="evolve one configuration and write trace, CSV, snapshots")
    sub.add_parser("sweep", parents=[common], help="evolve the recipe for a list of N")
    v = sub.add_parser("verify", parents=[common], help="run a lemma verifier")
    v.add_argument("lemma", choices=sorted(LEMMAS))
    sub.add_parser("oracle", parents=[common], help="run the oracle suite")
    nm = sub.add_parser("norms", parents=[common], help="composite norms of a saved trace")
    nm.add_argument("trace", type=Path)
    sub.add_parser("validate-config", parents=[common], help="check a configuration and print its hash")
    return p


def run_dir(out: Path, command: str, key: str) -> Path:
    d = out / f"{command}-{key[:16]}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _workers(args) -> int:
    return 1 if args.serial else max(1, int(args.threads))


def norm_rows(trace: SpaceTimeTrace, cfg: NormConfig) -> list[dict]:
    """One NormReport row per configured window fraction, rounded to whole steps."""
    rows = []
    steps = trace.steps
    for f in cfg.windows:
        m = min(steps, max(1, int(round(f * steps))))
        rows.append(composite_norms(trace, cfg, m * trace.dt).row())
    return rows


def _conserved_rows(trace: SpaceTimeTrace) -> list[dict]:
    keys = sorted(trace.conserved)
    return [{"step": j, **{k: trace.conserved[k][j] for k in keys}} for j in range(len(trace.times))]


def cmd_simulate(cfg: RunConfig, args) -> int:
    state = instantiate(cfg.recipe())
    scheme = cfg.scheme()
    out = run_dir(args.out, "simulate", cfg.hash())
    (out / "config.json").write_text(cfg.dumps())
    save_state(out / "state_initial.bin", state)
    try:
        trace = evolve(state, scheme)
    except EvolutionAborted as exc:
        log.error("%s", exc)
        if exc.trace is not None:
            save_trace(out / "trace_partial.bin", exc.trace)
        save_state(out / "state_last_good.bin", exc.state)
        return EXIT_ABORT
    save_trace(out / "trace.bin", trace)
    save_state(out / "state_final.bin", trace.final_state)
    write_csv(out / "conserved.csv", _conserved_rows(trace))
    write_csv(out / "norms.csv", norm_rows(trace, cfg.norms()))
    c = trace.conserved
    write_json(out / "summary.json", {
        "config_hash": cfg.hash(),
        "steps": trace.steps,
        "mass_drift": float(np.max(np.abs(c["mass"] - c["mass"][0]))),
        "energy_rel_drift": float(np.max(np.abs(c["energy"] - c["energy"][0])) / abs(c["energy"][0])),
    })
    print(out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    sw = cfg["sweep"]
    recipe = scenario(sw["scenario"]) if sw.get("scenario") else cfg.recipe()
    Ns = [float(N) for N in sw["N_list"]]
    scheme = cfg.scheme()
    rep = n_sweep(recipe, Ns, scheme.T, scheme.dt, cfg.norms(), scheme.scheme, _workers(args))
    out = run_dir(args.out, "sweep", cfg.hash())
    (out / "config.json").write_text(cfg.dumps())
    write_csv(out / "sweep_norms.csv", rep.rows())
    write_csv(out / "sweep_conserved.csv", rep.conserved_rows())
    write_json(out / "sweep_summary.json", {
        "N_list": Ns,
        "completed": rep.completed,
        "failures": {str(k): v for k, v in rep.failures.items()},
        "summary": rep.summary(),
    })
    print(out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    v = cfg["verify"]
    fn = LEMMAS[args.lemma]
    if args.lemma == "mlogm":
        check = fn()
    else:
        check = fn(resolutions=tuple(v["resolutions"]), ensemble=int(v["ensemble"]), seed=cfg.seed)
    key = hashlib.sha256(canonical_json({"lemma": args.lemma, "verify": v, "seed": cfg.seed}).encode()).hexdigest()
    out = run_dir(args.out, f"verify-{args.lemma}", key)
    write_csv(out / f"{args.lemma}_ratios.csv", check.rows())
    write_json(out / f"{args.lemma}_summary.json", check.summary())
    print(out)
    return EXIT_OK if check.passed else EXIT_CHECK


def cmd_oracle(cfg: RunConfig, args) -> int:
    o = cfg["oracle"]
    results = oracle_suite(cfg.seed, int(o["n"]), int(o["states"]))
    key = hashlib.sha256(canonical_json({"oracle": o, "seed": cfg.seed}).encode()).hexdigest()
    out = run_dir(args.out, "oracle", key)
    write_csv(out / "oracle_ledger.csv", [r.row() for r in results])
    ok = all(r.passed for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} residual={r.residual:.3e} tol={r.tol:.0e}")
    print(out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_norms(cfg: RunConfig, args) -> int:
    trace = load_trace(args.trace)
    digest = hashlib.sha256(Path(args.trace).read_bytes()).hexdigest()
    key = hashlib.sha256(canonical_json({"norms": cfg["norms"], "trace": digest}).encode()).hexdigest()
    out = run_dir(args.out, "norms", key)
    write_csv(out / "norms.csv", norm_rows(trace, cfg.norms()))
    print(out)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, args) -> int:
    print(f"ok {cfg.hash()}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "norms": cmd_norms,
    "validate-config": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = load_config(args.config).with_seed(args.seed)
    except (OSError, ConfigError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    level = cfg["output"].get("verbosity", "info")
    logging.basicConfig(level=logging.DEBUG if args.verbose else getattr(logging, str(level).upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg.validate()
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
