"""Command-line entry point: ``horizonlab <command> [flags]``.

Exit codes: 0 when every check passes, 1 when a check fails (the failing
criterion is named on stderr), 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import cascade as cs
from . import funceq as fe
from . import haar as hm
from . import verify
from .nohair import (
    KERR_NEWMAN,
    SCHWARZSCHILD,
    ChannelForbidden,
    InvalidState,
    NoHairVector,
    Units,
)
from .rng import stream
from .tunneling import ChannelGrid, EvaporationStuck, spectrum

COMMANDS = ("spectrum", "cascade", "verify-funceq", "verify-haar", "verify-spin",
            "verify-penrose", "verify-all")
MODELS = {"schwarzschild": SCHWARZSCHILD, "kerr_newman": KERR_NEWMAN}
# runtime plumbing that must not change a report's bytes
RUNTIME_FIELDS = ("workers", "output", "format", "table", "summary")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = "schwarzschild"
    mass: float = 1.0
    charge: float = 0.0
    spin: float = 0.0
    delta: float = 0.1
    charge_quantum: float = 1.0
    spin_quantum: float = 0.5
    q_max: int = 0
    j_max: int = 0
    seed: int = 0
    trajectories: int = 1000
    mode: str = "sampling"
    log_n: float = 0.0
    kernel: dict = field(default_factory=lambda: {"family": "schwarzschild"})
    dim: int = 16
    dr1: int = 2
    dr2: int = 4
    samples: int = 100_000
    random_input: bool = False
    jp_max: str = "3"
    spin_j_max: str = "3"
    pairs: int = 100
    workers: int | None = None
    output: str | None = None
    format: str = "json"
    table: str | None = None
    summary: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.model not in MODELS:
            raise UsageError(f"unknown model {self.model!r}; choose from {sorted(MODELS)}")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.mode not in cs.MODES:
            raise UsageError(f"mode must be one of {cs.MODES}")
        if self.seed < 0 or self.seed >= 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        for name in ("trajectories", "samples", "pairs", "dim", "dr1", "dr2"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def reproducible(self):
        """The fields that determine the result."""
        return {k: v for k, v in self.to_dict().items() if k not in RUNTIME_FIELDS}

    def config_hash(self):
        blob = json.dumps(self.reproducible(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # physics objects

    @property
    def units(self):
        return Units(self.delta, self.charge_quantum, self.spin_quantum)

    @property
    def grid(self):
        return ChannelGrid(self.units, self.q_max > 0, self.j_max > 0, self.q_max, self.j_max)

    @property
    def state(self):
        return NoHairVector.from_real(self.mass, self.charge, self.spin, self.units)

    @property
    def entropy_model(self):
        return MODELS[self.model]


def metadata(cfg: RunConfig):
    return {
        "config": cfg.reproducible(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "versions": {"horizonlab": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
    }


def _dump(obj):
    return json.dumps(verify.plain(obj), sort_keys=True, indent=2) + "\n"


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_with_meta(text, cfg, path):
    """CSV bodies stay pure; their metadata goes next to them as JSON."""
    _write(text, path)
    if path is not None:
        Path(str(path) + ".meta.json").write_text(_dump(metadata(cfg)))


def _report(cfg, body, path=None):
    doc = dict(metadata(cfg))
    doc.update(body)
    _write(_dump(doc), path if path is not None else cfg.output)


def _failures(checks: dict):
    return [name for name, res in checks.items() if not res]


# commands; each returns a list of failing criterion names

def cmd_spectrum(cfg):
    spec = spectrum(cfg.entropy_model, cfg.state, cfg.grid)
    total = float(spec.probabilities.sum())
    if cfg.format == "csv":
        _write_with_meta(spec.to_csv(), cfg, cfg.output)
    else:
        _report(cfg, {"spectrum": spec.to_dict(), "probability_sum": total})
    return _failures({"normalisation": abs(total - 1.0) <= 1e-12})


def cmd_cascade(cfg):
    model, X0 = cfg.entropy_model, cfg.state
    ccfg = cs.CascadeConfig(cfg.grid, cfg.mode, cfg.log_n, cfg.trajectories, cfg.seed)
    streams = cs.run_ensemble(model, X0, ccfg, cfg.workers)
    S0 = model(X0)
    lines, worst = [], 0.0
    for i, s in enumerate(streams):
        lw = cs.stream_log_weight(model, s, ccfg)
        worst = max(worst, abs(cs.stream_log_weight(model, s) + S0))
        lines.append(json.dumps({"trajectory": i, "emissions": [x.to_dict() for x in s.emissions],
                                 "log_weight": lw, "steps": len(s)}, sort_keys=True))
    ledgers = all(s.ledger == X0.key for s in streams)
    hist = cs.length_histogram(streams)
    csv = "steps,count\n" + "".join(f"{k},{v}\n" for k, v in hist.items())
    if cfg.output is not None:
        _write("\n".join(lines) + "\n", cfg.output)
        _write_with_meta(csv, cfg, cfg.summary or str(cfg.output) + ".hist.csv")
    else:
        _write(csv, cfg.summary)
    return _failures({"ledger_conservation": ledgers, "telescoping": worst <= 1e-9})


def cmd_verify_funceq(cfg):
    kernel = fe.kernel_from_spec(cfg.kernel)
    rep = verify.funceq_report(kernel, cfg.seed)
    _report(cfg, rep)
    return _failures({
        "functional_residual": rep["functional_residual"] <= 1e-10,
        "pde_residual": rep["pde_residual"] <= 1e-6,
        "reconstruction_error": rep["reconstruction_error"] is not None
                                and rep["reconstruction_error"] <= 1e-5,
    })


def cmd_verify_haar(cfg):
    if cfg.random_input:
        state = hm.PureState.random(cfg.dim, stream(cfg.seed, 0, 41))
    else:
        state = hm.PureState.basis(cfg.dim)
    v = hm.permutation_symmetry_test(state, cfg.dr1, cfg.dr2, cfg.samples, cfg.seed,
                                     workers=cfg.workers)
    rep = v.to_dict()
    rep["samples"] = cfg.samples
    _report(cfg, rep)
    return _failures({"permutation_symmetry": v.passed,
                      "unitarity": rep["max_unitarity_residual"] <= 1e-12})


def cmd_verify_spin(cfg):
    summary, rows = verify.check_spin(cfg.jp_max, cfg.spin_j_max)
    table = verify.spin_table_csv(rows)
    if cfg.table is not None:
        _write_with_meta(table, cfg, cfg.table)
    if cfg.format == "csv":
        _write_with_meta(table, cfg, cfg.output)
    else:
        _report(cfg, summary)
    return _failures({"residuals": summary["all_residuals_ok"],
                      "anomalous_excluded": summary["anomalous_excluded"],
                      "classification": summary["passed"]})


def cmd_verify_penrose(cfg):
    pairs = cs.equal_irreducible_pairs(cfg.pairs, stream(cfg.seed, 0, 31))
    good = cs.penrose_invariance_check(KERR_NEWMAN, pairs)
    bad = cs.penrose_invariance_check(verify.NonIrreducibleEntropy(), pairs)
    if cfg.table is not None:
        _write_with_meta(good.to_csv(), cfg, cfg.table)
    if cfg.format == "csv":
        _write_with_meta(good.to_csv(), cfg, cfg.output)
    else:
        _report(cfg, {"pairs": len(good.rows), "skipped": good.skipped,
                      "max_mismatch": good.max_residual, "control_mismatch": bad.max_residual})
    return _failures({"invariance": good.max_residual <= 1e-9 and len(good.rows) == cfg.pairs,
                      "control_rejected": bad.max_residual >= 1e-3})


def cmd_verify_all(cfg):
    res = verify.verify_all(cfg.seed, cfg.workers)
    _report(cfg, {"criteria": res, "passed": all(r["passed"] for r in res.values())})
    return [name for name, r in res.items() if not r["passed"]]


HANDLERS = {
    "spectrum": cmd_spectrum,
    "cascade": cmd_cascade,
    "verify-funceq": cmd_verify_funceq,
    "verify-haar": cmd_verify_haar,
    "verify-spin": cmd_verify_spin,
    "verify-penrose": cmd_verify_penrose,
    "verify-all": cmd_verify_all,
}


def run(cfg: RunConfig) -> int:
    try:
        failed = HANDLERS[cfg.command](cfg)
    except (InvalidState, ChannelForbidden, EvaporationStuck, ValueError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name in failed:
        print(f"FAILED: {name}", file=sys.stderr)
    return 1 if failed else 0


# argument parsing

def _kernel_arg(text):
    p = Path(text)
    try:
        return json.loads(p.read_text() if p.is_file() else text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"kernel is not valid JSON: {exc}") from None


def _common(p, fmt="json"):
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help=f"output format (default {fmt})")
    p.add_argument("--config", help="JSON file whose keys override the flags")
    p.set_defaults(_format_default=fmt)


def _physics(p):
    p.add_argument("--model", choices=sorted(MODELS))
    p.add_argument("--mass", type=float)
    p.add_argument("--charge", type=float)
    p.add_argument("--spin", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--charge-quantum", type=float)
    p.add_argument("--spin-quantum", type=float)
    p.add_argument("--q-max", type=int, help="largest |q| emitted, in charge quanta")
    p.add_argument("--j-max", type=int, help="largest |j| emitted, in spin quanta")


def build_parser():
    parser = argparse.ArgumentParser(prog="horizonlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="normalised emission spectrum of one state")
    _physics(p)
    _common(p, "csv")

    p = sub.add_parser("cascade", help="Monte Carlo evaporation cascades")
    _physics(p)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--mode", choices=cs.MODES)
    p.add_argument("--log-n", type=float)
    p.add_argument("--summary", help="path for the stream-length histogram CSV")
    _common(p, "json")

    p = sub.add_parser("verify-funceq", help="functional-equation residuals of a kernel")
    p.add_argument("--kernel", type=_kernel_arg, help="kernel description as JSON text or a JSON file")
    _common(p)

    p = sub.add_parser("verify-haar", help="emission-order symmetry under Haar unitaries")
    for name in ("dim", "dr1", "dr2", "samples"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--random-input", action="store_true", default=None)
    _common(p)

    p = sub.add_parser("verify-spin", help="classify particle/daughter spin states")
    p.add_argument("--jp-max")
    p.add_argument("--j-max", dest="spin_j_max")
    p.add_argument("--table", help="path for the CSV classification table")
    _common(p)

    p = sub.add_parser("verify-penrose", help="transition invariance on equal irreducible mass pairs")
    p.add_argument("--pairs", type=int)
    p.add_argument("--table", help="path for the CSV of (I1, I1', residual)")
    _common(p)

    p = sub.add_parser("verify-all", help="every built-in criterion")
    _common(p)
    return parser


def config_from_args(ns) -> RunConfig:
    values = {k: v for k, v in vars(ns).items()
              if v is not None and not k.startswith("_") and k != "config"}
    values.setdefault("format", ns._format_default)
    if ns.config:
        try:
            extra = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(extra, dict):
            raise UsageError("config file must hold a JSON object")
        if extra.get("command", ns.command) != ns.command:
            raise UsageError(f"config is for {extra['command']!r}, not {ns.command!r}")
        values.update(extra)
    for key in ("jp_max", "spin_j_max"):
        if key in values:
            values[key] = str(values[key])
    return RunConfig.from_dict(values)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except (UsageError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
