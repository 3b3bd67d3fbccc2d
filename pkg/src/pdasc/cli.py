"""Command-line front end.

Subcommands ``solve``, ``path``, ``bench`` and ``rip``.  Settings come from an
optional ``key=value`` file (``--config``) overridden by flags; flag names are
the keys in kebab case (``--cg-iters`` for ``cg_iters``).  Output is CSV on
stdout unless ``--out`` names a file.

Exit codes: 0 success, 1 usage or configuration error, 2 selection failure,
3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path


from .bench import (
    METRIC_FIELDS,
    REFERENCE_SETTINGS,
    ExperimentSpec,
    _fmt,
    gen_sensing_matrix,
    make_instance,
    run_experiment,
    run_replication,
)
from .continuation import pdasc_solve, write_path_csv
from .exceptions import Unsupported
from .operators import load_dense, parse_dct_descriptor, rip_constant_bruteforce

EXIT_OK, EXIT_USAGE, EXIT_SELECTION, EXIT_BUDGET = 0, 1, 2, 3


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if str(text).strip().lower() in ("", "none", "auto") else float(text)


def _opt_int(text):
    return None if str(text).strip().lower() in ("", "none", "auto") else int(text)


# key -> (section, parser, default); a default of ... marks a required key
KEYS = {
    "ensemble": ("problem", str, "gaussian"),
    "n": ("problem", int, ...),
    "p": ("problem", int, ...),
    "T": ("problem", int, ...),
    "dyna": ("problem", float, 10.0),
    "sigma": ("problem", float, 0.0),
    "seed": ("problem", int, 0),
    "replications": ("problem", int, 1),
    "preset": ("problem", str, ""),
    "operator": ("problem", str, ""),
    "lambda_max": ("solver", _opt_float, None),
    "lambda_min": ("solver", _opt_float, None),
    "N": ("solver", _opt_int, None),
    "rho": ("solver", _opt_float, None),
    "J": ("solver", int, 1),
    "rule": ("solver", str, "mdp"),
    "epsilon": ("solver", _opt_float, None),
    "eta": ("solver", float, 0.5),
    "cg_iters": ("solver", int, 2),
    "out": ("output", str, "-"),
    "verbosity": ("output", int, 0),
    "timing": ("output", _bool, False),
}


class ConfigError(ValueError):
    pass


@dataclass
class CliConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


def parse_config_text(text, source="<config>"):
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key.replace("-", "_")] = value
    return raw


def build_config(file_values, overrides, required=("n", "p", "T")):
    merged = dict(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    values = {}
    for key in merged:
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
    for key, (_, parse, default) in KEYS.items():
        if key in merged:
            try:
                values[key] = parse(merged[key])
            except (TypeError, ValueError):
                raise ConfigError(f"invalid value for key {key!r}: {merged[key]!r}") from None
        elif default is ...:
            if key in required:
                raise ConfigError(f"missing required key {key!r}")
        else:
            values[key] = default
    return CliConfig(values)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def make_parser():
    parser = _Parser(prog="pdasc", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (
        ("solve", "solve one synthetic instance and report its metrics"),
        ("path", "export the continuation path of one instance"),
        ("bench", "selection-rule comparison table"),
        ("rip", "brute-force restricted isometry constants"),
    ):
        p = sub.add_parser(name, help=help_, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="key=value settings file")
        for key in KEYS:
            p.add_argument("--" + key.replace("_", "-"), dest=key, metavar=key.upper())
    return parser


@contextlib.contextmanager
def _output(target):
    if target in ("-", ""):
        yield sys.stdout
    else:
        with open(target, "w", newline="") as fh:
            yield fh


def _log(cfg, msg):
    if cfg["verbosity"] > 0:
        print(msg, file=sys.stderr)


def _spec(cfg, op=None, **kw):
    base = dict(
        ensemble=cfg["ensemble"],
        n=cfg.get("n") if op is None else op.n,
        p=cfg.get("p") if op is None else op.p,
        T=cfg.get("T"),
        dyna=cfg["dyna"],
        sigma=cfg["sigma"],
        seed=cfg["seed"],
        rule=cfg["rule"],
        replications=cfg["replications"],
        epsilon=cfg["epsilon"],
        J=cfg["J"],
        N=cfg["N"] if cfg["N"] is not None else 100,
        rho=cfg["rho"],
        lambda_max=cfg["lambda_max"],
        lambda_min=cfg["lambda_min"],
        eta=cfg["eta"],
        cg_iters=cfg["cg_iters"],
    )
    base.update(kw)
    try:
        return ExperimentSpec(**base)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _load_operator(path):
    try:
        data = Path(path).read_bytes()
        if data.startswith(b"PDASCOP1"):
            return load_dense(path)
        return parse_dct_descriptor(data.decode())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"invalid value for key 'operator': {exc}") from None


def _operator(cfg):
    return _load_operator(cfg["operator"]) if cfg["operator"] else None


def cmd_solve(cfg):
    op = _operator(cfg)
    spec = _spec(cfg, op, replications=1)
    try:
        row = run_replication(spec, 0, op)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not cfg["timing"]:
        row.time_seconds = float("nan")
    active = "nan" if row.failed else str(int(row.set_extra + spec.T - row.set_missed))
    with _output(cfg["out"]) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("active_size", *METRIC_FIELDS))
        w.writerow((active, *(_fmt(getattr(row, f)) for f in METRIC_FIELDS)))
    _log(cfg, f"lambda_hat={row.lambda_hat:.6g} active={active} l2_re={row.l2_re:.3e}")
    return EXIT_SELECTION if row.failed else EXIT_OK


def cmd_path(cfg):
    op = _operator(cfg)
    spec = _spec(cfg, op, replications=1)
    try:
        op, _, y, eps = make_instance(spec, 0, op)
        path = pdasc_solve(op, y, spec.continuation_config(eps))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    with _output(cfg["out"]) as fh:
        write_path_csv(path, fh)
    _log(cfg, f"{len(path.steps)} steps, selected={path.selected}")
    if path.failed and spec.rule in ("mdp", "dp"):
        return EXIT_SELECTION
    return EXIT_OK


BENCH_COLUMNS = ("setting", "method", "time", "error", "set_extra", "set_missed", "lambda_hat")


def _bench_settings(cfg):
    if cfg["preset"] == "reference":
        return [
            (label, dict(ensemble=ens, n=n, p=p, T=T, sigma=sigma))
            for label, ens, n, p, T, sigma in REFERENCE_SETTINGS
        ]
    if cfg["preset"]:
        raise ConfigError(f"unknown preset {cfg['preset']!r}")
    for key in ("n", "p", "T"):
        if cfg.get(key) is None:
            raise ConfigError(f"missing required key {key!r}")
    label = f"{cfg['ensemble']} sigma={cfg['sigma']:g} T={cfg['T']}"
    return [(label, {})]


def cmd_bench(cfg):
    settings = _bench_settings(cfg)
    with _output(cfg["out"]) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_COLUMNS)
        for label, overrides in settings:
            for rule in ("mdp", "bic", "dp"):
                res = run_experiment(_spec(cfg, rule=rule, **overrides))
                a = res.aggregate
                if a.failed:
                    w.writerow((label, rule.upper(), "F", "F", "F", "F", "F"))
                    continue
                t = _fmt(a.time_seconds) if cfg["timing"] else "nan"
                w.writerow(
                    (label, rule.upper(), t, _fmt(a.l2_re), _fmt(a.set_extra), _fmt(a.set_missed), _fmt(a.lambda_hat))
                )
                _log(cfg, f"{label} {rule}: failures={res.failures}")
    return EXIT_OK


def cmd_rip(cfg):
    op = _operator(cfg)
    if op is None:
        for key in ("n", "p"):
            if cfg.get(key) is None:
                raise ConfigError(f"missing required key {key!r}")
        if cfg["ensemble"] == "partial_dct":
            raise ConfigError("rip needs an explicit ensemble (gaussian or bernoulli)")
        op = gen_sensing_matrix(cfg["ensemble"], cfg["n"], cfg["p"], cfg["seed"])
    T = cfg.get("T")
    if T is None:
        raise ConfigError("missing required key 'T'")
    try:
        deltas = [rip_constant_bruteforce(op, k) for k in range(1, T + 2)]
    except Unsupported as exc:
        print(f"pdasc rip: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    with _output(cfg["out"]) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("k", "delta", "bound", "holds"))
        for k, delta in enumerate(deltas, 1):
            # bound of the sparsity-(k-1) recovery assumption
            bound = 1.0 / (4.0 * math.sqrt(k - 1) + 1.0)
            w.writerow((k, _fmt(delta), _fmt(bound), int(delta <= bound)))
    holds = deltas[-1] <= 1.0 / (4.0 * math.sqrt(T) + 1.0)
    _log(cfg, f"delta_{T + 1}={deltas[-1]:.6g}; assumption {'holds' if holds else 'fails'}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "path": cmd_path, "bench": cmd_bench, "rip": cmd_rip}


def main(argv=None):
    parser = make_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    cfg_file = args.pop("config", None)
    try:
        file_values = {}
        if cfg_file:
            try:
                text = Path(cfg_file).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from None
            file_values = parse_config_text(text, cfg_file)
        required = () if command in ("bench", "rip") else ("n", "p", "T")
        cfg = build_config(file_values, args, required=required)
        if cfg["rule"] not in ("mdp", "dp", "bic", "cap"):
            raise ConfigError(f"invalid value for key 'rule': {cfg['rule']!r}")
        return COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"pdasc {command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
