"""
`ua-sim` command line: verification suite, estimation and throughput sweeps.

Exit codes: 0 ok, 1 verification failure, 2 usage or config error.
"""

import argparse
import json
import logging
import math
import os
import sys
import time

from . import __version__
from .config import ConfigError, dump_toml, load_config, to_experiment, w_to_dbm
from .simkit import config_hash, run_estimation_sweep, run_throughput_sweep
from .specfun import LANDAU_NU

__all__ = ["main", "write_csv", "format_rows"]

log = logging.getLogger("uasim")

CSV_HEADER = "axis,metric_mean,metric_std,array,scheme,trials,seed"


def _g(x) -> str:
	return format(float(x), ".9g")


def format_rows(result, seed: int) -> str:
	"""CSV text for a SweepResult; power axes are reported in dBm."""
	lines = [CSV_HEADER]
	for r in result.rows:
		a = w_to_dbm(r.axis_value) if result.axis == "tx_power" else r.axis_value
		lines.append(",".join((_g(a), _g(r.mean), _g(r.std), r.array, r.scheme, str(r.trials), str(seed))))
	return "\n".join(lines) + "\n"


def write_csv(path, result, seed: int) -> None:
	with open(path, "w", encoding="utf-8", newline="\n") as fh:
		fh.write(format_rows(result, seed))


def _sidecars(out):
	stem = os.path.splitext(out)[0]
	return stem + ".manifest.json", stem + ".resolved.toml"


def _run_sweep(args, command):
	try:
		resolved = load_config(args.config, command)
		if args.seed is not None:
			resolved["experiment"]["seed"] = args.seed
		if args.trials is not None:
			resolved["experiment"]["trials"] = args.trials
		config = to_experiment(resolved)
	except ConfigError as exc:
		print(f"config error: {exc}", file=sys.stderr)
		return 2
	t0 = time.perf_counter()
	started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
	result = (run_estimation_sweep if command == "estimate" else run_throughput_sweep)(config)
	elapsed = time.perf_counter() - t0
	manifest_path, echo_path = _sidecars(args.output)
	try:
		write_csv(args.output, result, config.seed)
		with open(echo_path, "w", encoding="utf-8", newline="\n") as fh:
			fh.write(dump_toml(resolved))
		manifest = {
			"command": command,
			"config_path": os.path.abspath(args.config),
			"resolved_config": resolved,
			"config_hash": config_hash(config),
			"version": __version__,
			"outputs": {"csv": os.path.abspath(args.output), "resolved_config": os.path.abspath(echo_path)},
			"metric": result.metric,
			"failures": {f"{r.array}/{r.scheme}/{_g(r.axis_value)}": r.failures for r in result.rows if r.failures},
			"closed_form_means": [
				{"array": r.array, "scheme": r.scheme, "axis": _g(r.axis_value), "value": r.closed_mean}
				for r in result.rows if not math.isnan(r.closed_mean)],
			"timing": {"started": started, "elapsed_s": round(elapsed, 3)},
		}
		with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
			json.dump(manifest, fh, indent=2, allow_nan=True)
			fh.write("\n")
	except OSError as exc:
		print(f"error: cannot write output: {exc}", file=sys.stderr)
		return 2
	print(f"wrote {len(result.rows)} rows to {args.output} ({elapsed:.1f} s)")
	return 0


def cmd_verify(args) -> int:
	from .verify import run_checks, select_checks
	if args.filter and not select_checks(args.filter):
		print(f"no checks match {args.filter!r}", file=sys.stderr)
		return 2
	failed = 0
	for name, ok, detail in run_checks(args.filter, nu=args.nu):
		print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", flush=True)
		failed += not ok
	print(f"{failed} failed" if failed else "all checks passed")
	return 1 if failed else 0


def cmd_estimate(args) -> int:
	return _run_sweep(args, "estimate")


def cmd_transmit(args) -> int:
	return _run_sweep(args, "transmit")


def _nonneg_int(text):
	v = int(text)
	if v < 0:
		raise argparse.ArgumentTypeError("must be non-negative")
	return v


def _pos_int(text):
	v = int(text)
	if v < 1:
		raise argparse.ArgumentTypeError("must be at least 1")
	return v


def build_parser() -> argparse.ArgumentParser:
	p = argparse.ArgumentParser(prog="ua-sim", description="Ubiquitous-array link simulations.")
	p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
	p.add_argument("--seed", type=_nonneg_int, help="override the config seed")
	p.add_argument("--trials", type=_pos_int, help="override the config trial count")
	p.add_argument("-v", "--verbose", action="count", default=0)
	sub = p.add_subparsers(dest="command", required=True)

	v = sub.add_parser("verify", help="run the numerical self-checks")
	v.add_argument("--filter", metavar="PAT", help="substring or glob on check names")
	v.add_argument("--nu", type=float, default=LANDAU_NU, help="constant used by the J0 bound checks")
	v.set_defaults(func=cmd_verify)

	for name, fn, what in (("estimate", cmd_estimate, "location-error sweep"),
			("transmit", cmd_transmit, "sum-throughput sweep")):
		s = sub.add_parser(name, help=what)
		s.add_argument("-c", "--config", required=True, metavar="CFG")
		s.add_argument("-o", "--output", required=True, metavar="OUT.csv")
		s.set_defaults(func=fn)
	return p


def main(argv=None) -> int:
	args = build_parser().parse_args(argv)
	logging.basicConfig(level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
		format="%(levelname)s %(name)s: %(message)s")
	return args.func(args)


if __name__ == "__main__":
	sys.exit(main())
