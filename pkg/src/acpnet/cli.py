"""Command line entry point: run one scenario file and write its CSV outputs."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config, params_echo
from .metrics import mean_fidelity, mean_tts_ms, write_outputs
from .scenario import run_scenario


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acpnet", description="Run a quantum network entanglement scenario.")
    ap.add_argument("--config", required=True, type=Path, help="scenario YAML file")
    ap.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    ap.add_argument("--quiet", action="store_true", help="only report errors")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sc = load_config(args.config, seed=args.seed)
    except ConfigError as exc:
        print(f"acpnet: invalid scenario: {exc}", file=sys.stderr)
        return 2
    result = run_scenario(sc)
    req_path, sum_path = write_outputs(args.out, result.records, result.windows)
    (args.out / "params.json").write_text(json.dumps(params_echo(sc), indent=2, sort_keys=True) + "\n")
    if result.network.violations:
        for v in result.network.violations:
            print(f"acpnet: invariant violation: {v}", file=sys.stderr)
        return 1
    if not args.quiet:
        served = len(result.served)
        tts, fid = mean_tts_ms(result.records), mean_fidelity(result.records)
        print(f"{sc.label}: {served}/{len(result.records)} served, "
              f"mean TTS {tts:.3f} ms, mean fidelity {fid:.4f}" if served else
              f"{sc.label}: 0/{len(result.records)} served")
        print(f"wrote {req_path}, {sum_path}, {args.out / 'params.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
