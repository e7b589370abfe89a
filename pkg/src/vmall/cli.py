"""Operator command line.

Subcommands: serve, seed, settle, export-scene, report. All of them read the
service config (JSON); see README for the format.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .api import create_app, jsonable
from .config import MallConfig
from .errors import MallError
from .scene import export_scene_doc, export_vrml
from .service import Mall
from .domain import ADMIN

DEFAULT_CONFIG = "mall-config.json"


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=DEFAULT_CONFIG,
                        help=f"path to the service config (default {DEFAULT_CONFIG})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vmall", description="virtual mall platform")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    _add_config_arg(p_serve)

    p_seed = sub.add_parser("seed", help="load a fixture file")
    p_seed.add_argument("fixture", help="path to the fixture JSON")
    _add_config_arg(p_seed)

    p_settle = sub.add_parser("settle", help="batch, settle, and post all approved transactions")
    p_settle.add_argument("--max-batch", type=int, default=100)
    p_settle.add_argument("--ledger-out", default=None,
                          help="also write the ledger CSV export to this path")
    _add_config_arg(p_settle)

    p_export = sub.add_parser("export-scene", help="export the 3D mall scene")
    p_export.add_argument("--format", choices=["wrl", "doc"], required=True)
    p_export.add_argument("--out", required=True)
    _add_config_arg(p_export)

    p_report = sub.add_parser("report", help="shop report for a period")
    p_report.add_argument("--shop", required=True)
    p_report.add_argument("--from", dest="period_from", type=float, default=0.0)
    p_report.add_argument("--to", dest="period_to", type=float, default=1e18)
    _add_config_arg(p_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = MallConfig.from_file(args.config) if Path(args.config).exists() \
            else MallConfig()
        if args.command == "serve":
            import uvicorn
            mall = Mall(config)
            uvicorn.run(create_app(mall), host=config.host, port=config.port)
            return 0
        mall = Mall(config)
        try:
            if args.command == "seed":
                counts = mall.load_fixture_file(args.fixture)
                print(json.dumps(counts))
            elif args.command == "settle":
                summary = mall.payments.settle_to_quiescence(max_batch=args.max_batch)
                print(json.dumps(summary))
                if args.ledger_out:
                    Path(args.ledger_out).write_text(mall.payments.export_ledger_csv(),
                                                     encoding="utf-8")
            elif args.command == "export-scene":
                scene = mall.scene()
                text = export_vrml(scene) if args.format == "wrl" else export_scene_doc(scene)
                Path(args.out).write_text(text, encoding="utf-8")
                print(f"wrote {args.out}")
            elif args.command == "report":
                report = mall.storefront.shop_report(
                    args.shop, args.period_from, args.period_to, ADMIN)
                print(json.dumps(jsonable(report)))
        finally:
            mall.close()
        return 0
    except MallError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
