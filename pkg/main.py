import argparse
import logging
import sys
from typing import List, Optional

from cli.commands import COMMANDS
from config import settings
from exceptions import TqoError
from models import FaultName
from utils.run_config import RunConfig, load_run_config

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tqo-verifier",
        description="对易投影格点模型（DW / Levin-Wen）的拓扑量子序数值检查",
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="build | verify | gsd-table")
    parser.add_argument("--config", default=None, help="key = value 运行配置文件")
    parser.add_argument("--seed", type=int, default=None, help="覆盖配置中的随机种子")
    parser.add_argument("--workers", type=int, default=None, help="并发检查的线程数上限")
    parser.add_argument("--out", default=None, help="报告 / 表格输出路径")
    parser.add_argument("--fault", default=None, choices=[f.value for f in FaultName], help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    try:
        config = load_run_config(args.config) if args.config else RunConfig()
        config = config.with_overrides(seed=args.seed, workers=args.workers, out=args.out, fault=args.fault)
        cfg = config.settings_for(settings)
        logger.info(f"执行 {args.command}: {config.model.value} {config.algebra} "
                    f"{config.cellulation}:{config.size} seed={cfg.seed}")
        return COMMANDS[args.command](config, cfg)
    except TqoError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
