import logging
import sys
from typing import Optional, Sequence

from app.api.endpoints import build_parser
from app.config import get_settings
from app.exceptions import (
    CommandError,
    DimensionMismatchError,
    DSLParseError,
    OracleError,
    PieceEnumerationError,
    SubgradError,
)

EXIT_CODES = (
    (DSLParseError, 2),
    (DimensionMismatchError, 3),
    (OracleError, 4),
    (PieceEnumerationError, 6),
)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or settings.log_level)
    logger = logging.getLogger(__name__)
    logger.debug(f"Running '{args.command}'")

    try:
        args.handler(args)
    except CommandError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        if exc.witness:
            print(f"witness: {exc.witness}", file=sys.stderr)
        return exc.exit_code
    except SubgradError as exc:
        for error_type, code in EXIT_CODES:
            if isinstance(exc, error_type):
                print(f"error: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
