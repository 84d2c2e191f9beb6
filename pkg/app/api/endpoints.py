import argparse

from app.api import subdifferentiation, verification


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subgrad",
        description="Automatic subdifferentiation of piecewise polynomial programs, with oracle checks.",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default from SUBGRAD_LOG_LEVEL)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # run / naive / pieces
    subdifferentiation.register(subparsers)

    # check / bench
    verification.register(subparsers)

    return parser
