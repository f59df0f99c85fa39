"""roundsos entry point."""

from __future__ import annotations

import sys
from typing import NoReturn

from roundsos.cli.commands import run


def main() -> NoReturn:
    """Main entry point."""
    try:
        code = run()
    except KeyboardInterrupt:
        code = 130
    sys.exit(code)


if __name__ == "__main__":
    main()
