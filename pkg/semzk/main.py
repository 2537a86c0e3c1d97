"""
semzk command-line entry point.

Subcommands:
- simulate: ZK or SEM evolution with snapshots and invariant logs
- riesz-check, ap-check: Riesz identities, norm searches and A_p constants
- carleman-check, commutator-check, persistence-check, interp-check: estimate harnesses
- annulus-report, uniqueness-experiment: annulus decay of solution differences

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

import sys
from typing import Optional, Sequence

from semzk.cli import cli_dispatch


def main(argv: Optional[Sequence[str]] = None) -> int:
    return cli_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
