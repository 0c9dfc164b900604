"""Entry point for measure-flow-lab."""

import sys


def main() -> int:
    """Main entry point."""
    from measure_flow_lab.cli import run_cli
    return run_cli()


if __name__ == "__main__":
    sys.exit(main())
