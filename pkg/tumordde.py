"""Entry point: ``python tumordde.py <command> [flags]``."""

from cli.main import cli

if __name__ == "__main__":
    cli()
