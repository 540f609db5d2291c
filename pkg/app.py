import logging
import logging.config
import os
from pathlib import Path

import click
from dotenv import load_dotenv

from outputs import TOOL_VERSION
from resources.galerkin import blp as GalerkinGroup
from resources.rk import blp as RkGroup
from resources.study import blp as StudyGroup

# Bundled logging setup, overridable with RKSCALE_LOGGING_CONFIG
LOGGING_CONFIG = Path(__file__).resolve().parent / "logging.ini"


def _configure_logging(verbose):
    config_file = os.getenv("RKSCALE_LOGGING_CONFIG", str(LOGGING_CONFIG))
    if Path(config_file).is_file():
        logging.config.fileConfig(config_file, disable_existing_loggers = False)
    else:
        logging.basicConfig(format = "%(levelname)-5.5s [%(name)s] %(message)s")
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG if verbose > 1 else logging.INFO)


def register_group(root, group):
    # Commands of every resource group sit directly under the root command
    for name, command in group.commands.items():
        root.add_command(command, name)


def create_app():
    # Reads RKSCALE_* settings from a local .env file, if any
    load_dotenv()

    @click.group(help = "Implicit Runge-Kutta methods on spectral Hilbert scales.")
    @click.option("-v", "--verbose", count = True, help = "-v for progress, -vv for debug output.")
    @click.version_option(TOOL_VERSION, prog_name = "rkscale")
    def app(verbose):
        _configure_logging(verbose)

    register_group(app, RkGroup)
    register_group(app, GalerkinGroup)
    register_group(app, StudyGroup)

    return app


def main():
    create_app()(prog_name = "rkscale")


if __name__ == "__main__":
    main()
