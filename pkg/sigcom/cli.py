"""Main CLI application for sigcom."""

import functools
import logging
import sys
from pathlib import Path

import typer

from sigcom import __app_name__, __version__
from sigcom.commands.run import run_command
from sigcom.commands.spectrum import spectrum_command
from sigcom.commands.stability import stability_command
from sigcom.commands.synth import synth_command
from sigcom.config import get_settings
from sigcom.exceptions import ConfigurationError, SigcomError

app = typer.Typer(
    name=__app_name__,
    help="Signature-based community detection on time-series panels",
    no_args_is_help=True,
    add_completion=False,
)


def version_callback(value: bool) -> None:
    """Display version information."""
    if value:
        typer.echo(f"{__app_name__} v{__version__}")
        raise typer.Exit()


def setup_logging(log_level: str, log_dir: Path = Path(".logs")) -> None:
    """Log to stderr at `log_level` and everything to `<log_dir>/sigcom.log`."""
    numeric_level = getattr(logging, log_level.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"Invalid log level: {log_level}")

    root_logger = logging.getLogger()
    root_logger.handlers.clear()

    formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(numeric_level)
    root_logger.addHandler(console_handler)
    root_logger.setLevel(logging.DEBUG)
    logging.getLogger("sigcom").setLevel(logging.DEBUG)

    try:
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_dir / "sigcom.log")
    except OSError as e:
        logging.getLogger("sigcom").warning(f"File logging disabled: {e}")
        return
    file_handler.setFormatter(formatter)
    file_handler.setLevel(logging.DEBUG)
    root_logger.addHandler(file_handler)


@app.callback()
def main(
    version: bool = typer.Option(
        None,
        "--version",
        "-v",
        help="Show the application version",
        callback=version_callback,
        is_eager=True,
    ),
) -> None:
    """
    sigcom - community detection with path-signature similarity matrices.

    Builds correlation or signature similarity matrices from a price panel,
    filters them by threshold or random matrix theory and maximizes
    modularity with Louvain or greedy agglomeration.
    """
    try:
        settings = get_settings()
        setup_logging(settings.log_level, settings.log_dir)
        logging.getLogger("sigcom").debug(f"Starting {__app_name__} v{__version__}")
    except Exception as e:
        typer.echo(f"Configuration Error: {e}", err=True)
        raise typer.Exit(1)


def handle_exceptions(func):
    """Map sigcom errors to exit codes: 1 config, 2 data, 3 numeric."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except typer.Exit:
            raise
        except ConfigurationError as e:
            typer.echo(f"Configuration Error: {e}", err=True)
            raise typer.Exit(e.exit_code)
        except SigcomError as e:
            typer.echo(f"Error: {e}", err=True)
            raise typer.Exit(e.exit_code)
        except KeyboardInterrupt:
            typer.echo("\nOperation cancelled by user.", err=True)
            raise typer.Exit(130)
        except Exception as e:
            logging.getLogger("sigcom").exception("Unexpected error occurred")
            typer.echo(f"Unexpected error: {e}", err=True)
            typer.echo("Check the logs for more details.", err=True)
            raise typer.Exit(3)

    return wrapper


app.command("run")(handle_exceptions(run_command))
app.command("stability")(handle_exceptions(stability_command))
app.command("synth")(handle_exceptions(synth_command))
app.command("spectrum")(handle_exceptions(spectrum_command))


if __name__ == "__main__":
    app()
