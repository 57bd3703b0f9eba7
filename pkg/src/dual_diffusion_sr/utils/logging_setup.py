import logging
import os
import sys
from typing import Optional

from tqdm import tqdm

RESET = "\x1b[0m"
BOLD = "\x1b[1m"

# level -> (ANSI colour, icon)
LEVEL_STYLE = {
    "DEBUG": ("\x1b[38;5;244m", "·"),
    "INFO": ("\x1b[38;5;39m", ""),
    "WARNING": ("\x1b[38;5;214m", "⚠"),
    "ERROR": ("\x1b[38;5;196m", "✗"),
}

PACKAGE_PREFIX = "dual_diffusion_sr."

# Libraries that log at INFO during normal use of the pipeline
NOISY_LOGGERS = ("PIL", "langgraph")


def _supports_color(stream) -> bool:
    return hasattr(stream, "isatty") and stream.isatty()


class CompactFormatter(logging.Formatter):
    """`HH:MM:SS │ LEVEL message`, with the emitting module appended when show_names is set."""

    def __init__(self, use_color: bool, show_names: bool = False):
        super().__init__("%(asctime)s │ %(level)s %(message)s%(origin)s", datefmt="%H:%M:%S")
        self.use_color = use_color
        self.show_names = show_names

    def format(self, record: logging.LogRecord) -> str:
        color, icon = LEVEL_STYLE.get(record.levelname, ("", " "))
        label = f"{icon} {record.levelname:<7}"
        record.level = f"{color}{label}{RESET}" if self.use_color and color else label
        name = record.name.removeprefix(PACKAGE_PREFIX)
        record.origin = f"  ({name})" if self.show_names and name != "root" else ""
        return super().format(record)


class TqdmHandler(logging.StreamHandler):
    """Routes records through tqdm.write so sampler progress bars stay on one line."""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            tqdm.write(self.format(record), file=self.stream)
            self.flush()
        except Exception:
            self.handleError(record)


def configure_logging(verbosity: int = 0, library_level: Optional[int] = logging.WARNING):
    """
    Install the compact formatter on the root logger.

    verbosity: -1 warnings only, 0 info, 2+ debug. Output goes to stderr so
    command results written to stdout stay machine-readable.
    """
    root = logging.getLogger()
    # Replace our own handler on reconfiguration, leave foreign ones alone
    for old in [h for h in root.handlers if isinstance(h, TqdmHandler)]:
        root.removeHandler(old)

    level = logging.INFO
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity < 0:
        level = logging.WARNING

    handler = TqdmHandler(sys.stderr)
    use_color = _supports_color(sys.stderr) and os.environ.get("NO_COLOR") is None
    handler.setFormatter(CompactFormatter(use_color=use_color, show_names=level == logging.DEBUG))
    root.addHandler(handler)
    root.setLevel(level)

    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(library_level)


def banner(text: str, char: str = "═", width: int = 60):
    line = char * width
    logging.info(line)
    logging.info(f"{text}")
    logging.info(line)


def step(number: int, title: str):
    logging.info("")
    logging.info(f"{BOLD}[Step {number}] {title}{RESET}")


def metric(phase: str, step_index: int, **values: float):
    """One-line training metric record, e.g. `[kernel] step 200 loss=0.0831`."""
    rendered = " ".join(f"{k}={v:.4g}" for k, v in values.items())
    logging.getLogger(f"dual_diffusion_sr.{phase}").info(f"[{phase}] step {step_index} {rendered}")


def success(msg: str):
    logging.info(f"✓ {msg}")


def fail(msg: str):
    logging.error(f"✗ {msg}")
