import math
from pathlib import Path
from typing import Optional

from jinja2 import Environment, FileSystemLoader

from ..models.report_models import EvalReport
from .file_ops import PathLike, atomic_write_text

TEMPLATE_DIR = Path(__file__).parent.parent / "templates"


def _db(value: Optional[float]) -> str:
    if value is None or math.isnan(value):
        return f"{'n/a':>10}"
    if math.isinf(value):
        return f"{'inf':>10}"
    return f"{value:>10.3f}"


def _l2(value: Optional[float]) -> str:
    if value is None or math.isnan(value):
        return f"{'-':>12}"
    return f"{value:>12.4e}"


def get_report_template(template_name: str = "eval_report.txt.j2"):
    env = Environment(loader=FileSystemLoader(TEMPLATE_DIR), keep_trailing_newline=True)
    env.filters["db"] = _db
    env.filters["l2"] = _l2
    return env.get_template(template_name)


def render_report_table(report: EvalReport) -> str:
    """Aligned plain-text table: one row per sample, then mean and median."""
    name_width = max([len("sample"), len("median")] + [len(r.name) for r in report.rows])
    return get_report_template().render(report=report, name_width=name_width)


def write_report(report: EvalReport, path: PathLike) -> tuple:
    """
    Write <path> as JSON and the table next to it with a .txt suffix.

    Infinite PSNR values are written as the JSON constant Infinity.
    """
    path = Path(path)
    json_path = path if path.suffix == ".json" else path.with_suffix(".json")
    table_path = json_path.with_suffix(".txt")
    atomic_write_text(json_path, report.model_dump_json(indent=2) + "\n")
    atomic_write_text(table_path, render_report_table(report))
    return json_path, table_path


def read_report(path: PathLike) -> EvalReport:
    return EvalReport.model_validate_json(Path(path).read_text(encoding="utf-8"))
