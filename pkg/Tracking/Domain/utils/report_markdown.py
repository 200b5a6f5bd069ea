from __future__ import annotations

from typing import Any

PERCENT_KEYS = ("auc", "precision", "norm_precision", "d_auc", "d_precision", "d_norm_precision")


def _escape_md(text: str) -> str:
    """Escape markdown table separators in inline content."""
    return text.replace("|", "\\|")


def _format(key: str, value: Any) -> str:
    if value is None:
        return "-"
    if key in PERCENT_KEYS:
        # fractions are reported as percentage points
        text = f"{100.0 * value:.2f}"
        return f"+{text}" if key.startswith("d_") and value > 0 else text
    if isinstance(value, float):
        return f"{value:.3f}"
    return _escape_md(str(value))


def render_table(rows: list[dict], keys: list[str], headers: dict[str, str] | None = None) -> list[str]:
    lines: list[str] = []
    if not keys:
        return lines
    headers = headers or {}
    lines.append("| " + " | ".join(_escape_md(headers.get(k, k)) for k in keys) + " |")
    lines.append("|" + "|".join([" --- "] * len(keys)) + "|")
    for r in rows:
        lines.append("| " + " | ".join(_format(k, r.get(k)) for k in keys) + " |")
    return lines


def rows_to_markdown(
    rows: list[dict],
    keys: list[str],
    *,
    title: str | None = None,
    headers: dict[str, str] | None = None,
    notes: dict[str, str] | None = None,
) -> str:
    lines: list[str] = []
    if title:
        lines.append(f"## {title}")
        lines.append("")
    if notes:
        for k, v in notes.items():
            lines.append(f"- {k}: {_escape_md(v)}")
        lines.append("")
    lines.extend(render_table(rows, keys, headers))
    return "\n".join(lines).rstrip() + "\n"
