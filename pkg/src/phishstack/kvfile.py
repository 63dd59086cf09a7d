"""Plain-text ``key = value`` files used for dataset schemas and run configs.

Lines starting with ``#`` are comments. A value may continue on following
indented lines, which is handy for long column lists::

    label_column = Result
    feature_columns =
        having_IP_Address, URL_Length,
        Shortining_Service

Lists are comma separated. Keys are case-insensitive.
"""

import configparser
from pathlib import Path

_SECTION = "phishstack"


def parse_kv(text, source="<string>"):
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=None,
        empty_lines_in_values=False,
    )
    parser.read_string(f"[{_SECTION}]\n" + text, source=str(source))
    return {k: v.strip() for k, v in parser[_SECTION].items()}


def read_kv(path):
    path = Path(path)
    return parse_kv(path.read_text(encoding="utf-8"), source=path)


def split_list(value, sep=","):
    return [item.strip() for item in value.replace("\n", sep).split(sep) if item.strip()]


def parse_bool(value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def format_kv(items):
    """Render ``(key, value)`` pairs back to the same text format."""
    lines = []
    for key, value in items:
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
