import datetime
import io
import json
import sys

from . import __version__
from .base import ParameterError

# Worker count has no effect on results, so it stays out of the metadata
_UNSTAMPED = frozenset(["threads"])


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v
    # 17 significant digits round-trip any double
    return "%.17g" % v


def _parse(text):
    try:
        return float(text)
    except ValueError:
        return text


class ResultTable:
    """Named columns of numbers plus a metadata block.

    CSV output starts with '#'-prefixed metadata lines, one JSON value per
    key, followed by a header row and the data rows.
    """

    def __init__(self, columns, rows=(), metadata=None):
        self.columns = list(columns)
        self.rows = []
        self.metadata = dict(metadata or {})
        for r in rows:
            self.add_row(r)

    def add_row(self, row):
        row = list(row)
        if len(row) != len(self.columns):
            raise ParameterError(
                "row has {} entries, table has {} columns".format(len(row), len(self.columns))
            )
        self.rows.append(row)

    def stamp(self, config, command, seed=None):
        self.metadata["command"] = command
        self.metadata["version"] = __version__
        self.metadata["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        if seed is not None:
            self.metadata["seed"] = seed
        self.metadata["config"] = {k: v for (k, v) in sorted(config.items()) if k not in _UNSTAMPED}
        return self

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self):
        out = io.StringIO()
        for k in sorted(self.metadata):
            out.write("# {}: {}\n".format(k, json.dumps(self.metadata[k], sort_keys=True)))
        out.write(",".join(self.columns) + "\n")
        for r in self.rows:
            out.write(",".join(_fmt(v) for v in r) + "\n")
        return out.getvalue()

    def to_json(self):
        return json.dumps(
            {"metadata": self.metadata, "columns": self.columns, "rows": self.rows},
            indent=1,
            sort_keys=True,
        ) + "\n"

    def render(self, fmt):
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ParameterError("unknown output format {!r}".format(fmt))

    def write(self, path, fmt):
        text = self.render(fmt)
        if path in ("", "-", None):
            sys.stdout.write(text)
        else:
            with open(path, "w", encoding="utf-8") as f:
                f.write(text)

    @classmethod
    def from_csv(cls, text):
        metadata = {}
        lines = text.splitlines()
        i = 0
        while i < len(lines) and lines[i].startswith("#"):
            (k, v) = lines[i][1:].split(":", 1)
            metadata[k.strip()] = json.loads(v)
            i += 1
        columns = lines[i].split(",")
        rows = [[_parse(x) for x in l.split(",")] for l in lines[i + 1:] if l != ""]
        return cls(columns, rows, metadata)
