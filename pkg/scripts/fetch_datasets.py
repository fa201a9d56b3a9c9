"""Fetch or import a case-study count series into tests/data/<name>.csv.

The source can be a URL or a local file. It may be a single column of
counts, a whitespace-separated list, or a CSV with several columns (pick
one with ``--column``). The result is written as a one-column CSV with a
``count`` header, and its sha256 is printed so it can be recorded.

Examples
--------
    python scripts/fetch_datasets.py polio ~/Downloads/polio.csv --column polio
    python scripts/fetch_datasets.py drunkenness https://example.org/drunk.csv --column 2
"""

import argparse
import csv
import hashlib
import io
import sys
import urllib.request
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"
EXPECTED_LENGTH = {"polio": 166, "drunkenness": 139}


def read_source(source):
    if source.startswith(("http://", "https://")):
        with urllib.request.urlopen(source, timeout=30) as resp:
            return resp.read().decode("utf-8")
    return Path(source).expanduser().read_text()


def extract_counts(text, column=None):
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if rows and len(rows[0]) == 1 and len(rows) == 1:
        # a single line of whitespace-separated values
        rows = [[v] for v in rows[0][0].split()]
    if not rows:
        raise ValueError("source is empty")
    header = None
    if not rows[0][0].strip().lstrip("+").isdigit():
        header, rows = [c.strip().strip('"') for c in rows[0]], rows[1:]
    if column is None:
        index = len(rows[0]) - 1
    elif column.isdigit():
        index = int(column) - 1
    elif header is not None and column in header:
        index = header.index(column)
    else:
        raise ValueError(f"column {column!r} not found; header is {header}")
    counts = []
    for lineno, row in enumerate(rows, start=1):
        value = float(row[index])
        if value < 0 or value != int(value):
            raise ValueError(f"row {lineno}: {row[index]!r} is not a nonnegative integer")
        counts.append(int(value))
    return counts


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("name", help="dataset name, e.g. polio or drunkenness")
    parser.add_argument("source", help="URL or local file")
    parser.add_argument("--column", help="1-based column index or header name (default: last column)")
    parser.add_argument("--out-dir", type=Path, default=DATA_DIR)
    args = parser.parse_args(argv)

    counts = extract_counts(read_source(args.source), args.column)
    expected = EXPECTED_LENGTH.get(args.name)
    if expected is not None and len(counts) != expected:
        print(f"warning: {args.name} should have {expected} values, got {len(counts)}", file=sys.stderr)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    target = args.out_dir / f"{args.name}.csv"
    target.write_text("count\n" + "".join(f"{c}\n" for c in counts))
    digest = hashlib.sha256(target.read_bytes()).hexdigest()
    print(f"{target}  {len(counts)} values  sha256 {digest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
