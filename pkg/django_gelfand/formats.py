"""
Plain-text graph files and CSV output.

Graph files hold one directive per line, '#' starts a comment:

    vertex <label>
    edge <label> <label> <weight>
    omega <label> [<label> ...]
"""
import csv
import io
import logging
import math

from pathlib import Path
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple

from django.core.exceptions import ValidationError

from .models import WeightedGraph


logger = logging.getLogger(__name__)

FLOAT_FORMAT = '{:.17g}'


def _malformed(source: str, number: int, message: str) -> ValidationError:
    return ValidationError(f"{source}:{number}: {message}", code='malformed_line')


def parse_graph_text(text: str, source: str = '<string>') -> Tuple[WeightedGraph, List[str]]:
    """
    Parse graph directives.

    Returns:
        (graph, omega): the graph and the Ω labels in file order (possibly empty).

    Raises:
        ValidationError: 'malformed_line' with the line number, 'unknown_label'
            for an omega vertex that is never declared, 'no_edges', or any
            graph construction error.
    """
    vertices: List[str] = []
    edges: List[Tuple[str, str, float]] = []
    omega: List[Tuple[int, str]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        directive, *args = line.split()
        directive = directive.lower()
        if directive == 'vertex':
            if len(args) != 1:
                raise _malformed(source, number, f"'vertex' takes one label: {raw.strip()!r}")
            vertices.append(args[0])
        elif directive == 'edge':
            if len(args) != 3:
                raise _malformed(source, number, f"'edge' takes two labels and a weight: {raw.strip()!r}")
            try:
                weight = float(args[2])
            except ValueError:
                raise _malformed(source, number, f"weight {args[2]!r} is not a number")
            if not math.isfinite(weight) or weight <= 0:
                raise ValidationError(
                    f"{source}:{number}: edge {args[0]}-{args[1]} has nonpositive weight {args[2]}",
                    code='nonpositive_weight'
                )
            edges.append((args[0], args[1], weight))
        elif directive == 'omega':
            if not args:
                raise _malformed(source, number, "'omega' needs at least one label")
            omega.extend((number, label) for label in args)
        else:
            raise _malformed(source, number, f"unknown directive {directive!r}")

    if not edges:
        raise ValidationError(f"{source}: graph has no edges", code='no_edges')
    try:
        graph = WeightedGraph.from_edges(edges, vertices=vertices)
    except ValidationError as e:
        raise ValidationError(f"{source}: {e.messages[0]}", code=e.code)

    known = set(graph.labels)
    for number, label in omega:
        if label not in known:
            raise ValidationError(f"{source}:{number}: omega vertex {label!r} is not in the graph", code='unknown_label')
    logger.debug(f"Parsed {source}: {graph!r}, omega={[label for _, label in omega]}")
    return graph, [label for _, label in omega]


def parse_graph_file(path) -> Tuple[WeightedGraph, List[str]]:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ValidationError(f"Cannot read graph file {path}: {e}", code='malformed_line')
    except UnicodeDecodeError as e:
        raise ValidationError(f"Graph file {path} is not UTF-8 text: {e}", code='parse_error')
    return parse_graph_text(text, source=str(path))


def to_graph_text(graph: WeightedGraph, omega: Iterable[str], comment: Optional[str] = None) -> str:
    """Render a graph in the file format; weights are written with repr so they re-parse exactly."""
    lines = []
    if comment:
        lines.extend(f"# {line}" for line in comment.splitlines())
    for x, y, w in graph.edges():
        lines.append(f"edge {x} {y} {w!r}")
    lines.append('omega ' + ' '.join(omega))
    return '\n'.join(lines) + '\n'


def format_value(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return FLOAT_FORMAT.format(value)
    return str(value)


def emit_csv(header: Sequence[str], rows: Iterable[Sequence], path=None, stream: Optional[TextIO] = None,
             trailer: Optional[str] = None) -> int:
    """
    Write header and rows as CSV, floats with 17 significant digits, then
    `trailer` as a last line when given.

    Writes to `path` when given, else to `stream`. Returns the number of data rows.

    Raises:
        ValidationError: a row with the wrong number of columns, or an
            unwritable path.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    count = 0
    for row in rows:
        if len(row) != len(header):
            raise ValidationError(
                f"Row {count + 1} has {len(row)} columns, expected {len(header)}", code='dimension_mismatch'
            )
        writer.writerow([format_value(value) for value in row])
        count += 1
    if trailer is not None:
        buffer.write(trailer.rstrip("\n") + "\n")

    if path is not None:
        try:
            Path(path).write_text(buffer.getvalue(), encoding='utf-8')
        except OSError as e:
            raise ValidationError(f"Cannot write {path}: {e}", code='unwritable_path')
    elif stream is not None:
        stream.write(buffer.getvalue())
    return count
