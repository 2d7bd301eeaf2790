"""Reading and writing network, coalescence, chain and jet files.

All files are JSON.  A network is ``{"n_cells": n, "labels": [...],
"edges": [[source, target, weight], ...]}`` with weights given as integers or
as decimal/fraction strings, parsed exactly.  A coalescence file holds
``first``, ``merge_1``, ``second``, ``merge_2`` (networks inline or as paths
relative to the file) and optionally ``mu``.  A jet file is a flat table of
Taylor coefficients.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .errors import CoalnetError, JetError, ParseError
from .network import ChainLink, Coalescence, Network, build_network, to_fraction
from .system import JET_ALIASES, JET_FIELDS, DiffusiveJet


def _line_at(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def _key_line(text: str | None, key: str, occurrence: int = 0) -> int | None:
    if not text:
        return None
    pos = -1
    for _ in range(occurrence + 1):
        pos = text.find(f'"{key}"', pos + 1)
        if pos < 0:
            return None
    return _line_at(text, pos)


def _edge_line(text: str | None, occurrence: int, index: int) -> int | None:
    """Line of edge ``index`` inside the ``occurrence``-th ``"edges"`` array."""
    if not text:
        return None
    pos = -1
    for _ in range(occurrence + 1):
        pos = text.find('"edges"', pos + 1)
        if pos < 0:
            return None
    pos = text.find("[", pos)
    depth, k, in_str = 0, -1, False
    for i in range(pos, len(text)):
        ch = text[i]
        if in_str:
            if ch == "\\":
                continue
            if ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == "[":
            depth += 1
            if depth == 2:
                k += 1
                if k == index:
                    return _line_at(text, i)
        elif ch == "]":
            depth -= 1
            if depth == 0:
                break
    return None


def loads(text: str, source: str = "<string>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc.msg} (column {exc.colno})", exc.lineno) from None


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def parse_network(obj, text: str | None = None, occurrence: int = 0, source: str = "<network>") -> Network:
    """Build a network from a decoded JSON object; errors carry line numbers when ``text`` is given."""
    if not isinstance(obj, dict):
        raise ParseError(f"{source}: a network must be an object")
    unknown = set(obj) - {"n_cells", "labels", "edges", "description"}
    if unknown:
        raise ParseError(f"{source}: unknown keys {sorted(unknown)}", _key_line(text, sorted(unknown)[0]))
    if "n_cells" not in obj:
        raise ParseError(f"{source}: missing n_cells")
    n = obj["n_cells"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ParseError(f"{source}: n_cells must be a positive integer", _key_line(text, "n_cells", occurrence))
    edges = obj.get("edges", [])
    if not isinstance(edges, list):
        raise ParseError(f"{source}: edges must be an array", _key_line(text, "edges", occurrence))
    triples = []
    for k, e in enumerate(edges):
        line = _edge_line(text, occurrence, k)
        if not isinstance(e, list) or len(e) != 3:
            raise ParseError(f"{source}: edge {k + 1} must be [source, target, weight]", line)
        s, t, w = e
        for cell in (s, t):
            if isinstance(cell, bool) or not isinstance(cell, int):
                raise ParseError(f"{source}: edge {k + 1}: cell {cell!r} is not an integer", line)
        try:
            triples.append((s, t, to_fraction(w)))
        except CoalnetError as exc:
            raise ParseError(f"{source}: edge {k + 1}: {exc}", line) from None
    labels = obj.get("labels")
    try:
        return build_network(n, triples, labels)
    except CoalnetError as exc:
        raise ParseError(f"{source}: {exc}", _key_line(text, "edges", occurrence)) from None


def load_network(path) -> Network:
    text = read_text(path)
    return parse_network(loads(text, str(path)), text, source=str(path))


def _component(value, base: Path, text: str, occurrence: int, source: str) -> tuple[Network, int]:
    """Inline network or path; returns the network and the next ``"edges"`` occurrence."""
    if isinstance(value, str):
        return load_network(base / value), occurrence
    net = parse_network(value, text, occurrence, source)
    return net, occurrence + (isinstance(value, dict) and "edges" in value)


def _cell_index(obj, key: str, text: str, source: str) -> int:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{source}: {key} must be an integer cell index", _key_line(text, key))
    return v


def parse_coalescence(obj, text: str | None = None, base: Path = Path("."), source: str = "<coalescence>"):
    """Return ``(Coalescence, mu or None)``."""
    if not isinstance(obj, dict):
        raise ParseError(f"{source}: a coalescence must be an object")
    for key in ("first", "merge_1", "second", "merge_2"):
        if key not in obj:
            raise ParseError(f"{source}: missing {key}")
    first, occ = _component(obj["first"], base, text, 0, source)
    second, _ = _component(obj["second"], base, text, occ, source)
    i = _cell_index(obj, "merge_1", text, source)
    j = _cell_index(obj, "merge_2", text, source)
    try:
        coal = Coalescence(first, i, second, j)
    except CoalnetError as exc:
        raise ParseError(f"{source}: {exc}", _key_line(text, "merge_1")) from None
    mu = obj.get("mu")
    if mu is not None:
        try:
            mu = to_fraction(mu)
        except CoalnetError as exc:
            raise ParseError(f"{source}: mu: {exc}", _key_line(text, "mu")) from None
    return coal, mu


def load_coalescence(path):
    text = read_text(path)
    return parse_coalescence(loads(text, str(path)), text, Path(path).parent, str(path))


def is_coalescence_file(path) -> bool:
    obj = loads(read_text(path), str(path))
    return isinstance(obj, dict) and "first" in obj


def load_chain(path) -> list[ChainLink]:
    """``{"components": [{"network": ..., "merge_in": i, "merge_out": j}, ...]}``."""
    text = read_text(path)
    obj = loads(text, str(path))
    comps = obj.get("components") if isinstance(obj, dict) else None
    if not isinstance(comps, list) or not comps:
        raise ParseError(f"{path}: components must be a nonempty array", _key_line(text, "components"))
    links, occ = [], 0
    for k, c in enumerate(comps):
        if not isinstance(c, dict) or "network" not in c:
            raise ParseError(f"{path}: component {k + 1} needs a network")
        net, occ = _component(c["network"], Path(path).parent, text, occ, str(path))
        links.append(ChainLink(net, c.get("merge_in"), c.get("merge_out")))
    return links


def parse_jet(obj, text: str | None = None, source: str = "<jet>") -> DiffusiveJet:
    """Jet from a flat table; ``g_x`` is optional and ``h_22``, if present, is checked."""
    if not isinstance(obj, dict):
        raise ParseError(f"{source}: a jet must be an object")
    values, h_22 = {}, None
    for key, raw in obj.items():
        name = JET_ALIASES.get(key, key)
        if name == "description":
            continue
        if name not in JET_FIELDS and name != "h_22":
            raise ParseError(f"{source}: unknown jet entry {key!r}", _key_line(text, key))
        try:
            value = to_fraction(raw)
        except CoalnetError as exc:
            raise ParseError(f"{source}: {key}: {exc}", _key_line(text, key)) from None
        if name == "h_22":
            h_22 = value
        else:
            values[name] = value
    try:
        return DiffusiveJet.create(h_22=h_22, **values)
    except JetError as exc:
        raise ParseError(f"{source}: {exc}") from None


def load_jet(path) -> DiffusiveJet:
    text = read_text(path)
    return parse_jet(loads(text, str(path)), text, str(path))


def network_to_json(net: Network) -> str:
    lines = ["{", f'  "n_cells": {net.n_cells},', f'  "labels": {json.dumps(list(net.labels))},', '  "edges": [']
    edges = []
    for s, t, w in net.edges:
        wj = str(w.numerator) if w.denominator == 1 else json.dumps(str(w))
        edges.append(f"    [{s}, {t}, {wj}]")
    lines.append(",\n".join(edges))
    lines += ["  ]", "}"]
    return "\n".join(lines) + "\n"


def save_network(net: Network, path) -> None:
    Path(path).write_text(network_to_json(net), encoding="utf-8")


# bundled examples


def bundled_names() -> list[str]:
    root = resources.files("coalnet") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json") and p.name != "default_jet.json")


def bundled_path(name: str) -> Path:
    p = resources.files("coalnet") / "data" / f"{name}.json"
    if not p.is_file():
        raise ParseError(f"no bundled example {name!r}; available: {', '.join(bundled_names())}")
    return Path(str(p))


def resolve(path_or_name: str) -> Path:
    """A file path, or the name of a bundled example."""
    p = Path(path_or_name)
    if p.exists():
        return p
    return bundled_path(path_or_name)


def bundled_coalescence(name: str):
    return load_coalescence(bundled_path(name))


def default_jet_path() -> Path:
    return Path(str(resources.files("coalnet") / "data" / "default_jet.json"))
