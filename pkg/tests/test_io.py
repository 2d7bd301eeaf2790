import json

import pytest
import sympy as sp

from coalnet import ParseError, build_network
from coalnet import io
from coalnet.network import sequential_coalesce

NET = """{
  "n_cells": 3,
  "edges": [
    [1, 2, 1],
    [2, 3, "1/2"],
    [3, 1, 0.25]
  ]
}
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_network_file_round_trip(tmp_path):
    net = io.load_network(write(tmp_path, "n.json", NET))
    assert net.weights[(2, 3)] == sp.Rational(1, 2) and net.weights[(3, 1)] == sp.Rational(1, 4)
    out = tmp_path / "out.json"
    io.save_network(net, out)
    assert io.load_network(out) == net


def test_malformed_json_reports_line(tmp_path):
    with pytest.raises(ParseError) as info:
        io.load_network(write(tmp_path, "bad.json", '{\n  "n_cells": 2,\n  "edges": [1, 2\n}'))
    assert info.value.line == 4


def test_bad_edge_reports_its_line(tmp_path):
    text = NET.replace('[2, 3, "1/2"]', '[2, 3, "half"]')
    with pytest.raises(ParseError) as info:
        io.load_network(write(tmp_path, "n.json", text))
    assert info.value.line == 5
    text = NET.replace("[3, 1, 0.25]", "[3, 1]")
    with pytest.raises(ParseError) as info:
        io.load_network(write(tmp_path, "n.json", text))
    assert info.value.line == 6


def test_structural_errors(tmp_path):
    for text in ('{"n_cells": 0}', '{"n_cells": 2, "edges": [[1, 2, 1]], "colour": 1}', '[]',
                 '{"n_cells": 2, "edges": [[1, 3, 1]]}', '{"n_cells": 3, "edges": [[1, 2, 1]]}',
                 '{"n_cells": 2, "edges": [[1.5, 2, 1]]}'):
        with pytest.raises(ParseError):
            io.load_network(write(tmp_path, "n.json", text))
    with pytest.raises(ParseError):
        io.load_network(tmp_path / "missing.json")


def test_coalescence_with_relative_paths(tmp_path):
    write(tmp_path, "a.json", NET)
    write(tmp_path, "b.json", '{"n_cells": 2, "edges": [[1, 2, 3]]}')
    p = write(tmp_path, "c.json", json.dumps({"first": "a.json", "merge_1": 3, "second": "b.json",
                                              "merge_2": 1, "mu": "3"}))
    coal, mu = io.load_coalescence(p)
    assert coal.network.n_cells == 4 and mu == 3
    assert coal.is_ffcn


def test_coalescence_bad_merge_index(tmp_path):
    p = write(tmp_path, "c.json", json.dumps({"first": json.loads(NET), "merge_1": 9,
                                              "second": {"n_cells": 1}, "merge_2": 1}))
    with pytest.raises(ParseError):
        io.load_coalescence(p)


def test_inline_second_component_errors_point_at_it(tmp_path):
    text = ('{\n  "first": {"n_cells": 1},\n  "merge_1": 1,\n  "second": {\n    "n_cells": 2,\n'
            '    "edges": [\n      [1, 2, "x"]\n    ]\n  },\n  "merge_2": 1\n}\n')
    with pytest.raises(ParseError) as info:
        io.load_coalescence(write(tmp_path, "c.json", text))
    assert info.value.line == 7


def test_jet_aliases_and_h22(tmp_path):
    base = json.loads(io.default_jet_path().read_text())
    base["h_1λ"] = base.pop("h_1lam")
    base["g_xl"] = base.pop("g_xlam")
    j = io.parse_jet(base)
    assert j.h_1lam == sp.Rational(1, 3) and j.g_xlam == 1 and j.g_x is None
    assert io.parse_jet(base | {"h_22": "1/2"}).h_22 == sp.Rational(1, 2)
    with pytest.raises(ParseError):
        io.parse_jet(base | {"h_22": "1"})
    with pytest.raises(ParseError) as info:
        io.load_jet(write(tmp_path, "j.json", '{\n  "g_xx": 1,\n  "h_9": 2\n}'))
    assert info.value.line == 3


def test_default_jet_file():
    j = io.load_jet(io.default_jet_path())
    assert j.g_xxx == -1 and j.h_122 == sp.Rational(1, 5)
    assert j.at_eigenvalue(2).g_x == -2


def test_bundled_examples():
    names = io.bundled_names()
    assert {"sqrt_growth", "quarter_root", "signed_linear", "symmetric_triangle", "loops_pair",
            "double_zero"} <= set(names)
    for name in names:
        coal, mu = io.bundled_coalescence(name)
        assert coal.network.n_cells == coal.n1 + coal.n2 - 1
    with pytest.raises(ParseError):
        io.bundled_path("nope")
    assert io.resolve("sqrt_growth") == io.bundled_path("sqrt_growth")


def test_chain_file(tmp_path):
    write(tmp_path, "b.json", '{"n_cells": 2, "edges": [[1, 2, 1]]}')
    p = write(tmp_path, "chain.json", json.dumps({"components": [
        {"network": "b.json", "merge_out": 2},
        {"network": {"n_cells": 2, "edges": [[1, 2, 2]]}, "merge_in": 1, "merge_out": 2},
        {"network": "b.json", "merge_in": 1}]}))
    links = io.load_chain(p)
    seq = sequential_coalesce(links)
    assert seq.network.n_cells == 4
    assert seq.network == build_network(4, [(1, 2, 1), (2, 3, 2), (3, 4, 1)])
    with pytest.raises(ParseError):
        io.load_chain(write(tmp_path, "empty.json", '{"components": []}'))
