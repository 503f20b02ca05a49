import json

import pytest

from causalbands.errors import InputError, StructuralError
from causalbands.graph import (
    Admg,
    backdoor_graph,
    bow_graph,
    c_components,
    conditioning_sets,
    is_structural_instrument,
    iv_graph,
    latent_projection,
    topological_order,
    two_instrument_graph,
)


def test_accessors_follow_declaration_order():
    g = two_instrument_graph()
    assert g.parents("X") == ("I1", "I2")
    assert g.children("X") == ("Y",)
    assert g.spouses("Y") == ("X",)
    assert g.has_bidirected("Y", "X")
    assert g.card("I1") == 2


@pytest.mark.parametrize(
    "nodes, edges, bi",
    [
        ((("A", 2), ("A", 2)), (), ()),
        ((("A", 0),), (), ()),
        ((("A", 2), ("B", 2)), (("A", "C"),), ()),
        ((("A", 2),), (("A", "A"),), ()),
        ((("A", 2), ("B", 2)), (("A", "B"), ("A", "B")), ()),
        ((("A", 2), ("B", 2)), (("A", "B"), ("B", "A")), ()),
        ((("A", 2), ("B", 2)), (), (("A", "B"), ("B", "A"))),
        ((("A", 2),), (), (("A", "A"),)),
    ],
)
def test_malformed_graphs_rejected(nodes, edges, bi):
    with pytest.raises(StructuralError):
        Admg(nodes, edges, bi)


def test_cycle_error_names_a_node():
    with pytest.raises(StructuralError) as exc:
        Admg((("A", 2), ("B", 2), ("C", 2)), (("A", "B"), ("B", "C"), ("C", "A")))
    assert exc.value.node in {"A", "B", "C"}


def test_topological_order_breaks_ties_by_declaration():
    g = Admg((("B", 2), ("A", 2), ("C", 2)), (("A", "C"),))
    assert topological_order(g) == ["B", "A", "C"]


def test_c_components():
    g = Admg((("A", 2), ("B", 2), ("C", 2), ("D", 2)), (), (("A", "C"), ("C", "D")))
    assert c_components(g) == [("A", "C", "D"), ("B",)]
    assert c_components(g, among=["A", "B", "D"]) == [("A",), ("B",), ("D",)]


def test_conditioning_sets_reduce_histories():
    # X's prefix component is {X} with parent I; Y's is {X, Y} with parents I, X
    assert conditioning_sets(iv_graph()) == {"I": (), "X": ("I",), "Y": ("I", "X")}
    assert conditioning_sets(backdoor_graph()) == {"Z": (), "X": ("Z",), "Y": ("Z", "X")}
    g = Admg((("A", 2), ("B", 2), ("C", 2)), (("A", "C"),))
    assert conditioning_sets(g) == {"A": (), "B": (), "C": ("A",)}


def test_structural_instrument():
    assert is_structural_instrument(iv_graph(), "I", "X", "Y")
    g = Admg((("I", 2), ("X", 2), ("Y", 2)), (("I", "X"), ("X", "Y"), ("I", "Y")))
    assert not is_structural_instrument(g, "I", "X", "Y")
    with pytest.raises(InputError):
        is_structural_instrument(iv_graph(), "I", "I", "Y")


def test_json_round_trip(tmp_path):
    g = two_instrument_graph(card=3)
    path = tmp_path / "g.json"
    path.write_text(json.dumps(g.to_dict()))
    assert Admg.load(path) == g


def test_json_defaults_and_errors():
    g = Admg.from_dict({"nodes": ["X", "Y"], "edges": [["X", "Y"]]})
    assert g.cards == {"X": 2, "Y": 2}
    with pytest.raises(InputError):
        Admg.from_dict({"edges": []})
    with pytest.raises(InputError):
        Admg.from_dict({"nodes": ["X"], "edges": [["X"]]})


def test_latent_projection():
    g = two_instrument_graph()
    assert latent_projection(g, ["I1", "X", "Y"]) == Admg(
        (("I1", 2), ("X", 2), ("Y", 2)), (("I1", "X"), ("X", "Y")), (("X", "Y"),)
    )
    assert latent_projection(g, ["X", "Y"]) == bow_graph()
    chain = Admg((("U", 2), ("A", 2), ("B", 2)), (("U", "A"), ("U", "B")))
    assert latent_projection(chain, ["A", "B"]).bidirected_edges == (("A", "B"),)
    with pytest.raises(KeyError):
        latent_projection(g, ["Q"])
