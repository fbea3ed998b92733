import json

import pytest
from hypothesis import given

from conftest import rel, worldsets
from wsa.errors import FormatError
from wsa.io import dumps_db, load_db, save_db, world_from_json, world_to_json
from wsa.relmodel import BOT, World


@given(worldsets({"R": ("A", "B"), "S": ("C",)}, ("a", "b", 0, -3, "#x"), max_worlds=1, max_rows=4))
def test_round_trip(ws):
    w = next(iter(ws))
    back, dom = world_from_json(json.loads(dumps_db(w, {0, "a"})))
    assert back == w and set(dom) == {0, "a"}


def test_integers_are_tagged(tmp_path):
    w = World({"R": rel("A B", (1, "1"))})
    obj = world_to_json(w)
    assert obj["relations"]["R"]["tuples"] == [["#1", "1"]]
    path = tmp_path / "db.json"
    save_db(w, path)
    assert load_db(path) == (w, None)


def test_plain_json_integers_are_accepted():
    w, _ = world_from_json({"relations": {"R": {"schema": ["A"], "tuples": [[3], ["#4"]]}}})
    assert w["R"].tuples == {(3,), (4,)}


def test_symbols_that_look_like_integers_are_rejected():
    with pytest.raises(FormatError):
        world_to_json(World({"R": rel("A", ("#12",))}))


def test_bottom_is_never_data():
    with pytest.raises(FormatError):
        world_to_json(World({"R": rel("A", (BOT,))}))
    with pytest.raises(FormatError):
        world_from_json({"relations": {"R": {"schema": ["A"], "tuples": [["_bot"]]}}})


@pytest.mark.parametrize("obj", [
    [],
    {"relations": {"_V": {"schema": ["P"]}}},
    {"relations": {"R": {"tuples": []}}},
    {"relations": {"R": {"schema": ["A", "A"]}}},
    {"relations": {"R": {"schema": ["A"], "tuples": [["a", "b"]]}}},
    {"relations": {"R": {"schema": ["A"], "tuples": [[1.5]]}}},
    {"relations": {"R": {"schema": ["A"], "tuples": [[True]]}}},
    {"relations": {}, "domain": "abc"},
])
def test_bad_files(obj):
    with pytest.raises(FormatError):
        world_from_json(obj)


def test_reserved_names_allowed_for_representations():
    w, _ = world_from_json({"relations": {"_V": {"schema": ["P"]}}}, reserved_ok=True)
    assert "_V" in w


def test_broken_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(FormatError):
        load_db(p)
