import random

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from wsa.lang.parser import parse_wsa
from wsa.lang.typecheck import typecheck
from wsa.relmodel import Relation, World

settings.register_profile(
    "wsa", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("wsa")

VALUES = ("a", "b", "c")


def rel(schema, *rows) -> Relation:
    if isinstance(schema, str):
        schema = tuple(schema.split())
    return Relation(schema, rows)


def world(**rels) -> World:
    return World(rels)


def query(text: str, w: World):
    return typecheck(parse_wsa(text), w.catalog())


def relations(schema, values=VALUES, max_rows=6):
    row = st.tuples(*[st.sampled_from(values) for _ in schema])
    return st.frozensets(row, max_size=max_rows).map(lambda rows: Relation(schema, rows))


def worlds(schemas, values=VALUES, max_rows=4):
    return st.fixed_dictionaries({n: relations(s, values, max_rows) for n, s in schemas.items()}).map(World)


def worldsets(schemas, values=VALUES, max_worlds=8, max_rows=4):
    return st.frozensets(worlds(schemas, values, max_rows), min_size=1, max_size=max_worlds)


seeds = st.integers(min_value=0, max_value=2**32 - 1).map(random.Random)
