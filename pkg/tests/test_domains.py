import numpy as np
import pytest
from hypothesis import given, strategies as st

from heislab.domains import (Complement, GaugeBall, HalfSpace, Intersection, Paraboloid, Rectangle,
                             classify_boundary, parse_domain)
from heislab.errors import InvalidArgument

TEXTS = [
    "ball(center=0.0 0.0 0.0, radius=1.0)",
    "halfspace()",
    "paraboloid(m=2.0)",
    "rectangle(r=0.5, delta=0.25)",
    "intersection(ball(center=0.0 0.0 0.0, radius=2.0), halfspace())",
    "intersection(ball(center=0.0 0.0 0.0, radius=2.0), complement(ball(center=0.0 0.0 0.0, radius=0.5)))",
]


@pytest.mark.parametrize("text", TEXTS)
def test_text_roundtrip(text):
    d = parse_domain(text)
    assert d.to_text() == text
    assert parse_domain(d.to_text()) == d


def test_parse_errors():
    for bad in ("ball(radius=1)", "blob()", "ball(center=0 0 0, radius=-1)", "rectangle(r=1)"):
        with pytest.raises(InvalidArgument):
            parse_domain(bad)


def test_halfspace_classification():
    h = HalfSpace()
    c = classify_boundary(h, np.zeros(3))
    assert c.location == "boundary" and c.characteristic is True
    c = classify_boundary(h, np.array([0.5, 0.0, 0.0]))
    assert c.location == "boundary" and c.characteristic is False
    assert classify_boundary(h, np.array([0.0, 0.0, 1.0])).location == "interior"
    assert classify_boundary(h, np.array([0.0, 0.0, -1.0])).location == "exterior"


def test_ball_interior():
    b = GaugeBall((0.0, 0.0, 0.0), 1.0)
    # rho(z) = 1/2
    assert classify_boundary(b, np.array([0.5, 0.0, 0.0])).location == "interior"
    assert classify_boundary(b, np.array([0.0, 0.0, 1.0])).location == "boundary"


def test_bounding_boxes_contain_domain():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-3, 3, (20000, 3))
    for d in (GaugeBall((0.3, -0.2, 0.5), 1.0), Rectangle(0.5, 0.3),
              Intersection((GaugeBall((0.0, 0.0, 0.0), 2.0), HalfSpace()))):
        lo, hi = d.bounding_box(1)
        inside = pts[d.contains(pts)]
        assert np.all(inside >= lo - 1e-12) and np.all(inside <= hi + 1e-12)


@given(st.tuples(*[st.floats(-2, 2) for _ in range(3)]))
def test_complement_is_disjoint(z):
    b = GaugeBall((0.0, 0.0, 0.0), 1.0)
    z = np.array(z)
    assert not (b.contains(z) and Complement(b).contains(z))


@given(st.floats(0.1, 3.0))
def test_paraboloid_contains_axis(m):
    p = Paraboloid(m)
    assert p.contains(np.array([0.0, 0.0, 0.1]))
    assert not p.contains(np.array([1.0, 0.0, 0.5 * m]))
