import pytest

from ulproof.sexpr import ParseError, dumps, parse_all, parse_one


def test_roundtrip_nested():
    text = "(a (b c) |x y| 1)"
    assert dumps(parse_one(text)) == "(a (b c) x y 1)"


def test_comments_and_positions():
    forms = parse_all("; comment\n(foo\n  bar)")
    assert forms == [["foo", "bar"]]
    assert forms[0][1].line == 3


@pytest.mark.parametrize("bad", ["(a", "a)", "(|x"])
def test_errors(bad):
    with pytest.raises(ParseError):
        parse_all(bad)


def test_parse_one_rejects_many():
    with pytest.raises(ParseError):
        parse_one("a b")
