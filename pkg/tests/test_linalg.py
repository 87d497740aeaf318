from fractions import Fraction

from tensorpad import linalg


def F(x):
    return Fraction(x)


def test_rank_full_and_deficient():
    assert linalg.rank([[1, 2], [3, 4]]) == 2
    assert linalg.rank([[1, 2], [2, 4]]) == 1
    assert linalg.rank([]) == 0
    assert linalg.rank([[0, 0], [0, 0]]) == 0


def test_rank_with_fractions():
    rows = [[F("1/3"), F("2/3")], [F("1/2"), F("1/4")]]
    assert linalg.rank(rows) == 2


def test_solve_combination_unique():
    rows = [[1, 0, 1], [0, 1, 1]]
    target = [2, 3, 5]
    x = linalg.solve_combination(rows, target)
    assert x == [F(2), F(3)]


def test_solve_combination_inconsistent():
    rows = [[1, 0, 0]]
    assert linalg.solve_combination(rows, [0, 1, 0]) is None


def test_solve_combination_rational_result():
    rows = [[4, 0], [0, 8]]
    x = linalg.solve_combination(rows, [1, 2])
    assert x == [Fraction(1, 4), Fraction(1, 4)]


def test_dependency_certificate():
    rows = [[1, 1], [2, 2]]
    cert = linalg.dependency(rows)
    assert cert is not None
    # certificate is a genuine null combination
    combo = [sum(c * row[j] for c, row in zip(cert, rows)) for j in range(2)]
    assert combo == [0, 0]
    assert any(c != 0 for c in cert)


def test_dependency_none_for_independent():
    assert linalg.dependency([[1, 0], [0, 1]]) is None


def test_scalar_multiple_certificate():
    rows = [[1, 2, 3], [2, 4, 6]]
    cert = linalg.dependency(rows)
    assert cert is not None
    ratio = cert[0] / cert[1]
    assert ratio == F(-2)
