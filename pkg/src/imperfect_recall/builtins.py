"""Small named games used throughout the docs, demos and tests."""

from __future__ import annotations

from fractions import Fraction

from .game import Chance, Decision, GameTree, Terminal, build_game

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)


def figure1() -> GameTree:
    """Running example: I1 = {h0, h1} on one path (absentminded), I2 = {h2, h3, h4}.

    U(mu) = 5*m11*m13*m21 + m13*m22; optimum 5/4 at (L/2 + R/2, X).
    """
    h2 = Decision("I2", {"X": Terminal(5), "Y": Terminal(0)}, name="h2")
    h1 = Decision("I1", {"L": Terminal(0), "C": Terminal(0), "R": h2}, name="h1")
    h3 = Decision("I2", {"X": Terminal(0), "Y": Terminal(0)}, name="h3")
    h4 = Decision("I2", {"X": Terminal(0), "Y": Terminal(1)}, name="h4")
    root = Decision("I1", {"L": h1, "C": h3, "R": h4}, name="h0")
    return build_game(root, {"I1": ("L", "C", "R"), "I2": ("X", "Y")})


def figure2_restricted() -> GameTree:
    """``figure1`` with every I2 node replaced by a fair coin over X and Y."""

    def coin(x, y, name):
        return Chance({"X": (HALF, Terminal(x)), "Y": (HALF, Terminal(y))}, name=name)

    h1 = Decision("I1", {"L": Terminal(0), "C": Terminal(0), "R": coin(5, 0, "h2")}, name="h1")
    root = Decision("I1", {"L": h1, "C": coin(0, 0, "h3"), "R": coin(0, 1, "h4")}, name="h0")
    return build_game(root, {"I1": ("L", "C", "R")})


def absentminded_driver() -> GameTree:
    """Exit at the first junction pays 0, at the second 1, continuing past both pays 0."""
    h1 = Decision("I", {"Continue": Terminal(0), "Exit": Terminal(1)}, name="h1")
    root = Decision("I", {"Continue": h1, "Exit": Terminal(0)}, name="h0")
    return build_game(root, {"I": ("Continue", "Exit")})


def sleeping_beauty() -> GameTree:
    """A fair coin; heads wakes Beauty once, tails twice, always in the same info set."""
    h1 = Decision("I", {"wake": Terminal(0, name="z_heads")}, name="h1")
    h3 = Decision("I", {"wake": Terminal(0, name="z_tails")}, name="h3")
    h2 = Decision("I", {"wake": h3}, name="h2")
    root = Chance({"heads": (HALF, h1), "tails": (HALF, h2)}, name="h0")
    return build_game(root, {"I": ("wake",)})


def irrational() -> GameTree:
    """One info set whose utility is p(x) = -16/3 x^6 + x^2 + x in x = mu(a1).

    The maximizer is the real root of 32x^5 - 2x - 1 near 0.58365, which is not
    expressible in radicals.
    """

    def chain(length: int, payoff: int, prefix: str):
        sub: object = Terminal(payoff)
        for k in range(length, 0, -1):
            sub = Decision("I1", {"a1": sub, "a2": Terminal(0)}, name=f"{prefix}{k}")
        return sub

    root = Chance(
        {
            "l": (THIRD, chain(6, -16, "l")),
            "m": (THIRD, chain(2, 3, "m")),
            "r": (THIRD, chain(1, 3, "r")),
        },
        name="root",
    )
    return build_game(root, {"I1": ("a1", "a2")})


def trivial() -> GameTree:
    """A single terminal node paying 0."""
    return build_game(Terminal(0, name="z"))


_BUILDERS = {
    "figure1": figure1,
    "figure2_restricted": figure2_restricted,
    "absentminded_driver": absentminded_driver,
    "sleeping_beauty": sleeping_beauty,
    "irrational": irrational,
}


def builtin_games() -> dict[str, GameTree]:
    return {name: make() for name, make in _BUILDERS.items()}


def builtin_game(name: str) -> GameTree:
    if name == "trivial":
        return trivial()
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown built-in game {name!r}; choose from {sorted(_BUILDERS)}") from None


def builtin_names() -> list[str]:
    return list(_BUILDERS)
