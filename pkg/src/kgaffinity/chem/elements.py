"""Element symbols and the valence model used for implicit hydrogens."""

from __future__ import annotations

ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn "
    "Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl "
    "Mc Lv Ts Og"
).split()
ELEMENT_SET = frozenset(ELEMENTS)

ORGANIC_SUBSET = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
AROMATIC_BRACKET = ("se", "as", "te", "b", "c", "n", "o", "p", "s")

# (period, group) for main-group elements that carry a valence model
_MAIN_GROUP = {
    "B": (2, 13), "C": (2, 14), "N": (2, 15), "O": (2, 16), "F": (2, 17), "Ne": (2, 18),
    "Al": (3, 13), "Si": (3, 14), "P": (3, 15), "S": (3, 16), "Cl": (3, 17), "Ar": (3, 18),
    "Ga": (4, 13), "Ge": (4, 14), "As": (4, 15), "Se": (4, 16), "Br": (4, 17), "Kr": (4, 18),
    "In": (5, 13), "Sn": (5, 14), "Sb": (5, 15), "Te": (5, 16), "I": (5, 17), "Xe": (5, 18),
}
_PERIOD2 = {13: (3,), 14: (4,), 15: (3, 5), 16: (2,), 17: (1,), 18: (0,)}
_HEAVIER = {13: (3,), 14: (4,), 15: (3, 5), 16: (2, 4, 6), 17: (1, 3, 5, 7), 18: (0,)}


def allowed_valences(symbol: str, charge: int = 0) -> tuple[int, ...] | None:
    """Valences allowed for an element at a formal charge, or None if unmodelled.

    A charged atom is treated like its isoelectronic neighbour in the same
    period: N+ behaves like C, O- like F, C- like N.
    """
    if symbol == "H":
        return (1,) if charge == 0 else (0,)
    key = _MAIN_GROUP.get(symbol)
    if key is None:
        return None
    period, group = key
    group -= charge
    table = _PERIOD2 if period == 2 else _HEAVIER
    if group not in table:
        return None
    return table[group]
