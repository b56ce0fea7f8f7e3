"""Periodic table lookups and default valence rules."""

from __future__ import annotations

SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn "
    "Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl "
    "Mc Lv Ts Og"
).split()

ATOMIC_NUMBER = {sym: i + 1 for i, sym in enumerate(SYMBOLS)}

# organic subset: allowed valences for unbracketed atoms
DEFAULT_VALENCES: dict[int, tuple[int, ...]] = {
    5: (3,),
    6: (4,),
    7: (3, 5),
    8: (2,),
    9: (1,),
    15: (3, 5),
    16: (2, 4, 6),
    17: (1,),
    35: (1,),
    53: (1,),
}

ORGANIC_SUBSET = frozenset(["B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"])
AROMATIC_ORGANIC = frozenset(["b", "c", "n", "o", "p", "s"])
AROMATIC_BRACKET = frozenset(["b", "c", "n", "o", "p", "s", "se", "as", "te"])

# upper bound on bond-order sum + H for neutral atoms; used only as a sanity filter
MAX_VALENCE: dict[int, int] = {
    1: 1, 5: 4, 6: 4, 7: 5, 8: 2, 9: 1, 14: 4, 15: 5, 16: 6, 17: 7, 34: 6, 35: 7, 53: 7,
}


def symbol(element: int) -> str:
    return SYMBOLS[element - 1]


def implicit_hydrogens(element: int, bond_sum: float, n_aromatic_bonds: int, aromatic: bool) -> int | None:
    """Implicit H count for an unbracketed organic-subset atom.

    ``bond_sum`` counts aromatic bonds as 1.0 each when ``aromatic`` is set
    (one extra unit is then charged for the pi system). Returns ``None`` when
    the bond sum exceeds every allowed valence of a non-aromatic atom.
    """
    valences = DEFAULT_VALENCES.get(element)
    if valences is None:
        return 0
    used = bond_sum
    if aromatic:
        # aromatic atoms only use their lowest valence (thiophene s gets no H)
        if n_aromatic_bonds:
            used += 1
        return max(0, int(valences[0] - used))
    for v in valences:
        if used <= v:
            return int(v - used)
    return None


def valence_ok(element: int, charge: int, aromatic: bool, bond_sum: float, hs: int) -> bool:
    """Loose chemical sanity check for template application results."""
    if aromatic:
        return True
    limit = MAX_VALENCE.get(element)
    if limit is None:
        return True
    if element in (7, 8, 15, 16):
        limit += charge
    elif element == 6 or element == 5:
        limit -= abs(charge)
    else:
        limit += abs(charge)
    return bond_sum + hs <= limit + 1e-9
