"""Edit actions and the template key codec.

Key grammar::

    key    := N "|" kind "|" action (";" action)*
    AA     := "AA:el=<int>,chg=<int>,hs=<int>,ar=<0|1>,ord=<dec>@<slot>"
    EA     := "EA:dchg=<int>,dhs=<int>,ar=<n|s|c>,chir=<n|0|+|->@<slot>"
    EB     := "EB:dord=<dec>,st=<n|c|t>,dir=<n|u|d>@<slot>,<slot>"
    slot   := "c"<int> | "a"<int>

``c`` slots are modified product atoms (numbered by first modification),
``a`` slots are atoms created by AddAtom (numbered by creation). For
chirality ``+`` is clockwise and ``-`` anticlockwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .errors import MalformedKey

AROMATIC_CHANGES = ("n", "s", "c")
CHIRALITY_CHANGES = ("n", "0", "+", "-")
STEREO_CHANGES = ("n", "c", "t")
DIRECTION_CHANGES = ("n", "u", "d")
ADD_ORDERS = (1.0, 1.5, 2.0, 3.0)


@dataclass(frozen=True)
class AddAtom:
    element: int
    formal_charge: int
    num_h: int
    aromatic: bool
    bond_order: float
    attach_slot: str

    def encode(self) -> str:
        return (
            f"AA:el={self.element},chg={self.formal_charge},hs={self.num_h},"
            f"ar={int(self.aromatic)},ord={fmt_dec(self.bond_order)}@{self.attach_slot}"
        )

    @property
    def slots(self) -> tuple[str, ...]:
        return (self.attach_slot,)


@dataclass(frozen=True)
class EditAtom:
    charge_delta: int
    h_delta: int
    aromatic_change: str
    chirality_change: str
    slot: str

    def encode(self) -> str:
        return (
            f"EA:dchg={self.charge_delta},dhs={self.h_delta},ar={self.aromatic_change},"
            f"chir={self.chirality_change}@{self.slot}"
        )

    @property
    def slots(self) -> tuple[str, ...]:
        return (self.slot,)


@dataclass(frozen=True)
class EditBond:
    order_delta: float
    stereo_change: str
    direction_change: str
    slot_pair: tuple[str, str]

    def encode(self) -> str:
        a, b = self.slot_pair
        return (
            f"EB:dord={fmt_dec(self.order_delta)},st={self.stereo_change},"
            f"dir={self.direction_change}@{a},{b}"
        )

    @property
    def slots(self) -> tuple[str, ...]:
        return self.slot_pair


EditAction = Union[AddAtom, EditAtom, EditBond]


@dataclass(frozen=True)
class CenterSignature:
    """Product-side description of center slots, used only to match sites."""

    atoms: tuple[tuple[int, int, bool, int], ...]  # (element, charge, aromatic, H count)
    bonds: tuple[tuple[int, int, float], ...]  # (slot i, slot j, order) with i < j

    def to_json(self) -> dict:
        return {
            "atoms": [[el, chg, int(ar), hs] for el, chg, ar, hs in self.atoms],
            "bonds": [[i, j, order] for i, j, order in self.bonds],
        }

    @classmethod
    def from_json(cls, obj: dict) -> CenterSignature:
        return cls(
            tuple((el, chg, bool(ar), hs) for el, chg, ar, hs in obj["atoms"]),
            tuple((i, j, float(order)) for i, j, order in obj["bonds"]),
        )


@dataclass(frozen=True)
class Template:
    n_center: int
    actions: tuple[EditAction, ...]
    kind: str  # "atom" or "bond"
    center_signature: CenterSignature | None = field(default=None, compare=False)

    @property
    def key(self) -> str:
        return encode_template(self)


def fmt_dec(x: float) -> str:
    return f"{x:.1f}"


def encode_template(t: Template) -> str:
    return f"{t.n_center}|{t.kind}|" + ";".join(a.encode() for a in t.actions)


_SLOT = r"([ca]\d+)"
_INT = r"(-?\d+)"
_DEC = r"(-?\d+\.\d)"
_AA = re.compile(rf"AA:el={_INT},chg={_INT},hs={_INT},ar=([01]),ord={_DEC}@{_SLOT}")
_EA = re.compile(rf"EA:dchg={_INT},dhs={_INT},ar=([nsc]),chir=([n0+\-])@{_SLOT}")
_EB = re.compile(rf"EB:dord={_DEC},st=([nct]),dir=([nud])@{_SLOT},{_SLOT}")


def decode_action(text: str) -> EditAction:
    m = _AA.fullmatch(text)
    if m:
        el, chg, hs, ar, order, slot = m.groups()
        if float(order) not in ADD_ORDERS:
            raise MalformedKey(f"bad AddAtom bond order in {text!r}")
        return AddAtom(int(el), int(chg), int(hs), ar == "1", float(order), slot)
    m = _EA.fullmatch(text)
    if m:
        dchg, dhs, ar, chir, slot = m.groups()
        return EditAtom(int(dchg), int(dhs), ar, chir, slot)
    m = _EB.fullmatch(text)
    if m:
        dord, st, d, a, b = m.groups()
        return EditBond(float(dord), st, d, (a, b))
    raise MalformedKey(f"unrecognized action {text!r}")


def decode_template(key: str) -> Template:
    parts = key.split("|")
    if len(parts) != 3:
        raise MalformedKey(f"expected 'N|kind|actions' in {key!r}")
    n_text, kind, body = parts
    if not n_text.isdigit() or int(n_text) < 1:
        raise MalformedKey(f"N must be a positive integer in {key!r}")
    if kind not in ("atom", "bond"):
        raise MalformedKey(f"unknown template kind {kind!r}")
    if not body:
        raise MalformedKey(f"template {key!r} has no actions")
    actions = tuple(decode_action(a) for a in body.split(";"))
    n = int(n_text)
    centers = {s for a in actions for s in a.slots if s[0] == "c"}
    if centers != {f"c{i}" for i in range(n)}:
        raise MalformedKey(f"center slots {sorted(centers)} do not match N={n}")
    if kind == "bond" and n < 2:
        raise MalformedKey("bond template needs at least two center slots")
    return Template(n, actions, kind)
