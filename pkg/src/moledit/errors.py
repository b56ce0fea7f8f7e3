"""Exception hierarchy. Every class carries a short ``code`` used as a skip reason."""

from __future__ import annotations


class MoleditError(Exception):
    code = "error"


class SmilesError(MoleditError, ValueError):
    code = "parse_error"


class EmptyInput(SmilesError):
    pass


class UnclosedRing(SmilesError):
    pass


class UnbalancedParens(SmilesError):
    pass


class BadBracketAtom(SmilesError):
    pass


class ValenceOverflow(SmilesError):
    pass


class MissingSeparator(SmilesError):
    pass


class MappingError(MoleditError):
    code = "mapping_error"


class DuplicateMapNumber(MappingError):
    code = "duplicate_map"


class UnmappedProductAtom(MappingError):
    code = "unmapped_product_atom"


class ProductAtomMissingFromSubstrates(MappingError):
    code = "product_atom_missing"


class ElementMismatch(MappingError):
    code = "element_mismatch"


class EmptyCenter(MoleditError):
    code = "empty_center"


class NonTerminating(MoleditError):
    code = "non_terminating"


class MalformedKey(MoleditError, ValueError):
    code = "malformed_key"


class AnchorMismatch(MoleditError):
    code = "anchor_mismatch"


class InvalidResult(MoleditError):
    code = "invalid_result"


class SlotUnassigned(MoleditError):
    code = "slot_unassigned"


class NoValidSite(MoleditError):
    code = "no_valid_site"


class BadHeader(MoleditError):
    code = "bad_header"
