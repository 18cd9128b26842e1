"""Mnemonic extraction from objdump-style disassembly listings (any ISA)."""

from __future__ import annotations

import re

from ..errors import MalformedListing
from .riscv import UNKNOWN, OpcodeSequence

_ADDR = r"\s*[0-9a-fA-F]+:"
# "  4004d6: 55  push %rbp" or tab separated; byte groups of 2, 4 or 8 hex digits
_INSN_RE = re.compile(_ADDR + r"\s+((?:(?:[0-9a-fA-F]{2}){1,4}\s)+)\s*(\S+)")
_BYTES_ONLY_RE = re.compile(_ADDR + r"(?:\s+(?:[0-9a-fA-F]{2}){1,4})+\s*$")
_LABEL_RE = re.compile(r"^\s*[0-9a-fA-F]+\s+<[^>]*>:\s*$")
_SKIP_PREFIXES = ("Disassembly of section", "...")
_BAD = ("(bad)", ".byte", ".word", ".short", ".long", ".insn")


def _mnemonic(line: str):
    if "\t" in line:
        parts = line.split("\t")
        if len(parts) >= 3 and re.fullmatch(_ADDR, parts[0]):
            if re.fullmatch(r"(?:\s*(?:[0-9a-fA-F]{2}){1,4})+\s*", parts[1]) and parts[2].strip():
                return parts[2].split()[0]
    m = _INSN_RE.match(line)
    return m.group(2) if m else None


def parse_disasm_listing(text: str) -> OpcodeSequence:
    """Extract the mnemonic column; blank, label, header and byte-continuation lines are skipped."""
    tokens = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if (not stripped or _LABEL_RE.match(line) or stripped.startswith(_SKIP_PREFIXES)
                or "file format" in stripped):
            continue
        mnem = _mnemonic(line)
        if mnem is None:
            if _BYTES_ONLY_RE.match(line):
                continue
            raise MalformedListing(line_no, f"cannot parse {stripped[:60]!r}")
        tokens.append(UNKNOWN if mnem in _BAD else mnem.lower())
    if not tokens:
        raise MalformedListing(0, "listing contains no instructions")
    return OpcodeSequence(tuple(tokens))


def read_listing(path) -> OpcodeSequence:
    with open(path, encoding="utf-8", errors="replace") as fh:
        return parse_disasm_listing(fh.read())
