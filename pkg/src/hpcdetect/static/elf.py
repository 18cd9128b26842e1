"""Minimal ELF64 little-endian reader: header, section table, executable text."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..errors import BadMagic, NoTextSection, Truncated, UnsupportedClass

ELF_MAGIC = b"\x7fELF"
ELFCLASS32, ELFCLASS64 = 1, 2
ELFDATA2LSB = 1
EM_RISCV = 243
SHF_EXECINSTR = 0x4
SHT_NOBITS = 8

_EHDR = struct.Struct("<16sHHIQQQIHHHHHH")   # 64 bytes
_SHDR = struct.Struct("<IIQQQQIIQQ")          # 64 bytes


@dataclass(frozen=True)
class Section:
    name: str
    offset: int
    addr: int
    size: int
    flags: int
    type: int = 0

    @property
    def executable(self) -> bool:
        return bool(self.flags & SHF_EXECINSTR)


@dataclass(frozen=True)
class ElfImage:
    machine: int
    entry: int
    sections: tuple[Section, ...]
    text_section: Section
    text: bytes
    elf_class: str = "elf64"
    endianness: str = "little"


def parse_elf(data: bytes) -> ElfImage:
    """Parse an ELF64 LE image and pull out ``.text`` (else the first executable section)."""
    data = bytes(data)
    if len(data) < _EHDR.size:
        raise Truncated(f"ELF header needs {_EHDR.size} bytes, got {len(data)}")
    if data[:4] != ELF_MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    ei_class, ei_data = data[4], data[5]
    if ei_class != ELFCLASS64:
        raise UnsupportedClass(f"ELF class {ei_class} (only 64-bit is supported)")
    if ei_data != ELFDATA2LSB:
        raise UnsupportedClass(f"data encoding {ei_data} (only little-endian is supported)")
    (_ident, _type, machine, _version, entry, _phoff, shoff, _flags, _ehsize,
     _phentsize, _phnum, shentsize, shnum, shstrndx) = _EHDR.unpack_from(data, 0)

    if shoff == 0 or shnum == 0:
        raise NoTextSection("image has no section header table")
    if shentsize < _SHDR.size:
        raise Truncated(f"section header entry size {shentsize} too small")
    if shoff + shnum * shentsize > len(data):
        raise Truncated("section header table runs past end of file")

    raw = [_SHDR.unpack_from(data, shoff + i * shentsize) for i in range(shnum)]
    if shstrndx >= shnum:
        raise Truncated(f"section name table index {shstrndx} out of range")
    str_off, str_size = raw[shstrndx][4], raw[shstrndx][5]
    if str_off + str_size > len(data):
        raise Truncated("section name table runs past end of file")
    strtab = data[str_off:str_off + str_size]

    def name_at(idx: int) -> str:
        if idx >= len(strtab):
            raise Truncated(f"section name offset {idx} out of range")
        end = strtab.find(b"\0", idx)
        return strtab[idx:end if end >= 0 else len(strtab)].decode("ascii", "replace")

    sections = []
    for (sh_name, sh_type, sh_flags, sh_addr, sh_offset, sh_size, *_rest) in raw:
        sec = Section(name_at(sh_name), sh_offset, sh_addr, sh_size, sh_flags, sh_type)
        if sh_type != SHT_NOBITS and sh_offset + sh_size > len(data):
            raise Truncated(f"section {sec.name!r} runs past end of file")
        sections.append(sec)

    text = next((s for s in sections if s.name == ".text"), None)
    if text is None:
        text = next((s for s in sections if s.executable and s.type != SHT_NOBITS), None)
    if text is None:
        raise NoTextSection("no .text or executable section")
    return ElfImage(machine, entry, tuple(sections), text,
                    data[text.offset:text.offset + text.size])


def read_elf(path) -> ElfImage:
    with open(path, "rb") as fh:
        return parse_elf(fh.read())
