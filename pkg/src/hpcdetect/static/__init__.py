"""Static path: ELF parsing, RISC-V opcode extraction, listing ingest, n-gram hashing."""

from .elf import EM_RISCV, ElfImage, Section, parse_elf, read_elf
from .listing import parse_disasm_listing, read_listing
from .ngrams import fnv1a_32, ngram_features, ngram_matrix
from .riscv import OpcodeSequence, decode_opcodes

__all__ = ["EM_RISCV", "ElfImage", "Section", "parse_elf", "read_elf", "parse_disasm_listing",
           "read_listing", "fnv1a_32", "ngram_features", "ngram_matrix", "OpcodeSequence",
           "decode_opcodes"]
