"""Linear-sweep RV64IMC mnemonic decoder (plus Zicsr and Zifencei).

Only mnemonics are produced; operands are not needed for n-gram statistics.
Anything outside the supported encodings becomes "unknown", and decoding
never fails: an undecodable parcel is skipped by its nominal length.
"""

from __future__ import annotations

from dataclasses import dataclass

UNKNOWN = "unknown"


def _bits(x: int, hi: int, lo: int) -> int:
    return (x >> lo) & ((1 << (hi - lo + 1)) - 1)


_BRANCH = {0: "beq", 1: "bne", 4: "blt", 5: "bge", 6: "bltu", 7: "bgeu"}
_LOAD = {0: "lb", 1: "lh", 2: "lw", 3: "ld", 4: "lbu", 5: "lhu", 6: "lwu"}
_STORE = {0: "sb", 1: "sh", 2: "sw", 3: "sd"}
_OP_IMM = {0: "addi", 2: "slti", 3: "sltiu", 4: "xori", 6: "ori", 7: "andi"}
_OP = {
    (0x00, 0): "add", (0x20, 0): "sub", (0x00, 1): "sll", (0x00, 2): "slt",
    (0x00, 3): "sltu", (0x00, 4): "xor", (0x00, 5): "srl", (0x20, 5): "sra",
    (0x00, 6): "or", (0x00, 7): "and",
    (0x01, 0): "mul", (0x01, 1): "mulh", (0x01, 2): "mulhsu", (0x01, 3): "mulhu",
    (0x01, 4): "div", (0x01, 5): "divu", (0x01, 6): "rem", (0x01, 7): "remu",
}
_OP_32 = {
    (0x00, 0): "addw", (0x20, 0): "subw", (0x00, 1): "sllw", (0x00, 5): "srlw",
    (0x20, 5): "sraw",
    (0x01, 0): "mulw", (0x01, 4): "divw", (0x01, 5): "divuw", (0x01, 6): "remw",
    (0x01, 7): "remuw",
}
_CSR = {1: "csrrw", 2: "csrrs", 3: "csrrc", 5: "csrrwi", 6: "csrrsi", 7: "csrrci"}

VOCABULARY = frozenset(
    ["lui", "auipc", "jal", "jalr", "slli", "srli", "srai", "addiw", "slliw", "srliw",
     "sraiw", "fence", "fence.i", "ecall", "ebreak"]
    + list(_BRANCH.values()) + list(_LOAD.values()) + list(_STORE.values())
    + list(_OP_IMM.values()) + list(_OP.values()) + list(_OP_32.values()) + list(_CSR.values())
    + ["c.addi4spn", "c.fld", "c.lw", "c.ld", "c.fsd", "c.sw", "c.sd",
       "c.nop", "c.addi", "c.addiw", "c.li", "c.addi16sp", "c.lui", "c.srli", "c.srai",
       "c.andi", "c.sub", "c.xor", "c.or", "c.and", "c.subw", "c.addw", "c.j", "c.beqz",
       "c.bnez", "c.slli", "c.fldsp", "c.lwsp", "c.ldsp", "c.jr", "c.mv", "c.ebreak",
       "c.jalr", "c.add", "c.fsdsp", "c.swsp", "c.sdsp", UNKNOWN])


def decode32(w: int) -> str:
    opcode = w & 0x7F
    rd = _bits(w, 11, 7)
    f3 = _bits(w, 14, 12)
    rs1 = _bits(w, 19, 15)
    f7 = _bits(w, 31, 25)
    if opcode == 0x37:
        return "lui"
    if opcode == 0x17:
        return "auipc"
    if opcode == 0x6F:
        return "jal"
    if opcode == 0x67:
        return "jalr" if f3 == 0 else UNKNOWN
    if opcode == 0x63:
        return _BRANCH.get(f3, UNKNOWN)
    if opcode == 0x03:
        return _LOAD.get(f3, UNKNOWN)
    if opcode == 0x23:
        return _STORE.get(f3, UNKNOWN)
    if opcode == 0x13:
        if f3 == 1:
            return "slli" if _bits(w, 31, 26) == 0 else UNKNOWN
        if f3 == 5:
            return {0x00: "srli", 0x10: "srai"}.get(_bits(w, 31, 26), UNKNOWN)
        return _OP_IMM[f3]
    if opcode == 0x33:
        return _OP.get((f7, f3), UNKNOWN)
    if opcode == 0x1B:
        if f3 == 0:
            return "addiw"
        if f3 == 1:
            return "slliw" if f7 == 0 else UNKNOWN
        if f3 == 5:
            return {0x00: "srliw", 0x20: "sraiw"}.get(f7, UNKNOWN)
        return UNKNOWN
    if opcode == 0x3B:
        return _OP_32.get((f7, f3), UNKNOWN)
    if opcode == 0x0F:
        if f3 == 0:
            return "fence"
        if f3 == 1:
            return "fence.i"
        return UNKNOWN
    if opcode == 0x73:
        if f3 == 0:
            if w == 0x00000073:
                return "ecall"
            if w == 0x00100073:
                return "ebreak"
            return UNKNOWN
        return _CSR.get(f3, UNKNOWN)
    return UNKNOWN


def decode16(h: int) -> str:
    if h == 0:
        return UNKNOWN   # all-zero parcel is the defined illegal instruction
    op = h & 0x3
    f3 = _bits(h, 15, 13)
    rd = _bits(h, 11, 7)
    rs2 = _bits(h, 6, 2)
    b12 = _bits(h, 12, 12)
    if op == 0:
        if f3 == 0:
            return "c.addi4spn" if _bits(h, 12, 5) != 0 else UNKNOWN
        return {1: "c.fld", 2: "c.lw", 3: "c.ld", 5: "c.fsd", 6: "c.sw", 7: "c.sd"}.get(f3, UNKNOWN)
    if op == 1:
        imm6 = (b12 << 5) | rs2
        if f3 == 0:
            return "c.nop" if rd == 0 else "c.addi"
        if f3 == 1:
            return "c.addiw" if rd != 0 else UNKNOWN
        if f3 == 2:
            return "c.li"
        if f3 == 3:
            if imm6 == 0:
                return UNKNOWN
            return "c.addi16sp" if rd == 2 else "c.lui"
        if f3 == 4:
            f2 = _bits(h, 11, 10)
            if f2 == 0:
                return "c.srli"
            if f2 == 1:
                return "c.srai"
            if f2 == 2:
                return "c.andi"
            sub = _bits(h, 6, 5)
            if b12 == 0:
                return ("c.sub", "c.xor", "c.or", "c.and")[sub]
            return ("c.subw", "c.addw", UNKNOWN, UNKNOWN)[sub]
        return {5: "c.j", 6: "c.beqz", 7: "c.bnez"}[f3]
    # op == 2
    if f3 == 0:
        return "c.slli"
    if f3 == 1:
        return "c.fldsp"
    if f3 == 2:
        return "c.lwsp" if rd != 0 else UNKNOWN
    if f3 == 3:
        return "c.ldsp" if rd != 0 else UNKNOWN
    if f3 == 4:
        if b12 == 0:
            if rs2 == 0:
                return "c.jr" if rd != 0 else UNKNOWN
            return "c.mv"
        if rs2 == 0:
            return "c.ebreak" if rd == 0 else "c.jalr"
        return "c.add"
    return {5: "c.fsdsp", 6: "c.swsp", 7: "c.sdsp"}[f3]


@dataclass(frozen=True)
class OpcodeSequence:
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def sweep(text: bytes):
    """Yield (offset, size, mnemonic) covering every byte of ``text``.

    A trailing fragment shorter than the parcel it starts is emitted as one
    final "unknown" of the remaining length.
    """
    n = len(text)
    pos = 0
    while pos < n:
        if pos + 2 > n:
            yield pos, n - pos, UNKNOWN
            return
        parcel = text[pos] | (text[pos + 1] << 8)
        if parcel & 0x3 != 0x3:
            yield pos, 2, decode16(parcel)
            pos += 2
            continue
        if pos + 4 > n:
            yield pos, n - pos, UNKNOWN
            return
        word = int.from_bytes(text[pos:pos + 4], "little")
        yield pos, 4, decode32(word)
        pos += 4


def decode_opcodes(text: bytes) -> OpcodeSequence:
    return OpcodeSequence(tuple(m for _, _, m in sweep(bytes(text))))
