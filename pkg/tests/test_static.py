import json
import struct

import numpy as np
import pytest

from hpcdetect.errors import (BadMagic, EmptySequence, MalformedListing, NoTextSection, Truncated,
                              UnsupportedClass)
from hpcdetect.static import (EM_RISCV, decode_opcodes, fnv1a_32, ngram_features,
                              parse_disasm_listing, parse_elf, read_elf)
from hpcdetect.static.riscv import sweep
from oracles import FIXTURES, fnv_oracle, golden_listing


def _minimal_elf(with_text: bool = False, ei_class: int = 2) -> bytes:
    names = b"\0.shstrtab\0.data\0"
    code = b"\x13\x00\x00\x00"
    shnum = 3
    strtab_off = 64 + 64 * shnum
    data_off = strtab_off + len(names)
    ident = b"\x7fELF" + bytes([ei_class, 1, 1]) + bytes(9)
    ehdr = struct.pack("<16sHHIQQQIHHHHHH", ident, 2, EM_RISCV, 1, 0, 0, 64, 0, 64, 0, 0, 64,
                       shnum, 1)
    null = bytes(64)
    shstr = struct.pack("<IIQQQQIIQQ", 1, 3, 0, 0, strtab_off, len(names), 0, 0, 1, 0)
    flags = 0x6 if with_text else 0x3
    data = struct.pack("<IIQQQQIIQQ", 11, 1, flags, 0x1000, data_off, len(code), 0, 0, 4, 0)
    return ehdr + null + shstr + data + names + code


def test_elf_errors():
    with pytest.raises(Truncated):
        parse_elf(bytes(63))
    with pytest.raises(BadMagic):
        parse_elf(b"MZ\x90\x00" + bytes(60))
    with pytest.raises(UnsupportedClass):
        parse_elf(_minimal_elf(ei_class=1))
    with pytest.raises(NoTextSection):
        parse_elf(_minimal_elf(with_text=False))


def test_elf_first_executable_section_fallback():
    img = parse_elf(_minimal_elf(with_text=True))
    assert img.text == b"\x13\x00\x00\x00"
    assert decode_opcodes(img.text).tokens == ("addi",)


def test_elf_truncated_section_table():
    blob = _minimal_elf(with_text=True)
    with pytest.raises(Truncated):
        parse_elf(blob[:100])


def test_fixture_header_matches_golden():
    golden = json.loads((FIXTURES / "fixture.golden.json").read_text())
    img = read_elf(FIXTURES / "fixture.elf")
    assert img.machine == golden["machine"] == EM_RISCV
    assert img.text_section.offset == golden["text"]["offset"]
    assert img.text_section.size == golden["text"]["size"]
    assert img.text_section.addr == golden["text"]["addr"]


def test_fixture_tokens_match_reference_disassembler():
    golden = golden_listing()
    img = read_elf(FIXTURES / "fixture.elf")
    ours = list(sweep(img.text))
    assert len(ours) == len(golden) == json.loads(
        (FIXTURES / "fixture.golden.json").read_text())["n_instructions"]
    assert ours == golden


def test_decoder_edge_cases():
    assert decode_opcodes((0x00000013).to_bytes(4, "little")).tokens == ("addi",)
    assert decode_opcodes(b"\x00\x00").tokens == ("unknown",)
    assert decode_opcodes(b"").tokens == ()
    # a 32-bit parcel cut short covers the remaining bytes as one unknown
    items = list(sweep(b"\x13\x00\x00\x00\x13\x00\x00"))
    assert [m for _, _, m in items] == ["addi", "unknown"]
    assert sum(size for _, size, _ in items) == 7


def test_decoder_is_total(rng):
    blob = rng.integers(0, 256, size=4096, dtype=np.uint8).tobytes()
    items = list(sweep(blob))
    assert sum(size for _, size, _ in items) == len(blob)
    assert all(isinstance(m, str) and m for _, _, m in items)


def test_listing_parsing():
    assert parse_disasm_listing("  4004d6: 55  push %rbp").tokens == ("push",)
    text = ("  1000:\t13 05 00 00 \taddi a0,a0,0\n"
            "  1004:\t85 45     \tc.li a1,1\n"
            "  1006:\t67 80 00 00 \tret\n")
    assert parse_disasm_listing(text).tokens == ("addi", "c.li", "ret")
    with pytest.raises(MalformedListing):
        parse_disasm_listing("")
    with pytest.raises(MalformedListing) as info:
        parse_disasm_listing("  1000:\t13 05 00 00 \taddi a0,a0,0\nthis is not a listing\n")
    assert info.value.line_no == 2


def test_listing_skips_headers_and_labels():
    text = ("\nprog:     file format elf64-littleriscv\n\n"
            "Disassembly of section .text:\n\n"
            "0000000000010158 <_start>:\n"
            "   10158:\t4501                \tli\ta0,0\n")
    assert parse_disasm_listing(text).tokens == ("li",)


@pytest.mark.parametrize("text,value", [("", 0x811C9DC5), ("a", 0xE40C292C),
                                        ("foobar", 0xBF9CF968)])
def test_fnv_vectors(text, value):
    assert fnv1a_32(text.encode()) == value
    assert fnv_oracle(text) == value


def test_two_token_dim8():
    vec = ngram_features(["addi", "ld"], n_values=(1, 2), dim=8)
    expected = np.zeros(8)
    for key in ("addi", "ld", "addi ld"):
        h = fnv_oracle(key)
        expected[h % 8] += -1.0 if h >= 2 ** 31 else 1.0
    expected /= np.linalg.norm(expected)
    assert np.allclose(vec, expected, atol=1e-15)


def test_ngram_properties():
    one = ngram_features(["addi"])
    assert np.count_nonzero(one) == 1 and abs(one).max() == 1.0
    a = ngram_features(["addi", "ld", "sd", "jal"])
    assert np.array_equal(a, ngram_features(["addi", "ld", "sd", "jal"]))
    assert not np.array_equal(a, ngram_features(["jal", "sd", "ld", "addi"]))
    assert np.linalg.norm(a) == pytest.approx(1.0)
    with pytest.raises(EmptySequence):
        ngram_features([])
