"""Rebuild the RISC-V ELF fixture and its golden files.

Needs clang with the RISC-V target, ld.lld, readelf and the capstone Python
package. The outputs are committed; tests never run this script.

    python tests/fixtures/build_fixture.py
"""

import json
import re
import subprocess
import sys
import tempfile
from pathlib import Path

import capstone

HERE = Path(__file__).resolve().parent
SRC = HERE / "src"
ELF = HERE / "fixture.elf"
GOLDEN = HERE / "fixture.golden.json"
LISTING = HERE / "fixture.listing.txt"

CFLAGS = ["--target=riscv64-unknown-elf", "-march=rv64imc", "-mabi=lp64",
          "-ffreestanding", "-nostdlib", "-O2", "-fno-pic", "-c"]


def build(tmp: Path) -> None:
    objs = []
    for src in sorted(SRC.iterdir()):
        obj = tmp / (src.stem + ".o")
        # the hand-written file also covers the compressed FP load/store encodings
        flags = CFLAGS if src.suffix == ".c" else [CFLAGS[0], "-march=rv64imfdc", "-mabi=lp64", "-c"]
        subprocess.run(["clang", *flags, str(src), "-o", str(obj)], check=True)
        objs.append(str(obj))
    subprocess.run(["ld.lld", "-m", "elf64lriscv", "-e", "_start", "--no-relax",
                    "-o", str(ELF), *objs], check=True)


def text_geometry() -> dict:
    out = subprocess.run(["readelf", "-SW", str(ELF)], check=True, capture_output=True,
                         text=True).stdout
    for line in out.splitlines():
        m = re.search(r"\]\s+\.text\s+PROGBITS\s+([0-9a-f]+)\s+([0-9a-f]+)\s+([0-9a-f]+)", line)
        if m:
            return {"addr": int(m.group(1), 16), "offset": int(m.group(2), 16),
                    "size": int(m.group(3), 16)}
    raise SystemExit("no .text in readelf output")


def reference_listing(text: bytes):
    md = capstone.Cs(capstone.CS_ARCH_RISCV,
                     capstone.CS_MODE_RISCV64 | capstone.CS_MODE_RISCVC)
    pos = 0
    while pos < len(text):
        insn = next(md.disasm(text[pos:pos + 4], pos, count=1), None)
        if insn is None:
            # not decodable: skip one parcel (4 bytes if the low bits are 11)
            size = 4 if text[pos] & 0x3 == 0x3 else 2
            yield pos, size, "unknown"
        else:
            # insn_name gives the canonical mnemonic (mnemonic may be an alias like "nop")
            size = insn.size
            name = md.insn_name(insn.id)
            yield pos, size, "unknown" if name == "c.unimp" else name
        pos += size


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        build(Path(tmp))
    geo = text_geometry()
    data = ELF.read_bytes()
    text = data[geo["offset"]:geo["offset"] + geo["size"]]
    rows = list(reference_listing(text))
    with open(LISTING, "w") as fh:
        fh.write(f"# reference: capstone {capstone.__version__} rv64+c, linear sweep\n")
        for off, size, mnem in rows:
            fh.write(f"{off:#06x}\t{size}\t{mnem}\n")
    GOLDEN.write_text(json.dumps({"machine": 243, "text": geo,
                                  "n_instructions": len(rows)}, indent=2) + "\n")
    print(f"{ELF.name}: .text {geo}, {len(rows)} instructions")
    return 0


if __name__ == "__main__":
    sys.exit(main())
