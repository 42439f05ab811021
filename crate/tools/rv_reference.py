#!/usr/bin/env python3
"""Run an RV32IM ELF on Unicorn and print its exit code and output as JSON.

Independent reference used to cross-check the emulator: same guest ABI
(a7=93 exit, a7=64 write), zero-initialized memory, no shared code.

usage: rv_reference.py ELF [--limit N]
"""
import argparse
import json
import struct
import sys

from unicorn import Uc, UcError, UC_ARCH_RISCV, UC_MODE_RISCV32, UC_HOOK_INTR, UC_HOOK_CODE
from unicorn.riscv_const import (
    UC_RISCV_REG_A0, UC_RISCV_REG_A1, UC_RISCV_REG_A2, UC_RISCV_REG_A7, UC_RISCV_REG_PC,
)

PAGE = 0x1000
STACK_TOP = 0x0800_0000
STACK_SIZE = 0x10_0000


def load_segments(data):
    if data[:4] != b"\x7fELF" or data[4] != 1 or data[5] != 1:
        raise SystemExit("not an ELF32 little-endian file")
    entry, phoff = struct.unpack_from("<II", data, 24)
    phentsize, phnum = struct.unpack_from("<HH", data, 42)
    segs = []
    for i in range(phnum):
        p_type, off, vaddr, _, filesz, memsz, _, _ = struct.unpack_from(
            "<8I", data, phoff + i * phentsize)
        if p_type == 1 and memsz:
            segs.append((vaddr, data[off:off + filesz], memsz))
    return entry, segs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("elf")
    ap.add_argument("--limit", type=int, default=50_000_000)
    args = ap.parse_args()
    entry, segs = load_segments(open(args.elf, "rb").read())

    uc = Uc(UC_ARCH_RISCV, UC_MODE_RISCV32)
    mapped = set()

    def map_range(lo, hi):
        for page in range(lo // PAGE, (hi + PAGE - 1) // PAGE):
            if page not in mapped:
                uc.mem_map(page * PAGE, PAGE)
                mapped.add(page)

    for vaddr, body, memsz in segs:
        map_range(vaddr, vaddr + memsz)
        uc.mem_write(vaddr, body)
    map_range(STACK_TOP - STACK_SIZE, STACK_TOP)

    state = {"exit": None, "out": bytearray(), "error": None}

    def on_intr(uc, intno, _):
        a7 = uc.reg_read(UC_RISCV_REG_A7)
        pc = uc.reg_read(UC_RISCV_REG_PC)
        if a7 == 93:
            state["exit"] = uc.reg_read(UC_RISCV_REG_A0) & 0xFFFFFFFF
            uc.emu_stop()
        elif a7 == 64:
            buf, n = uc.reg_read(UC_RISCV_REG_A1), uc.reg_read(UC_RISCV_REG_A2)
            state["out"] += uc.mem_read(buf, n)
            uc.reg_write(UC_RISCV_REG_A0, n)
        else:
            state["error"] = "unknown ecall %#x" % a7
            uc.emu_stop()

    uc.hook_add(UC_HOOK_INTR, on_intr)
    pc = entry
    try:
        uc.emu_start(pc, 0xFFFFFFFF, count=args.limit)
    except UcError as e:
        state["error"] = str(e)
    json.dump({
        "exit_code": state["exit"],
        "output_hex": bytes(state["out"]).hex(),
        "error": state["error"],
    }, sys.stdout)
    print()


if __name__ == "__main__":
    main()
