//! ELF32 little-endian RISC-V executable loading.
//!
//! Only statically linked `ET_EXEC` images are accepted. `PT_LOAD` segments are
//! copied into a [`LoadedImage`], with the `memsz - filesz` tail zero-filled.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::isa::{decode, Instruction, IsaError};

pub const ELF_MAGIC: [u8; 4] = [0x7f, b'E', b'L', b'F'];
pub const ELFCLASS32: u8 = 1;
pub const ELFCLASS64: u8 = 2;
pub const ELFDATA2LSB: u8 = 1;
pub const ET_EXEC: u16 = 2;
pub const EM_RISCV: u16 = 0xf3;
pub const PT_LOAD: u32 = 1;
pub const PF_X: u32 = 1;
pub const PF_W: u32 = 2;
pub const SHT_SYMTAB: u32 = 2;

const EHDR_SIZE: usize = 52;
const PHDR_SIZE: usize = 32;
const SHDR_SIZE: usize = 40;
const SYM_SIZE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElfError {
    #[error("bad ELF magic")]
    BadMagic,
    #[error("not a 32-bit ELF (class {0})")]
    WrongClass(u8),
    #[error("not little-endian (data encoding {0})")]
    WrongEndian(u8),
    #[error("machine {0:#x} is not RISC-V")]
    WrongMachine(u16),
    #[error("ELF type {0} is not ET_EXEC")]
    NotExecutable(u16),
    #[error("file truncated: {0}")]
    Truncated(&'static str),
    #[error("no PT_LOAD segments")]
    NoLoadSegments,
    #[error("segments at {a:#x} and {b:#x} overlap")]
    OverlappingSegments { a: u32, b: u32 },
    #[error("entry point {0:#x} is not inside an executable segment")]
    EntryOutsideCode(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub vaddr: u32,
    /// File contents followed by the zero-filled tail; `data.len() == memsz`.
    pub data: Vec<u8>,
    pub file_size: u32,
    pub writable: bool,
    pub executable: bool,
}

impl Segment {
    pub fn end(&self) -> u64 {
        self.vaddr as u64 + self.data.len() as u64
    }

    pub fn contains(&self, addr: u32) -> bool {
        addr >= self.vaddr && (addr as u64) < self.end()
    }
}

#[derive(Debug, Clone)]
struct CodeRegion {
    base: u32,
    insns: Vec<Result<Instruction, IsaError>>,
}

/// A loaded program: entry point, memory segments and (optional) symbols.
///
/// Executable segments are predecoded once at construction, so fetching is a
/// table lookup. Code is always fetched from the image, never from guest memory.
#[derive(Debug, Clone)]
pub struct LoadedImage {
    entry: u32,
    segments: Vec<Segment>,
    symbols: BTreeMap<String, u32>,
    code: Vec<CodeRegion>,
}

impl PartialEq for LoadedImage {
    fn eq(&self, other: &Self) -> bool {
        self.entry == other.entry && self.segments == other.segments && self.symbols == other.symbols
    }
}

impl LoadedImage {
    pub fn new(
        entry: u32,
        mut segments: Vec<Segment>,
        symbols: BTreeMap<String, u32>,
    ) -> Result<Self, ElfError> {
        if segments.is_empty() {
            return Err(ElfError::NoLoadSegments);
        }
        segments.sort_by_key(|s| s.vaddr);
        for pair in segments.windows(2) {
            if pair[0].end() > pair[1].vaddr as u64 {
                return Err(ElfError::OverlappingSegments {
                    a: pair[0].vaddr,
                    b: pair[1].vaddr,
                });
            }
        }
        if !segments.iter().any(|s| s.executable && s.contains(entry)) {
            return Err(ElfError::EntryOutsideCode(entry));
        }
        let code = segments
            .iter()
            .filter(|s| s.executable)
            .map(|s| CodeRegion {
                base: s.vaddr,
                insns: s
                    .data
                    .chunks(4)
                    .map(|w| {
                        let mut b = [0u8; 4];
                        b[..w.len()].copy_from_slice(w);
                        decode(u32::from_le_bytes(b))
                    })
                    .collect(),
            })
            .collect();
        Ok(LoadedImage {
            entry,
            segments,
            symbols,
            code,
        })
    }

    /// Single executable segment holding `words`, entry at `base`.
    pub fn from_words(base: u32, words: &[u32]) -> Self {
        let data = words.iter().flat_map(|w| w.to_le_bytes()).collect::<Vec<_>>();
        let seg = Segment {
            vaddr: base,
            file_size: data.len() as u32,
            data,
            writable: false,
            executable: true,
        };
        Self::new(base, vec![seg], BTreeMap::new()).expect("single code segment is valid")
    }

    pub fn entry(&self) -> u32 {
        self.entry
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn symbols(&self) -> &BTreeMap<String, u32> {
        &self.symbols
    }

    /// Nearest symbol at or below `addr`.
    pub fn symbol_for(&self, addr: u32) -> Option<&str> {
        self.symbols
            .iter()
            .filter(|(_, &a)| a <= addr)
            .max_by_key(|(_, &a)| a)
            .map(|(n, _)| n.as_str())
    }

    /// Predecoded instruction at `pc`; `None` when `pc` is outside every code segment.
    pub fn fetch(&self, pc: u32) -> Option<&Result<Instruction, IsaError>> {
        self.code.iter().find_map(|r| {
            let off = pc.wrapping_sub(r.base) as usize;
            if pc >= r.base && off % 4 == 0 {
                r.insns.get(off / 4)
            } else {
                None
            }
        })
    }

    /// Iterates `(address, decode result)` over every executable word.
    pub fn code_words(&self) -> impl Iterator<Item = (u32, &Result<Instruction, IsaError>)> {
        self.code.iter().flat_map(|r| {
            r.insns
                .iter()
                .enumerate()
                .map(move |(i, d)| (r.base + 4 * i as u32, d))
        })
    }

    /// Reads image bytes at `addr`; bytes outside any segment read as zero.
    pub fn read_bytes(&self, addr: u32, len: usize) -> Vec<u8> {
        (0..len as u32)
            .map(|i| {
                let a = addr.wrapping_add(i);
                self.segments
                    .iter()
                    .find(|s| s.contains(a))
                    .map_or(0, |s| s.data[(a - s.vaddr) as usize])
            })
            .collect()
    }
}

fn u16_at(b: &[u8], off: usize) -> Result<u16, ElfError> {
    b.get(off..off + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or(ElfError::Truncated("header field"))
}

fn u32_at(b: &[u8], off: usize) -> Result<u32, ElfError> {
    b.get(off..off + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or(ElfError::Truncated("header field"))
}

/// Parses an ELF32 RISC-V executable.
pub fn load_elf(bytes: &[u8]) -> Result<LoadedImage, ElfError> {
    if bytes.len() < 4 || bytes[..4] != ELF_MAGIC {
        return Err(ElfError::BadMagic);
    }
    if bytes.len() < EHDR_SIZE {
        return Err(ElfError::Truncated("ELF header"));
    }
    if bytes[4] != ELFCLASS32 {
        return Err(ElfError::WrongClass(bytes[4]));
    }
    if bytes[5] != ELFDATA2LSB {
        return Err(ElfError::WrongEndian(bytes[5]));
    }
    let e_type = u16_at(bytes, 16)?;
    let e_machine = u16_at(bytes, 18)?;
    if e_machine != EM_RISCV {
        return Err(ElfError::WrongMachine(e_machine));
    }
    if e_type != ET_EXEC {
        return Err(ElfError::NotExecutable(e_type));
    }
    let entry = u32_at(bytes, 24)?;
    let phoff = u32_at(bytes, 28)? as usize;
    let shoff = u32_at(bytes, 32)? as usize;
    let phentsize = u16_at(bytes, 42)? as usize;
    let phnum = u16_at(bytes, 44)? as usize;
    let shentsize = u16_at(bytes, 46)? as usize;
    let shnum = u16_at(bytes, 48)? as usize;

    let mut segments = Vec::new();
    for i in 0..phnum {
        let ph = phoff + i * phentsize.max(PHDR_SIZE);
        if bytes.len() < ph + PHDR_SIZE {
            return Err(ElfError::Truncated("program header"));
        }
        if u32_at(bytes, ph)? != PT_LOAD {
            continue;
        }
        let offset = u32_at(bytes, ph + 4)? as usize;
        let vaddr = u32_at(bytes, ph + 8)?;
        let filesz = u32_at(bytes, ph + 16)?;
        let memsz = u32_at(bytes, ph + 20)?;
        let flags = u32_at(bytes, ph + 24)?;
        if memsz == 0 {
            continue;
        }
        let file = bytes
            .get(offset..offset + filesz as usize)
            .ok_or(ElfError::Truncated("segment contents"))?;
        let mut data = file.to_vec();
        data.resize(memsz.max(filesz) as usize, 0);
        segments.push(Segment {
            vaddr,
            data,
            file_size: filesz,
            writable: flags & PF_W != 0,
            executable: flags & PF_X != 0,
        });
    }
    if segments.is_empty() {
        return Err(ElfError::NoLoadSegments);
    }
    let symbols = if shentsize >= SHDR_SIZE {
        read_symbols(bytes, shoff, shentsize, shnum)
    } else {
        BTreeMap::new()
    };
    LoadedImage::new(entry, segments, symbols)
}

// Symbols are annotation only; a malformed table yields an empty map.
fn read_symbols(bytes: &[u8], shoff: usize, shentsize: usize, shnum: usize) -> BTreeMap<String, u32> {
    let mut out = BTreeMap::new();
    let section = |i: usize| -> Option<(u32, usize, usize, u32)> {
        let sh = shoff.checked_add(i.checked_mul(shentsize)?)?;
        Some((
            u32_at(bytes, sh + 4).ok()?,
            u32_at(bytes, sh + 16).ok()? as usize,
            u32_at(bytes, sh + 20).ok()? as usize,
            u32_at(bytes, sh + 24).ok()?,
        ))
    };
    for i in 0..shnum {
        let Some((kind, off, size, link)) = section(i) else {
            break;
        };
        if kind != SHT_SYMTAB {
            continue;
        }
        let Some((_, str_off, str_size, _)) = section(link as usize) else {
            continue;
        };
        let Some(strtab) = bytes.get(str_off..str_off + str_size) else {
            continue;
        };
        let Some(table) = bytes.get(off..off + size) else {
            continue;
        };
        for sym in table.chunks_exact(SYM_SIZE) {
            let name_off = u32::from_le_bytes(sym[0..4].try_into().unwrap()) as usize;
            let value = u32::from_le_bytes(sym[4..8].try_into().unwrap());
            let info = sym[12];
            // STT_FUNC or STT_OBJECT only
            if !matches!(info & 0xf, 1 | 2) || name_off == 0 {
                continue;
            }
            if let Some(name) = strtab.get(name_off..).and_then(|s| {
                let end = s.iter().position(|&b| b == 0)?;
                std::str::from_utf8(&s[..end]).ok()
            }) {
                out.insert(name.to_string(), value);
            }
        }
    }
    out
}

/// Serializes segments into a minimal ELF32 RISC-V executable (no sections).
///
/// Used for hand-built fixtures and fault-injection copies of compiled programs.
pub fn write_elf(entry: u32, segments: &[Segment]) -> Vec<u8> {
    let phnum = segments.len();
    let mut out = vec![0u8; EHDR_SIZE + PHDR_SIZE * phnum];
    out[..4].copy_from_slice(&ELF_MAGIC);
    out[4] = ELFCLASS32;
    out[5] = ELFDATA2LSB;
    out[6] = 1;
    out[16..18].copy_from_slice(&ET_EXEC.to_le_bytes());
    out[18..20].copy_from_slice(&EM_RISCV.to_le_bytes());
    out[20..24].copy_from_slice(&1u32.to_le_bytes());
    out[24..28].copy_from_slice(&entry.to_le_bytes());
    out[28..32].copy_from_slice(&(EHDR_SIZE as u32).to_le_bytes());
    out[40..42].copy_from_slice(&(EHDR_SIZE as u16).to_le_bytes());
    out[42..44].copy_from_slice(&(PHDR_SIZE as u16).to_le_bytes());
    out[44..46].copy_from_slice(&(phnum as u16).to_le_bytes());
    out[46..48].copy_from_slice(&(SHDR_SIZE as u16).to_le_bytes());
    for (i, seg) in segments.iter().enumerate() {
        let offset = out.len() as u32;
        let filesz = seg.file_size.min(seg.data.len() as u32);
        out.extend_from_slice(&seg.data[..filesz as usize]);
        let flags = 4 | if seg.writable { PF_W } else { 0 } | if seg.executable { PF_X } else { 0 };
        let ph = EHDR_SIZE + i * PHDR_SIZE;
        let fields = [
            PT_LOAD,
            offset,
            seg.vaddr,
            seg.vaddr,
            filesz,
            seg.data.len() as u32,
            flags,
            4,
        ];
        for (j, f) in fields.iter().enumerate() {
            out[ph + 4 * j..ph + 4 * j + 4].copy_from_slice(&f.to_le_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code_segment(vaddr: u32, words: &[u32]) -> Segment {
        let data: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
        Segment {
            vaddr,
            file_size: data.len() as u32,
            data,
            writable: false,
            executable: true,
        }
    }

    #[test]
    fn minimal_executable() {
        let bytes = write_elf(0x10000, &[code_segment(0x10000, &[0x13, 0x73])]);
        let image = load_elf(&bytes).unwrap();
        assert_eq!(image.entry(), 0x10000);
        assert_eq!(image.segments().len(), 1);
        assert_eq!(image.segments()[0].vaddr, 0x10000);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = write_elf(0x10000, &[code_segment(0x10000, &[0x13])]);
        bytes[..4].copy_from_slice(b"\x7FELG");
        assert_eq!(load_elf(&bytes), Err(ElfError::BadMagic));
    }

    #[test]
    fn elf64_rejected() {
        let mut bytes = write_elf(0x10000, &[code_segment(0x10000, &[0x13])]);
        bytes[4] = ELFCLASS64;
        assert_eq!(load_elf(&bytes), Err(ElfError::WrongClass(2)));
    }

    #[test]
    fn wrong_machine_and_type() {
        let mut bytes = write_elf(0x10000, &[code_segment(0x10000, &[0x13])]);
        bytes[18] = 0x3e;
        assert_eq!(load_elf(&bytes), Err(ElfError::WrongMachine(0x3e)));
        let mut bytes = write_elf(0x10000, &[code_segment(0x10000, &[0x13])]);
        bytes[16] = 3;
        assert_eq!(load_elf(&bytes), Err(ElfError::NotExecutable(3)));
    }

    #[test]
    fn no_load_segments() {
        let bytes = write_elf(0x10000, &[]);
        assert_eq!(load_elf(&bytes), Err(ElfError::NoLoadSegments));
    }

    #[test]
    fn overlapping_segments() {
        let a = code_segment(0x10000, &[0x13; 4]);
        let b = code_segment(0x10008, &[0x13; 4]);
        let bytes = write_elf(0x10000, &[a, b]);
        assert!(matches!(
            load_elf(&bytes),
            Err(ElfError::OverlappingSegments { .. })
        ));
    }

    #[test]
    fn zero_fill_tail() {
        let mut data = code_segment(0x20000, &[0xdead_beef]);
        data.writable = true;
        data.executable = false;
        data.data.resize(64, 0);
        let code = code_segment(0x10000, &[0x13]);
        let image = load_elf(&write_elf(0x10000, &[code, data])).unwrap();
        assert_eq!(image.read_bytes(0x20000, 4), 0xdead_beefu32.to_le_bytes());
        assert!(image.read_bytes(0x20004, 60).iter().all(|&b| b == 0));
        assert!(image.segments()[1].writable);
    }

    #[test]
    fn entry_must_be_code() {
        let bytes = write_elf(0x30000, &[code_segment(0x10000, &[0x13])]);
        assert_eq!(load_elf(&bytes), Err(ElfError::EntryOutsideCode(0x30000)));
    }
}
