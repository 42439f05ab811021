use std::collections::HashMap;

use super::instruction::Reg;
use crate::elf::LoadedImage;

/// Granularity of the sparse memory map, in bytes.
pub const CHUNK_SIZE: u32 = 1024;
const WORDS_PER_CHUNK: usize = (CHUNK_SIZE / 4) as usize;
const BITMAP_LEN: usize = WORDS_PER_CHUNK / 64;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Chunk {
    bytes: Box<[u8; CHUNK_SIZE as usize]>,
    touched: [u64; BITMAP_LEN],
    dirty: [u64; BITMAP_LEN],
}

impl Chunk {
    fn new() -> Self {
        Chunk {
            bytes: Box::new([0; CHUNK_SIZE as usize]),
            touched: [0; BITMAP_LEN],
            dirty: [0; BITMAP_LEN],
        }
    }
}

/// One guest word observed during execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordTouch {
    /// Word-aligned byte address.
    pub addr: u32,
    pub dirty: bool,
}

/// Sparse, zero-initialized, byte-addressable guest memory.
///
/// Every guest-visible access (fetch, load, store, env-call buffer) records the
/// words it covered, so cost models with any page size ≥ 4 bytes can replay the
/// footprint. Initial image contents are written untracked.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Memory {
    chunks: HashMap<u32, Chunk>,
}

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    fn chunk_mut(&mut self, addr: u32) -> &mut Chunk {
        self.chunks.entry(addr / CHUNK_SIZE).or_insert_with(Chunk::new)
    }

    fn mark(&mut self, addr: u32, len: u32, write: bool) {
        if len == 0 {
            return;
        }
        let first = addr & !3;
        let last = addr.wrapping_add(len - 1) & !3;
        let mut word = first;
        loop {
            let chunk = self.chunk_mut(word);
            let idx = ((word % CHUNK_SIZE) / 4) as usize;
            chunk.touched[idx / 64] |= 1 << (idx % 64);
            if write {
                chunk.dirty[idx / 64] |= 1 << (idx % 64);
            }
            if word == last {
                break;
            }
            word = word.wrapping_add(4);
        }
    }

    /// Writes bytes without recording an access (image loading, test setup).
    pub fn poke(&mut self, addr: u32, bytes: &[u8]) {
        for (i, &b) in bytes.iter().enumerate() {
            let a = addr.wrapping_add(i as u32);
            self.chunk_mut(a).bytes[(a % CHUNK_SIZE) as usize] = b;
        }
    }

    /// Reads bytes without recording an access.
    pub fn peek(&self, addr: u32, len: usize) -> Vec<u8> {
        (0..len as u32)
            .map(|i| {
                let a = addr.wrapping_add(i);
                self.chunks
                    .get(&(a / CHUNK_SIZE))
                    .map_or(0, |c| c.bytes[(a % CHUNK_SIZE) as usize])
            })
            .collect()
    }

    fn peek_value(&self, addr: u32, width: u32) -> u32 {
        // Naturally aligned accesses never straddle a chunk.
        match self.chunks.get(&(addr / CHUNK_SIZE)) {
            None => 0,
            Some(c) => {
                let off = (addr % CHUNK_SIZE) as usize;
                let mut buf = [0u8; 4];
                buf[..width as usize].copy_from_slice(&c.bytes[off..off + width as usize]);
                u32::from_le_bytes(buf)
            }
        }
    }

    /// Tracked load of 1, 2 or 4 bytes (zero-extended). Caller guarantees alignment.
    pub fn load(&mut self, addr: u32, width: u32) -> u32 {
        self.mark(addr, width, false);
        self.peek_value(addr, width)
    }

    /// Tracked store of the low `width` bytes of `value`. Caller guarantees alignment.
    pub fn store(&mut self, addr: u32, width: u32, value: u32) {
        self.mark(addr, width, true);
        let chunk = self.chunk_mut(addr);
        let off = (addr % CHUNK_SIZE) as usize;
        chunk.bytes[off..off + width as usize]
            .copy_from_slice(&value.to_le_bytes()[..width as usize]);
    }

    /// Tracked bulk read (env-call buffers).
    pub fn read_range(&mut self, addr: u32, len: u32) -> Vec<u8> {
        self.mark(addr, len, false);
        self.peek(addr, len as usize)
    }

    /// Tracked bulk write (accelerator results).
    pub fn write_range(&mut self, addr: u32, bytes: &[u8]) {
        self.mark(addr, bytes.len() as u32, true);
        self.poke(addr, bytes);
    }

    /// Records an instruction fetch at `pc`.
    pub fn note_fetch(&mut self, pc: u32) {
        self.mark(pc, 4, false);
    }

    /// Every word accessed so far, in address order.
    pub fn touched_words(&self) -> Vec<WordTouch> {
        let mut keys: Vec<_> = self.chunks.keys().copied().collect();
        keys.sort_unstable();
        let mut out = Vec::new();
        for k in keys {
            let c = &self.chunks[&k];
            for (slot, (&t, &d)) in c.touched.iter().zip(&c.dirty).enumerate() {
                let mut bits = t;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let idx = slot * 64 + b;
                    out.push(WordTouch {
                        addr: k * CHUNK_SIZE + 4 * idx as u32,
                        dirty: d & (1 << b) != 0,
                    });
                }
            }
        }
        out
    }

    /// Forgets recorded accesses, keeping contents.
    pub fn clear_touches(&mut self) {
        for c in self.chunks.values_mut() {
            c.touched = [0; BITMAP_LEN];
            c.dirty = [0; BITMAP_LEN];
        }
    }
}

/// How execution stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltState {
    Running,
    Exited(u32),
}

/// Architectural state of one guest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    regs: [u32; 32],
    pub pc: u32,
    pub memory: Memory,
    pub(crate) retired: u64,
    pub(crate) halt: HaltState,
    pub(crate) output: Vec<u8>,
}

impl MachineState {
    /// Fresh state with all segments copied into memory and `pc` at the entry point.
    pub fn new(image: &LoadedImage) -> Self {
        let mut memory = Memory::new();
        for seg in image.segments() {
            memory.poke(seg.vaddr, &seg.data);
        }
        MachineState {
            regs: [0; 32],
            pc: image.entry(),
            memory,
            retired: 0,
            halt: HaltState::Running,
            output: Vec::new(),
        }
    }

    pub fn reg(&self, r: Reg) -> u32 {
        self.regs[r.index()]
    }

    /// Writes to x0 are discarded.
    pub fn set_reg(&mut self, r: Reg, value: u32) {
        if r != Reg::ZERO {
            self.regs[r.index()] = value;
        }
    }

    pub fn regs(&self) -> &[u32; 32] {
        &self.regs
    }

    pub fn retired(&self) -> u64 {
        self.retired
    }

    pub fn halt_state(&self) -> HaltState {
        self.halt
    }

    pub fn is_halted(&self) -> bool {
        self.halt != HaltState::Running
    }

    pub fn exit_code(&self) -> Option<u32> {
        match self.halt {
            HaltState::Exited(c) => Some(c),
            HaltState::Running => None,
        }
    }

    pub fn output(&self) -> &[u8] {
        &self.output
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uninitialized_reads_zero() {
        let mut m = Memory::new();
        assert_eq!(m.load(0x8000_0000, 4), 0);
        assert_eq!(m.peek(0x1234, 3), vec![0, 0, 0]);
    }

    #[test]
    fn store_load_widths() {
        let mut m = Memory::new();
        m.store(0x100, 4, 0xaabb_ccdd);
        assert_eq!(m.load(0x100, 1), 0xdd);
        assert_eq!(m.load(0x102, 2), 0xaabb);
        m.store(0x101, 1, 0x11);
        assert_eq!(m.load(0x100, 4), 0xaabb_11dd);
    }

    #[test]
    fn touches_are_word_granular() {
        let mut m = Memory::new();
        m.poke(0x0, &[1, 2, 3, 4]);
        assert!(m.touched_words().is_empty());
        m.load(0x401, 1);
        m.store(0x800, 2, 7);
        m.read_range(0x3fe, 4);
        let t = m.touched_words();
        assert_eq!(
            t,
            vec![
                WordTouch { addr: 0x3fc, dirty: false },
                WordTouch { addr: 0x400, dirty: false },
                WordTouch { addr: 0x800, dirty: true },
            ]
        );
    }

    #[test]
    fn x0_is_hardwired() {
        let image = LoadedImage::from_words(0x1000, &[0x13]);
        let mut s = MachineState::new(&image);
        s.set_reg(Reg::ZERO, 5);
        assert_eq!(s.reg(Reg::ZERO), 0);
    }
}
