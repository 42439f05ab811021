use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::instruction::{InstrClass, Instruction, Opcode, Reg};
use super::machine::{HaltState, MachineState, WordTouch};
use super::IsaError;
use crate::elf::LoadedImage;

pub const ECALL_EXIT: u32 = 93;
pub const ECALL_WRITE: u32 = 64;
/// Id conventionally used for [`Sha256Accelerator`] when it is registered.
pub const ECALL_SHA256: u32 = 0x2000;

/// Longest buffer a single env-call may read or write.
pub const MAX_ECALL_BUFFER: u32 = 16 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepEvent {
    MemRead { addr: u32, width: u32 },
    MemWrite { addr: u32, width: u32 },
    EnvCall { id: u32 },
    Halt { code: u32 },
    BranchTaken { target: u32 },
    BranchNotTaken,
}

impl StepEvent {
    pub fn is_memory(&self) -> bool {
        matches!(self, StepEvent::MemRead { .. } | StepEvent::MemWrite { .. })
    }
}

/// Events of one step: at most one memory event and at most one control event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub memory: Option<StepEvent>,
    pub control: Option<StepEvent>,
}

impl StepEvents {
    pub fn iter(&self) -> impl Iterator<Item = StepEvent> + '_ {
        self.memory.iter().chain(self.control.iter()).copied()
    }

    pub fn to_vec(&self) -> Vec<StepEvent> {
        self.iter().collect()
    }
}

/// A fixed-function environment call (precompile).
pub trait Accelerator: Send + Sync {
    fn name(&self) -> &str;

    /// Performs the call against guest state. Memory it touches must go through
    /// the tracked [`super::Memory`] accessors.
    fn call(&self, state: &mut MachineState) -> Result<Option<StepEvent>, IsaError>;
}

/// SHA-256 of `mem[a0 .. a0+a1)` written to `mem[a2 .. a2+32)`; returns 0 in a0.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sha256Accelerator;

impl Accelerator for Sha256Accelerator {
    fn name(&self) -> &str {
        "sha256"
    }

    fn call(&self, state: &mut MachineState) -> Result<Option<StepEvent>, IsaError> {
        let (src, len, dst) = (state.reg(Reg::A0), state.reg(Reg::A1), state.reg(Reg::A2));
        check_buffer(state.pc, src, len)?;
        check_buffer(state.pc, dst, 32)?;
        let input = state.memory.read_range(src, len);
        let digest = Sha256::digest(&input);
        state.memory.write_range(dst, &digest);
        state.set_reg(Reg::A0, 0);
        Ok(Some(StepEvent::MemWrite { addr: dst, width: 32 }))
    }
}

fn check_buffer(pc: u32, addr: u32, len: u32) -> Result<(), IsaError> {
    if len > MAX_ECALL_BUFFER || addr.checked_add(len).is_none() {
        return Err(IsaError::MemoryFault { pc, addr, len });
    }
    Ok(())
}

/// Environment calls beyond exit/write. Empty by default.
#[derive(Clone, Default)]
pub struct EcallRegistry {
    accelerators: BTreeMap<u32, Arc<dyn Accelerator>>,
}

impl fmt::Debug for EcallRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.accelerators.iter().map(|(k, v)| (k, v.name())))
            .finish()
    }
}

impl EcallRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, id: u32, accel: Arc<dyn Accelerator>) -> &mut Self {
        assert!(
            id != ECALL_EXIT && id != ECALL_WRITE,
            "ids 93 and 64 are reserved for exit/write"
        );
        self.accelerators.insert(id, accel);
        self
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.accelerators.keys().copied()
    }
}

/// Services the ECALL at the current pc according to `a7`.
pub fn handle_ecall(
    state: &mut MachineState,
    registry: &EcallRegistry,
) -> Result<StepEvents, IsaError> {
    let id = state.reg(Reg::A7);
    match id {
        ECALL_EXIT => {
            let code = state.reg(Reg::A0);
            state.halt = HaltState::Exited(code);
            Ok(StepEvents {
                memory: None,
                control: Some(StepEvent::Halt { code }),
            })
        }
        ECALL_WRITE => {
            let (buf, len) = (state.reg(Reg::A1), state.reg(Reg::A2));
            check_buffer(state.pc, buf, len)?;
            let bytes = state.memory.read_range(buf, len);
            state.output.extend_from_slice(&bytes);
            state.set_reg(Reg::A0, len);
            Ok(StepEvents {
                memory: (len > 0).then_some(StepEvent::MemRead { addr: buf, width: len }),
                control: Some(StepEvent::EnvCall { id }),
            })
        }
        _ => match registry.accelerators.get(&id) {
            Some(accel) => {
                let memory = accel.call(state)?;
                Ok(StepEvents {
                    memory,
                    control: Some(StepEvent::EnvCall { id }),
                })
            }
            None => Err(IsaError::UnknownEcall { pc: state.pc, id }),
        },
    }
}

fn mem_width(op: Opcode) -> u32 {
    match op {
        Opcode::Lb | Opcode::Lbu | Opcode::Sb => 1,
        Opcode::Lh | Opcode::Lhu | Opcode::Sh => 2,
        _ => 4,
    }
}

/// Executes one instruction. On error the state is left unchanged except for
/// side effects already performed by an accelerator.
pub fn step_with(
    state: &mut MachineState,
    image: &LoadedImage,
    registry: &EcallRegistry,
) -> Result<(Instruction, StepEvents), IsaError> {
    if state.is_halted() {
        return Err(IsaError::Halted);
    }
    let pc = state.pc;
    let insn = match image.fetch(pc) {
        None => return Err(IsaError::OutOfImageFetch { pc }),
        Some(Err(IsaError::IllegalInstruction { word })) => {
            return Err(IsaError::IllegalAt { pc, word: *word })
        }
        Some(Err(e)) => return Err(e.clone()),
        Some(Ok(i)) => *i,
    };
    let rs1 = state.reg(insn.rs1);
    let rs2 = state.reg(insn.rs2);
    let imm = insn.imm as u32;
    let mut next = pc.wrapping_add(4);
    let mut events = StepEvents::default();

    use Opcode::*;
    let result: Option<u32> = match insn.op {
        Lui => Some(imm),
        Auipc => Some(pc.wrapping_add(imm)),
        Jal | Jalr => {
            let target = if insn.op == Jal {
                pc.wrapping_add(imm)
            } else {
                rs1.wrapping_add(imm) & !1
            };
            if target % 4 != 0 {
                return Err(IsaError::MisalignedFetch { pc, target });
            }
            next = target;
            Some(pc.wrapping_add(4))
        }
        Beq | Bne | Blt | Bge | Bltu | Bgeu => {
            let taken = match insn.op {
                Beq => rs1 == rs2,
                Bne => rs1 != rs2,
                Blt => (rs1 as i32) < (rs2 as i32),
                Bge => (rs1 as i32) >= (rs2 as i32),
                Bltu => rs1 < rs2,
                _ => rs1 >= rs2,
            };
            if taken {
                let target = pc.wrapping_add(imm);
                if target % 4 != 0 {
                    return Err(IsaError::MisalignedFetch { pc, target });
                }
                next = target;
                events.control = Some(StepEvent::BranchTaken { target });
            } else {
                events.control = Some(StepEvent::BranchNotTaken);
            }
            None
        }
        Lb | Lh | Lw | Lbu | Lhu => {
            let addr = rs1.wrapping_add(imm);
            let width = mem_width(insn.op);
            if addr % width != 0 {
                return Err(IsaError::MisalignedAccess { pc, addr, width });
            }
            let raw = state.memory.load(addr, width);
            events.memory = Some(StepEvent::MemRead { addr, width });
            Some(match insn.op {
                Lb => raw as u8 as i8 as i32 as u32,
                Lh => raw as u16 as i16 as i32 as u32,
                _ => raw,
            })
        }
        Sb | Sh | Sw => {
            let addr = rs1.wrapping_add(imm);
            let width = mem_width(insn.op);
            if addr % width != 0 {
                return Err(IsaError::MisalignedAccess { pc, addr, width });
            }
            state.memory.store(addr, width, rs2);
            events.memory = Some(StepEvent::MemWrite { addr, width });
            None
        }
        Addi => Some(rs1.wrapping_add(imm)),
        Slti => Some(((rs1 as i32) < insn.imm) as u32),
        Sltiu => Some((rs1 < imm) as u32),
        Xori => Some(rs1 ^ imm),
        Ori => Some(rs1 | imm),
        Andi => Some(rs1 & imm),
        Slli => Some(rs1 << (imm & 31)),
        Srli => Some(rs1 >> (imm & 31)),
        Srai => Some(((rs1 as i32) >> (imm & 31)) as u32),
        Add => Some(rs1.wrapping_add(rs2)),
        Sub => Some(rs1.wrapping_sub(rs2)),
        Sll => Some(rs1 << (rs2 & 31)),
        Slt => Some(((rs1 as i32) < (rs2 as i32)) as u32),
        Sltu => Some((rs1 < rs2) as u32),
        Xor => Some(rs1 ^ rs2),
        Srl => Some(rs1 >> (rs2 & 31)),
        Sra => Some(((rs1 as i32) >> (rs2 & 31)) as u32),
        Or => Some(rs1 | rs2),
        And => Some(rs1 & rs2),
        Mul => Some(rs1.wrapping_mul(rs2)),
        Mulh => Some(((rs1 as i32 as i64 * rs2 as i32 as i64) >> 32) as u32),
        Mulhsu => Some(((rs1 as i32 as i64).wrapping_mul(rs2 as i64) >> 32) as u32),
        Mulhu => Some(((rs1 as u64 * rs2 as u64) >> 32) as u32),
        Div => Some(match (rs1 as i32, rs2 as i32) {
            (_, 0) => u32::MAX,
            (n, d) => n.wrapping_div(d) as u32,
        }),
        Divu => Some(rs1.checked_div(rs2).unwrap_or(u32::MAX)),
        Rem => Some(match (rs1 as i32, rs2 as i32) {
            (n, 0) => n as u32,
            (n, d) => n.wrapping_rem(d) as u32,
        }),
        Remu => Some(if rs2 == 0 { rs1 } else { rs1 % rs2 }),
        Fence => None,
        Ecall => {
            events = handle_ecall(state, registry)?;
            None
        }
        Ebreak => return Err(IsaError::Breakpoint { pc }),
    };
    if let Some(v) = result {
        state.set_reg(insn.rd, v);
    }
    state.memory.note_fetch(pc);
    state.pc = next;
    state.retired += 1;
    Ok((insn, events))
}

/// Executes one instruction with the default (empty) accelerator registry.
pub fn step(state: &mut MachineState, image: &LoadedImage) -> Result<StepEvents, IsaError> {
    step_with(state, image, &EcallRegistry::default()).map(|(_, e)| e)
}

/// Per-class retired-instruction counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts([u64; 9]);

impl ClassCounts {
    pub fn get(&self, class: InstrClass) -> u64 {
        self.0[class.index()]
    }

    pub fn add(&mut self, class: InstrClass, n: u64) {
        self.0[class.index()] += n;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (InstrClass, u64)> + '_ {
        InstrClass::ALL.iter().map(move |&c| (c, self.get(c)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventTallies {
    pub loads: u64,
    pub stores: u64,
    pub branches_taken: u64,
    pub branches_not_taken: u64,
    /// Env-calls by id, excluding the final exit.
    pub env_calls: BTreeMap<u32, u64>,
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunExit {
    Exited(u32),
    LimitReached,
    Fault(IsaError),
}

/// Final state plus a summary of everything the run did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub exit: RunExit,
    pub retired: u64,
    pub class_counts: ClassCounts,
    pub tallies: EventTallies,
    /// Words fetched, loaded or stored, in address order.
    pub touches: Vec<WordTouch>,
    pub output: Vec<u8>,
    pub state: MachineState,
}

impl RunTrace {
    pub fn exit_code(&self) -> Option<u32> {
        match self.exit {
            RunExit::Exited(c) => Some(c),
            _ => None,
        }
    }
}

/// An image bound to an accelerator registry.
#[derive(Debug, Clone)]
pub struct Emulator<'a> {
    image: &'a LoadedImage,
    registry: EcallRegistry,
}

impl<'a> Emulator<'a> {
    pub fn new(image: &'a LoadedImage) -> Self {
        Emulator {
            image,
            registry: EcallRegistry::default(),
        }
    }

    pub fn with_registry(image: &'a LoadedImage, registry: EcallRegistry) -> Self {
        Emulator { image, registry }
    }

    pub fn image(&self) -> &LoadedImage {
        self.image
    }

    pub fn initial_state(&self) -> MachineState {
        MachineState::new(self.image)
    }

    pub fn step(&self, state: &mut MachineState) -> Result<StepEvents, IsaError> {
        step_with(state, self.image, &self.registry).map(|(_, e)| e)
    }

    /// Steps until halt, fault, or `limit` retired instructions; never fails
    /// except on `limit == 0`.
    pub fn execute(&self, mut state: MachineState, limit: u64) -> Result<RunTrace, IsaError> {
        if limit == 0 {
            return Err(IsaError::InvalidLimit);
        }
        let mut counts = ClassCounts::default();
        let mut tallies = EventTallies::default();
        let mut executed = 0u64;
        let exit = loop {
            if let HaltState::Exited(code) = state.halt {
                break RunExit::Exited(code);
            }
            if executed >= limit {
                break RunExit::LimitReached;
            }
            match step_with(&mut state, self.image, &self.registry) {
                Ok((insn, events)) => {
                    executed += 1;
                    counts.add(insn.class(), 1);
                    for ev in events.iter() {
                        match ev {
                            StepEvent::MemRead { .. } if insn.op != Opcode::Ecall => {
                                tallies.loads += 1
                            }
                            StepEvent::MemWrite { .. } if insn.op != Opcode::Ecall => {
                                tallies.stores += 1
                            }
                            StepEvent::BranchTaken { .. } => tallies.branches_taken += 1,
                            StepEvent::BranchNotTaken => tallies.branches_not_taken += 1,
                            StepEvent::EnvCall { id } => *tallies.env_calls.entry(id).or_default() += 1,
                            _ => {}
                        }
                    }
                }
                Err(e) => break RunExit::Fault(e),
            }
        };
        Ok(RunTrace {
            exit,
            retired: state.retired,
            class_counts: counts,
            tallies,
            touches: state.memory.touched_words(),
            output: state.output.clone(),
            state,
        })
    }

    /// Like [`Emulator::execute`], but a limit hit or fault is an error.
    pub fn run(&self, state: MachineState, limit: u64) -> Result<RunTrace, IsaError> {
        let trace = self.execute(state, limit)?;
        match &trace.exit {
            RunExit::Exited(_) => Ok(trace),
            RunExit::LimitReached => Err(IsaError::CycleLimitExceeded {
                retired: trace.retired,
            }),
            RunExit::Fault(e) => Err(e.clone()),
        }
    }
}

/// Runs `image` from `state` with the default registry.
pub fn run(image: &LoadedImage, state: MachineState, limit: u64) -> Result<RunTrace, IsaError> {
    Emulator::new(image).run(state, limit)
}
