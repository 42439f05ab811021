use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::model::CostModel;
use crate::isa::{InstrClass, RunTrace, StepEvent, ECALL_EXIT};

/// Resident and dirty pages of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PageTracker {
    touched: BTreeSet<u32>,
    dirty: BTreeSet<u32>,
}

impl PageTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn touched(&self) -> &BTreeSet<u32> {
        &self.touched
    }

    pub fn dirty(&self) -> &BTreeSet<u32> {
        &self.dirty
    }
}

/// Charges paging for one memory event and returns the cycles charged now.
///
/// A page is paged in the first time any byte of it is touched; writes mark it
/// dirty. Events that are not memory accesses charge nothing.
pub fn charge_access(tracker: &mut PageTracker, event: &StepEvent, model: &CostModel) -> u64 {
    let (addr, width, write) = match *event {
        StepEvent::MemRead { addr, width } => (addr, width, false),
        StepEvent::MemWrite { addr, width } => (addr, width, true),
        _ => return 0,
    };
    if width == 0 {
        return 0;
    }
    let size = model.page_size() as u64;
    let first = addr as u64 / size;
    let last = (addr as u64 + width as u64 - 1) / size;
    let mut charged = 0;
    for page in first..=last {
        let page = page as u32;
        if tracker.touched.insert(page) {
            charged += model.page_in_cost();
        }
        if write {
            tracker.dirty.insert(page);
        }
    }
    charged
}

/// Page-out cycles owed at halt: one page-out per dirty page.
pub fn finalize(tracker: &PageTracker, model: &CostModel) -> u64 {
    tracker.dirty.len() as u64 * model.page_out_cost()
}

/// Cycle totals of one run under one model. All fields are exact integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleBreakdown {
    pub compute: u64,
    pub paging: u64,
    pub total: u64,
    pub per_class: BTreeMap<InstrClass, u64>,
    pub page_ins: u64,
    pub page_outs: u64,
}

impl CycleBreakdown {
    pub fn page_in_cycles(&self, model: &CostModel) -> u64 {
        self.page_ins * model.page_in_cost()
    }

    pub fn page_out_cycles(&self, model: &CostModel) -> u64 {
        self.page_outs * model.page_out_cost()
    }

    /// Checks the decomposition invariants against `model`.
    pub fn is_consistent(&self, model: &CostModel) -> bool {
        self.total == self.compute + self.paging
            && self.paging == self.page_in_cycles(model) + self.page_out_cycles(model)
            && self.per_class.values().sum::<u64>() == self.compute
    }
}

/// Replays a run summary through the cost model.
///
/// Env-calls to ids with an accelerator entry cost that fixed amount instead of
/// the env-call class cost. Every touched word (code fetches included) is
/// replayed through [`charge_access`].
pub fn account(trace: &RunTrace, model: &CostModel) -> CycleBreakdown {
    let mut per_class: BTreeMap<InstrClass, u64> = BTreeMap::new();
    for (class, count) in trace.class_counts.iter() {
        let cycles = count * model.class_cost(class);
        per_class.insert(class, cycles);
    }
    let env = per_class.entry(InstrClass::EnvCall).or_default();
    for (&id, &calls) in &trace.tallies.env_calls {
        if id == ECALL_EXIT {
            continue;
        }
        if let Some(fixed) = model.accelerator_cost(id) {
            *env = *env - calls * model.class_cost(InstrClass::EnvCall) + calls * fixed;
        }
    }
    let compute = per_class.values().sum();

    let mut tracker = PageTracker::new();
    let mut page_in_cycles = 0;
    for touch in &trace.touches {
        let event = if touch.dirty {
            StepEvent::MemWrite { addr: touch.addr, width: 4 }
        } else {
            StepEvent::MemRead { addr: touch.addr, width: 4 }
        };
        page_in_cycles += charge_access(&mut tracker, &event, model);
    }
    let page_out_cycles = finalize(&tracker, model);
    let paging = page_in_cycles + page_out_cycles;
    CycleBreakdown {
        compute,
        paging,
        total: compute + paging,
        per_class,
        page_ins: tracker.touched.len() as u64,
        page_outs: tracker.dirty.len() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elf::LoadedImage;
    use crate::isa::{asm, run, Emulator, MachineState, Reg};

    #[test]
    fn first_touch_pages_in() {
        let m = CostModel::r0_like();
        let mut t = PageTracker::new();
        let c = charge_access(&mut t, &StepEvent::MemRead { addr: 0x1000, width: 4 }, &m);
        assert_eq!(c, 1130);
        assert_eq!(t.touched().iter().copied().collect::<Vec<_>>(), vec![4]);
        let c = charge_access(&mut t, &StepEvent::MemRead { addr: 0x1200, width: 4 }, &m);
        assert_eq!(c, 0);
    }

    #[test]
    fn store_marks_dirty_and_pages_out_at_finalize() {
        let m = CostModel::r0_like();
        let mut t = PageTracker::new();
        assert_eq!(finalize(&t, &m), 0);
        let c = charge_access(&mut t, &StepEvent::MemWrite { addr: 0x8000, width: 4 }, &m);
        assert_eq!(c, 1130);
        assert!(t.dirty().contains(&0x20));
        for page in [0x21u32, 0x22] {
            charge_access(&mut t, &StepEvent::MemWrite { addr: page * 1024, width: 1 }, &m);
        }
        assert_eq!(finalize(&t, &m), 3390);
    }

    #[test]
    fn non_memory_events_are_free() {
        let m = CostModel::r0_like();
        let mut t = PageTracker::new();
        assert_eq!(charge_access(&mut t, &StepEvent::BranchNotTaken, &m), 0);
        assert!(t.touched().is_empty());
    }

    #[test]
    fn exit_program_uniform_breakdown() {
        let img = LoadedImage::from_words(0x1_0000, &[asm::li(10, 42), asm::ecall()]);
        let mut s = MachineState::new(&img);
        s.set_reg(Reg::A7, 93);
        let trace = run(&img, s, 10).unwrap();
        let b = account(&trace, &CostModel::uniform());
        assert_eq!(b.compute, 2);
        assert_eq!(b.page_ins, 1);
        assert_eq!(b.paging, 0);
        assert_eq!(b.total, 2);
        let r0 = account(&trace, &CostModel::r0_like());
        assert_eq!(r0.paging, 1130);
        assert_eq!(r0.total, 2 + 1130);
        assert!(b.is_consistent(&CostModel::uniform()) && r0.is_consistent(&CostModel::r0_like()));
    }

    #[test]
    fn accelerator_fixed_cost_replaces_env_call_cost() {
        use crate::isa::{EcallRegistry, Sha256Accelerator, ECALL_SHA256};
        let words = [
            asm::lui(10, 4),
            asm::li(11, 3),
            asm::lui(12, 5),
            asm::lui(17, 2),
            asm::ecall(),
            asm::li(10, 0),
            asm::li(17, 93),
            asm::ecall(),
        ];
        let img = LoadedImage::from_words(0x1_0000, &words);
        let mut reg = EcallRegistry::new();
        reg.register(ECALL_SHA256, std::sync::Arc::new(Sha256Accelerator));
        let emu = Emulator::with_registry(&img, reg);
        let trace = emu.run(emu.initial_state(), 100).unwrap();
        let plain = account(&trace, &CostModel::uniform());
        let accel = account(&trace, &CostModel::uniform().with_accelerator(ECALL_SHA256, 500));
        assert_eq!(accel.compute - plain.compute, 499);
        assert_eq!(accel.per_class[&InstrClass::EnvCall], 501);
    }
}
