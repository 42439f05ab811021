use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CostError;
use crate::isa::{InstrClass, Instruction};

/// Cycles per instruction class, plus paging and accelerator costs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel {
    name: String,
    classes: [u64; 9],
    page_size: u32,
    page_in: u64,
    page_out: u64,
    accelerators: BTreeMap<u32, u64>,
    note: Option<String>,
}

/// On-disk layout of a cost model (TOML).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostModelFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    page_size: u32,
    page_in: u64,
    page_out: u64,
    classes: BTreeMap<InstrClass, u64>,
    /// Env-call id (decimal or `0x` hex string) to fixed cycles.
    #[serde(default)]
    accelerators: BTreeMap<String, u64>,
}

pub const UNIFORM: &str = "uniform";
pub const R0_LIKE: &str = "r0-like";
pub const DEFAULT_PAGE_SIZE: u32 = 1024;
pub const DEFAULT_PAGING_CYCLES: u64 = 1130;

fn parse_id(s: &str) -> Option<u32> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u32::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

impl CostModel {
    /// Builds a model, checking that every class has an entry and the page size
    /// is a power of two no smaller than a word.
    pub fn new(
        name: impl Into<String>,
        classes: &BTreeMap<InstrClass, u64>,
        page_size: u32,
        page_in: u64,
        page_out: u64,
        accelerators: BTreeMap<u32, u64>,
    ) -> Result<Self, CostError> {
        let mut table = [0u64; 9];
        for class in InstrClass::ALL {
            table[class.index()] = *classes
                .get(&class)
                .ok_or(CostError::MissingClass(class))?;
        }
        if !page_size.is_power_of_two() || page_size < 4 {
            return Err(CostError::BadPageSize(page_size));
        }
        Ok(CostModel {
            name: name.into(),
            classes: table,
            page_size,
            page_in,
            page_out,
            accelerators,
            note: None,
        })
    }

    /// Every class costs one cycle; paging is free.
    pub fn uniform() -> Self {
        let classes = InstrClass::ALL.iter().map(|&c| (c, 1)).collect();
        let mut m = Self::new(UNIFORM, &classes, DEFAULT_PAGE_SIZE, 0, 0, BTreeMap::new())
            .expect("built-in model is valid");
        m.note = Some("approximation of near-uniform per-instruction accounting; not a published table".into());
        m
    }

    /// Two-cycle shifts, bitwise ops and mul/div; one cycle otherwise; 1 KB pages
    /// with 1130-cycle page-in and page-out.
    pub fn r0_like() -> Self {
        use InstrClass::*;
        let classes = [
            (Arithmetic, 1),
            (Shift, 2),
            (Bitwise, 2),
            (MulDiv, 2),
            (Load, 1),
            (Store, 1),
            (Branch, 1),
            (Jump, 1),
            (EnvCall, 1),
        ]
        .into_iter()
        .collect();
        Self::new(
            R0_LIKE,
            &classes,
            DEFAULT_PAGE_SIZE,
            DEFAULT_PAGING_CYCLES,
            DEFAULT_PAGING_CYCLES,
            BTreeMap::new(),
        )
        .expect("built-in model is valid")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            UNIFORM => Some(Self::uniform()),
            R0_LIKE => Some(Self::r0_like()),
            _ => None,
        }
    }

    pub fn builtin_names() -> [&'static str; 2] {
        [UNIFORM, R0_LIKE]
    }

    /// A built-in name, or a path to a model file.
    pub fn resolve(name_or_path: &str) -> Result<Self, CostError> {
        match Self::builtin(name_or_path) {
            Some(m) => Ok(m),
            None if Path::new(name_or_path).exists() => Self::load(Path::new(name_or_path)),
            None => Err(CostError::UnknownModel(name_or_path.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    pub fn class_cost(&self, class: InstrClass) -> u64 {
        self.classes[class.index()]
    }

    pub fn page_size(&self) -> u32 {
        self.page_size
    }

    pub fn page_in_cost(&self) -> u64 {
        self.page_in
    }

    pub fn page_out_cost(&self) -> u64 {
        self.page_out
    }

    pub fn accelerators(&self) -> &BTreeMap<u32, u64> {
        &self.accelerators
    }

    pub fn accelerator_cost(&self, id: u32) -> Option<u64> {
        self.accelerators.get(&id).copied()
    }

    pub fn with_paging(mut self, page_size: u32, page_in: u64, page_out: u64) -> Result<Self, CostError> {
        if !page_size.is_power_of_two() || page_size < 4 {
            return Err(CostError::BadPageSize(page_size));
        }
        self.page_size = page_size;
        self.page_in = page_in;
        self.page_out = page_out;
        Ok(self)
    }

    pub fn with_accelerator(mut self, id: u32, cycles: u64) -> Self {
        self.accelerators.insert(id, cycles);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, CostError> {
        let file: CostModelFile =
            toml::from_str(text).map_err(|e| CostError::Parse(e.to_string()))?;
        let mut accelerators = BTreeMap::new();
        for (k, v) in &file.accelerators {
            let id = parse_id(k).ok_or_else(|| CostError::Parse(format!("bad accelerator id `{k}`")))?;
            accelerators.insert(id, *v);
        }
        let mut m = Self::new(
            file.name,
            &file.classes,
            file.page_size,
            file.page_in,
            file.page_out,
            accelerators,
        )?;
        m.note = file.note;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CostError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CostError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        let file = CostModelFile {
            name: self.name.clone(),
            note: self.note.clone(),
            page_size: self.page_size,
            page_in: self.page_in,
            page_out: self.page_out,
            classes: InstrClass::ALL.iter().map(|&c| (c, self.class_cost(c))).collect(),
            accelerators: self
                .accelerators
                .iter()
                .map(|(id, c)| (format!("{id:#x}"), *c))
                .collect(),
        };
        toml::to_string(&file).expect("cost model serializes")
    }
}

/// Cycles charged for executing `instr` under `model`, excluding paging.
pub fn instruction_cost(instr: &Instruction, model: &CostModel) -> u64 {
    model.class_cost(instr.class())
}
