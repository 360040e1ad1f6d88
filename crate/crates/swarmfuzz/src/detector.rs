//! Differential vulnerability detection: compare the DUT's architectural
//! trace against the golden reference, field by field per retired
//! instruction, and map mismatch signatures back to the injected bugs.

use serde::{Deserialize, Serialize};

use crate::bugs::BugId;
use crate::dut::{ArchEntry, ArchTrace, Csr, ExceptionCause};
use crate::error::Error;
use crate::isa::{decode, Opcode};

/// The six architectural state categories compared per instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MismatchField {
    Commit,
    Exception,
    Gpr,
    Csr,
    Privilege,
    Memory,
}

const FIELD_ORDER: [MismatchField; 6] = [
    MismatchField::Commit,
    MismatchField::Exception,
    MismatchField::Gpr,
    MismatchField::Csr,
    MismatchField::Privilege,
    MismatchField::Memory,
];

/// Structured facts about the mismatching entry, enough to classify it
/// without the full traces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MismatchContext {
    /// Word committed at this index (golden side when both exist).
    pub encoding: u32,
    pub dut_exception: Option<ExceptionCause>,
    pub golden_exception: Option<ExceptionCause>,
    /// CSR at the first diverging slot of the write log, for csr mismatches.
    pub csr: Option<Csr>,
    /// Load address, when either side performed a load here.
    pub load_addr: Option<u32>,
    /// Address of the immediately preceding store, if any.
    pub prev_store_addr: Option<u32>,
}

/// One architectural divergence between the DUT and the golden reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub test_id: String,
    pub instruction_index: usize,
    pub field: MismatchField,
    pub dut_value: String,
    pub golden_value: String,
    /// Set on every mismatch after the first in a trace: downstream state is
    /// tainted once the models diverge.
    pub cascading: bool,
    pub matched_bug: Option<BugId>,
    pub context: MismatchContext,
}

fn fmt_exception(e: Option<ExceptionCause>) -> String {
    match e {
        Some(c) => format!("{c:?}"),
        None => "none".into(),
    }
}

fn fmt_gpr(w: Option<(u8, u32)>) -> String {
    match w {
        Some((rd, v)) => format!("x{rd}=0x{v:08x}"),
        None => "none".into(),
    }
}

fn fmt_csrs(writes: &[(Csr, u32)]) -> String {
    if writes.is_empty() {
        return "none".into();
    }
    writes
        .iter()
        .map(|(c, v)| format!("{}=0x{v:08x}", c.name()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_mem(a: Option<crate::dut::MemAccess>) -> String {
    match a {
        Some(m) => format!(
            "{} [0x{:08x}]=0x{:08x}",
            if m.is_store { "store" } else { "load" },
            m.addr,
            m.data
        ),
        None => "none".into(),
    }
}

fn context_for(dut: Option<&ArchEntry>, golden: Option<&ArchEntry>, prev: Option<&ArchEntry>) -> MismatchContext {
    let primary = golden.or(dut);
    let load_addr = [golden, dut]
        .into_iter()
        .flatten()
        .find_map(|e| e.mem_access.filter(|a| !a.is_store).map(|a| a.addr));
    MismatchContext {
        encoding: primary.map_or(0, |e| e.encoding),
        dut_exception: dut.and_then(|e| e.exception),
        golden_exception: golden.and_then(|e| e.exception),
        csr: None,
        load_addr,
        prev_store_addr: prev.and_then(|e| e.mem_access.filter(|a| a.is_store).map(|a| a.addr)),
    }
}

/// Compare two traces of the same test. Returns every divergence, ordered by
/// instruction index and then by state category; all mismatches after the
/// first are flagged cascading. A length difference is reported as a commit
/// mismatch at the first index where one trace has no entry.
pub fn compare_traces(dut: &ArchTrace, golden: &ArchTrace) -> Result<Vec<Mismatch>, Error> {
    if dut.test_id != golden.test_id {
        return Err(Error::TraceIdMismatch {
            dut: dut.test_id.clone(),
            golden: golden.test_id.clone(),
        });
    }
    let mut out: Vec<Mismatch> = Vec::new();
    let shared = dut.entries.len().min(golden.entries.len());
    for i in 0..shared {
        let d = &dut.entries[i];
        let g = &golden.entries[i];
        if d == g {
            continue;
        }
        let prev = golden.entries.get(i.wrapping_sub(1));
        let base = context_for(Some(d), Some(g), prev);
        for field in FIELD_ORDER {
            let (differs, dut_value, golden_value, csr) = match field {
                MismatchField::Commit => (
                    (d.encoding, d.pc) != (g.encoding, g.pc),
                    format!("pc={} word=0x{:08x}", d.pc, d.encoding),
                    format!("pc={} word=0x{:08x}", g.pc, g.encoding),
                    None,
                ),
                MismatchField::Exception => (
                    d.exception != g.exception,
                    fmt_exception(d.exception),
                    fmt_exception(g.exception),
                    None,
                ),
                MismatchField::Gpr => (
                    d.gpr_write != g.gpr_write,
                    fmt_gpr(d.gpr_write),
                    fmt_gpr(g.gpr_write),
                    None,
                ),
                MismatchField::Csr => {
                    let differs = d.csr_writes != g.csr_writes;
                    let csr = differs.then(|| {
                        let k = d
                            .csr_writes
                            .iter()
                            .zip(&g.csr_writes)
                            .position(|(a, b)| a != b)
                            .unwrap_or_else(|| d.csr_writes.len().min(g.csr_writes.len()));
                        g.csr_writes.get(k).or_else(|| d.csr_writes.get(k)).map(|w| w.0)
                    });
                    (
                        differs,
                        fmt_csrs(&d.csr_writes),
                        fmt_csrs(&g.csr_writes),
                        csr.flatten(),
                    )
                }
                MismatchField::Privilege => (
                    d.privilege != g.privilege,
                    format!("{:?}", d.privilege),
                    format!("{:?}", g.privilege),
                    None,
                ),
                MismatchField::Memory => (
                    d.mem_access != g.mem_access,
                    fmt_mem(d.mem_access),
                    fmt_mem(g.mem_access),
                    None,
                ),
            };
            if !differs {
                continue;
            }
            let mut context = base.clone();
            context.csr = csr;
            let mut m = Mismatch {
                test_id: dut.test_id.clone(),
                instruction_index: i,
                field,
                dut_value,
                golden_value,
                cascading: !out.is_empty(),
                matched_bug: None,
                context,
            };
            m.matched_bug = classify(&m);
            out.push(m);
        }
    }
    if dut.entries.len() != golden.entries.len() {
        let i = shared;
        let prev = golden.entries.get(i.wrapping_sub(1));
        let d = dut.entries.get(i);
        let g = golden.entries.get(i);
        let describe = |e: Option<&ArchEntry>| match e {
            Some(e) => format!("pc={} word=0x{:08x}", e.pc, e.encoding),
            None => "no entry".into(),
        };
        let mut m = Mismatch {
            test_id: dut.test_id.clone(),
            instruction_index: i,
            field: MismatchField::Commit,
            dut_value: describe(d),
            golden_value: describe(g),
            cascading: !out.is_empty(),
            matched_bug: None,
            context: context_for(d, g, prev),
        };
        m.matched_bug = classify(&m);
        out.push(m);
    }
    Ok(out)
}

/// Match a mismatch against the six injected-bug signatures. Unknown
/// signatures return `None`; they are still reported upstream.
pub fn classify(m: &Mismatch) -> Option<BugId> {
    let instr = decode(m.context.encoding)?;
    let ctx = &m.context;
    match m.field {
        MismatchField::Exception => {
            if ctx.dut_exception.is_none()
                && ctx.golden_exception == Some(ExceptionCause::OutOfRangeAccess)
                && matches!(instr.opcode, Opcode::Lw | Opcode::Lwx)
            {
                return Some(BugId::B1);
            }
            if ctx.dut_exception.is_none()
                && ctx.golden_exception == Some(ExceptionCause::IllegalCsr)
                && instr.opcode == Opcode::Csrrs
                && instr.rs1 == 0
            {
                return Some(BugId::B3);
            }
            None
        }
        MismatchField::Gpr => {
            if instr.opcode == Opcode::Mul && instr.rs1 == instr.rs2 {
                return Some(BugId::B2);
            }
            if matches!(instr.opcode, Opcode::Lw | Opcode::Lwx)
                && ctx.load_addr.is_some()
                && ctx.load_addr == ctx.prev_store_addr
            {
                return Some(BugId::B4);
            }
            if matches!(instr.opcode, Opcode::Csrrs | Opcode::Csrrw)
                && instr.imm as u32 == Csr::Instret.id()
            {
                return Some(BugId::B6);
            }
            None
        }
        MismatchField::Csr => {
            if ctx.csr == Some(Csr::Timer) && instr.opcode == Opcode::Fence && instr.imm != 0 {
                return Some(BugId::B5);
            }
            if ctx.csr == Some(Csr::Instret)
                && matches!(instr.opcode, Opcode::Csrrs | Opcode::Csrrw)
            {
                return Some(BugId::B6);
            }
            None
        }
        MismatchField::Memory => {
            if matches!(instr.opcode, Opcode::Lw | Opcode::Lwx)
                && ctx.load_addr.is_some()
                && ctx.load_addr == ctx.prev_store_addr
            {
                return Some(BugId::B4);
            }
            None
        }
        MismatchField::Commit | MismatchField::Privilege => None,
    }
}
