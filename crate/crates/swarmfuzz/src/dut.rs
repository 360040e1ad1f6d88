//! The toy processor: a deterministic interpreter with enumerated branch
//! coverage and six injected bugs, plus the spec-correct golden reference
//! interpreter the detector compares against.
//!
//! One core executes both models. [`simulate`] runs it with the injected
//! bugs armed and coverage recording on; [`golden_execute`] runs the same
//! core with the bugs disarmed and no instrumentation. Off the bug triggers
//! the two produce field-for-field identical architectural traces.
//!
//! Machine model: 16 registers of 32 bits (`x0` reads as zero), 4 KiB of
//! data memory accessed as aligned words, 8 CSRs and two privilege levels.
//! Programs execute straight-line; branches skip forward only, clamped at
//! the program end, so every run terminates.

use serde::{Deserialize, Serialize};

use crate::coverage::{CoverageMap, CoverageSink, NoCoverage, Site};
use crate::isa::{InstrType, Opcode, TestProgram};

/// Data memory size in bytes; word accesses must be 4-byte aligned.
pub const MEM_BYTES: u32 = 4096;

const MEM_WORDS: usize = (MEM_BYTES / 4) as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Privilege {
    Machine,
    User,
}

/// Control and status registers, ids 0 through 7 in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Csr {
    Status,
    Tvec,
    Epc,
    Cause,
    Instret,
    Scratch,
    Timer,
    Custom,
}

pub const CSRS: [Csr; 8] = [
    Csr::Status,
    Csr::Tvec,
    Csr::Epc,
    Csr::Cause,
    Csr::Instret,
    Csr::Scratch,
    Csr::Timer,
    Csr::Custom,
];

impl Csr {
    pub fn id(self) -> u32 {
        CSRS.iter().position(|&c| c == self).unwrap() as u32
    }

    pub fn from_id(id: u32) -> Option<Csr> {
        CSRS.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Csr::Status => "status",
            Csr::Tvec => "tvec",
            Csr::Epc => "epc",
            Csr::Cause => "cause",
            Csr::Instret => "instret",
            Csr::Scratch => "scratch",
            Csr::Timer => "timer",
            Csr::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExceptionCause {
    IllegalInstruction,
    IllegalCsr,
    MisalignedAccess,
    OutOfRangeAccess,
    PrivilegeViolation,
    EnvCallMachine,
    EnvCallUser,
}

impl ExceptionCause {
    /// Value stored in the `cause` CSR.
    pub fn code(self) -> u32 {
        match self {
            ExceptionCause::IllegalInstruction => 1,
            ExceptionCause::IllegalCsr => 2,
            ExceptionCause::MisalignedAccess => 3,
            ExceptionCause::OutOfRangeAccess => 4,
            ExceptionCause::PrivilegeViolation => 5,
            ExceptionCause::EnvCallMachine => 6,
            ExceptionCause::EnvCallUser => 7,
        }
    }
}

/// One memory transaction as seen on the bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemAccess {
    pub addr: u32,
    pub data: u32,
    pub is_store: bool,
}

/// Architectural state committed by one instruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchEntry {
    /// Program slot the instruction was fetched from.
    pub pc: u32,
    pub encoding: u32,
    pub exception: Option<ExceptionCause>,
    /// Destination register and the value it holds afterwards; writes to
    /// `x0` are discarded and record value 0.
    pub gpr_write: Option<(u8, u32)>,
    /// Explicit CSR effects, in write order. Traps log `epc`, `cause` and
    /// `status`; the implicit per-retire `instret` tick is not logged.
    pub csr_writes: Vec<(Csr, u32)>,
    /// Privilege level the instruction executed in.
    pub privilege: Privilege,
    pub mem_access: Option<MemAccess>,
}

/// Per-instruction architectural records from one execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchTrace {
    pub test_id: String,
    pub entries: Vec<ArchEntry>,
    /// True when execution halted on an exception raised inside a trap.
    pub double_fault: bool,
}

struct Machine {
    gprs: [u32; 16],
    mem: Vec<u32>,
    tvec: u32,
    epc: u32,
    cause: u32,
    instret: u32,
    scratch: u32,
    timer: u32,
    custom: u32,
    in_trap: bool,
    privilege: Privilege,
    /// Address and pre-store value of the immediately preceding store.
    last_store: Option<(u32, u32)>,
}

impl Machine {
    fn new() -> Self {
        Self {
            gprs: [0; 16],
            mem: vec![0; MEM_WORDS],
            tvec: 0,
            epc: 0,
            cause: 0,
            instret: 0,
            scratch: 0,
            timer: 0,
            custom: 0,
            in_trap: false,
            privilege: Privilege::Machine,
            last_store: None,
        }
    }

    /// `status` = in-trap bit | user-mode bit << 1.
    fn status_value(&self) -> u32 {
        self.in_trap as u32 | ((self.privilege == Privilege::User) as u32) << 1
    }

    fn csr_value(&self, csr: Csr) -> u32 {
        match csr {
            Csr::Status => self.status_value(),
            Csr::Tvec => self.tvec,
            Csr::Epc => self.epc,
            Csr::Cause => self.cause,
            Csr::Instret => self.instret,
            Csr::Scratch => self.scratch,
            Csr::Timer => self.timer,
            Csr::Custom => self.custom,
        }
    }

    fn csr_store(&mut self, csr: Csr, value: u32) {
        match csr {
            Csr::Status => {
                self.in_trap = value & 1 != 0;
                self.privilege = if value & 2 != 0 {
                    Privilege::User
                } else {
                    Privilege::Machine
                };
            }
            Csr::Tvec => self.tvec = value,
            Csr::Epc => self.epc = value,
            Csr::Cause => self.cause = value,
            Csr::Instret => self.instret = value,
            Csr::Scratch => self.scratch = value,
            Csr::Timer => self.timer = value,
            Csr::Custom => self.custom = value,
        }
    }
}

/// Execute on the design under test: injected bugs armed, branch coverage
/// recorded. Fully deterministic.
pub fn simulate(test: &TestProgram) -> (CoverageMap, ArchTrace) {
    let mut cov = CoverageMap::new();
    let trace = run(test, true, &mut cov);
    (cov, trace)
}

/// Execute on the golden reference: spec-correct, no coverage.
pub fn golden_execute(test: &TestProgram) -> ArchTrace {
    run(test, false, &mut NoCoverage)
}

fn run<C: CoverageSink>(test: &TestProgram, bugs: bool, cov: &mut C) -> ArchTrace {
    let mut m = Machine::new();
    let mut entries = Vec::with_capacity(test.len());
    let mut double_fault = false;
    let prog_len = test.len() as u32;
    let mut pc = 0u32;
    while pc < prog_len {
        let word = test.words[pc as usize];
        let (entry, next_pc, halt) = step(&mut m, word, pc, prog_len, bugs, cov);
        entries.push(entry);
        if halt {
            double_fault = true;
            break;
        }
        pc = next_pc;
    }
    ArchTrace {
        test_id: test.id.clone(),
        entries,
        double_fault,
    }
}

fn decode_op_site(op: Opcode) -> Site {
    match op {
        Opcode::Add => Site::decode_op_add,
        Opcode::Sub => Site::decode_op_sub,
        Opcode::And => Site::decode_op_and,
        Opcode::Or => Site::decode_op_or,
        Opcode::Xor => Site::decode_op_xor,
        Opcode::Sll => Site::decode_op_sll,
        Opcode::Srl => Site::decode_op_srl,
        Opcode::Sra => Site::decode_op_sra,
        Opcode::Slt => Site::decode_op_slt,
        Opcode::Mul => Site::decode_op_mul,
        Opcode::Addi => Site::decode_op_addi,
        Opcode::Andi => Site::decode_op_andi,
        Opcode::Ori => Site::decode_op_ori,
        Opcode::Xori => Site::decode_op_xori,
        Opcode::Slli => Site::decode_op_slli,
        Opcode::Srli => Site::decode_op_srli,
        Opcode::Slti => Site::decode_op_slti,
        Opcode::Li => Site::decode_op_li,
        Opcode::Lw => Site::decode_op_lw,
        Opcode::Lwx => Site::decode_op_lwx,
        Opcode::Sw => Site::decode_op_sw,
        Opcode::Swz => Site::decode_op_swz,
        Opcode::Beq => Site::decode_op_beq,
        Opcode::Bne => Site::decode_op_bne,
        Opcode::Blt => Site::decode_op_blt,
        Opcode::Bge => Site::decode_op_bge,
        Opcode::Bltu => Site::decode_op_bltu,
        Opcode::Bgeu => Site::decode_op_bgeu,
        Opcode::Csrrs => Site::decode_op_csrrs,
        Opcode::Csrrw => Site::decode_op_csrrw,
        Opcode::Fence => Site::decode_op_fence,
        Opcode::Ebreak => Site::decode_op_ebreak,
        Opcode::Ecall => Site::decode_op_ecall,
        Opcode::Mret => Site::decode_op_mret,
    }
}

fn csr_read_site(csr: Csr) -> Site {
    match csr {
        Csr::Status => Site::exec_csr_read_status,
        Csr::Tvec => Site::exec_csr_read_tvec,
        Csr::Epc => Site::exec_csr_read_epc,
        Csr::Cause => Site::exec_csr_read_cause,
        Csr::Instret => Site::exec_csr_read_instret,
        Csr::Scratch => Site::exec_csr_read_scratch,
        Csr::Timer => Site::exec_csr_read_timer,
        Csr::Custom => Site::exec_csr_read_custom,
    }
}

fn csr_write_site(csr: Csr) -> Site {
    match csr {
        Csr::Status => Site::exec_csr_write_status,
        Csr::Tvec => Site::exec_csr_write_tvec,
        Csr::Epc => Site::exec_csr_write_epc,
        Csr::Cause => Site::exec_csr_write_cause,
        Csr::Instret => Site::exec_csr_write_instret,
        Csr::Scratch => Site::exec_csr_write_scratch,
        Csr::Timer => Site::exec_csr_write_timer,
        Csr::Custom => Site::exec_csr_write_custom,
    }
}

fn trap_cause_site(cause: ExceptionCause) -> Site {
    match cause {
        ExceptionCause::IllegalInstruction => Site::exec_trap_cause_illegal,
        ExceptionCause::IllegalCsr => Site::exec_trap_cause_illegal_csr,
        ExceptionCause::MisalignedAccess => Site::exec_trap_cause_misaligned,
        ExceptionCause::OutOfRangeAccess => Site::exec_trap_cause_oob,
        ExceptionCause::PrivilegeViolation => Site::exec_trap_cause_priv,
        ExceptionCause::EnvCallMachine => Site::exec_trap_cause_ecall_m,
        ExceptionCause::EnvCallUser => Site::exec_trap_cause_ecall_u,
    }
}

const TRAP_CAUSES: [ExceptionCause; 7] = [
    ExceptionCause::IllegalInstruction,
    ExceptionCause::IllegalCsr,
    ExceptionCause::MisalignedAccess,
    ExceptionCause::OutOfRangeAccess,
    ExceptionCause::PrivilegeViolation,
    ExceptionCause::EnvCallMachine,
    ExceptionCause::EnvCallUser,
];

fn write_gpr<C: CoverageSink>(m: &mut Machine, entry: &mut ArchEntry, cov: &mut C, rd: u8, value: u32) {
    let discard = cov.hit(Site::exec_wb_rd_zero, rd == 0);
    if !discard {
        m.gprs[rd as usize] = value;
    }
    entry.gpr_write = Some((rd, if discard { 0 } else { value }));
}

fn csr_read<C: CoverageSink>(m: &Machine, cov: &mut C, csr: Csr) -> u32 {
    for &c in &CSRS {
        if cov.hit(csr_read_site(c), c == csr) {
            break;
        }
    }
    m.csr_value(csr)
}

fn csr_write<C: CoverageSink>(m: &mut Machine, entry: &mut ArchEntry, cov: &mut C, csr: Csr, value: u32) {
    for &c in &CSRS {
        if cov.hit(csr_write_site(c), c == csr) {
            break;
        }
    }
    m.csr_store(csr, value);
    entry.csr_writes.push((csr, m.csr_value(csr)));
}

/// Record an exception. Returns true when it hits inside a trap that is
/// already pending (double fault), which halts the run without touching
/// machine state.
fn raise<C: CoverageSink>(
    m: &mut Machine,
    entry: &mut ArchEntry,
    cov: &mut C,
    pc: u32,
    cause: ExceptionCause,
) -> bool {
    entry.exception = Some(cause);
    if cov.hit(Site::exec_trap_double_fault, m.in_trap) {
        return true;
    }
    for &c in &TRAP_CAUSES {
        if cov.hit(trap_cause_site(c), c == cause) {
            break;
        }
    }
    m.in_trap = true;
    m.privilege = Privilege::Machine;
    m.epc = pc;
    m.cause = cause.code();
    entry.csr_writes.push((Csr::Epc, pc));
    entry.csr_writes.push((Csr::Cause, cause.code()));
    entry.csr_writes.push((Csr::Status, m.status_value()));
    false
}

fn step<C: CoverageSink>(
    m: &mut Machine,
    word: u32,
    pc: u32,
    prog_len: u32,
    bugs: bool,
    cov: &mut C,
) -> (ArchEntry, u32, bool) {
    let mut entry = ArchEntry {
        pc,
        encoding: word,
        exception: None,
        gpr_write: None,
        csr_writes: Vec::new(),
        privilege: m.privilege,
        mem_access: None,
    };
    let mut next_pc = pc + 1;
    let mut halt = false;

    let prev_store = m.last_store.take();

    // Decode: type tag chain, opcode validity, opcode chain.
    let tag = word >> 29;
    let ty = if cov.hit(Site::decode_tag_alu_r, tag == 0) {
        Some(InstrType::AluR)
    } else if cov.hit(Site::decode_tag_alu_i, tag == 1) {
        Some(InstrType::AluI)
    } else if cov.hit(Site::decode_tag_load, tag == 2) {
        Some(InstrType::Load)
    } else if cov.hit(Site::decode_tag_store, tag == 3) {
        Some(InstrType::Store)
    } else if cov.hit(Site::decode_tag_branch, tag == 4) {
        Some(InstrType::Branch)
    } else if cov.hit(Site::decode_tag_system, tag == 5) {
        Some(InstrType::System)
    } else {
        None
    };

    let decoded = ty.and_then(|ty| {
        let op_index = (word >> 24) & 0x1F;
        let table = Opcode::of_type(ty);
        let valid_site = match ty {
            InstrType::AluR => Site::decode_valid_op_alu_r,
            InstrType::AluI => Site::decode_valid_op_alu_i,
            InstrType::Load => Site::decode_valid_op_load,
            InstrType::Store => Site::decode_valid_op_store,
            InstrType::Branch => Site::decode_valid_op_branch,
            InstrType::System => Site::decode_valid_op_system,
        };
        if !cov.hit(valid_site, (op_index as usize) < table.len()) {
            return None;
        }
        let mut op = table[0];
        for &candidate in &table {
            if cov.hit(decode_op_site(candidate), candidate.index_in_type() == op_index) {
                op = candidate;
                break;
            }
        }
        Some(op)
    });

    let Some(opcode) = decoded else {
        halt = raise(m, &mut entry, cov, pc, ExceptionCause::IllegalInstruction);
        return (entry, next_pc, halt);
    };

    let rd = ((word >> 20) & 0xF) as u8;
    let rs1 = ((word >> 16) & 0xF) as u8;
    let rs2 = ((word >> 12) & 0xF) as u8;
    let imm = (((word & 0xFFF) << 20) as i32) >> 20;
    cov.hit(Site::decode_imm_negative, imm < 0);
    cov.hit(Site::decode_rd_zero, rd == 0);
    cov.hit(Site::decode_rs1_zero, rs1 == 0);
    cov.hit(Site::decode_rs2_zero, rs2 == 0);

    match opcode.instr_type() {
        InstrType::AluR => {
            let a = m.gprs[rs1 as usize];
            let b = m.gprs[rs2 as usize];
            let value = match opcode {
                Opcode::Add => a.wrapping_add(b),
                Opcode::Sub => a.wrapping_sub(b),
                Opcode::And => a & b,
                Opcode::Or => a | b,
                Opcode::Xor => a ^ b,
                Opcode::Sll => {
                    cov.hit(Site::exec_shift_sll_over, b > 31);
                    a << (b & 31)
                }
                Opcode::Srl => {
                    cov.hit(Site::exec_shift_srl_over, b > 31);
                    a >> (b & 31)
                }
                Opcode::Sra => {
                    cov.hit(Site::exec_shift_sra_over, b > 31);
                    ((a as i32) >> (b & 31)) as u32
                }
                Opcode::Slt => cov.hit(Site::exec_slt_true, (a as i32) < (b as i32)) as u32,
                Opcode::Mul => {
                    let same = cov.hit(Site::exec_mul_same_operand, rs1 == rs2);
                    if bugs && same {
                        // B2: the buggy decoder routes rs1 == rs2 multiplies
                        // down the adder.
                        a.wrapping_add(b)
                    } else {
                        let wide = (a as i32 as i64) * (b as i32 as i64);
                        cov.hit(
                            Site::exec_mul_overflow,
                            wide > i32::MAX as i64 || wide < i32::MIN as i64,
                        );
                        (a as i32).wrapping_mul(b as i32) as u32
                    }
                }
                _ => unreachable!("ALU-R table"),
            };
            write_gpr(m, &mut entry, cov, rd, value);
        }
        InstrType::AluI => {
            let a = m.gprs[rs1 as usize];
            let iu = imm as u32;
            let value = match opcode {
                Opcode::Addi => a.wrapping_add(iu),
                Opcode::Andi => a & iu,
                Opcode::Ori => a | iu,
                Opcode::Xori => a ^ iu,
                Opcode::Slli => {
                    cov.hit(Site::exec_shift_slli_over, !(0..32).contains(&imm));
                    a << (iu & 31)
                }
                Opcode::Srli => {
                    cov.hit(Site::exec_shift_srli_over, !(0..32).contains(&imm));
                    a >> (iu & 31)
                }
                Opcode::Slti => cov.hit(Site::exec_slti_true, (a as i32) < imm) as u32,
                Opcode::Li => iu,
                _ => unreachable!("ALU-I table"),
            };
            write_gpr(m, &mut entry, cov, rd, value);
        }
        InstrType::Load => {
            let addr = match opcode {
                Opcode::Lw => m.gprs[rs1 as usize].wrapping_add(imm as u32),
                Opcode::Lwx => m.gprs[rs1 as usize].wrapping_add(m.gprs[rs2 as usize]),
                _ => unreachable!("LOAD table"),
            };
            if !cov.hit(Site::exec_load_in_range, addr < MEM_BYTES) {
                if bugs {
                    // B1: out-of-range loads return zero instead of faulting.
                    entry.mem_access = Some(MemAccess {
                        addr,
                        data: 0,
                        is_store: false,
                    });
                    write_gpr(m, &mut entry, cov, rd, 0);
                } else {
                    halt = raise(m, &mut entry, cov, pc, ExceptionCause::OutOfRangeAccess);
                }
            } else if !cov.hit(Site::exec_load_aligned, addr % 4 == 0) {
                halt = raise(m, &mut entry, cov, pc, ExceptionCause::MisalignedAccess);
            } else {
                let stale = cov.hit(
                    Site::exec_load_after_store_hit,
                    prev_store.is_some_and(|(a, _)| a == addr),
                );
                let value = if bugs && stale {
                    // B4: a load chasing a store to the same address reads
                    // the pre-store value.
                    prev_store.unwrap().1
                } else {
                    m.mem[(addr / 4) as usize]
                };
                entry.mem_access = Some(MemAccess {
                    addr,
                    data: value,
                    is_store: false,
                });
                write_gpr(m, &mut entry, cov, rd, value);
            }
        }
        InstrType::Store => {
            let addr = m.gprs[rs1 as usize].wrapping_add(imm as u32);
            if !cov.hit(Site::exec_store_in_range, addr < MEM_BYTES) {
                halt = raise(m, &mut entry, cov, pc, ExceptionCause::OutOfRangeAccess);
            } else if !cov.hit(Site::exec_store_aligned, addr % 4 == 0) {
                halt = raise(m, &mut entry, cov, pc, ExceptionCause::MisalignedAccess);
            } else {
                let data = match opcode {
                    Opcode::Sw => m.gprs[rd as usize],
                    Opcode::Swz => 0,
                    _ => unreachable!("STORE table"),
                };
                let widx = (addr / 4) as usize;
                m.last_store = Some((addr, m.mem[widx]));
                m.mem[widx] = data;
                entry.mem_access = Some(MemAccess {
                    addr,
                    data,
                    is_store: true,
                });
            }
        }
        InstrType::Branch => {
            let a = m.gprs[rd as usize];
            let b = m.gprs[rs1 as usize];
            let taken = match opcode {
                Opcode::Beq => cov.hit(Site::exec_branch_beq_taken, a == b),
                Opcode::Bne => cov.hit(Site::exec_branch_bne_taken, a != b),
                Opcode::Blt => cov.hit(Site::exec_branch_blt_taken, (a as i32) < (b as i32)),
                Opcode::Bge => cov.hit(Site::exec_branch_bge_taken, (a as i32) >= (b as i32)),
                Opcode::Bltu => cov.hit(Site::exec_branch_bltu_taken, a < b),
                Opcode::Bgeu => cov.hit(Site::exec_branch_bgeu_taken, a >= b),
                _ => unreachable!("BRANCH table"),
            };
            if taken {
                // Skips run forward only; a non-positive offset still
                // advances one slot, and overlong targets clamp to the end.
                let clamped = cov.hit(Site::exec_branch_offset_clamped, imm < 1);
                let offset = if clamped { 1 } else { imm as u32 };
                let target = pc.saturating_add(offset);
                if cov.hit(Site::exec_branch_past_end, target >= prog_len) {
                    next_pc = prog_len;
                } else {
                    next_pc = target;
                }
            }
        }
        InstrType::System => match opcode {
            Opcode::Csrrs | Opcode::Csrrw => {
                if !cov.hit(Site::exec_csr_priv_machine, m.privilege == Privilege::Machine) {
                    halt = raise(m, &mut entry, cov, pc, ExceptionCause::PrivilegeViolation);
                } else if !cov.hit(Site::exec_csr_id_valid, (0..8).contains(&imm)) {
                    if bugs && opcode == Opcode::Csrrs && rs1 == 0 {
                        // B3: reads of unimplemented ids leak stale scratch
                        // data instead of faulting.
                        write_gpr(m, &mut entry, cov, rd, m.scratch);
                    } else {
                        halt = raise(m, &mut entry, cov, pc, ExceptionCause::IllegalCsr);
                    }
                } else {
                    let csr = Csr::from_id(imm as u32).expect("id already range-checked");
                    let old = csr_read(m, cov, csr);
                    match opcode {
                        Opcode::Csrrs => {
                            let pure_read = cov.hit(Site::exec_csrrs_rs1_zero, rs1 == 0);
                            write_gpr(m, &mut entry, cov, rd, old);
                            if !pure_read {
                                let set = old | m.gprs[rs1 as usize];
                                csr_write(m, &mut entry, cov, csr, set);
                            }
                        }
                        Opcode::Csrrw => {
                            write_gpr(m, &mut entry, cov, rd, old);
                            let value = m.gprs[rs1 as usize];
                            csr_write(m, &mut entry, cov, csr, value);
                        }
                        _ => unreachable!(),
                    }
                }
            }
            Opcode::Fence => {
                let canonical = cov.hit(Site::exec_fence_imm_zero, imm == 0);
                if bugs && !canonical {
                    // B5: the non-canonical fence decodes to a NOP and the
                    // drain tick never happens.
                } else {
                    let tick = m.timer.wrapping_add(1);
                    csr_write(m, &mut entry, cov, Csr::Timer, tick);
                }
            }
            Opcode::Ebreak => {
                // Debug mark: retires with no architectural effect beyond
                // the instret tick (which B6 drops on the buggy side).
            }
            Opcode::Ecall => {
                let cause = if cov.hit(Site::exec_ecall_from_user, m.privilege == Privilege::User)
                {
                    ExceptionCause::EnvCallUser
                } else {
                    ExceptionCause::EnvCallMachine
                };
                halt = raise(m, &mut entry, cov, pc, cause);
            }
            Opcode::Mret => {
                if !cov.hit(Site::exec_mret_priv_machine, m.privilege == Privilege::Machine) {
                    halt = raise(m, &mut entry, cov, pc, ExceptionCause::PrivilegeViolation);
                } else {
                    // Return to user mode and clear the pending-trap bit.
                    csr_write(m, &mut entry, cov, Csr::Status, 0b10);
                }
            }
            _ => unreachable!("SYSTEM table"),
        },
    }

    if entry.exception.is_none() {
        let skip_tick = bugs && opcode == Opcode::Ebreak;
        if !skip_tick {
            // B6 (when `bugs`): the debug break fails to count as retired.
            m.instret = m.instret.wrapping_add(1);
        }
    }

    (entry, next_pc, halt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{point_id, Site};
    use crate::isa::{encode, nop, Opcode, TestProgram};

    fn prog(words: Vec<u32>) -> TestProgram {
        TestProgram::new("t", words)
    }

    fn padded(mut words: Vec<u32>) -> TestProgram {
        while words.len() < 20 {
            words.push(nop());
        }
        prog(words)
    }

    #[test]
    fn nop_program_covers_exactly_the_nop_path() {
        let test = prog(vec![nop(); 20]);
        let (cov, trace) = simulate(&test);
        assert_eq!(trace.entries.len(), 20);
        assert!(trace.entries.iter().all(|e| e.exception.is_none()));
        assert!(!trace.double_fault);

        // Hand enumeration of the decode/execute points on the NOP path.
        let expected = [
            point_id(Site::decode_tag_alu_r, false),
            point_id(Site::decode_tag_alu_i, true),
            point_id(Site::decode_valid_op_alu_i, true),
            point_id(Site::decode_op_addi, true),
            point_id(Site::decode_imm_negative, false),
            point_id(Site::decode_rd_zero, true),
            point_id(Site::decode_rs1_zero, true),
            point_id(Site::decode_rs2_zero, true),
            point_id(Site::exec_wb_rd_zero, true),
        ];
        let mut got: Vec<usize> = cov.ids().collect();
        got.sort_unstable();
        let mut want = expected.to_vec();
        want.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn simulate_is_deterministic() {
        let test = padded(vec![
            encode(Opcode::Li, 1, 0, 0, 77),
            encode(Opcode::Sw, 1, 0, 0, 16),
            encode(Opcode::Lw, 2, 0, 0, 16),
            encode(Opcode::Csrrs, 3, 1, 0, 1),
        ]);
        assert_eq!(simulate(&test), simulate(&test));
    }

    #[test]
    fn csrrs_read_and_set_sides() {
        // rs1 == x0: pure read covers the true side (c1).
        let read = padded(vec![encode(Opcode::Csrrs, 1, 0, 0, 1)]);
        let (cov, _) = simulate(&read);
        assert!(cov.contains(point_id(Site::exec_csrrs_rs1_zero, true)));
        assert!(!cov.contains(point_id(Site::exec_csrrs_rs1_zero, false)));

        // rs1 != x0: read-and-set covers the false side (c2).
        let set = padded(vec![encode(Opcode::Csrrs, 1, 5, 0, 1)]);
        let (cov, trace) = simulate(&set);
        assert!(cov.contains(point_id(Site::exec_csrrs_rs1_zero, false)));
        assert_eq!(trace.entries[0].csr_writes, vec![(Csr::Tvec, 0)]);
    }

    #[test]
    fn x0_writes_record_zero_in_both_models() {
        let test = padded(vec![encode(Opcode::Li, 0, 0, 0, 99)]);
        let (_, dut) = simulate(&test);
        let golden = golden_execute(&test);
        assert_eq!(dut.entries[0].gpr_write, Some((0, 0)));
        assert_eq!(golden.entries[0].gpr_write, Some((0, 0)));
        // And x0 still reads as zero afterwards.
        assert_eq!(dut.entries[1].exception, None);
    }

    #[test]
    fn golden_raises_the_defined_exceptions() {
        // Illegal opcode.
        let golden = golden_execute(&prog(vec![6 << 29]));
        assert_eq!(
            golden.entries[0].exception,
            Some(ExceptionCause::IllegalInstruction)
        );
        // Out-of-range load.
        let golden = golden_execute(&prog(vec![encode(Opcode::Lw, 1, 0, 0, -4)]));
        assert_eq!(
            golden.entries[0].exception,
            Some(ExceptionCause::OutOfRangeAccess)
        );
        // Misaligned load.
        let golden = golden_execute(&prog(vec![encode(Opcode::Lw, 1, 0, 0, 6)]));
        assert_eq!(
            golden.entries[0].exception,
            Some(ExceptionCause::MisalignedAccess)
        );
        // CSR access from user mode (mret drops to user).
        let golden = golden_execute(&prog(vec![
            encode(Opcode::Mret, 0, 0, 0, 0),
            encode(Opcode::Csrrs, 1, 0, 0, 1),
        ]));
        assert_eq!(golden.entries[1].privilege, Privilege::User);
        assert_eq!(
            golden.entries[1].exception,
            Some(ExceptionCause::PrivilegeViolation)
        );
    }

    #[test]
    fn exception_logs_trap_csrs_and_continues() {
        let test = padded(vec![nop(), encode(Opcode::Ecall, 0, 0, 0, 0), nop()]);
        let golden = golden_execute(&test);
        let entry = &golden.entries[1];
        assert_eq!(entry.exception, Some(ExceptionCause::EnvCallMachine));
        assert_eq!(
            entry.csr_writes,
            vec![
                (Csr::Epc, 1),
                (Csr::Cause, ExceptionCause::EnvCallMachine.code()),
                (Csr::Status, 1),
            ]
        );
        // Execution continues at the next slot.
        assert_eq!(golden.entries.len(), 20);
        assert!(!golden.double_fault);
    }

    #[test]
    fn second_exception_inside_trap_double_faults() {
        let test = padded(vec![
            encode(Opcode::Ecall, 0, 0, 0, 0),
            encode(Opcode::Ecall, 0, 0, 0, 0),
            nop(),
        ]);
        let golden = golden_execute(&test);
        assert!(golden.double_fault);
        assert_eq!(golden.entries.len(), 2);
    }

    #[test]
    fn branches_skip_forward_and_clamp() {
        // beq x0,x0 always takes; offset 3 skips two slots.
        let test = prog(vec![
            encode(Opcode::Beq, 0, 0, 0, 3),
            encode(Opcode::Li, 1, 0, 0, 1),
            encode(Opcode::Li, 2, 0, 0, 2),
            encode(Opcode::Li, 3, 0, 0, 3),
        ]);
        let golden = golden_execute(&test);
        let pcs: Vec<u32> = golden.entries.iter().map(|e| e.pc).collect();
        assert_eq!(pcs, vec![0, 3]);

        // A taken branch past the end halts cleanly.
        let test = prog(vec![nop(), encode(Opcode::Beq, 0, 0, 0, 6), nop()]);
        let golden = golden_execute(&test);
        assert_eq!(golden.entries.len(), 2);
        assert!(!golden.double_fault);
    }

    #[test]
    fn program_counter_log_is_monotone() {
        let test = padded(vec![
            encode(Opcode::Beq, 0, 0, 0, 2),
            encode(Opcode::Li, 1, 0, 0, 5),
            encode(Opcode::Bne, 1, 0, 0, 4),
        ]);
        let golden = golden_execute(&test);
        let pcs: Vec<u32> = golden.entries.iter().map(|e| e.pc).collect();
        assert!(pcs.windows(2).all(|w| w[0] < w[1]), "{pcs:?}");
    }

    #[test]
    fn store_then_load_round_trips_in_golden() {
        let test = padded(vec![
            encode(Opcode::Li, 1, 0, 0, 7),
            encode(Opcode::Sw, 1, 0, 0, 8),
            encode(Opcode::Lw, 2, 0, 0, 8),
        ]);
        let golden = golden_execute(&test);
        assert_eq!(golden.entries[2].gpr_write, Some((2, 7)));
        assert_eq!(
            golden.entries[2].mem_access,
            Some(MemAccess {
                addr: 8,
                data: 7,
                is_store: false
            })
        );
    }

    #[test]
    fn mret_returns_to_user_and_clears_trap() {
        let test = padded(vec![
            encode(Opcode::Ecall, 0, 0, 0, 0),
            encode(Opcode::Mret, 0, 0, 0, 0),
            encode(Opcode::Ecall, 0, 0, 0, 0),
        ]);
        let golden = golden_execute(&test);
        assert_eq!(golden.entries[1].csr_writes, vec![(Csr::Status, 0b10)]);
        // The post-mret ecall traps from user mode without double faulting.
        assert_eq!(
            golden.entries[2].exception,
            Some(ExceptionCause::EnvCallUser)
        );
        assert!(!golden.double_fault);
    }

    #[test]
    fn instret_counts_retired_instructions() {
        // Three retired, then csrrs reads instret: 3.
        let test = padded(vec![
            nop(),
            nop(),
            nop(),
            encode(Opcode::Csrrs, 1, 0, 0, Csr::Instret.id() as i32),
        ]);
        let golden = golden_execute(&test);
        assert_eq!(golden.entries[3].gpr_write, Some((1, 3)));
        // A faulting instruction does not retire.
        let test = padded(vec![
            encode(Opcode::Ecall, 0, 0, 0, 0),
            encode(Opcode::Csrrs, 1, 0, 0, Csr::Instret.id() as i32),
        ]);
        let golden = golden_execute(&test);
        assert_eq!(golden.entries[1].gpr_write, Some((1, 0)));
    }
}
