//! Branch-coverage instrumentation for the toy processor.
//!
//! Every two-way decision in the interpreter's decode and execute stages is
//! registered below as a [`Site`]. Each site owns two coverage points, one
//! per side: point `2*site` is the false side, `2*site + 1` the true side.
//! The registry is static, so the total point count is a compile-time
//! property of the interpreter.

use serde::{Deserialize, Serialize};

macro_rules! coverage_sites {
    ($($name:ident,)*) => {
        /// Decision sites instrumented in the interpreter, in registry order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        #[allow(non_camel_case_types)]
        #[repr(u16)]
        pub enum Site { $($name),* }

        /// Registry of site names; index order matches [`Site`] discriminants.
        pub const SITE_NAMES: &[&str] = &[$(stringify!($name)),*];
    };
}

coverage_sites! {
    // decode: type tag dispatch
    decode_tag_alu_r,
    decode_tag_alu_i,
    decode_tag_load,
    decode_tag_store,
    decode_tag_branch,
    decode_tag_system,
    // decode: opcode field within the type's table
    decode_valid_op_alu_r,
    decode_valid_op_alu_i,
    decode_valid_op_load,
    decode_valid_op_store,
    decode_valid_op_branch,
    decode_valid_op_system,
    // decode: opcode dispatch chains
    decode_op_add,
    decode_op_sub,
    decode_op_and,
    decode_op_or,
    decode_op_xor,
    decode_op_sll,
    decode_op_srl,
    decode_op_sra,
    decode_op_slt,
    decode_op_mul,
    decode_op_addi,
    decode_op_andi,
    decode_op_ori,
    decode_op_xori,
    decode_op_slli,
    decode_op_srli,
    decode_op_slti,
    decode_op_li,
    decode_op_lw,
    decode_op_lwx,
    decode_op_sw,
    decode_op_swz,
    decode_op_beq,
    decode_op_bne,
    decode_op_blt,
    decode_op_bge,
    decode_op_bltu,
    decode_op_bgeu,
    decode_op_csrrs,
    decode_op_csrrw,
    decode_op_fence,
    decode_op_ebreak,
    decode_op_ecall,
    decode_op_mret,
    // decode: operand field observations
    decode_imm_negative,
    decode_rd_zero,
    decode_rs1_zero,
    decode_rs2_zero,
    // execute: write-back
    exec_wb_rd_zero,
    // execute: shift amounts past the register width
    exec_shift_sll_over,
    exec_shift_srl_over,
    exec_shift_sra_over,
    exec_shift_slli_over,
    exec_shift_srli_over,
    // execute: comparisons
    exec_slt_true,
    exec_slti_true,
    // execute: multiplier
    exec_mul_same_operand,
    exec_mul_overflow,
    // execute: branch resolution
    exec_branch_beq_taken,
    exec_branch_bne_taken,
    exec_branch_blt_taken,
    exec_branch_bge_taken,
    exec_branch_bltu_taken,
    exec_branch_bgeu_taken,
    exec_branch_offset_clamped,
    exec_branch_past_end,
    // execute: memory
    exec_load_in_range,
    exec_load_aligned,
    exec_load_after_store_hit,
    exec_store_in_range,
    exec_store_aligned,
    // execute: CSR access
    exec_csr_priv_machine,
    exec_csr_id_valid,
    exec_csrrs_rs1_zero,
    exec_csr_read_status,
    exec_csr_read_tvec,
    exec_csr_read_epc,
    exec_csr_read_cause,
    exec_csr_read_instret,
    exec_csr_read_scratch,
    exec_csr_read_timer,
    exec_csr_read_custom,
    exec_csr_write_status,
    exec_csr_write_tvec,
    exec_csr_write_epc,
    exec_csr_write_cause,
    exec_csr_write_instret,
    exec_csr_write_scratch,
    exec_csr_write_timer,
    exec_csr_write_custom,
    // execute: other system opcodes
    exec_fence_imm_zero,
    exec_ecall_from_user,
    exec_mret_priv_machine,
    // execute: trap path
    exec_trap_double_fault,
    exec_trap_cause_illegal,
    exec_trap_cause_illegal_csr,
    exec_trap_cause_misaligned,
    exec_trap_cause_oob,
    exec_trap_cause_priv,
    exec_trap_cause_ecall_m,
    exec_trap_cause_ecall_u,
}

/// Static count of enumerated branch-coverage points (two per site).
pub fn point_count() -> usize {
    SITE_NAMES.len() * 2
}

/// Point id for one side of one site.
pub fn point_id(site: Site, taken: bool) -> usize {
    site as usize * 2 + taken as usize
}

/// Human-readable name for a point id.
pub fn point_name(id: usize) -> String {
    let side = if id % 2 == 1 { "true" } else { "false" };
    format!("{}:{side}", SITE_NAMES[id / 2])
}

/// A set of covered point ids over the static registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMap {
    bits: Vec<u64>,
    points: usize,
}

impl CoverageMap {
    /// Empty map sized to the registry.
    pub fn new() -> Self {
        Self::with_points(point_count())
    }

    pub fn with_points(points: usize) -> Self {
        Self {
            bits: vec![0; points.div_ceil(64)],
            points,
        }
    }

    pub fn total_points(&self) -> usize {
        self.points
    }

    /// Mark a point; returns true when it was newly covered.
    pub fn mark(&mut self, id: usize) -> bool {
        assert!(id < self.points, "point id {id} out of range");
        let (block, bit) = (id / 64, id % 64);
        let fresh = self.bits[block] & (1 << bit) == 0;
        self.bits[block] |= 1 << bit;
        fresh
    }

    pub fn contains(&self, id: usize) -> bool {
        id < self.points && self.bits[id / 64] & (1 << (id % 64)) != 0
    }

    /// Fold `other` in; returns how many points were new to `self`.
    pub fn union_with(&mut self, other: &CoverageMap) -> usize {
        assert_eq!(self.points, other.points, "maps cover different registries");
        let mut added = 0;
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            added += (*b & !*a).count_ones() as usize;
            *a |= *b;
        }
        added
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.points).filter(|&id| self.contains(id))
    }
}

impl Default for CoverageMap {
    fn default() -> Self {
        Self::new()
    }
}

/// Where the interpreter reports decision outcomes. The golden model runs
/// with [`NoCoverage`]; the design under test records into a [`CoverageMap`].
pub(crate) trait CoverageSink {
    fn hit(&mut self, site: Site, outcome: bool) -> bool;
}

pub(crate) struct NoCoverage;

impl CoverageSink for NoCoverage {
    #[inline]
    fn hit(&mut self, _site: Site, outcome: bool) -> bool {
        outcome
    }
}

impl CoverageSink for CoverageMap {
    #[inline]
    fn hit(&mut self, site: Site, outcome: bool) -> bool {
        self.mark(point_id(site, outcome));
        outcome
    }
}
