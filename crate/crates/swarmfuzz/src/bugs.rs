//! Catalog of the six bugs injected into the design under test, each with a
//! checked-in witness program whose DUT and golden traces mismatch.

use serde::{Deserialize, Serialize};

use crate::dut::Csr;
use crate::isa::{encode, nop, Opcode, TestProgram};

/// Identifiers for the injected bugs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BugId {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
}

pub const BUGS: [BugId; 6] = [BugId::B1, BugId::B2, BugId::B3, BugId::B4, BugId::B5, BugId::B6];

impl BugId {
    pub fn name(self) -> &'static str {
        match self {
            BugId::B1 => "B1",
            BugId::B2 => "B2",
            BugId::B3 => "B3",
            BugId::B4 => "B4",
            BugId::B5 => "B5",
            BugId::B6 => "B6",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            BugId::B1 => "loads from out-of-range addresses return 0 instead of raising an exception",
            BugId::B2 => "mul with rs1 = rs2 decodes to add",
            BugId::B3 => "reads of an unimplemented CSR id return stale scratch data instead of raising illegal-csr",
            BugId::B4 => "a load immediately after a store to the same address returns the pre-store value",
            BugId::B5 => "the fence opcode with a nonzero immediate decodes to a NOP, dropping its drain tick",
            BugId::B6 => "ebreak does not increment instret",
        }
    }

    pub fn from_name(s: &str) -> Option<BugId> {
        BUGS.iter().copied().find(|b| b.name() == s)
    }
}

impl std::fmt::Display for BugId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn pad(mut words: Vec<u32>, len: usize) -> Vec<u32> {
    while words.len() < len {
        words.push(nop());
    }
    words
}

/// The checked-in witness program for a bug, padded to `len` instructions.
pub fn witness(bug: BugId, len: usize) -> TestProgram {
    let words = match bug {
        // Load from a negative (wrapped, far out-of-range) address.
        BugId::B1 => pad(vec![encode(Opcode::Lw, 1, 0, 0, -4)], len),
        // 3 * 3 = 9 on the golden side, 3 + 3 = 6 on the buggy side.
        BugId::B2 => pad(
            vec![
                encode(Opcode::Li, 1, 0, 0, 3),
                encode(Opcode::Mul, 2, 1, 1, 0),
            ],
            len,
        ),
        // Pure read of CSR id 9, which is not implemented.
        BugId::B3 => pad(vec![encode(Opcode::Csrrs, 1, 0, 0, 9)], len),
        // Store 7 to address 8, then load it straight back.
        BugId::B4 => pad(
            vec![
                encode(Opcode::Li, 1, 0, 0, 7),
                encode(Opcode::Sw, 1, 0, 0, 8),
                encode(Opcode::Lw, 2, 0, 0, 8),
            ],
            len,
        ),
        // Non-canonical fence: immediate 1.
        BugId::B5 => pad(vec![encode(Opcode::Fence, 0, 0, 0, 1)], len),
        // An ebreak, then a csrrs read-and-set of instret so the dropped
        // tick lands in the CSR write log. rs1 = x1 holds zero, so the set
        // side writes the register back unchanged.
        BugId::B6 => {
            let mut words = pad(vec![], len);
            let n = words.len();
            words[n - 3] = encode(Opcode::Ebreak, 0, 0, 0, 0);
            words[n - 2] = encode(Opcode::Csrrs, 0, 1, 0, Csr::Instret.id() as i32);
            words
        }
    };
    TestProgram::new(format!("witness-{}", bug.name()), words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dut::{golden_execute, simulate};

    #[test]
    fn every_witness_fits_and_mismatches() {
        for bug in BUGS {
            let test = witness(bug, 20);
            assert_eq!(test.len(), 20, "{bug}");
            let (_, dut) = simulate(&test);
            let golden = golden_execute(&test);
            assert_ne!(dut, golden, "witness for {bug} must diverge");
        }
    }

    #[test]
    fn witnesses_trigger_only_their_own_bug_paths() {
        // B2's witness: the divergence is the multiply's destination value.
        let test = witness(BugId::B2, 20);
        let (_, dut) = simulate(&test);
        let golden = golden_execute(&test);
        assert_eq!(dut.entries[1].gpr_write, Some((2, 6)));
        assert_eq!(golden.entries[1].gpr_write, Some((2, 9)));

        // B4's witness: stale value 0 on the buggy side.
        let test = witness(BugId::B4, 20);
        let (_, dut) = simulate(&test);
        let golden = golden_execute(&test);
        assert_eq!(dut.entries[2].gpr_write, Some((2, 0)));
        assert_eq!(golden.entries[2].gpr_write, Some((2, 7)));
    }
}
