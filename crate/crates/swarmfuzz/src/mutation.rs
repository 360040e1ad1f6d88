//! The mutation-operator catalog and its weighted application to test
//! programs.
//!
//! The twelve operators span bit-, field-, instruction- and program-level
//! edits. A scheduling particle's position assigns each operator a selection
//! probability; [`mutate`] samples one operator from those weights, picks an
//! instruction slot, and applies it. Operators that need a decodable or
//! immediate-carrying instruction redraw the slot a bounded number of times
//! and then fall back to regenerating the slot outright.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::isa::{
    decode, random_instruction_of_type, InstrType, Opcode, TestProgram, INSTR_TYPES, REG_COUNT,
};
use crate::pso::WeightVector;

/// The ordered operator catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MutationOp {
    /// Flip one random bit of one instruction word.
    Bitflip1,
    /// Flip two distinct random bits.
    Bitflip2,
    /// Flip four distinct random bits.
    Bitflip4,
    /// Flip one random byte.
    ByteFlip,
    /// Add or subtract 1..=8 on one encoding field, wrapping in the field.
    ArithAddSub,
    /// Replace the opcode with another opcode of the same type.
    OpcodeMut,
    /// Replace the opcode with one from a different type, re-legalizing
    /// operands that fall outside the new opcode's tables.
    OpcodeCrossMut,
    /// Redraw one register operand.
    RegMut,
    /// Redraw the immediate from the opcode's table.
    RandomImm,
    /// Exchange two instruction slots.
    SwapInstr,
    /// Delete one slot and append a fresh random instruction at the end.
    DeleteAppend,
    /// Replace one slot with a fresh random instruction.
    RandomInstr,
}

/// Catalog order; a scheduling position's weights line up with this.
pub const OPERATORS: [MutationOp; 12] = [
    MutationOp::Bitflip1,
    MutationOp::Bitflip2,
    MutationOp::Bitflip4,
    MutationOp::ByteFlip,
    MutationOp::ArithAddSub,
    MutationOp::OpcodeMut,
    MutationOp::OpcodeCrossMut,
    MutationOp::RegMut,
    MutationOp::RandomImm,
    MutationOp::SwapInstr,
    MutationOp::DeleteAppend,
    MutationOp::RandomInstr,
];

impl MutationOp {
    pub fn index(self) -> usize {
        OPERATORS.iter().position(|&op| op == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            MutationOp::Bitflip1 => "Bitflip1",
            MutationOp::Bitflip2 => "Bitflip2",
            MutationOp::Bitflip4 => "Bitflip4",
            MutationOp::ByteFlip => "ByteFlip",
            MutationOp::ArithAddSub => "ArithAddSub",
            MutationOp::OpcodeMut => "OpcodeMut",
            MutationOp::OpcodeCrossMut => "OpcodeCrossMut",
            MutationOp::RegMut => "RegMut",
            MutationOp::RandomImm => "RandomImm",
            MutationOp::SwapInstr => "SwapInstr",
            MutationOp::DeleteAppend => "DeleteAppend",
            MutationOp::RandomInstr => "RandomInstr",
        }
    }

    /// Can this operator act on the given slot as-is?
    fn applicable(self, word: u32) -> bool {
        match self {
            MutationOp::OpcodeMut | MutationOp::OpcodeCrossMut => decode(word).is_some(),
            MutationOp::RegMut => decode(word)
                .map(|i| i.opcode.uses_rd() || i.opcode.uses_rs1() || i.opcode.uses_rs2())
                .unwrap_or(false),
            MutationOp::RandomImm => decode(word).map(|i| i.opcode.uses_imm()).unwrap_or(false),
            _ => true,
        }
    }
}

/// Lineage of one mutation for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub operator: MutationOp,
    pub instruction_slot: usize,
    pub parent_test_id: String,
}

// Encoding field geometry: (shift, width) for opcode, rd, rs1, rs2, imm.
const FIELDS: [(u32, u32); 5] = [(24, 5), (20, 4), (16, 4), (12, 4), (0, 12)];

fn field_get(word: u32, field: (u32, u32)) -> u32 {
    (word >> field.0) & ((1 << field.1) - 1)
}

fn field_set(word: u32, field: (u32, u32), value: u32) -> u32 {
    let mask = ((1u32 << field.1) - 1) << field.0;
    (word & !mask) | ((value << field.0) & mask)
}

fn flip_distinct_bits(word: u32, n: usize, rng: &mut impl Rng) -> u32 {
    let mut picked: Vec<u32> = Vec::with_capacity(n);
    while picked.len() < n {
        let bit = rng.gen_range(0..32);
        if !picked.contains(&bit) {
            picked.push(bit);
        }
    }
    picked.iter().fold(word, |w, b| w ^ (1 << b))
}

/// Apply one operator at the given slot. `slot` selects the edited
/// instruction for single-slot operators, the first operand for
/// [`MutationOp::SwapInstr`], and the deleted slot for
/// [`MutationOp::DeleteAppend`].
pub fn apply_operator(
    op: MutationOp,
    test: &TestProgram,
    slot: usize,
    rng: &mut impl Rng,
    new_id: impl Into<String>,
) -> TestProgram {
    assert!(slot < test.len(), "slot {slot} out of range");
    let mut words = test.words.clone();
    let word = words[slot];
    match op {
        MutationOp::Bitflip1 => words[slot] = flip_distinct_bits(word, 1, rng),
        MutationOp::Bitflip2 => words[slot] = flip_distinct_bits(word, 2, rng),
        MutationOp::Bitflip4 => words[slot] = flip_distinct_bits(word, 4, rng),
        MutationOp::ByteFlip => {
            let byte = rng.gen_range(0..4);
            words[slot] = word ^ (0xFF << (8 * byte));
        }
        MutationOp::ArithAddSub => {
            // Pick among the fields this opcode actually uses; an
            // undecodable word exposes all five positional fields.
            let usable: Vec<(u32, u32)> = match decode(word) {
                Some(i) => {
                    let mut f = vec![FIELDS[0]];
                    if i.opcode.uses_rd() {
                        f.push(FIELDS[1]);
                    }
                    if i.opcode.uses_rs1() {
                        f.push(FIELDS[2]);
                    }
                    if i.opcode.uses_rs2() {
                        f.push(FIELDS[3]);
                    }
                    if i.opcode.uses_imm() {
                        f.push(FIELDS[4]);
                    }
                    f
                }
                None => FIELDS.to_vec(),
            };
            let field = usable[rng.gen_range(0..usable.len())];
            let delta = rng.gen_range(1..=8u32);
            let add = rng.gen_bool(0.5);
            let old = field_get(word, field);
            let new = if add {
                old.wrapping_add(delta)
            } else {
                old.wrapping_sub(delta)
            };
            words[slot] = field_set(word, field, new);
        }
        MutationOp::OpcodeMut => {
            let instr = decode(word).expect("applicability checked");
            let table = Opcode::of_type(instr.opcode.instr_type());
            let alternatives: Vec<Opcode> =
                table.into_iter().filter(|&o| o != instr.opcode).collect();
            let new_op = alternatives[rng.gen_range(0..alternatives.len())];
            words[slot] = field_set(word, FIELDS[0], new_op.index_in_type());
        }
        MutationOp::OpcodeCrossMut => {
            let instr = decode(word).expect("applicability checked");
            let other_types: Vec<InstrType> = INSTR_TYPES
                .iter()
                .copied()
                .filter(|&t| t != instr.opcode.instr_type())
                .collect();
            let ty = other_types[rng.gen_range(0..other_types.len())];
            let table = Opcode::of_type(ty);
            let new_op = table[rng.gen_range(0..table.len())];
            let mut w = word;
            w = field_set(w, FIELDS[0], new_op.index_in_type());
            w = (w & !(0b111 << 29)) | (ty.tag() << 29);
            // Register fields are 4 bits and always legal; the immediate is
            // redrawn when it falls outside the new opcode's table.
            if new_op.uses_imm() && !new_op.imm_in_range(instr.imm) {
                let imm = new_op.sample_imm(rng);
                w = field_set(w, FIELDS[4], imm as u32);
            }
            words[slot] = w;
        }
        MutationOp::RegMut => {
            let instr = decode(word).expect("applicability checked");
            let mut regs: Vec<(u32, u32)> = Vec::new();
            if instr.opcode.uses_rd() {
                regs.push(FIELDS[1]);
            }
            if instr.opcode.uses_rs1() {
                regs.push(FIELDS[2]);
            }
            if instr.opcode.uses_rs2() {
                regs.push(FIELDS[3]);
            }
            let field = regs[rng.gen_range(0..regs.len())];
            let new_reg = rng.gen_range(0..REG_COUNT) as u32;
            words[slot] = field_set(word, field, new_reg);
        }
        MutationOp::RandomImm => {
            let instr = decode(word).expect("applicability checked");
            let imm = instr.opcode.sample_imm(rng);
            words[slot] = field_set(word, FIELDS[4], imm as u32);
        }
        MutationOp::SwapInstr => {
            if test.len() > 1 {
                let mut other = rng.gen_range(0..test.len());
                while other == slot {
                    other = rng.gen_range(0..test.len());
                }
                words.swap(slot, other);
            }
        }
        MutationOp::DeleteAppend => {
            words.remove(slot);
            let ty = INSTR_TYPES[rng.gen_range(0..INSTR_TYPES.len())];
            words.push(random_instruction_of_type(ty, rng));
        }
        MutationOp::RandomInstr => {
            let ty = INSTR_TYPES[rng.gen_range(0..INSTR_TYPES.len())];
            words[slot] = random_instruction_of_type(ty, rng);
        }
    }
    TestProgram::new(new_id, words)
}

/// Sample one operator from the weights, pick a slot, apply. Inapplicable
/// slots are redrawn up to the program length and the operator then falls
/// back to [`MutationOp::RandomInstr`] on the last slot drawn.
pub fn mutate(
    test: &TestProgram,
    weights: &WeightVector,
    rng: &mut impl Rng,
    new_id: impl Into<String>,
) -> (TestProgram, MutationRecord) {
    assert_eq!(weights.len(), OPERATORS.len(), "one weight per operator");
    assert!(!test.is_empty(), "cannot mutate an empty program");
    let selected = OPERATORS[weights.sample(rng)];
    let mut slot = rng.gen_range(0..test.len());
    let mut applied = selected;
    if !selected.applicable(test.words[slot]) {
        let mut found = false;
        for _ in 0..test.len() {
            slot = rng.gen_range(0..test.len());
            if selected.applicable(test.words[slot]) {
                found = true;
                break;
            }
        }
        if !found {
            applied = MutationOp::RandomInstr;
        }
    }
    let record = MutationRecord {
        operator: selected,
        instruction_slot: slot,
        parent_test_id: test.id.clone(),
    };
    (apply_operator(applied, test, slot, rng, new_id), record)
}

/// Helper for fresh random whole programs (the static seed scheme): uniform
/// instruction type per slot, then the opcode and operand tables.
pub fn random_program(len: usize, id: impl Into<String>, rng: &mut impl Rng) -> TestProgram {
    let words = (0..len)
        .map(|_| {
            let ty = INSTR_TYPES[rng.gen_range(0..INSTR_TYPES.len())];
            random_instruction_of_type(ty, rng)
        })
        .collect();
    TestProgram::new(id, words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::encode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_program(rng: &mut ChaCha8Rng) -> TestProgram {
        random_program(20, "base", rng)
    }

    #[test]
    fn catalog_is_fixed_and_ordered() {
        assert_eq!(OPERATORS.len(), 12);
        assert_eq!(OPERATORS[0], MutationOp::Bitflip1);
        assert_eq!(OPERATORS[5], MutationOp::OpcodeMut);
        for (i, op) in OPERATORS.iter().enumerate() {
            assert_eq!(op.index(), i);
        }
    }

    #[test]
    fn bitflip1_changes_exactly_one_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let test = TestProgram::new("t", vec![0x0000_0001; 20]);
        for _ in 0..200 {
            let slot = rng.gen_range(0..20);
            let out = apply_operator(MutationOp::Bitflip1, &test, slot, &mut rng, "m");
            let diff: u32 = test
                .words
                .iter()
                .zip(&out.words)
                .map(|(a, b)| (a ^ b).count_ones())
                .sum();
            assert_eq!(diff, 1);
        }
    }

    #[test]
    fn swap_exchanges_two_slots() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let words: Vec<u32> = (0..20).map(|i| encode(Opcode::Li, 1, 0, 0, i)).collect();
        let test = TestProgram::new("t", words.clone());
        let out = apply_operator(MutationOp::SwapInstr, &test, 2, &mut rng, "m");
        let moved: Vec<usize> = (0..20).filter(|&i| out.words[i] != words[i]).collect();
        assert_eq!(moved.len(), 2);
        assert!(moved.contains(&2));
        let other = moved.iter().copied().find(|&i| i != 2).unwrap();
        assert_eq!(out.words[2], words[other]);
        assert_eq!(out.words[other], words[2]);
    }

    #[test]
    fn opcode_mut_preserves_type_and_operands() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = encode(Opcode::Csrrs, 7, 0, 0, 1);
        let test = TestProgram::new("t", vec![base; 20]);
        for _ in 0..100 {
            let out = apply_operator(MutationOp::OpcodeMut, &test, 4, &mut rng, "m");
            let instr = decode(out.words[4]).unwrap();
            assert_eq!(instr.instr_type(), InstrType::System);
            assert_ne!(instr.opcode, Opcode::Csrrs);
            // Operand bits untouched.
            assert_eq!(out.words[4] & 0x00FF_FFFF, base & 0x00FF_FFFF);
        }
    }

    #[test]
    fn random_imm_touches_only_the_immediate_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = encode(Opcode::Addi, 3, 5, 0, 100);
        let test = TestProgram::new("t", vec![base; 20]);
        for _ in 0..100 {
            let out = apply_operator(MutationOp::RandomImm, &test, 0, &mut rng, "m");
            assert_eq!(out.words[0] & 0xFFFF_F000, base & 0xFFFF_F000);
            let instr = decode(out.words[0]).unwrap();
            assert!(instr.opcode.imm_in_range(instr.imm));
        }
    }

    #[test]
    fn delete_append_preserves_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let test = sample_program(&mut rng);
        let out = apply_operator(MutationOp::DeleteAppend, &test, 7, &mut rng, "m");
        assert_eq!(out.len(), test.len());
        assert_eq!(out.words[..7], test.words[..7]);
        assert_eq!(out.words[7..19], test.words[8..20]);
    }

    #[test]
    fn locality_single_slot_operators_touch_one_slot() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for op in OPERATORS {
            if matches!(op, MutationOp::SwapInstr | MutationOp::DeleteAppend) {
                continue;
            }
            for _ in 0..50 {
                let test = sample_program(&mut rng);
                let slot = rng.gen_range(0..20);
                if !op.applicable(test.words[slot]) {
                    continue;
                }
                let out = apply_operator(op, &test, slot, &mut rng, "m");
                let changed: Vec<usize> =
                    (0..20).filter(|&i| out.words[i] != test.words[i]).collect();
                assert!(
                    changed.iter().all(|&i| i == slot),
                    "{op:?} changed {changed:?}"
                );
            }
        }
    }

    #[test]
    fn mutate_is_deterministic_under_a_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let test = sample_program(&mut rng);
        let w = WeightVector::uniform(12);
        let out_a = mutate(&test, &w, &mut ChaCha8Rng::seed_from_u64(9), "m").0;
        let out_b = mutate(&test, &w, &mut ChaCha8Rng::seed_from_u64(9), "m").0;
        assert_eq!(out_a, out_b);
    }

    #[test]
    fn mutate_point_mass_applies_that_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let test = sample_program(&mut rng);
        let mut raw = vec![0.0; 12];
        raw[MutationOp::Bitflip1.index()] = 1.0;
        let w = WeightVector::normalized(&raw).unwrap();
        let (out, record) = mutate(&test, &w, &mut rng, "m");
        assert_eq!(record.operator, MutationOp::Bitflip1);
        let diff: u32 = test
            .words
            .iter()
            .zip(&out.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum();
        assert_eq!(diff, 1);
    }

    #[test]
    fn mutate_output_length_is_stable_and_decodable_or_raw() {
        // Closure: no operator may break the fixed program length, and the
        // result always re-parses from its binary form.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let w = WeightVector::uniform(12);
        let mut test = sample_program(&mut rng);
        for i in 0..2000 {
            let (out, _) = mutate(&test, &w, &mut rng, format!("m{i}"));
            assert_eq!(out.len(), 20);
            let back = TestProgram::from_bytes("rt", &out.to_bytes()).unwrap();
            assert_eq!(back.words, out.words);
            test = out;
        }
    }

    #[test]
    fn operator_frequencies_track_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let test = sample_program(&mut rng);
        let mut raw = vec![1.0; 12];
        raw[0] = 4.0;
        raw[11] = 0.0;
        let w = WeightVector::normalized(&raw).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 12];
        for i in 0..n {
            let (_, record) = mutate(&test, &w, &mut rng, format!("m{i}"));
            counts[record.operator.index()] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - w.weights()[j]).abs() < 0.01,
                "operator {j}: {freq} vs {}",
                w.weights()[j]
            );
        }
    }

    #[test]
    fn inapplicable_operator_falls_back_to_random_instr() {
        // A program of ALU-R instructions offers no immediate field at all,
        // so RandomImm must fall back.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let test = TestProgram::new("t", vec![encode(Opcode::Add, 1, 2, 3, 0); 20]);
        let mut raw = vec![0.0; 12];
        raw[MutationOp::RandomImm.index()] = 1.0;
        let w = WeightVector::normalized(&raw).unwrap();
        for i in 0..50 {
            let (out, record) = mutate(&test, &w, &mut rng, format!("m{i}"));
            assert_eq!(record.operator, MutationOp::RandomImm);
            assert_eq!(out.len(), 20);
            // Exactly one slot was regenerated.
            let changed: Vec<usize> =
                (0..20).filter(|&i| out.words[i] != test.words[i]).collect();
            assert!(changed.len() <= 1);
        }
    }
}
