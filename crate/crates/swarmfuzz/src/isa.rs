//! The toy instruction set: encoding, decoding, program formats and the
//! operand tables used to generate random instructions.
//!
//! Every instruction is one 32-bit word:
//!
//! ```text
//! [31:29] type tag   [28:24] opcode   [23:20] rd
//! [19:16] rs1        [15:12] rs2      [11:0]  imm (signed)
//! ```
//!
//! Decoding is total at the host level: a word whose tag or opcode falls
//! outside the tables is simply not a canonical instruction, and executing
//! it raises an illegal-instruction exception inside the simulated machine.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// General-purpose register count; `x0` is hardwired to zero.
pub const REG_COUNT: u8 = 16;

/// Signed 12-bit immediate bounds.
pub const IMM_MIN: i32 = -2048;
pub const IMM_MAX: i32 = 2047;

/// The six instruction types the seed generator distributes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InstrType {
    AluR,
    AluI,
    Load,
    Store,
    Branch,
    System,
}

/// Ordered list of instruction types; row order of seed-particle positions.
pub const INSTR_TYPES: [InstrType; 6] = [
    InstrType::AluR,
    InstrType::AluI,
    InstrType::Load,
    InstrType::Store,
    InstrType::Branch,
    InstrType::System,
];

impl InstrType {
    pub fn tag(self) -> u32 {
        match self {
            InstrType::AluR => 0,
            InstrType::AluI => 1,
            InstrType::Load => 2,
            InstrType::Store => 3,
            InstrType::Branch => 4,
            InstrType::System => 5,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        INSTR_TYPES.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            InstrType::AluR => "ALU-R",
            InstrType::AluI => "ALU-I",
            InstrType::Load => "LOAD",
            InstrType::Store => "STORE",
            InstrType::Branch => "BRANCH",
            InstrType::System => "SYSTEM",
        }
    }
}

macro_rules! opcodes {
    ($($variant:ident, $mnemonic:literal, $ty:ident;)*) => {
        /// Every opcode in the toy ISA.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum Opcode { $($variant),* }

        /// All opcodes in encoding order (type tag, then opcode index).
        pub const OPCODES: &[Opcode] = &[$(Opcode::$variant),*];

        impl Opcode {
            pub fn mnemonic(self) -> &'static str {
                match self { $(Opcode::$variant => $mnemonic),* }
            }

            pub fn from_mnemonic(s: &str) -> Option<Self> {
                match s { $($mnemonic => Some(Opcode::$variant),)* _ => None }
            }

            pub fn instr_type(self) -> InstrType {
                match self { $(Opcode::$variant => InstrType::$ty),* }
            }
        }
    };
}

opcodes! {
    Add,   "add",   AluR;
    Sub,   "sub",   AluR;
    And,   "and",   AluR;
    Or,    "or",    AluR;
    Xor,   "xor",   AluR;
    Sll,   "sll",   AluR;
    Srl,   "srl",   AluR;
    Sra,   "sra",   AluR;
    Slt,   "slt",   AluR;
    Mul,   "mul",   AluR;
    Addi,  "addi",  AluI;
    Andi,  "andi",  AluI;
    Ori,   "ori",   AluI;
    Xori,  "xori",  AluI;
    Slli,  "slli",  AluI;
    Srli,  "srli",  AluI;
    Slti,  "slti",  AluI;
    Li,    "li",    AluI;
    Lw,    "lw",    Load;
    Lwx,   "lwx",   Load;
    Sw,    "sw",    Store;
    Swz,   "swz",   Store;
    Beq,   "beq",   Branch;
    Bne,   "bne",   Branch;
    Blt,   "blt",   Branch;
    Bge,   "bge",   Branch;
    Bltu,  "bltu",  Branch;
    Bgeu,  "bgeu",  Branch;
    Csrrs, "csrrs", System;
    Csrrw, "csrrw", System;
    Fence, "fence", System;
    Ebreak,"ebreak",System;
    Ecall, "ecall", System;
    Mret,  "mret",  System;
}

impl Opcode {
    /// Opcodes sharing one instruction type, in encoding order.
    pub fn of_type(ty: InstrType) -> Vec<Opcode> {
        OPCODES
            .iter()
            .copied()
            .filter(|op| op.instr_type() == ty)
            .collect()
    }

    /// Value of the 5-bit opcode field within this opcode's type.
    pub fn index_in_type(self) -> u32 {
        Opcode::of_type(self.instr_type())
            .iter()
            .position(|&op| op == self)
            .expect("opcode is in its own type table") as u32
    }

    pub fn from_type_index(ty: InstrType, index: u32) -> Option<Opcode> {
        Opcode::of_type(ty).get(index as usize).copied()
    }

    /// Does the instruction read or write the `rd` field? Stores read it as
    /// the data source; branches read it as the left comparand.
    pub fn uses_rd(self) -> bool {
        !matches!(
            self,
            Opcode::Swz | Opcode::Fence | Opcode::Ebreak | Opcode::Ecall | Opcode::Mret
        )
    }

    /// True when `rd` is written back (false for stores and branches).
    pub fn writes_rd(self) -> bool {
        self.uses_rd()
            && !matches!(self.instr_type(), InstrType::Store | InstrType::Branch)
    }

    pub fn uses_rs1(self) -> bool {
        match self {
            Opcode::Li | Opcode::Fence | Opcode::Ebreak | Opcode::Ecall | Opcode::Mret => false,
            _ => true,
        }
    }

    pub fn uses_rs2(self) -> bool {
        matches!(self.instr_type(), InstrType::AluR) || self == Opcode::Lwx
    }

    pub fn uses_imm(self) -> bool {
        match self.instr_type() {
            InstrType::AluR => false,
            InstrType::AluI => true,
            InstrType::Load => self == Opcode::Lw,
            InstrType::Store => true,
            InstrType::Branch => true,
            InstrType::System => matches!(self, Opcode::Csrrs | Opcode::Csrrw | Opcode::Fence),
        }
    }

    /// Membership test for [`Opcode::sample_imm`]'s range.
    pub fn imm_in_range(self, imm: i32) -> bool {
        match self {
            Opcode::Slli | Opcode::Srli => (0..32).contains(&imm),
            Opcode::Lw | Opcode::Sw | Opcode::Swz => (0..=28).contains(&imm) && imm % 4 == 0,
            op if op.instr_type() == InstrType::Branch => (1..=6).contains(&imm),
            Opcode::Csrrs | Opcode::Csrrw => (0..=11).contains(&imm),
            Opcode::Fence => imm == 0,
            op if op.uses_imm() => (IMM_MIN..=IMM_MAX).contains(&imm),
            _ => imm == 0,
        }
    }

    /// Draw an immediate from this opcode's operand table: full 12-bit range
    /// for ALU immediates, shift amounts in `[0, 31]`, small aligned offsets
    /// for memory, short forward skips for branches, and mostly-valid ids
    /// for CSR accesses. The canonical fence form carries a zero immediate.
    pub fn sample_imm(self, rng: &mut impl Rng) -> i32 {
        match self {
            Opcode::Slli | Opcode::Srli => rng.gen_range(0..32),
            Opcode::Lw | Opcode::Sw | Opcode::Swz => 4 * rng.gen_range(0..8),
            op if op.instr_type() == InstrType::Branch => rng.gen_range(1..=6),
            Opcode::Csrrs | Opcode::Csrrw => rng.gen_range(0..=11),
            Opcode::Fence => 0,
            op if op.uses_imm() => rng.gen_range(IMM_MIN..=IMM_MAX),
            _ => 0,
        }
    }
}

/// A decoded instruction. `encoding` keeps the exact word, including any
/// bits outside the fields this opcode uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub opcode: Opcode,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    pub imm: i32,
    pub encoding: u32,
}

impl Instruction {
    /// Canonical encoding: unused operand fields are zeroed.
    pub fn new(opcode: Opcode, rd: u8, rs1: u8, rs2: u8, imm: i32) -> Self {
        let word = encode(opcode, rd, rs1, rs2, imm);
        decode(word).expect("canonical encodings always decode")
    }

    /// True when the stored word is the canonical encoding of its fields.
    pub fn is_canonical(&self) -> bool {
        encode(self.opcode, self.rd, self.rs1, self.rs2, self.imm) == self.encoding
    }

    pub fn instr_type(&self) -> InstrType {
        self.opcode.instr_type()
    }
}

fn sign_extend_12(bits: u32) -> i32 {
    ((bits << 20) as i32) >> 20
}

/// Build the canonical word for the given fields. Operand fields the opcode
/// does not use are zeroed; used register fields are masked to 4 bits and
/// the immediate to its signed 12-bit range.
pub fn encode(opcode: Opcode, rd: u8, rs1: u8, rs2: u8, imm: i32) -> u32 {
    let tag = opcode.instr_type().tag();
    let op = opcode.index_in_type();
    let rd = if opcode.uses_rd() { (rd & 0xF) as u32 } else { 0 };
    let rs1 = if opcode.uses_rs1() { (rs1 & 0xF) as u32 } else { 0 };
    let rs2 = if opcode.uses_rs2() { (rs2 & 0xF) as u32 } else { 0 };
    let imm = if opcode.uses_imm() { (imm as u32) & 0xFFF } else { 0 };
    (tag << 29) | (op << 24) | (rd << 20) | (rs1 << 16) | (rs2 << 12) | imm
}

/// Decode a word, or `None` when the tag or opcode field is out of table.
pub fn decode(word: u32) -> Option<Instruction> {
    let ty = InstrType::from_tag(word >> 29)?;
    let opcode = Opcode::from_type_index(ty, (word >> 24) & 0x1F)?;
    Some(Instruction {
        opcode,
        rd: ((word >> 20) & 0xF) as u8,
        rs1: ((word >> 16) & 0xF) as u8,
        rs2: ((word >> 12) & 0xF) as u8,
        imm: sign_extend_12(word & 0xFFF),
        encoding: word,
    })
}

/// Draw a full random instruction of the given type: uniform opcode within
/// the type, then operands from the opcode's tables.
pub fn random_instruction_of_type(ty: InstrType, rng: &mut impl Rng) -> u32 {
    let ops = Opcode::of_type(ty);
    let opcode = ops[rng.gen_range(0..ops.len())];
    random_instruction_with_opcode(opcode, rng)
}

/// Draw random operands for a fixed opcode.
pub fn random_instruction_with_opcode(opcode: Opcode, rng: &mut impl Rng) -> u32 {
    let rd = if opcode.uses_rd() { rng.gen_range(0..REG_COUNT) } else { 0 };
    let rs1 = if opcode.uses_rs1() { rng.gen_range(0..REG_COUNT) } else { 0 };
    let rs2 = if opcode.uses_rs2() { rng.gen_range(0..REG_COUNT) } else { 0 };
    let imm = if opcode.uses_imm() { opcode.sample_imm(rng) } else { 0 };
    encode(opcode, rd, rs1, rs2, imm)
}

/// A fixed-length sequence of instruction words; the fuzzer's unit of input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestProgram {
    pub id: String,
    pub words: Vec<u32>,
}

impl TestProgram {
    pub fn new(id: impl Into<String>, words: Vec<u32>) -> Self {
        Self { id: id.into(), words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Text form, one instruction per line: `<mnemonic> <rd>,<rs1>,<rs2|imm>`.
    /// Words that are not canonical encodings round-trip as `.word 0x...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &word in &self.words {
            match decode(word) {
                Some(instr) if instr.is_canonical() => {
                    let third = if instr.opcode.uses_imm() {
                        instr.imm.to_string()
                    } else {
                        format!("x{}", instr.rs2)
                    };
                    out.push_str(&format!(
                        "{} x{},x{},{}\n",
                        instr.opcode.mnemonic(),
                        instr.rd,
                        instr.rs1,
                        third
                    ));
                }
                _ => out.push_str(&format!(".word 0x{word:08x}\n")),
            }
        }
        out
    }

    /// Parse the text form. Blank lines and `#` comments are skipped.
    pub fn from_text(id: impl Into<String>, text: &str) -> Result<Self, Error> {
        let mut words = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let src = raw_line.split('#').next().unwrap_or("").trim();
            if src.is_empty() {
                continue;
            }
            if let Some(hex) = src.strip_prefix(".word") {
                let hex = hex.trim();
                let hex = hex.strip_prefix("0x").ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("expected .word 0x…, got `{src}`"),
                })?;
                let word = u32::from_str_radix(hex, 16).map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad word literal: {e}"),
                })?;
                words.push(word);
                continue;
            }
            let (mnemonic, rest) = src.split_once(char::is_whitespace).ok_or_else(|| {
                Error::Parse {
                    line,
                    msg: format!("expected `<mnemonic> <operands>`, got `{src}`"),
                }
            })?;
            let opcode = Opcode::from_mnemonic(mnemonic).ok_or_else(|| Error::Parse {
                line,
                msg: format!("unknown mnemonic `{mnemonic}`"),
            })?;
            let ops: Vec<&str> = rest.split(',').map(str::trim).collect();
            if ops.len() != 3 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected three operands, got {}", ops.len()),
                });
            }
            let rd = parse_reg(ops[0], line)?;
            let rs1 = parse_reg(ops[1], line)?;
            let (rs2, imm) = if opcode.uses_imm() {
                let imm: i32 = ops[2].parse().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad immediate `{}`: {e}", ops[2]),
                })?;
                if !(IMM_MIN..=IMM_MAX).contains(&imm) {
                    return Err(Error::Parse {
                        line,
                        msg: format!("immediate {imm} outside [{IMM_MIN}, {IMM_MAX}]"),
                    });
                }
                (0, imm)
            } else {
                (parse_reg(ops[2], line)?, 0)
            };
            words.push(encode(opcode, rd, rs1, rs2, imm));
        }
        Ok(Self::new(id, words))
    }

    /// Binary form: little-endian 32-bit words.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    pub fn from_bytes(id: impl Into<String>, bytes: &[u8]) -> Result<Self, Error> {
        if bytes.len() % 4 != 0 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("binary program length {} is not word-aligned", bytes.len()),
            });
        }
        let words = bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self::new(id, words))
    }
}

fn parse_reg(s: &str, line: usize) -> Result<u8, Error> {
    let n: u8 = s
        .strip_prefix('x')
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("bad register `{s}`"),
        })?;
    if n >= REG_COUNT {
        return Err(Error::Parse {
            line,
            msg: format!("register x{n} out of range"),
        });
    }
    Ok(n)
}

/// The canonical no-op: `addi x0,x0,0`.
pub fn nop() -> u32 {
    encode(Opcode::Addi, 0, 0, 0, 0)
}
