//! Fixed-width binary encoding: every instruction becomes exactly one
//! 32-bit word, with `u` rotation angles stored out-of-line in a table of
//! `f64` triples so the word stream itself stays fixed width.
//!
//! Word layout (bit 31 = most significant):
//!
//! ```text
//! [31:28] opcode   1=U 2=CX 3=Measure 4=Reset 5=If 6=Wait
//! U       [27:20] qubit          [19:0]  param-table index
//! CX      [27:20] control        [19:12] target
//! Measure [27:20] qubit          [19:12] classical bit
//! Reset   [27:20] qubit
//! If      [27:20] classical bit  [19] compare value
//!         [18:16] body opcode    [15:0]  body operands (see below)
//! Wait    [27:0]  cycle count
//! ```
//!
//! A conditional embeds its single guarded instruction in the low half of
//! the same word: two 8-bit operand fields (for U: qubit then param index;
//! for CX: control then target; for Measure: qubit then classical bit; for
//! Reset: qubit then zero) or a 16-bit cycle count for Wait. Operands that
//! do not fit their field are encoding errors, not silent truncation.
//!
//! The on-disk container is a 16-byte header — magic `SANQ`, format
//! version (u16), word count (u32), parameter-table length (u32), and the
//! two register sizes (u8 each) — followed by the little-endian words and
//! then the parameter triples. Register *names* are not stored; decoding
//! yields the conventional `q`/`c`.

use crate::program::{Instruction, Program, ProgramError};
use std::collections::HashMap;
use thiserror::Error;

/// File magic for encoded programs.
pub const MAGIC: [u8; 4] = *b"SANQ";
/// Current format version.
pub const VERSION: u16 = 1;

const OP_U: u32 = 1;
const OP_CX: u32 = 2;
const OP_MEASURE: u32 = 3;
const OP_RESET: u32 = 4;
const OP_IF: u32 = 5;
const OP_WAIT: u32 = 6;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("register size {0} exceeds the 8-bit limit of the format")]
    RegisterTooLarge(usize),
    #[error("operand {value} does not fit in the {bits}-bit {field} field")]
    FieldOverflow { field: &'static str, value: usize, bits: u32 },
    #[error("parameter table full: index {0} needs more than {1} bits")]
    ParamTableFull(usize, u32),
}

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("bad magic (not an encoded program)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u16),
    #[error("file truncated")]
    Truncated,
    #[error("{0} trailing bytes after the declared contents")]
    TrailingBytes(usize),
    #[error("word {index}: invalid opcode {opcode}")]
    BadOpcode { index: usize, opcode: u32 },
    #[error("word {index}: conditional may not guard another conditional")]
    NestedConditional { index: usize },
    #[error("word {index}: parameter index {param} out of range ({len} entries)")]
    BadParamIndex { index: usize, param: usize, len: usize },
    #[error("word {index}: {source}")]
    Invalid { index: usize, source: ProgramError },
}

/// A program lowered to words plus its angle table.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedProgram {
    pub qubits: usize,
    pub cbits: usize,
    pub words: Vec<u32>,
    pub params: Vec<[f64; 3]>,
}

struct ParamTable {
    triples: Vec<[f64; 3]>,
    seen: HashMap<[u64; 3], usize>,
}

impl ParamTable {
    fn intern(&mut self, theta: f64, phi: f64, lambda: f64) -> usize {
        let key = [theta.to_bits(), phi.to_bits(), lambda.to_bits()];
        *self.seen.entry(key).or_insert_with(|| {
            self.triples.push([theta, phi, lambda]);
            self.triples.len() - 1
        })
    }
}

fn field(value: usize, bits: u32, name: &'static str) -> Result<u32, EncodeError> {
    if value < (1usize << bits) {
        Ok(value as u32)
    } else {
        Err(EncodeError::FieldOverflow { field: name, value, bits })
    }
}

fn encode_body(instr: &Instruction, params: &mut ParamTable) -> Result<u32, EncodeError> {
    // 19 low bits of a conditional word: [18:16] opcode, [15:0] operands.
    Ok(match instr {
        Instruction::U { theta, phi, lambda, qubit } => {
            let idx = params.intern(*theta, *phi, *lambda);
            if idx >= 1 << 8 {
                return Err(EncodeError::ParamTableFull(idx, 8));
            }
            (OP_U << 16) | (field(*qubit, 8, "conditional qubit")? << 8) | idx as u32
        }
        Instruction::Cx { control, target } => {
            (OP_CX << 16)
                | (field(*control, 8, "conditional control")? << 8)
                | field(*target, 8, "conditional target")?
        }
        Instruction::Measure { qubit, cbit } => {
            (OP_MEASURE << 16)
                | (field(*qubit, 8, "conditional qubit")? << 8)
                | field(*cbit, 8, "conditional cbit")?
        }
        Instruction::Reset { qubit } => {
            (OP_RESET << 16) | (field(*qubit, 8, "conditional qubit")? << 8)
        }
        Instruction::Wait { cycles } => {
            (OP_WAIT << 16) | field(*cycles as usize, 16, "conditional cycles")?
        }
        Instruction::If { .. } => unreachable!("program validation rejects nested conditionals"),
    })
}

fn encode_instr(instr: &Instruction, params: &mut ParamTable) -> Result<u32, EncodeError> {
    Ok(match instr {
        Instruction::U { theta, phi, lambda, qubit } => {
            let idx = params.intern(*theta, *phi, *lambda);
            if idx >= 1 << 20 {
                return Err(EncodeError::ParamTableFull(idx, 20));
            }
            (OP_U << 28) | (field(*qubit, 8, "qubit")? << 20) | idx as u32
        }
        Instruction::Cx { control, target } => {
            (OP_CX << 28) | (field(*control, 8, "control")? << 20) | (field(*target, 8, "target")? << 12)
        }
        Instruction::Measure { qubit, cbit } => {
            (OP_MEASURE << 28) | (field(*qubit, 8, "qubit")? << 20) | (field(*cbit, 8, "cbit")? << 12)
        }
        Instruction::Reset { qubit } => (OP_RESET << 28) | (field(*qubit, 8, "qubit")? << 20),
        Instruction::If { cbit, value, inner } => {
            (OP_IF << 28)
                | (field(*cbit, 8, "cbit")? << 20)
                | u32::from(*value) << 19
                | encode_body(inner, params)?
        }
        Instruction::Wait { cycles } => (OP_WAIT << 28) | field(*cycles as usize, 28, "cycles")?,
    })
}

/// Lower a program to words. One instruction, one word.
pub fn encode_program(p: &Program) -> Result<EncodedProgram, EncodeError> {
    if p.qubits() > 256 {
        return Err(EncodeError::RegisterTooLarge(p.qubits()));
    }
    if p.cbits() > 256 {
        return Err(EncodeError::RegisterTooLarge(p.cbits()));
    }
    let mut params = ParamTable { triples: Vec::new(), seen: HashMap::new() };
    let mut words = Vec::with_capacity(p.len());
    for instr in p.instructions() {
        words.push(encode_instr(instr, &mut params)?);
    }
    Ok(EncodedProgram { qubits: p.qubits(), cbits: p.cbits(), words, params: params.triples })
}

fn decode_body(index: usize, word: u32, params: &[[f64; 3]]) -> Result<Instruction, DecodeError> {
    let opcode = (word >> 16) & 0x7;
    let a = ((word >> 8) & 0xff) as usize;
    let b = (word & 0xff) as usize;
    Ok(match opcode {
        OP_U => {
            let [theta, phi, lambda] = *params
                .get(b)
                .ok_or(DecodeError::BadParamIndex { index, param: b, len: params.len() })?;
            Instruction::U { theta, phi, lambda, qubit: a }
        }
        OP_CX => Instruction::Cx { control: a, target: b },
        OP_MEASURE => Instruction::Measure { qubit: a, cbit: b },
        OP_RESET => Instruction::Reset { qubit: a },
        OP_WAIT => Instruction::Wait { cycles: word & 0xffff },
        OP_IF => return Err(DecodeError::NestedConditional { index }),
        other => return Err(DecodeError::BadOpcode { index, opcode: other }),
    })
}

/// Rebuild a program from words, re-validating every operand.
pub fn decode_program(e: &EncodedProgram) -> Result<Program, DecodeError> {
    let mut p = Program::new(e.qubits, e.cbits)
        .map_err(|source| DecodeError::Invalid { index: 0, source })?;
    for (index, &word) in e.words.iter().enumerate() {
        let opcode = word >> 28;
        let instr = match opcode {
            OP_U => {
                let param = (word & 0xfffff) as usize;
                let [theta, phi, lambda] = *e.params.get(param).ok_or(
                    DecodeError::BadParamIndex { index, param, len: e.params.len() },
                )?;
                Instruction::U { theta, phi, lambda, qubit: ((word >> 20) & 0xff) as usize }
            }
            OP_CX => Instruction::Cx {
                control: ((word >> 20) & 0xff) as usize,
                target: ((word >> 12) & 0xff) as usize,
            },
            OP_MEASURE => Instruction::Measure {
                qubit: ((word >> 20) & 0xff) as usize,
                cbit: ((word >> 12) & 0xff) as usize,
            },
            OP_RESET => Instruction::Reset { qubit: ((word >> 20) & 0xff) as usize },
            OP_IF => Instruction::If {
                cbit: ((word >> 20) & 0xff) as usize,
                value: ((word >> 19) & 1) as u8,
                inner: Box::new(decode_body(index, word, &e.params)?),
            },
            OP_WAIT => Instruction::Wait { cycles: word & 0xfffffff },
            other => return Err(DecodeError::BadOpcode { index, opcode: other }),
        };
        p.add(instr).map_err(|source| DecodeError::Invalid { index, source })?;
    }
    Ok(p)
}

/// Serialize to the on-disk container format.
pub fn to_bytes(e: &EncodedProgram) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * e.words.len() + 24 * e.params.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(e.words.len() as u32).to_le_bytes());
    out.extend_from_slice(&(e.params.len() as u32).to_le_bytes());
    out.push((e.qubits % 256) as u8); // 256 is stored as 0; sizes are 1-based
    out.push((e.cbits % 256) as u8);
    for w in &e.words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for t in &e.params {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parse the on-disk container format.
pub fn from_bytes(bytes: &[u8]) -> Result<EncodedProgram, DecodeError> {
    if bytes.len() < 16 {
        return Err(if bytes.get(..4) == Some(&MAGIC) {
            DecodeError::Truncated
        } else {
            DecodeError::BadMagic
        });
    }
    if bytes[..4] != MAGIC {
        return Err(DecodeError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(DecodeError::BadVersion(version));
    }
    let words_len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let params_len = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let qubits = if bytes[14] == 0 { 256 } else { bytes[14] as usize };
    let cbits = if bytes[15] == 0 { 256 } else { bytes[15] as usize };
    let need = 16 + 4 * words_len + 24 * params_len;
    if bytes.len() < need {
        return Err(DecodeError::Truncated);
    }
    if bytes.len() > need {
        return Err(DecodeError::TrailingBytes(bytes.len() - need));
    }
    let words = bytes[16..16 + 4 * words_len]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let params = bytes[16 + 4 * words_len..]
        .chunks_exact(24)
        .map(|c| {
            [
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
                f64::from_le_bytes(c[16..24].try_into().unwrap()),
            ]
        })
        .collect();
    Ok(EncodedProgram { qubits, cbits, words, params })
}

/// Encode and write a program to `path`.
pub fn write_program_file(p: &Program, path: &std::path::Path) -> Result<(), std::io::Error> {
    let encoded = encode_program(p)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    std::fs::write(path, to_bytes(&encoded))
}

/// Read and decode a program from `path`.
pub fn read_program_file(path: &std::path::Path) -> Result<Program, std::io::Error> {
    let bytes = std::fs::read(path)?;
    let encoded =
        from_bytes(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
    decode_program(&encoded)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::parse_program;

    fn sample() -> Program {
        parse_program(
            "qreg q[3]; creg c[3];\n\
             u(pi/2,0,pi) q[0]; cx q[0],q[1]; u(pi/2,0,pi) q[0];\n\
             measure q[1] -> c[1]; wait 60; if (c[1]==1) u(pi,0,pi) q[2];\n\
             reset q[2]; if (c[0]==0) wait 12;",
        )
        .unwrap()
    }

    #[test]
    fn one_word_per_instruction() {
        let p = sample();
        let e = encode_program(&p).unwrap();
        assert_eq!(e.words.len(), p.len());
    }

    #[test]
    fn wait_word_layout() {
        let mut p = Program::new(1, 1).unwrap();
        p.add(Instruction::Wait { cycles: 60 }).unwrap();
        let e = encode_program(&p).unwrap();
        assert_eq!(e.words[0] >> 28, 6);
        assert_eq!(e.words[0] & 0xfffffff, 60);
    }

    #[test]
    fn identical_angle_triples_share_one_table_entry() {
        let p = sample();
        let e = encode_program(&p).unwrap();
        // pi/2,0,pi appears twice but is stored once; pi,0,pi once more.
        assert_eq!(e.params.len(), 2);
    }

    #[test]
    fn round_trip_reproduces_the_program() {
        let p = sample();
        let e = encode_program(&p).unwrap();
        assert_eq!(decode_program(&e).unwrap(), p);
    }

    #[test]
    fn byte_round_trip_and_header() {
        let p = sample();
        let e = encode_program(&p).unwrap();
        let bytes = to_bytes(&e);
        assert_eq!(&bytes[..4], b"SANQ");
        assert_eq!(bytes.len(), 16 + 4 * e.words.len() + 24 * e.params.len());
        assert_eq!(from_bytes(&bytes).unwrap(), e);
    }

    #[test]
    fn rejects_bad_magic_version_and_truncation() {
        let p = sample();
        let bytes = to_bytes(&encode_program(&p).unwrap());

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(from_bytes(&bad), Err(DecodeError::BadMagic));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(from_bytes(&bad), Err(DecodeError::BadVersion(9)));

        assert_eq!(from_bytes(&bytes[..bytes.len() - 3]), Err(DecodeError::Truncated));

        let mut bad = bytes.clone();
        bad.push(0);
        assert_eq!(from_bytes(&bad), Err(DecodeError::TrailingBytes(1)));
    }

    #[test]
    fn rejects_invalid_opcodes_on_decode() {
        let p = sample();
        let mut e = encode_program(&p).unwrap();
        e.words[0] = 0xf << 28;
        assert_eq!(
            decode_program(&e),
            Err(DecodeError::BadOpcode { index: 0, opcode: 0xf })
        );
        e.words[0] = (5 << 28) | (5 << 16); // conditional guarding a conditional
        assert_eq!(decode_program(&e), Err(DecodeError::NestedConditional { index: 0 }));
    }

    #[test]
    fn oversized_operands_are_encode_errors() {
        let mut p = Program::new(300, 1).unwrap();
        p.add(Instruction::Reset { qubit: 299 }).unwrap();
        assert_eq!(encode_program(&p), Err(EncodeError::RegisterTooLarge(300)));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prog.bin");
        let p = sample();
        write_program_file(&p, &path).unwrap();
        assert_eq!(read_program_file(&path).unwrap(), p);
    }
}
