//! Binary checkpoint of a state vector.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `MDSATSV1` |
//! | 4 | `n` |
//! | 1 | bytes per amplitude component (8) |
//! | 1 | components per amplitude (1 = real) |
//! | 2 | length `L` of the RNG id |
//! | L | RNG id, UTF-8 |
//! | 8·2^n | amplitudes as `f64` |

use std::io::{Read, Write};

use super::{StateError, StateVector};

const MAGIC: &[u8; 8] = b"MDSATSV1";

fn io_err(e: std::io::Error) -> StateError {
    StateError::Snapshot(e.to_string())
}

impl StateVector {
    pub fn write_snapshot<W: Write>(&self, mut w: W, rng_id: &str) -> Result<(), StateError> {
        let id = rng_id.as_bytes();
        let id_len = u16::try_from(id.len()).map_err(|_| StateError::Snapshot("rng id too long".into()))?;
        w.write_all(MAGIC).map_err(io_err)?;
        w.write_all(&(self.n as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(&[8, 1]).map_err(io_err)?;
        w.write_all(&id_len.to_le_bytes()).map_err(io_err)?;
        w.write_all(id).map_err(io_err)?;
        let mut buf = Vec::with_capacity(8 * self.amps.len().min(1 << 16));
        for chunk in self.amps.chunks(1 << 16) {
            buf.clear();
            chunk.iter().for_each(|a| buf.extend_from_slice(&a.to_le_bytes()));
            w.write_all(&buf).map_err(io_err)?;
        }
        Ok(())
    }

    /// Returns the state and the recorded RNG id.
    pub fn read_snapshot<R: Read>(mut r: R) -> Result<(StateVector, String), StateError> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head).map_err(io_err)?;
        if &head[..8] != MAGIC {
            return Err(StateError::Snapshot("bad magic".into()));
        }
        let n = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        if head[12] != 8 || head[13] != 1 {
            return Err(StateError::Snapshot(format!(
                "unsupported precision {} with {} components",
                head[12], head[13]
            )));
        }
        if n == 0 || n > 40 {
            return Err(StateError::Snapshot(format!("implausible qubit count {n}")));
        }
        let id_len = u16::from_le_bytes(head[14..16].try_into().unwrap()) as usize;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id).map_err(io_err)?;
        let id = String::from_utf8(id).map_err(|e| StateError::Snapshot(e.to_string()))?;
        let mut amps = Vec::with_capacity(1 << n);
        let mut word = [0u8; 8];
        for _ in 0..1usize << n {
            r.read_exact(&mut word).map_err(io_err)?;
            amps.push(f64::from_le_bytes(word));
        }
        if r.read(&mut word).map_err(io_err)? != 0 {
            return Err(StateError::Snapshot("trailing bytes".into()));
        }
        Ok((StateVector::from_amplitudes(n, amps)?, id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::Theta;
    use crate::sat::Assignment;

    #[test]
    fn round_trip() {
        let a = Assignment::new(vec![true, false, true, true]);
        let s = StateVector::solution_state(&a, Theta::new(0.4).unwrap()).unwrap();
        let mut bytes = Vec::new();
        s.write_snapshot(&mut bytes, crate::rng::RNG_ID).unwrap();
        assert_eq!(bytes.len(), 16 + crate::rng::RNG_ID.len() + 8 * 16);
        let (t, id) = StateVector::read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(s, t);
        assert_eq!(id, crate::rng::RNG_ID);
    }

    #[test]
    fn rejects_corruption() {
        let s = StateVector::init_plus(2).unwrap();
        let mut bytes = Vec::new();
        s.write_snapshot(&mut bytes, "x").unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(StateVector::read_snapshot(bad.as_slice()).is_err());
        assert!(StateVector::read_snapshot(&bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(StateVector::read_snapshot(bytes.as_slice()).is_err());
    }
}
