//! Binary solution snapshots: a header `N: u64, L: f64, p: u64, t: f64`
//! followed by `N` values, all little-endian.

use std::io::{self, Read, Write};

use crate::spectral::FieldVector;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub half_length: f64,
    pub p: u32,
    pub t: f64,
    pub u: FieldVector,
}

impl Snapshot {
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.u.len() as u64).to_le_bytes())?;
        w.write_all(&self.half_length.to_le_bytes())?;
        w.write_all(&(self.p as u64).to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        for x in self.u.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> io::Result<Self> {
        let mut b = [0u8; 8];
        let mut next = |r: &mut R| -> io::Result<[u8; 8]> {
            r.read_exact(&mut b)?;
            Ok(b)
        };
        let n = u64::from_le_bytes(next(&mut r)?);
        let half_length = f64::from_le_bytes(next(&mut r)?);
        let p = u64::from_le_bytes(next(&mut r)?);
        let t = f64::from_le_bytes(next(&mut r)?);
        let p = u32::try_from(p).map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "exponent out of range"))?;
        if n > (1 << 32) {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "implausible node count"));
        }
        let mut u = Vec::with_capacity(n as usize);
        for _ in 0..n {
            u.push(f64::from_le_bytes(next(&mut r)?));
        }
        Ok(Snapshot {
            half_length,
            p,
            t,
            u: FieldVector::new(u),
        })
    }
}
