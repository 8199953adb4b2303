//! Field I/O: a little-endian binary container with a fixed header, and
//! CSV with one row per node.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CMMF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    /// Free-form kind tag, e.g. "potential" or "two-form"; at most 32 bytes.
    pub kind: String,
    pub dim: u32,
    pub side: u32,
    pub ncomp: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub header: FieldHeader,
    /// Node-major, `ncomp` values per node.
    pub data: Vec<f64>,
}

impl FieldFile {
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let kind = self.header.kind.as_bytes();
        if kind.len() > 32 {
            return Err(Error::InvalidInput("kind tag longer than 32 bytes".into()));
        }
        let mut tag = [0u8; 32];
        tag[..kind.len()].copy_from_slice(kind);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&tag)?;
        for v in [self.header.dim, self.header.side, self.header.ncomp] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.data.len() as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidInput("not a field file".into()));
        }
        let mut u4 = [0u8; 4];
        r.read_exact(&mut u4)?;
        if u32::from_le_bytes(u4) != VERSION {
            return Err(Error::InvalidInput("unsupported field file version".into()));
        }
        let mut tag = [0u8; 32];
        r.read_exact(&mut tag)?;
        let end = tag.iter().position(|&b| b == 0).unwrap_or(32);
        let kind = String::from_utf8(tag[..end].to_vec()).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut hdr = [0u32; 3];
        for h in hdr.iter_mut() {
            r.read_exact(&mut u4)?;
            *h = u32::from_le_bytes(u4);
        }
        let mut u8b = [0u8; 8];
        r.read_exact(&mut u8b)?;
        let len = u64::from_le_bytes(u8b) as usize;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut u8b)?;
            data.push(f64::from_le_bytes(u8b));
        }
        Ok(FieldFile { header: FieldHeader { kind, dim: hdr[0], side: hdr[1], ncomp: hdr[2] }, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_binary(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_binary(std::io::BufReader::new(f))
    }

    /// CSV with columns node, coordinates, then one column per component.
    pub fn write_csv<W: Write>(&self, w: W, coords: &[Vec<f64>], names: &[String]) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let nc = self.header.ncomp as usize;
        let cd = coords.first().map(|c| c.len()).unwrap_or(0);
        let mut head = vec!["node".to_string()];
        head.extend((0..cd).map(|a| format!("x{a}")));
        head.extend(names.iter().cloned());
        wr.write_record(&head).map_err(|e| Error::Io(e.to_string()))?;
        for (i, c) in coords.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(c.iter().map(|v| format!("{v:.17e}")));
            row.extend(self.data[i * nc..(i + 1) * nc].iter().map(|v| format!("{v:.17e}")));
            wr.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}
