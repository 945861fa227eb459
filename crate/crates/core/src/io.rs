//! CSV tables, binary operator dumps and plot scripts.
//!
//! Numbers are rendered with 12 significant digits in scientific notation, so
//! parsing a written value and rendering it again reproduces the same text.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::em::{OperatorMatrix, Role};
use crate::geometry::MappingMatrix;
use crate::optimizer::ScanResult;
use crate::point_group::PointGroup;
use crate::{CMatrix, Error, Result, C64};

/// Render with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let map = |e: csv::Error| Error::Invalid(e.to_string());
        w.write_record(&self.header).map_err(map)?;
        for r in &self.rows {
            w.write_record(r).map_err(map)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Table> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let map = |e: csv::Error| Error::Parse(e.to_string());
        let header = r.headers().map_err(map)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()).map_err(map))
            .collect::<Result<_>>()?;
        Ok(Table { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Table> {
        Table::parse(&fs::read_to_string(path)?)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Characters of every irrep at every operation (real and imaginary parts).
pub fn character_table(group: &PointGroup) -> Table {
    let mut header = vec!["irrep".to_string(), "dim".into()];
    for op in &group.ops {
        header.push(format!("{}_re", op.label));
        header.push(format!("{}_im", op.label));
    }
    let mut t = Table { header, rows: vec![] };
    for irrep in &group.irreps {
        let mut row = vec![irrep.label.clone(), irrep.dim.to_string()];
        for m in &irrep.matrices {
            let c = m.trace();
            row.push(fmt_num(c.re));
            row.push(fmt_num(c.im));
        }
        t.push(row);
    }
    t
}

/// Nonzeros of every mapping matrix, 1-based indices.
pub fn mapping_table(maps: &[MappingMatrix]) -> Table {
    let mut t = Table::new(["op", "row", "col", "sign"]);
    for m in maps {
        for (r, c, s) in m.coo() {
            t.push(vec![m.op.clone(), (r + 1).to_string(), (c + 1).to_string(), s.to_string()]);
        }
    }
    t
}

/// Long-format complex vectors: `(label, index, re, im)`, 1-based index.
pub fn vectors_table(label_name: &str, vectors: &[(String, crate::CVector)]) -> Table {
    let mut t = Table::new([label_name, "index", "re", "im"]);
    for (label, v) in vectors {
        for (i, z) in v.iter().enumerate() {
            t.push(vec![label.clone(), (i + 1).to_string(), fmt_num(z.re), fmt_num(z.im)]);
        }
    }
    t
}

/// Every evaluated layout with its per-species, per-frequency TARC.
pub fn scan_trace(result: &ScanResult, group: &PointGroup) -> Table {
    let mut t = Table::new(["rank", "positions", "n_ports", "reduced", "ka", "species", "t", "t_rms"]);
    for (rank, e) in result.ranked.iter().enumerate() {
        let pos = join_labels(&e.labels);
        for (f, samples) in e.samples.iter().enumerate() {
            for s in samples {
                t.push(vec![
                    (rank + 1).to_string(),
                    pos.clone(),
                    e.n_ports.to_string(),
                    e.reduced.to_string(),
                    fmt_num(result.ka[f]),
                    group.species_label(s.species),
                    fmt_num(s.t),
                    fmt_num(e.t_rms),
                ]);
            }
        }
    }
    t
}

/// One line per layout, ranked.
pub fn scan_summary(result: &ScanResult, group: &PointGroup) -> Table {
    let mut t = Table::new(["rank", "positions", "n_xi", "n_ports", "n_states", "reduced", "species", "t_rms"]);
    for (rank, e) in result.ranked.iter().enumerate() {
        let species: Vec<String> = e.species.iter().map(|&s| group.species_label(s)).collect();
        t.push(vec![
            (rank + 1).to_string(),
            join_labels(&e.labels),
            e.labels.len().to_string(),
            e.n_ports.to_string(),
            e.species.len().to_string(),
            e.reduced.to_string(),
            species.join(" "),
            fmt_num(e.t_rms),
        ]);
    }
    t
}

/// Optimal amplitudes of the best layout versus frequency.
pub fn kappa_table(result: &ScanResult, group: &PointGroup) -> Table {
    let best = result.best();
    let mut header = vec!["ka".to_string(), "species".into(), "t".into()];
    for l in &best.labels {
        header.push(format!("kappa{l}_re"));
        header.push(format!("kappa{l}_im"));
    }
    let mut t = Table { header, rows: vec![] };
    for (f, samples) in best.samples.iter().enumerate() {
        for s in samples {
            let mut row = vec![fmt_num(result.ka[f]), group.species_label(s.species), fmt_num(s.t)];
            for k in s.kappa.iter() {
                row.push(fmt_num(k.re));
                row.push(fmt_num(k.im));
            }
            t.push(row);
        }
    }
    t
}

pub fn per_frequency_table(rows: &[(f64, Vec<usize>, f64)]) -> Table {
    let mut t = Table::new(["ka", "best_positions", "t_rms"]);
    for (ka, labels, v) in rows {
        t.push(vec![fmt_num(*ka), join_labels(labels), fmt_num(*v)]);
    }
    t
}

pub fn join_labels(labels: &[usize]) -> String {
    labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

const MAGIC: &[u8; 4] = b"OPMX";
const VERSION: u32 = 1;

/// Binary operator dump, little endian:
/// `"OPMX"`, `u32` version, `u64 N`, 8-byte role tag, `f64 ka`, then `N²`
/// row-major `(re, im)` pairs of `f64`.
pub fn write_operator(op: &OperatorMatrix, out: &mut impl Write) -> Result<()> {
    let n = op.dim();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&op.role.tag())?;
    out.write_all(&op.ka.to_le_bytes())?;
    let mut buf = Vec::with_capacity(n * n * 16);
    for i in 0..n {
        for j in 0..n {
            let z = op.data[(i, j)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_operator(input: &mut impl Read) -> Result<OperatorMatrix> {
    let mut head = [0u8; 32];
    input.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::Parse("not an operator dump".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported dump version {version}")));
    }
    let n = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes")) as usize;
    let role = Role::from_tag(&head[16..24]).ok_or_else(|| Error::Parse("unknown role tag".into()))?;
    let ka = f64::from_le_bytes(head[24..32].try_into().expect("8 bytes"));
    let mut body = vec![0u8; n * n * 16];
    input.read_exact(&mut body)?;
    let f = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let data = CMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        C64::new(f(k), f(k + 1))
    });
    // the dump does not carry the structure size, so ω is left unset
    Ok(OperatorMatrix::new(role, data, 0.0, ka))
}

/// gnuplot script plotting a scan summary and, if present, the per-frequency
/// TARC of the best layout from `trace`.
pub fn gnuplot_script(summary_csv: &str, trace_csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 900,500\n\
         set output 'scan_summary.png'\n\
         set style fill solid 0.6\n\
         set ylabel 't_RMS'\n\
         set xtics rotate by -45\n\
         plot '{summary_csv}' using 8:xtic(2) with boxes notitle\n\
         set output 'best_tarc.png'\n\
         set xlabel 'ka'\n\
         set ylabel 't'\n\
         plot '{trace_csv}' using ($1 == 1 ? $5 : 1/0):7 with points pt 7 title 'rank 1'\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_group::build_group;

    #[test]
    fn numbers_round_trip_textually() {
        for x in [0.0, -1.0, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.6081234567891] {
            let s = fmt_num(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(fmt_num(back), s);
        }
        assert_eq!(fmt_num(0.25), "2.50000000000e-1");
    }

    #[test]
    fn tables_round_trip() {
        let g = build_group("C4v").unwrap();
        let t = character_table(&g);
        assert_eq!(Table::parse(&t.to_csv().unwrap()).unwrap(), t);
        let mut v = Table::new(["positions", "value"]);
        v.push(vec!["1 10 15".into(), fmt_num(0.587)]);
        assert_eq!(Table::parse(&v.to_csv().unwrap()).unwrap(), v);
    }

    #[test]
    fn operator_dump_round_trip() {
        let data = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64 - 0.5 * j as f64, (i * j) as f64 / 7.0));
        let op = OperatorMatrix::new(Role::W, data.clone(), 1.0, 2.5);
        let mut buf = Vec::new();
        write_operator(&op, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 9 * 16);
        let back = read_operator(&mut buf.as_slice()).unwrap();
        assert_eq!(back.role, Role::W);
        assert_eq!(back.ka, 2.5);
        assert_eq!(back.data, data);
        assert!(read_operator(&mut &b"nope"[..]).is_err());
    }
}
