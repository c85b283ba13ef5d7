//! Debug dumps of grids (text) and fields (binary).
//!
//! Grid text format, one record per line:
//!
//! ```text
//! neckwall-grid 1
//! dims <nx> <ny> <nz>
//! active <n>
//! neck <eps> <delta> <eta>        (or `neck none`)
//! x <nx+1 face coordinates>
//! y <ny+1 face coordinates>
//! z <nz+1 face coordinates>
//! mask <run-length tokens>
//! ```
//!
//! The mask lists every cell in full-grid order (`x` fastest) as runs
//! `<count><code>` separated by spaces. Codes: `.` inactive, `L` left bulk,
//! `R` right bulk, `N` neck, `M` neck cell on a mouth plane.
//!
//! Field binary format, little endian: the magic `DBFIELD1`, three `u64`
//! cell counts, the `x`, `y`, `z` face coordinates as `f64`, the active cell
//! count as `u64`, then one `f64` per active cell in grid order.

use std::io::{BufRead, Read, Write};

use crate::energy::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::{Axis, DumbbellGrid, NeckParams, Region};

const GRID_MAGIC: &str = "neckwall-grid 1";
const FIELD_MAGIC: &[u8; 8] = b"DBFIELD1";

fn io_err(e: std::io::Error) -> Error {
    Error::Format(e.to_string())
}

fn cell_code(grid: &DumbbellGrid, c: Option<usize>) -> char {
    match c {
        None => '.',
        Some(c) if grid.is_mouth(c) => 'M',
        Some(c) => grid.region(c).code(),
    }
}

pub fn write_grid<W: Write>(grid: &DumbbellGrid, mut out: W) -> Result<()> {
    let [nx, ny, nz] = grid.dims();
    let mut s = String::new();
    s.push_str(GRID_MAGIC);
    s.push('\n');
    s.push_str(&format!("dims {nx} {ny} {nz}\nactive {}\n", grid.active_count()));
    match grid.neck() {
        Some(n) => s.push_str(&format!("neck {:e} {:e} {:e}\n", n.eps, n.delta, n.eta)),
        None => s.push_str("neck none\n"),
    }
    for (name, axis) in ["x", "y", "z"].iter().zip(grid.axes()) {
        s.push_str(name);
        for f in axis.faces() {
            s.push_str(&format!(" {f:e}"));
        }
        s.push('\n');
    }
    s.push_str("mask");
    let mut run: Option<(char, usize)> = None;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let code = cell_code(grid, grid.active_index([i, j, k]));
                run = match run {
                    Some((c, n)) if c == code => Some((c, n + 1)),
                    Some((c, n)) => {
                        s.push_str(&format!(" {n}{c}"));
                        Some((code, 1))
                    }
                    None => Some((code, 1)),
                };
            }
        }
    }
    if let Some((c, n)) = run {
        s.push_str(&format!(" {n}{c}"));
    }
    s.push('\n');
    out.write_all(s.as_bytes()).map_err(io_err)
}

pub fn read_grid<R: BufRead>(input: R) -> Result<DumbbellGrid> {
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing {what} line")))?
            .map_err(io_err)
    };
    if next("header")?.trim() != GRID_MAGIC {
        return Err(Error::Format("bad grid header".into()));
    }
    let dims: Vec<usize> = fields(&next("dims")?, "dims")?;
    if dims.len() != 3 {
        return Err(Error::Format("dims needs three counts".into()));
    }
    let active: Vec<usize> = fields(&next("active")?, "active")?;
    let neck_line = next("neck")?;
    let neck = if neck_line.trim() == "neck none" {
        None
    } else {
        let v: Vec<f64> = fields(&neck_line, "neck")?;
        if v.len() != 3 {
            return Err(Error::Format("neck needs three lengths".into()));
        }
        Some(NeckParams::new(v[0], v[1], v[2])?)
    };
    let mut axes = Vec::new();
    for (name, &n) in ["x", "y", "z"].iter().zip(&dims) {
        let faces: Vec<f64> = fields(&next(name)?, name)?;
        if faces.len() != n + 1 {
            return Err(Error::Format(format!("axis {name}: expected {} faces", n + 1)));
        }
        axes.push(Axis::new(faces)?);
    }
    let mask_line = next("mask")?;
    let body = mask_line
        .strip_prefix("mask")
        .ok_or_else(|| Error::Format("expected mask line".into()))?;
    let mut labels = Vec::with_capacity(dims.iter().product());
    for tok in body.split_whitespace() {
        let code = tok.chars().last().ok_or_else(|| Error::Format("empty run".into()))?;
        let count: usize = tok[..tok.len() - code.len_utf8()]
            .parse()
            .map_err(|_| Error::Format(format!("bad run {tok:?}")))?;
        let label = match code {
            '.' => None,
            'M' => Some((Region::Neck, true)),
            c => Some((
                Region::from_code(c).ok_or_else(|| Error::Format(format!("bad code {c:?}")))?,
                false,
            )),
        };
        labels.extend(std::iter::repeat_n(label, count));
    }
    let axes: [Axis; 3] = axes.try_into().expect("three axes");
    let grid = DumbbellGrid::from_labels(axes, neck, &labels)?;
    if active.first() != Some(&grid.active_count()) {
        return Err(Error::Format("active count disagrees with mask".into()));
    }
    Ok(grid)
}

fn fields<T: std::str::FromStr>(line: &str, key: &str) -> Result<Vec<T>> {
    let mut it = line.split_whitespace();
    if it.next() != Some(key) {
        return Err(Error::Format(format!("expected {key} line, got {line:?}")));
    }
    it.map(|t| t.parse().map_err(|_| Error::Format(format!("bad value {t:?} in {key}"))))
        .collect()
}

pub fn write_field<W: Write>(grid: &DumbbellGrid, field: &ScalarField, mut out: W) -> Result<()> {
    if field.len() != grid.active_count() {
        return Err(Error::SizeMismatch {
            expected: grid.active_count(),
            got: field.len(),
        });
    }
    let mut buf = Vec::with_capacity(8 * (field.len() + 64));
    buf.extend_from_slice(FIELD_MAGIC);
    for d in grid.dims() {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for axis in grid.axes() {
        for f in axis.faces() {
            buf.extend_from_slice(&f.to_le_bytes());
        }
    }
    buf.extend_from_slice(&(field.len() as u64).to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf).map_err(io_err)
}

/// Reads a field dump and checks it against `grid`.
pub fn read_field<R: Read>(grid: &DumbbellGrid, mut input: R) -> Result<ScalarField> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io_err)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::Format("bad field magic".into()));
    }
    let mut word = [0u8; 8];
    let mut read_u64 = |input: &mut R| -> Result<u64> {
        input.read_exact(&mut word).map_err(io_err)?;
        Ok(u64::from_le_bytes(word))
    };
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = read_u64(&mut input)? as usize;
    }
    if dims != grid.dims() {
        return Err(Error::Format(format!("dims {dims:?} differ from grid {:?}", grid.dims())));
    }
    for axis in grid.axes() {
        for &f in axis.faces() {
            let v = f64::from_bits(read_u64(&mut input)?);
            if v.to_bits() != f.to_bits() {
                return Err(Error::Format("face coordinates differ from grid".into()));
            }
        }
    }
    let n = read_u64(&mut input)? as usize;
    if n != grid.active_count() {
        return Err(Error::SizeMismatch {
            expected: grid.active_count(),
            got: n,
        });
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(f64::from_bits(read_u64(&mut input)?));
    }
    ScalarField::new(grid, values)
}
