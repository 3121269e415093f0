//! Raster and object ingestion, plus seeded synthetic fixtures.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitvec::{BitmapBuilder, RankBitmap};
use crate::codec::{put_u32, Reader};
use crate::error::{Error, Result};
use crate::geom::Mbr;
use crate::k2raster::RasterMatrix;
use crate::rtree::{ObjectId, VectorDataset};

/// `⌊v · 10^digits⌋` computed on the decimal text, so no binary rounding
/// creeps in. Accepts an optional sign, fraction and exponent.
pub fn truncate_decimal(token: &str, digits: u32) -> Option<i64> {
    let (neg, body) = match token.as_bytes().first()? {
        b'-' => (true, &token[1..]),
        b'+' => (false, &token[1..]),
        _ => (false, token),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let all: Vec<u8> = int_part
        .bytes()
        .chain(frac_part.bytes())
        .map(|b| b - b'0')
        .collect();
    // value = all · 10^shift
    let shift = exp - frac_part.len() as i64 + digits as i64;
    let keep = all.len() as i64 + shift;
    let (head, tail): (&[u8], &[u8]) = if shift >= 0 {
        (&all, &[])
    } else if keep <= 0 {
        (&[], &all)
    } else {
        all.split_at(keep as usize)
    };
    let mut mag: i128 = 0;
    for &d in head {
        mag = mag.checked_mul(10)?.checked_add(d as i128)?;
    }
    for _ in 0..shift.max(0) {
        if mag == 0 {
            break;
        }
        mag = mag.checked_mul(10)?;
    }
    let inexact = tail.iter().any(|&d| d != 0);
    let v = if neg { -mag - inexact as i128 } else { mag };
    i64::try_from(v).ok()
}

/// Formats `q / 10^digits` so that [`truncate_decimal`] maps it back to `q`.
pub fn format_fixed(q: i64, digits: u32) -> String {
    if digits == 0 {
        return q.to_string();
    }
    let scale = 10u128.pow(digits);
    let mag = q.unsigned_abs() as u128;
    let sign = if q < 0 { "-" } else { "" };
    format!(
        "{sign}{}.{:0width$}",
        mag / scale,
        mag % scale,
        width = digits as usize
    )
}

/// Cells that held the nodata sentinel, one bit per cell in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodataMask {
    n_rows: usize,
    n_cols: usize,
    bits: RankBitmap,
}

const MASK_MAGIC: &[u8; 4] = b"K2MK";

impl NodataMask {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        row < self.n_rows
            && col < self.n_cols
            && self.bits.get(row * self.n_cols + col) == Some(true)
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MASK_MAGIC.to_vec();
        put_u32(&mut out, self.n_rows as u32);
        put_u32(&mut out, self.n_cols as u32);
        out.extend(self.bits.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MASK_MAGIC {
            return Err(Error::Format("not a nodata mask".into()));
        }
        let n_rows = r.u32()? as usize;
        let n_cols = r.u32()? as usize;
        let bits = RankBitmap::from_bytes(r.take(bytes.len() - 12)?)?;
        if bits.len() != n_rows * n_cols {
            return Err(Error::Format(
                "mask length does not match its extent".into(),
            ));
        }
        Ok(Self {
            n_rows,
            n_cols,
            bits,
        })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridHeader {
    pub n_cols: usize,
    pub n_rows: usize,
    pub xll: f64,
    pub yll: f64,
    pub cellsize: f64,
    pub nodata: Option<String>,
}

impl GridHeader {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_cols,
            n_rows,
            xll: 0.0,
            yll: 0.0,
            cellsize: 1.0,
            nodata: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedGrid {
    pub header: GridHeader,
    pub matrix: RasterMatrix,
    /// Present only if some cell held the nodata sentinel.
    pub mask: Option<NodataMask>,
}

pub fn parse_ascii_grid(path: impl AsRef<Path>, digits: u32) -> Result<ParsedGrid> {
    parse_ascii_grid_str(&std::fs::read_to_string(path)?, digits)
}

/// Parses an ESRI-style ASCII grid: `key value` header lines, then one
/// whitespace-separated row per line.
pub fn parse_ascii_grid_str(text: &str, digits: u32) -> Result<ParsedGrid> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let (mut n_cols, mut n_rows) = (None, None);
    let mut header = GridHeader::new(0, 0);
    while let Some(&(line, l)) = lines.peek() {
        if !l.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        lines.next();
        let mut parts = l.split_whitespace();
        let key = parts.next().unwrap_or_default().to_ascii_lowercase();
        let value = parts
            .next()
            .ok_or_else(|| Error::parse(line, None, format!("header key `{key}` has no value")))?;
        if parts.next().is_some() {
            return Err(Error::parse(
                line,
                None,
                format!("trailing tokens after `{key}`"),
            ));
        }
        let as_usize = || {
            value.parse::<usize>().map_err(|_| {
                Error::parse(
                    line,
                    Some(2),
                    format!("`{key}` expects a non-negative integer, got `{value}`"),
                )
            })
        };
        let as_f64 = || {
            value.parse::<f64>().map_err(|_| {
                Error::parse(
                    line,
                    Some(2),
                    format!("`{key}` expects a number, got `{value}`"),
                )
            })
        };
        match key.as_str() {
            "ncols" => n_cols = Some(as_usize()?),
            "nrows" => n_rows = Some(as_usize()?),
            "xllcorner" | "xllcenter" => header.xll = as_f64()?,
            "yllcorner" | "yllcenter" => header.yll = as_f64()?,
            "cellsize" => header.cellsize = as_f64()?,
            "nodata_value" => {
                as_f64()?;
                header.nodata = Some(value.to_string());
            }
            _ => {
                return Err(Error::parse(
                    line,
                    Some(1),
                    format!("unknown header key `{key}`"),
                ))
            }
        }
    }
    let (Some(n_cols), Some(n_rows)) = (n_cols, n_rows) else {
        return Err(Error::parse(
            1,
            None,
            "header must define both ncols and nrows",
        ));
    };
    if n_cols == 0 || n_rows == 0 {
        return Err(Error::parse(1, None, "grid dimensions must be at least 1"));
    }
    header.n_cols = n_cols;
    header.n_rows = n_rows;
    let nodata = header.nodata.as_deref().map(|s| s.parse::<f64>().unwrap());

    let mut values = Vec::with_capacity(n_rows * n_cols);
    let mut missing = Vec::new();
    for row in 0..n_rows {
        let Some((line, l)) = lines.next() else {
            return Err(Error::parse(
                text.lines().count() + 1,
                None,
                format!("expected {n_rows} data rows, found {row}"),
            ));
        };
        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() != n_cols {
            return Err(Error::parse(
                line,
                None,
                format!(
                    "data row {} has {} values, expected {n_cols}",
                    row + 1,
                    tokens.len()
                ),
            ));
        }
        for (col, tok) in tokens.into_iter().enumerate() {
            let bad = || {
                Error::parse(
                    line,
                    Some(col + 1),
                    format!(
                        "data row {}: `{tok}` is not a representable number",
                        row + 1
                    ),
                )
            };
            if nodata.is_some() && tok.parse::<f64>().ok() == nodata {
                missing.push(values.len());
                values.push(None);
                continue;
            }
            values.push(Some(truncate_decimal(tok, digits).ok_or_else(bad)?));
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(
            line,
            None,
            format!("more than {n_rows} data rows"),
        ));
    }

    let floor = values.iter().flatten().min().copied();
    let mask = if missing.is_empty() {
        None
    } else {
        let mut b = BitmapBuilder::with_capacity(values.len());
        let mut next = missing.iter().peekable();
        for i in 0..values.len() {
            b.push(next.next_if(|&&m| m == i).is_some());
        }
        Some(NodataMask {
            n_rows,
            n_cols,
            bits: b.build(),
        })
    };
    let floor = match floor {
        Some(f) => f,
        None => return Err(Error::InvalidRaster("every cell is nodata".into())),
    };
    let matrix = RasterMatrix::new(
        n_rows,
        n_cols,
        values.into_iter().map(|v| v.unwrap_or(floor)).collect(),
    )?;
    Ok(ParsedGrid {
        header,
        matrix,
        mask,
    })
}

/// Writes `m` with each value scaled down by `10^digits`. Masked cells are
/// written as the header's nodata sentinel.
pub fn write_ascii_grid(
    m: &RasterMatrix,
    header: &GridHeader,
    digits: u32,
    mask: Option<&NodataMask>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", m.n_cols());
    let _ = writeln!(out, "nrows {}", m.n_rows());
    let _ = writeln!(out, "xllcorner {}", header.xll);
    let _ = writeln!(out, "yllcorner {}", header.yll);
    let _ = writeln!(out, "cellsize {}", header.cellsize);
    if let Some(nd) = &header.nodata {
        let _ = writeln!(out, "NODATA_value {nd}");
    }
    for r in 0..m.n_rows() {
        let row: Vec<String> = (0..m.n_cols())
            .map(|c| match (mask, &header.nodata) {
                (Some(mk), Some(nd)) if mk.is_nodata(r, c) => nd.clone(),
                _ => format_fixed(m.get(r, c), digits),
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Uniform,
    Gradient,
    Plasma,
    Random,
}

impl SynthKind {
    pub const ALL: [SynthKind; 4] = [
        SynthKind::Uniform,
        SynthKind::Gradient,
        SynthKind::Plasma,
        SynthKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Uniform => "uniform",
            SynthKind::Gradient => "gradient",
            SynthKind::Plasma => "plasma",
            SynthKind::Random => "random",
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown raster kind `{s}`")))
    }
}

/// Displacement shrinks by this factor at each halving of the step.
pub const DEFAULT_ROUGHNESS: f64 = 0.4;

/// Diamond-square noise in `[0, 1]`, cropped to `n_rows x n_cols`.
pub fn plasma_field(seed: u64, n_rows: usize, n_cols: usize, roughness: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut size = 1;
    while size + 1 < n_rows.max(n_cols).max(2) {
        size *= 2;
    }
    let n = size + 1;
    let mut g = vec![0.0f64; n * n];
    for (r, c) in [(0, 0), (0, size), (size, 0), (size, size)] {
        g[r * n + c] = rng.gen::<f64>();
    }
    let mut step = size;
    let mut amp = 1.0;
    while step > 1 {
        let half = step / 2;
        for r in (half..n).step_by(step) {
            for c in (half..n).step_by(step) {
                let avg = (g[(r - half) * n + c - half]
                    + g[(r - half) * n + c + half]
                    + g[(r + half) * n + c - half]
                    + g[(r + half) * n + c + half])
                    / 4.0;
                g[r * n + c] = avg + amp * (rng.gen::<f64>() - 0.5);
            }
        }
        for r in (0..n).step_by(half) {
            let start = if (r / half) % 2 == 0 { half } else { 0 };
            for c in (start..n).step_by(step) {
                let mut sum = 0.0;
                let mut cnt = 0.0;
                if r >= half {
                    sum += g[(r - half) * n + c];
                    cnt += 1.0;
                }
                if r + half < n {
                    sum += g[(r + half) * n + c];
                    cnt += 1.0;
                }
                if c >= half {
                    sum += g[r * n + c - half];
                    cnt += 1.0;
                }
                if c + half < n {
                    sum += g[r * n + c + half];
                    cnt += 1.0;
                }
                g[r * n + c] = sum / cnt + amp * (rng.gen::<f64>() - 0.5);
            }
        }
        step = half;
        amp *= roughness;
    }
    let mut out: Vec<f64> = (0..n_rows)
        .flat_map(|r| g[r * n..r * n + n_cols].to_vec())
        .collect();
    let (lo, hi) = out
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    for v in &mut out {
        *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
    }
    out
}

/// Seeded synthetic raster with values in `span`.
pub fn synth_raster(
    kind: SynthKind,
    seed: u64,
    n_rows: usize,
    n_cols: usize,
    span: (i64, i64),
) -> Result<RasterMatrix> {
    let (lo, hi) = span;
    if lo > hi {
        return Err(Error::InvalidRange { lo, hi });
    }
    let width = (hi as i128 - lo as i128) as f64;
    match kind {
        SynthKind::Uniform => RasterMatrix::new(n_rows, n_cols, vec![lo; n_rows * n_cols]),
        SynthKind::Gradient => {
            let denom = (n_rows + n_cols).saturating_sub(2) as i128;
            RasterMatrix::from_fn(n_rows, n_cols, |r, c| {
                if denom == 0 {
                    lo
                } else {
                    (lo as i128 + (r + c) as i128 * (hi as i128 - lo as i128) / denom) as i64
                }
            })
        }
        SynthKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            RasterMatrix::from_fn(n_rows, n_cols, |_, _| rng.gen_range(lo..=hi))
        }
        SynthKind::Plasma => {
            let field = plasma_field(seed, n_rows, n_cols, DEFAULT_ROUGHNESS);
            let values = field
                .into_iter()
                .map(|v| lo + (v * width).round() as i64)
                .collect();
            RasterMatrix::new(n_rows, n_cols, values)
        }
    }
}

/// Overwrites the top `fraction` of the rows with `value`.
pub fn with_uniform_fraction(m: &RasterMatrix, fraction: f64, value: i64) -> RasterMatrix {
    let band = ((m.n_rows() as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
    let cols = m.n_cols();
    let mut values = m.values().to_vec();
    values[..band * cols].fill(value);
    RasterMatrix::new(m.n_rows(), cols, values).expect("same extent")
}

/// Maps real-world coordinates to cells. `(x0, y0)` is the top-left corner
/// of cell (0, 0); rows grow southwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub x0: f64,
    pub y0: f64,
    pub cell_w: f64,
    pub cell_h: f64,
}

impl AffineTransform {
    pub fn new(x0: f64, y0: f64, cell_w: f64, cell_h: f64) -> Result<Self> {
        if !(cell_w > 0.0 && cell_h > 0.0) {
            return Err(Error::InvalidConfig("cell sizes must be positive".into()));
        }
        Ok(Self {
            x0,
            y0,
            cell_w,
            cell_h,
        })
    }

    /// Top-left origin matching a parsed grid header.
    pub fn from_header(h: &GridHeader) -> Result<Self> {
        Self::new(
            h.xll,
            h.yll + h.n_rows as f64 * h.cellsize,
            h.cellsize,
            h.cellsize,
        )
    }

    pub fn col(&self, x: f64) -> f64 {
        ((x - self.x0) / self.cell_w).floor()
    }

    pub fn row(&self, y: f64) -> f64 {
        ((self.y0 - y) / self.cell_h).floor()
    }
}

/// Parses `id,row_lo,col_lo,row_hi,col_hi` rows, or `id,x_min,y_min,x_max,y_max`
/// through `transform`. With an `extent`, rectangles are clipped to it and
/// those fully outside are dropped.
pub fn parse_mbr_csv_str(
    text: &str,
    transform: Option<&AffineTransform>,
    extent: Option<(usize, usize)>,
) -> Result<VectorDataset> {
    let mut seen = HashSet::new();
    let mut objects = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        let is_header = first
            && fields
                .first()
                .is_some_and(|f| f.parse::<ObjectId>().is_err());
        first = false;
        if is_header {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::parse(
                line,
                None,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let id: ObjectId = fields[0].parse().map_err(|_| {
            Error::parse(
                line,
                Some(1),
                format!("`{}` is not an object id", fields[0]),
            )
        })?;
        let mut nums = [0f64; 4];
        for (j, f) in fields[1..].iter().enumerate() {
            nums[j] = match transform {
                None => f.parse::<i64>().map(|v| v as f64).ok(),
                Some(_) => f.parse::<f64>().ok().filter(|v| v.is_finite()),
            }
            .ok_or_else(|| Error::parse(line, Some(j + 2), format!("`{f}` is not a coordinate")))?;
        }
        let [row_lo, col_lo, row_hi, col_hi] = match transform {
            None => nums,
            Some(t) => {
                let [x_min, y_min, x_max, y_max] = nums;
                if x_min > x_max || y_min > y_max {
                    return Err(Error::parse(line, None, "inverted bounds"));
                }
                [t.row(y_max), t.col(x_min), t.row(y_min), t.col(x_max)]
            }
        };
        if row_lo > row_hi || col_lo > col_hi {
            return Err(Error::parse(line, None, "inverted bounds"));
        }
        if !seen.insert(id) {
            return Err(Error::DuplicateId { id, line });
        }
        let (max_r, max_c) = match extent {
            Some((r, c)) => (r as f64 - 1.0, c as f64 - 1.0),
            None => (f64::MAX, f64::MAX),
        };
        if row_hi < 0.0 || col_hi < 0.0 || row_lo > max_r || col_lo > max_c {
            if extent.is_none() {
                return Err(Error::parse(
                    line,
                    None,
                    "negative coordinates need a raster extent to clip against",
                ));
            }
            continue;
        }
        let mbr = Mbr::new(
            row_lo.max(0.0) as usize,
            col_lo.max(0.0) as usize,
            row_hi.min(max_r) as usize,
            col_hi.min(max_c) as usize,
        )?;
        objects.push((id, mbr));
    }
    VectorDataset::new(objects)
}

pub fn parse_mbr_csv(
    path: impl AsRef<Path>,
    transform: Option<&AffineTransform>,
    extent: Option<(usize, usize)>,
) -> Result<VectorDataset> {
    parse_mbr_csv_str(&std::fs::read_to_string(path)?, transform, extent)
}

pub fn write_mbr_csv(ds: &VectorDataset) -> String {
    let mut out = String::from("id,row_lo,col_lo,row_hi,col_hi\n");
    for (id, m) in ds.objects() {
        let _ = writeln!(
            out,
            "{id},{},{},{},{}",
            m.row_lo, m.col_lo, m.row_hi, m.col_hi
        );
    }
    out
}

/// `n` random rectangles with ids `1..=n` and sides in `1..=max_side`.
pub fn synth_objects(
    seed: u64,
    n: usize,
    n_rows: usize,
    n_cols: usize,
    max_side: usize,
) -> VectorDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_side = max_side.max(1);
    let objects = (1..=n as ObjectId)
        .map(|id| {
            let h = rng.gen_range(1..=max_side.min(n_rows));
            let w = rng.gen_range(1..=max_side.min(n_cols));
            let r = rng.gen_range(0..=n_rows - h);
            let c = rng.gen_range(0..=n_cols - w);
            (
                id,
                Mbr::new(r, c, r + h - 1, c + w - 1).expect("ordered bounds"),
            )
        })
        .collect();
    VectorDataset::new(objects).expect("ids are distinct")
}
